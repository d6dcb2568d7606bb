#include "iscm/cli/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "iscm/catalog/catalog.hpp"
#include "iscm/catalog/generator.hpp"
#include "iscm/csv.hpp"
#include "iscm/monitor/monitor.hpp"
#include "iscm/time.hpp"

namespace iscm::cli {

namespace fs = std::filesystem;
using monitor::Diagnostic;
using monitor::Severity;

namespace {

constexpr std::string_view kCatalogPrefix = "catalog:";

std::ofstream open_output(const fs::path &dir, const std::string &file, const std::vector<std::string> &header) {
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw UsageError("cannot write " + (dir / file).string());
    csv::write_row(out, header);
    return out;
}

void prepare_out_dir(const fs::path &dir) {
    if (dir.empty()) throw UsageError("--out is required");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + dir.string());
}

std::vector<monitor::ConstraintEnsemble> resolve_all(const std::vector<std::string> &specs) {
    if (specs.empty()) throw UsageError("at least one --constraint is required");
    std::vector<monitor::ConstraintEnsemble> out;
    for (const auto &s : specs) out.push_back(resolve_constraint(s));
    return out;
}

std::string format_ms(double ms) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", ms);
    return buf;
}

class DiagnosticWriter {
public:
    DiagnosticWriter(const fs::path &dir)
        : out_(open_output(dir, "diagnostics.csv", {"sequence_no", "severity", "constraint", "case_key", "message"})) {}

    void write(const Diagnostic &d) {
        if (d.severity == Severity::ContractBreach) ++breaches_;
        csv::write_row(out_, {std::to_string(d.seq), std::string(monitor::severity_name(d.severity)), d.constraint,
                              case_key_text(d.case_key), d.message});
    }
    void write_notes(const IngestNotes &notes) {
        for (const auto &n : notes)
            write({0, Severity::Warning, "", {}, (n.line ? "line " + std::to_string(n.line) + ": " : "") + n.message});
    }
    std::size_t breaches() const { return breaches_; }

private:
    std::ofstream out_;
    std::size_t breaches_ = 0;
};

template <class Fn>
int guarded(std::ostream &err, Fn &&fn) {
    try {
        return fn();
    } catch (const UsageError &e) {
        err << "error: " << e.what() << "\n";
    } catch (const InputError &e) {
        err << "input error: " << e.what() << "\n";
    } catch (const monitor::EnsembleError &e) {
        err << "constraint file error" << (e.line ? " at line " + std::to_string(e.line) : "") << ": " << e.what()
            << "\n";
    } catch (const monitor::RegistrationError &e) {
        err << "constraint error: " << e.what() << "\n";
    } catch (const catalog::NotFoundError &e) {
        err << "error: " << e.what() << "\n";
    } catch (const std::invalid_argument &e) {
        err << "error: " << e.what() << "\n";
    }
    return kInputError;
}

}  // namespace

std::string case_key_text(const Tuple &key) { return tuple_to_string(key, "|"); }

monitor::ConstraintEnsemble resolve_constraint(const std::string &spec) {
    if (spec.rfind(kCatalogPrefix, 0) == 0) return catalog::lookup(spec.substr(kCatalogPrefix.size())).ensemble();
    return monitor::load_ensemble(spec);
}

std::vector<InsertionDelta> load_stream(const InputOptions &input, IngestNotes &notes) {
    if (input.logs.empty()) throw UsageError("at least one --log is required");
    LogColumns columns;
    for (const auto &m : input.column_maps) columns.remap(m);
    std::vector<std::vector<EventRecord>> logs;
    for (const auto &p : input.logs) {
        try {
            logs.push_back(parse_log_csv(p, columns, &notes));
        } catch (const InputError &e) {
            throw InputError(p.string() + ": " + e.what());
        }
    }
    std::vector<EventAttribute> attributes;
    for (const auto &p : input.attributes) {
        try {
            auto part = parse_attribute_csv(p, &notes);
            attributes.insert(attributes.end(), part.begin(), part.end());
        } catch (const InputError &e) {
            throw InputError(p.string() + ": " + e.what());
        }
    }
    const auto events = merge_streams(logs, &notes);
    auto stream = to_insertions(events, attributes, &notes);
    std::uint64_t seq = 0;
    for (auto &d : stream) d.sequence_no = ++seq;
    return stream;
}

std::vector<Timestamp> load_clock_ticks(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::vector<Timestamp> ticks;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
        const auto start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;
        const auto t = parse_timestamp(std::string_view(line).substr(start));
        if (!t) throw InputError(path.string() + ": not a timestamp: '" + line.substr(start) + "'", n);
        ticks.push_back(*t);
    }
    std::sort(ticks.begin(), ticks.end());
    return ticks;
}

int cmd_monitor(const MonitorOptions &options, std::ostream &err) {
    return guarded(err, [&] {
        if (options.batch == 0) throw UsageError("--batch must be positive");
        if (options.snapshot_every == 0) throw UsageError("--snapshot-every must be positive");
        const auto ensembles = resolve_all(options.constraints);
        IngestNotes notes;
        const auto stream = load_stream(options.input, notes);
        const auto ticks = options.clock_ticks.empty() ? std::vector<Timestamp>{} : load_clock_ticks(options.clock_ticks);

        monitor::Monitor m;
        for (const auto &e : ensembles) m.register_constraint(e);

        prepare_out_dir(options.out);
        auto timings = open_output(options.out, "timings.csv", {"sequence_no", "cumulative_ms"});
        auto sizes = open_output(options.out, "sizes.csv", {"sequence_no", "constraint", "query", "size"});
        auto traces =
            open_output(options.out, "traces.csv", {"sequence_no", "constraint", "case_key", "old_state", "new_state"});
        DiagnosticWriter diagnostics(options.out);
        diagnostics.write_notes(notes);

        auto report = [&](const monitor::IngestResult &r) {
            for (const auto &c : r.changes)
                csv::write_row(traces, {std::to_string(c.seq), c.constraint, case_key_text(c.case_key),
                                        std::string(monitor::state_name(c.from)),
                                        std::string(monitor::state_name(c.to))});
            for (const auto &d : r.diagnostics) diagnostics.write(d);
        };
        auto write_sizes = [&] {
            const auto snap = m.snapshot();
            for (const auto &c : snap.constraints) {
                for (const auto &[role, n] : c.sizes)
                    csv::write_row(sizes, {std::to_string(snap.seq), c.name, std::string(monitor::role_name(role)),
                                           std::to_string(n)});
                csv::write_row(sizes, {std::to_string(snap.seq), c.name, "SAT_PERM", std::to_string(c.sat_perm)});
            }
        };

        using clock = std::chrono::steady_clock;
        clock::duration spent{};
        std::uint64_t last_timed = 0, last_sized = 0;
        std::size_t next_tick = 0;
        auto timed = [&](auto &&step) {
            const auto t0 = clock::now();
            auto r = step();
            spent += clock::now() - t0;
            report(r);
        };
        auto elapsed_ms = [&] { return format_ms(std::chrono::duration<double, std::milli>(spent).count()); };

        for (const auto &d : stream) {
            if (d.target == relations::kLog && !d.tuple[3].is_null()) {
                const Timestamp t = d.tuple[3].as_timestamp();
                while (next_tick < ticks.size() && ticks[next_tick] < t)
                    timed([&] { return m.advance_clock(ticks[next_tick++]); });
            }
            timed([&] { return m.ingest(d); });
            if (d.sequence_no % options.batch == 0) {
                csv::write_row(timings, {std::to_string(d.sequence_no), elapsed_ms()});
                last_timed = d.sequence_no;
            }
            if (d.sequence_no % options.snapshot_every == 0) {
                write_sizes();
                last_sized = d.sequence_no;
            }
        }
        const bool trailing_ticks = next_tick < ticks.size();
        while (next_tick < ticks.size()) timed([&] { return m.advance_clock(ticks[next_tick++]); });
        const std::uint64_t end = m.last_sequence();
        if (end != last_timed || trailing_ticks) csv::write_row(timings, {std::to_string(end), elapsed_ms()});
        if (end != last_sized || trailing_ticks) write_sizes();

        err << stream.size() << " insertions, " << m.constraint_count() << " constraint(s), "
            << diagnostics.breaches() << " contract breach(es)\n";
        return diagnostics.breaches() ? kContractBreach : kOk;
    });
}

int cmd_check(const CheckOptions &options, std::ostream &err) {
    return guarded(err, [&] {
        const auto ensembles = resolve_all(options.constraints);
        for (const auto &e : ensembles)
            if (e.mode != monitor::Mode::PostMortem)
                throw UsageError("constraint " + e.name + ": mode mismatch, check needs a postmortem ensemble");
        IngestNotes notes;
        const auto stream = load_stream(options.input, notes);
        Database db;
        for (const auto &d : stream) {
            try {
                db.insert(d);
            } catch (const SchemaError &e) {
                notes.push_back({0, "insertion " + std::to_string(d.sequence_no) + " into " + d.target +
                                        " skipped: " + e.what()});
            }
        }

        std::vector<monitor::PostMortemResult> results;
        for (const auto &e : ensembles) results.push_back(monitor::post_mortem_check(db, e));

        prepare_out_dir(options.out);
        auto satisfying = open_output(options.out, "satisfying.csv", {"constraint", "case_key"});
        auto violating = open_output(options.out, "violating.csv", {"constraint", "case_key"});
        DiagnosticWriter diagnostics(options.out);
        diagnostics.write_notes(notes);
        for (std::size_t i = 0; i < ensembles.size(); ++i) {
            for (const auto &[t, n] : results[i].satisfying.sorted())
                csv::write_row(satisfying, {ensembles[i].name, case_key_text(t)});
            for (const auto &[t, n] : results[i].violating.sorted())
                csv::write_row(violating, {ensembles[i].name, case_key_text(t)});
            for (auto d : results[i].diagnostics) {
                d.seq = stream.size();
                diagnostics.write(d);
            }
            err << ensembles[i].name << ": " << results[i].satisfying.distinct_size() << " satisfying, "
                << results[i].violating.distinct_size() << " violating\n";
        }
        return diagnostics.breaches() ? kContractBreach : kOk;
    });
}

int cmd_generate(const GenerateOptions &options, std::ostream &err) {
    return guarded(err, [&] {
        catalog::GeneratedLog log;
        switch (options.process) {
            case Process::PrintShop: {
                catalog::GeneratorConfig cfg;
                cfg.seed = options.seed;
                cfg.flyers = options.flyers;
                cfg.posters = options.posters;
                log = catalog::generate_log(cfg);
                break;
            }
            case Process::Shipping: {
                catalog::ShippingConfig cfg;
                cfg.seed = options.seed;
                cfg.packages = options.packages;
                log = catalog::generate_shipping_log(cfg);
                break;
            }
            case Process::Abc:
                log = catalog::generate_abc_log(options.seed, options.traces);
                break;
        }
        prepare_out_dir(options.out);
        std::ofstream events(options.out / "log.csv", std::ios::binary);
        std::ofstream attributes(options.out / "attributes.csv", std::ios::binary);
        if (!events || !attributes) throw UsageError("cannot write to " + options.out.string());
        write_log_csv(events, log.events);
        write_attribute_csv(attributes, log.attributes);
        err << log.events.size() << " events, " << log.attributes.size() << " attributes, "
            << log.insertion_count() << " insertions\n";
        return kOk;
    });
}

}  // namespace iscm::cli
