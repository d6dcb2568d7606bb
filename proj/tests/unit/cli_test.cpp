#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

#include "iscm/catalog/catalog.hpp"
#include "iscm/catalog/generator.hpp"
#include "iscm/cli/runner.hpp"
#include "iscm/csv.hpp"
#include "iscm/monitor/monitor.hpp"
#include "iscm/time.hpp"

using namespace iscm;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("iscm-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path &path() const { return path_; }
    fs::path operator/(const std::string &s) const { return path_ / s; }

private:
    fs::path path_;
};

struct RunResult {
    int code;
    std::string out;
    std::string err;
};

RunResult run(std::vector<std::string> args) {
    args.insert(args.begin(), "iscmon");
    std::vector<const char *> argv;
    for (const auto &a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path &p) {
    std::ifstream in(p);
    EXPECT_TRUE(in) << p;
    csv::Reader reader(in);
    std::vector<std::vector<std::string>> rows;
    while (auto rec = reader.next()) rows.push_back(rec->fields);
    return rows;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path &p, const std::string &text) { std::ofstream(p, std::ios::binary) << text; }

void write_log(const TempDir &dir, const catalog::GeneratedLog &log) {
    std::ofstream events(dir / "log.csv"), attrs(dir / "attributes.csv");
    write_log_csv(events, log.events);
    write_attribute_csv(attrs, log.attributes);
}

std::set<std::string> column(const std::vector<std::vector<std::string>> &rows, std::size_t i) {
    std::set<std::string> out;
    for (std::size_t r = 1; r < rows.size(); ++r) out.insert(rows[r].at(i));
    return out;
}

/// Eight deliveries by c1 on one day and two by c2.
catalog::GeneratedLog delivery_day() {
    catalog::GeneratedLog log;
    const Timestamp day = make_timestamp(2024, 3, 4, 9);
    for (int i = 0; i < 10; ++i) {
        const std::string id = "e" + std::to_string(i);
        log.events.push_back({Atom("p" + std::to_string(i)), Atom(id), Atom("deliver package"),
                              Timestamp{day.ms + i * 60'000LL}, Atom("complete")});
        log.attributes.push_back({Atom(id), Atom("complete"), Atom("CarId"), Value::text(i < 8 ? "c1" : "c2")});
    }
    return log;
}

const catalog::GeneratedLog &default_log() {
    static const catalog::GeneratedLog log = catalog::generate_log({});
    return log;
}

}  // namespace

TEST(Cli, GenerateIsDeterministic) {
    TempDir dir;
    for (const char *sub : {"a", "b"})
        ASSERT_EQ(run({"generate", "--seed", "7", "--flyers", "50", "--posters", "50", "--out", (dir / sub).string()})
                      .code,
                  0);
    for (const char *f : {"log.csv", "attributes.csv"}) {
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
        EXPECT_GT(read_csv(dir / "a" / f).size(), 100u);
    }
}

TEST(Cli, GenerateZeroOrdersWritesHeadersOnly) {
    TempDir dir;
    ASSERT_EQ(run({"generate", "--flyers", "0", "--posters", "0", "--out", dir.path().string()}).code, 0);
    EXPECT_EQ(read_csv(dir / "log.csv").size(), 1u);
    EXPECT_EQ(read_csv(dir / "attributes.csv").size(), 1u);
}

TEST(Cli, GenerateRejectsBadValues) {
    TempDir dir;
    EXPECT_EQ(run({"generate", "--flyers", "-3", "--out", dir.path().string()}).code, 1);
    EXPECT_EQ(run({"generate", "--flyers", "many", "--out", dir.path().string()}).code, 1);
    EXPECT_EQ(run({"generate", "--process", "bakery", "--out", dir.path().string()}).code, 1);
    EXPECT_EQ(run({"generate", "--process", "shipping", "--out", dir.path().string()}).code, 0);
    EXPECT_EQ(read_csv(dir / "log.csv").size(), 601u);
}

TEST(Cli, MonitorIsc1OverDefaultStream) {
    TempDir dir;
    write_log(dir, default_log());
    const auto r = run({"monitor", "--log", (dir / "log.csv").string(), "--attrs", (dir / "attributes.csv").string(),
                        "--constraint", "catalog:ISC1", "--snapshot-every", "500", "--batch", "300", "--out",
                        (dir / "report").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char *f : {"timings.csv", "sizes.csv", "traces.csv", "diagnostics.csv"})
        EXPECT_TRUE(fs::exists(dir / "report" / f)) << f;
    const auto timings = read_csv(dir / "report" / "timings.csv");
    EXPECT_EQ(timings.back().at(0), "30636");
    EXPECT_EQ(timings.size(), 1 + 30636 / 300 + 1u);
    EXPECT_EQ(column(read_csv(dir / "report" / "traces.csv"), 2).size(), 101u);
    EXPECT_EQ(read_csv(dir / "report" / "diagnostics.csv").size(), 1u);
}

TEST(Cli, MonitorIsc2aFineSnapshots) {
    TempDir dir;
    write_log(dir, default_log());
    const auto r = run({"monitor", "--log", (dir / "log.csv").string(), "--attrs", (dir / "attributes.csv").string(),
                        "--constraint", "catalog:ISC2a", "--snapshot-every", "100", "--out", (dir / "report").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(column(read_csv(dir / "report" / "traces.csv"), 2).size(), 6u);
    const auto sizes = read_csv(dir / "report" / "sizes.csv");
    EXPECT_EQ(sizes.size(), 1 + (30636 / 100 + 1) * 5u);
}

TEST(Cli, ReportsAreConsistentAndDeterministic) {
    TempDir dir;
    catalog::GeneratorConfig cfg;
    cfg.seed = 3;
    cfg.flyers = 120;
    cfg.posters = 120;
    const auto log = catalog::generate_log(cfg);
    write_log(dir, log);
    std::vector<std::string> args{"monitor", "--log", (dir / "log.csv").string(), "--attrs",
                                  (dir / "attributes.csv").string()};
    for (const char *c : {"ISC1", "ISC2a", "ISC2b", "ISC3", "ISC4"}) {
        args.push_back("--constraint");
        args.push_back(std::string("catalog:") + c);
    }
    args.insert(args.end(), {"--snapshot-every", "50", "--batch", "25", "--out"});
    auto first = args, second = args;
    first.push_back((dir / "r1").string());
    second.push_back((dir / "r2").string());
    ASSERT_EQ(run(first).code, 0);
    ASSERT_EQ(run(second).code, 0);
    for (const char *f : {"sizes.csv", "traces.csv", "diagnostics.csv"})
        EXPECT_EQ(slurp(dir / "r1" / f), slurp(dir / "r2" / f)) << f;

    double last_ms = 0;
    std::uint64_t last_seq = 0;
    const auto timings = read_csv(dir / "r1" / "timings.csv");
    for (std::size_t i = 1; i < timings.size(); ++i) {
        const double ms = std::stod(timings[i][1]);
        const std::uint64_t seq = std::stoull(timings[i][0]);
        EXPECT_GE(ms, last_ms);
        EXPECT_GT(seq, last_seq);
        last_ms = ms;
        last_seq = seq;
    }
    const auto sizes = read_csv(dir / "r1" / "sizes.csv");
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        EXPECT_EQ(sizes[i][3].find_first_not_of("0123456789"), std::string::npos) << sizes[i][3];
        if (i > 1) EXPECT_GE(std::stoull(sizes[i][0]), std::stoull(sizes[i - 1][0]));
    }

    // Replaying traces.csv reproduces the in-memory ledgers.
    std::map<std::pair<std::string, std::string>, std::string> replayed;
    const auto traces = read_csv(dir / "r1" / "traces.csv");
    for (std::size_t i = 1; i < traces.size(); ++i) {
        auto &state = replayed[{traces[i][1], traces[i][2]}];
        EXPECT_EQ(state.empty() ? "NotACase" : state, traces[i][3]);
        state = traces[i][4];
    }
    monitor::Monitor m;
    for (const char *c : {"ISC1", "ISC2a", "ISC2b", "ISC3", "ISC4"}) m.register_constraint(catalog::lookup(c).ensemble());
    std::uint64_t seq = 0;
    for (auto d : to_insertions(log.events, log.attributes)) {
        d.sequence_no = ++seq;
        m.ingest(d);
    }
    std::size_t cases = 0;
    for (std::size_t h = 0; h < m.constraint_count(); ++h) {
        for (const auto &[key, rec] : m.ledger(h)) {
            ++cases;
            const std::pair<std::string, std::string> id{m.name(h), cli::case_key_text(key)};
            EXPECT_EQ(replayed[id], monitor::state_name(rec.state));
        }
    }
    EXPECT_EQ(cases, replayed.size());
}

TEST(Cli, ClockTicksAdvanceNowWithoutEvents) {
    TempDir dir;
    write_log(dir, catalog::abc_scenario());
    write_file(dir / "ticks.txt", "# end of the observation window\n" + format_timestamp(catalog::abc_scenario_now()) +
                                      "\n\n");
    const auto r = run({"monitor", "--log", (dir / "log.csv").string(), "--constraint", "catalog:followed-by-20h",
                        "--clock-ticks", (dir / "ticks.txt").string(), "--out", (dir / "report").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::map<std::string, std::string> final_state;
    const auto traces = read_csv(dir / "report" / "traces.csv");
    for (std::size_t i = 1; i < traces.size(); ++i) final_state[traces[i][2]] = traces[i][4];
    const std::map<std::string, std::string> expected{{"trace-1", "PermSat"},
                                                      {"trace-2", "PendingSat"},
                                                      {"trace-3", "PendingViol"},
                                                      {"trace-4", "PermViol"},
                                                      {"trace-5", "PermViol"}};
    EXPECT_EQ(final_state, expected);

    write_file(dir / "bad.txt", "yesterday\n");
    EXPECT_EQ(run({"monitor", "--log", (dir / "log.csv").string(), "--constraint", "catalog:followed-by-20h",
                   "--clock-ticks", (dir / "bad.txt").string(), "--out", (dir / "r2").string()})
                  .code,
              1);
}

TEST(Cli, ColumnMapping) {
    TempDir dir;
    write_file(dir / "log.csv",
               "CaseID,EventID,Activity,Time,Transition\n"
               "trace-1,e1,A,2024-01-01 08:00:00,complete\n"
               "trace-1,e2,B,2024-01-01 09:00:00,complete\n");
    std::vector<std::string> args{"monitor",  "--log",       (dir / "log.csv").string(), "--constraint",
                                  "catalog:followed-by-20h", "--out",     (dir / "r").string()};
    EXPECT_EQ(run(args).code, 1);
    for (const char *m : {"case=CaseID", "event=EventID", "activity=Activity", "timestamp=Time", "lifecycle=Transition"}) {
        args.push_back("--map");
        args.push_back(m);
    }
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(column(read_csv(dir / "r" / "traces.csv"), 2), std::set<std::string>{"trace-1"});
}

TEST(Cli, CheckPartitionsCases) {
    TempDir dir;
    const auto log = delivery_day();
    write_log(dir, log);
    const auto r = run({"check", "--log", (dir / "log.csv").string(), "--attrs", (dir / "attributes.csv").string(),
                        "--constraint", "catalog:same-car-day", "--out", (dir / "out").string()});
    ASSERT_EQ(r.code, 0) << r.err;

    // Brute-force count per (car, day).
    std::map<std::string, int> deliveries;
    for (const auto &a : log.attributes) ++deliveries[a.value.to_string() + "|20240304"];
    std::set<std::string> over, under;
    for (const auto &[key, n] : deliveries) (n > 7 ? over : under).insert(key);

    const auto violating = read_csv(dir / "out" / "violating.csv");
    const auto satisfying = read_csv(dir / "out" / "satisfying.csv");
    EXPECT_EQ(violating.front(), (std::vector<std::string>{"constraint", "case_key"}));
    EXPECT_EQ(column(violating, 1), over);
    EXPECT_EQ(column(satisfying, 1), under);
    EXPECT_EQ(over, std::set<std::string>{"c1|20240304"});
}

TEST(Cli, CheckEmptyLogWritesHeaders) {
    TempDir dir;
    write_log(dir, {});
    const auto r = run({"check", "--log", (dir / "log.csv").string(), "--attrs", (dir / "attributes.csv").string(),
                        "--constraint", "catalog:avg-shipping", "--out", (dir / "out").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_csv(dir / "out" / "satisfying.csv").size(), 1u);
    EXPECT_EQ(read_csv(dir / "out" / "violating.csv").size(), 1u);
}

TEST(Cli, CheckReportsViolationsOutsideCase) {
    TempDir dir;
    write_log(dir, delivery_day());
    write_file(dir / "broken.isc",
               "constraint broken mode postmortem\n"
               "# the scope forgets car c1\n"
               "CASE:\n"
               "SELECT DISTINCT e.Value AS CarId FROM Events e WHERE e.Attribute = 'CarId' AND e.Value = 'c2'\n"
               "VIOL:\n"
               "SELECT DISTINCT e.Value AS CarId FROM Events e WHERE e.Attribute = 'CarId'\n");
    const auto r = run({"check", "--log", (dir / "log.csv").string(), "--attrs", (dir / "attributes.csv").string(),
                        "--constraint", (dir / "broken.isc").string(), "--out", (dir / "out").string()});
    EXPECT_EQ(r.code, 2) << r.err;
    const auto diags = read_csv(dir / "out" / "diagnostics.csv");
    ASSERT_EQ(diags.size(), 2u);
    EXPECT_EQ(diags[1][1], "contract-breach");
    EXPECT_EQ(diags[1][3], "c1");
}

TEST(Cli, InputErrorsExitWithOne) {
    TempDir dir;
    write_log(dir, delivery_day());
    const std::string log = (dir / "log.csv").string();
    const std::string out = (dir / "out").string();
    EXPECT_EQ(run({"monitor", "--log", (dir / "missing.csv").string(), "--constraint", "catalog:ISC1", "--out", out})
                  .code,
              1);
    EXPECT_EQ(run({"monitor", "--log", log, "--constraint", "catalog:ISC9", "--out", out}).code, 1);
    EXPECT_EQ(run({"check", "--log", log, "--constraint", "catalog:ISC1", "--out", out}).code, 1);
    EXPECT_EQ(run({"monitor", "--log", log, "--constraint", "catalog:same-car", "--out", out}).code, 1);
    EXPECT_EQ(run({"monitor", "--log", log, "--constraint", "catalog:ISC1", "--batch", "0", "--out", out}).code, 1);
    EXPECT_EQ(run({"monitor", "--log", log, "--out", out}).code, 1);

    write_file(dir / "typo.isc", "constraint typo mode postmortem\nCASE:\nSELECT FROM Log\nVIOL:\nSELECT * FROM Log\n");
    const auto r = run({"check", "--log", log, "--constraint", (dir / "typo.isc").string(), "--out", out});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("CASE block (line 2): query line 1, column 8: expected expression"), std::string::npos) << r.err;
}

TEST(Cli, CatalogListing) {
    const auto all = run({"catalog"});
    EXPECT_EQ(all.code, 0);
    EXPECT_NE(all.out.find("ISC2b\tmonitor"), std::string::npos);
    const auto one = run({"catalog", "isc4"});
    EXPECT_EQ(one.code, 0);
    EXPECT_EQ(monitor::parse_ensemble(one.out).name, "ISC4");
    EXPECT_EQ(run({"catalog", "nope"}).code, 1);
    EXPECT_EQ(run({}).code, 1);
}
