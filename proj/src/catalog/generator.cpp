#include "iscm/catalog/generator.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "iscm/time.hpp"

namespace iscm::catalog {

namespace {

namespace chr = std::chrono;

constexpr std::int64_t kMinuteMs = 60'000;
constexpr std::int64_t kDayMs = 86'400'000;

/// Small deterministic generator; the standard distributions are not
/// specified bit-for-bit, so draws are derived here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t next() { return engine_(); }
    double unit() { return double(next() >> 11) * 0x1.0p-53; }
    bool chance(double p) { return unit() < p; }
    int between(int lo, int hi) { return lo + int(next() % std::uint64_t(hi - lo + 1)); }
    int between(MinuteRange r) { return between(r.first, r.second); }

private:
    std::mt19937_64 engine_;
};

chr::sys_days parse_day(const std::string &text) {
    int y = 0;
    unsigned m = 0, d = 0;
    if (std::sscanf(text.c_str(), "%d-%u-%u", &y, &m, &d) != 3) throw std::invalid_argument("bad date '" + text + "'");
    const chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
    if (!ymd.ok()) throw std::invalid_argument("bad date '" + text + "'");
    return chr::sys_days{ymd};
}

bool weekend(chr::sys_days d) {
    const chr::weekday w{d};
    return w == chr::Saturday || w == chr::Sunday;
}

/// Position in working time: working-day index and minute of that day.
struct WorkTime {
    int day = 0;
    int minute = 0;
    long abs() const { return long(day) * 1440 + minute; }
    friend bool operator<(WorkTime a, WorkTime b) { return a.abs() < b.abs(); }
};

class Calendar {
public:
    explicit Calendar(const GeneratorConfig &c) : cfg_(c), first_(parse_day(c.first_day)) {
        if (weekend(first_)) throw std::invalid_argument("first_day must be a weekday");
    }

    /// Adds working minutes, carrying over closing time into the next working day.
    WorkTime advance(WorkTime t, int minutes) const {
        t.minute = std::max(t.minute, cfg_.open_minute) + minutes;
        while (t.minute >= cfg_.close_minute) {
            const int over = t.minute - cfg_.close_minute;
            ++t.day;
            t.minute = cfg_.open_minute + over;
        }
        return t;
    }

    WorkTime back(WorkTime t, int minutes) const {
        t.minute = std::max(cfg_.open_minute, t.minute - minutes);
        return t;
    }

    chr::sys_days date(int day) const {
        while (int(dates_.size()) <= day) {
            chr::sys_days d = dates_.empty() ? first_ : dates_.back() + chr::days{1};
            while (weekend(d)) d += chr::days{1};
            dates_.push_back(d);
        }
        return dates_[std::size_t(day)];
    }

    Timestamp at(WorkTime t) const {
        const std::int64_t days = date(t.day).time_since_epoch().count();
        return Timestamp{days * kDayMs + std::int64_t(t.minute) * kMinuteMs};
    }

    int month_index(int day) const {
        const chr::year_month_day a{first_}, b{date(day)};
        return (int(b.year()) - int(a.year())) * 12 + int(unsigned(b.month())) - int(unsigned(a.month()));
    }

private:
    const GeneratorConfig &cfg_;
    chr::sys_days first_;
    mutable std::vector<chr::sys_days> dates_;
};

enum class Kind { Flyer, Poster, Bill };

struct Step {
    std::string label;
    WorkTime at;
};

struct Item {
    Kind kind = Kind::Flyer;
    std::string case_id;
    std::vector<Step> steps;  // up to the print
    WorkTime print_ready;
    std::string printer;
    WorkTime print_start, print_end;
    WorkTime delivered;
    int order = -1;  // bills: index of the order item
    bool late = false;
    bool early = false;
};

class Printers {
public:
    Printers(const Calendar &cal, const GeneratorConfig &cfg) : cal_(cal), cfg_(cfg) {}

    /// First free slot of `minutes` on `printer` at or after `ready`, inside opening hours.
    WorkTime first_fit(const std::string &printer, WorkTime ready, int minutes) {
        auto &busy = busy_[printer];
        WorkTime t = cal_.advance(ready, 0);
        for (;;) {
            if (t.minute + minutes > cfg_.close_minute) {
                t = WorkTime{t.day + 1, cfg_.open_minute};
                continue;
            }
            bool moved = false;
            auto it = busy.upper_bound(t.abs());
            if (it != busy.begin()) {
                auto prev = std::prev(it);
                if (prev->second > t.abs()) {
                    t = from_abs(prev->second);
                    moved = true;
                }
            }
            if (!moved && it != busy.end() && it->first < t.abs() + minutes) {
                t = from_abs(it->second);
                moved = true;
            }
            if (!moved) break;
        }
        reserve(printer, t, minutes);
        return t;
    }

    void reserve(const std::string &printer, WorkTime t, int minutes) {
        auto &busy = busy_[printer];
        auto [it, fresh] = busy.emplace(t.abs(), t.abs() + minutes);
        if (!fresh) it->second = std::max(it->second, t.abs() + minutes);
    }

private:
    static WorkTime from_abs(long a) { return WorkTime{int(a / 1440), int(a % 1440)}; }

    const Calendar &cal_;
    const GeneratorConfig &cfg_;
    std::map<std::string, std::map<long, long>> busy_;
};

void check(const GeneratorConfig &c) {
    auto prob = [](double p, const char *name) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must be in [0, 1]");
    };
    auto range = [](MinuteRange r, const char *name) {
        if (r.first < 1 || r.second < r.first) throw std::invalid_argument(std::string(name) + " must be 1 <= lo <= hi");
    };
    if (c.flyers < 0 || c.posters < 0) throw std::invalid_argument("order counts must be non-negative");
    if (c.printers < 1) throw std::invalid_argument("at least one printer is needed");
    if (c.arrival_days < 1) throw std::invalid_argument("arrival_days must be positive");
    if (!(0 <= c.open_minute && c.open_minute < c.extra_delivery_minute &&
          c.extra_delivery_minute < c.delivery_minute && c.delivery_minute < c.close_minute && c.close_minute <= 1440))
        throw std::invalid_argument("need open < extra delivery < delivery < close within one day");
    prob(c.redesign_probability, "redesign_probability");
    if (c.redesign_probability >= 1.0) throw std::invalid_argument("redesign_probability must be below 1");
    prob(c.printer1_share, "printer1_share");
    prob(c.slow_print_probability, "slow_print_probability");
    prob(c.busy_month_slow_probability, "busy_month_slow_probability");
    prob(c.overlap_probability, "overlap_probability");
    prob(c.missed_delivery_probability, "missed_delivery_probability");
    prob(c.extra_run_probability, "extra_run_probability");
    prob(c.late_bill_probability, "late_bill_probability");
    prob(c.early_bill_probability, "early_bill_probability");
    range(c.design_delay, "design_delay");
    range(c.send_delay, "send_delay");
    range(c.customer_delay, "customer_delay");
    range(c.redesign_delay, "redesign_delay");
    range(c.print_wait, "print_wait");
    range(c.print_duration, "print_duration");
    range(c.slow_print_duration, "slow_print_duration");
    range(c.bill_delay, "bill_delay");
    if (c.print_duration.second + c.open_minute >= c.close_minute ||
        c.slow_print_duration.second + c.open_minute >= c.close_minute)
        throw std::invalid_argument("print jobs must fit into one working day");
}

struct RawEvent {
    Timestamp at;
    std::size_t order;  // creation order, breaks ties
    std::string case_id, label, lifecycle;
    int job = -1;  // print job number, shared by start and complete
    std::vector<std::pair<std::string, Value>> attributes;
};

GeneratedLog finish(std::vector<RawEvent> raw, const std::string &id_prefix = "e") {
    std::sort(raw.begin(), raw.end(), [](const RawEvent &a, const RawEvent &b) {
        return a.at != b.at ? a.at < b.at : a.order < b.order;
    });
    GeneratedLog out;
    std::unordered_map<int, std::string> job_ids;
    std::size_t next = 0;
    auto fresh = [&] {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%s%07zu", id_prefix.c_str(), ++next);
        return std::string(buf);
    };
    for (const RawEvent &r : raw) {
        std::string id;
        if (r.job >= 0) {
            auto it = job_ids.find(r.job);
            if (it == job_ids.end()) it = job_ids.emplace(r.job, fresh()).first;
            id = it->second;
        } else {
            id = fresh();
        }
        out.events.push_back({Atom(r.case_id), Atom(id), Atom(r.label), r.at, Atom(r.lifecycle)});
        for (const auto &[name, value] : r.attributes)
            out.attributes.push_back({Atom(id), Atom(r.lifecycle), Atom(name), value});
    }
    out.events = merge_streams({out.events});
    return out;
}

std::string numbered(const char *prefix, int n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%04d", prefix, n);
    return buf;
}

}  // namespace

GeneratedLog generate_log(const GeneratorConfig &cfg) {
    check(cfg);
    Calendar cal(cfg);
    Rng rng(cfg.seed);
    Rng day_rng(cfg.seed ^ 0x5eedULL);
    std::vector<char> extra_days;
    auto extra_run = [&](int day) {
        if (day < 0) return false;
        while (int(extra_days.size()) <= day) extra_days.push_back(day_rng.chance(cfg.extra_run_probability));
        return extra_days[std::size_t(day)] != 0;
    };

    std::vector<Item> items;
    const int orders = cfg.flyers + cfg.posters;
    // Interleave flyers and posters in a random but seed-fixed order.
    std::vector<Kind> kinds(std::size_t(cfg.flyers), Kind::Flyer);
    kinds.insert(kinds.end(), std::size_t(cfg.posters), Kind::Poster);
    for (std::size_t i = kinds.size(); i > 1; --i) std::swap(kinds[i - 1], kinds[rng.next() % i]);

    int flyer_no = 0, poster_no = 0;
    for (int i = 0; i < orders; ++i) {
        Item o;
        o.kind = kinds[std::size_t(i)];
        const bool flyer = o.kind == Kind::Flyer;
        o.case_id = flyer ? numbered("flyer", ++flyer_no) : numbered("poster", ++poster_no);
        WorkTime t{rng.between(0, cfg.arrival_days - 1), rng.between(cfg.open_minute, cfg.delivery_minute - 60)};
        o.steps.push_back({flyer ? "receive flyer order" : "receive poster order", t});
        t = cal.advance(t, rng.between(cfg.design_delay));
        o.steps.push_back({flyer ? "design flyer" : "design poster", t});
        if (flyer) {
            t = cal.advance(t, rng.between(cfg.send_delay));
            o.steps.push_back({"send design", t});
            while (rng.chance(cfg.redesign_probability)) {
                t = cal.advance(t, rng.between(cfg.customer_delay));
                o.steps.push_back({"reject design", t});
                t = cal.advance(t, rng.between(cfg.redesign_delay));
                o.steps.push_back({"redesign flyer", t});
                t = cal.advance(t, rng.between(cfg.send_delay));
                o.steps.push_back({"send design", t});
            }
            t = cal.advance(t, rng.between(cfg.customer_delay));
            o.steps.push_back({"accept design", t});
        }
        o.print_ready = cal.advance(t, rng.between(cfg.print_wait));
        items.push_back(std::move(o));
    }
    for (int i = 0; i < orders; ++i) {
        Item b;
        b.kind = Kind::Bill;
        b.case_id = numbered("bill", i + 1);
        b.order = i;
        const WorkTime received = items[std::size_t(i)].steps.front().at;
        if (rng.chance(cfg.late_bill_probability)) {
            b.late = true;
        } else if (rng.chance(cfg.early_bill_probability)) {
            b.early = true;
            b.steps.push_back({"write bill", cal.back(received, rng.between(1, 30))});
        } else {
            b.steps.push_back({"write bill", cal.advance(received, rng.between(cfg.bill_delay))});
        }
        if (!b.late) b.print_ready = cal.advance(b.steps.back().at, rng.between(cfg.print_wait));
        items.push_back(std::move(b));
    }

    Printers printers(cal, cfg);
    auto schedule = [&](Item &it) {
        it.printer = cfg.printers == 1 || rng.chance(cfg.printer1_share)
                         ? "Printer 1"
                         : "Printer " + std::to_string(rng.between(2, cfg.printers));
        const int month = cal.month_index(it.print_ready.day);
        const bool busy = std::find(cfg.busy_months.begin(), cfg.busy_months.end(), month) != cfg.busy_months.end();
        const bool slow = rng.chance(busy ? cfg.busy_month_slow_probability : cfg.slow_print_probability);
        const int minutes = rng.between(slow ? cfg.slow_print_duration : cfg.print_duration);
        if (rng.chance(cfg.overlap_probability)) {
            it.print_start = cal.advance(it.print_ready, 0);
            if (it.print_start.minute + minutes > cfg.close_minute) it.print_start = {it.print_start.day + 1, cfg.open_minute};
            printers.reserve(it.printer, it.print_start, minutes);
        } else {
            it.print_start = printers.first_fit(it.printer, it.print_ready, minutes);
        }
        it.print_end = WorkTime{it.print_start.day, it.print_start.minute + minutes};
    };
    auto next_run = [&](WorkTime c) {
        for (int day = c.day;; ++day) {
            if (extra_run(day)) {
                const WorkTime r{day, cfg.extra_delivery_minute};
                if (c < r) return r;
            }
            const WorkTime r{day, cfg.delivery_minute};
            if (c < r) return r;
        }
    };
    auto deliver = [&](Item &it) {
        it.delivered = next_run(it.print_end);
        if (rng.chance(cfg.missed_delivery_probability)) it.delivered = next_run(it.delivered);
    };

    std::vector<std::size_t> queue;
    for (std::size_t i = 0; i < items.size(); ++i)
        if (!items[i].late) queue.push_back(i);
    std::stable_sort(queue.begin(), queue.end(),
                     [&](std::size_t a, std::size_t b) { return items[a].print_ready < items[b].print_ready; });
    for (std::size_t i : queue) schedule(items[i]);
    for (std::size_t i : queue) deliver(items[i]);
    for (auto &b : items) {
        if (!b.late) continue;
        const WorkTime after = items[std::size_t(b.order)].delivered;
        b.steps.push_back({"write bill", cal.advance(after, rng.between(cfg.bill_delay))});
        b.print_ready = cal.advance(b.steps.back().at, rng.between(cfg.print_wait));
        schedule(b);
        deliver(b);
    }

    std::vector<RawEvent> raw;
    std::size_t order = 0;
    int job = 0;
    for (const Item &it : items) {
        for (const Step &s : it.steps) {
            RawEvent e{cal.at(s.at), order++, it.case_id, s.label, "complete", -1, {}};
            if (s.label == "write bill")
                e.attributes.emplace_back("OrderId", Value::text(items[std::size_t(it.order)].case_id));
            raw.push_back(std::move(e));
        }
        const Value format = Value::text(it.kind == Kind::Poster ? "Poster" : "A4");
        const std::vector<std::pair<std::string, Value>> attrs{{"Printer", Value::text(it.printer)},
                                                               {"PaperFormat", format}};
        raw.push_back({cal.at(it.print_start), order++, it.case_id, "print", "start", job, attrs});
        raw.push_back({cal.at(it.print_end), order++, it.case_id, "print", "complete", job, attrs});
        ++job;
        raw.push_back({cal.at(it.delivered), order++, it.case_id, "deliver", "complete", -1, {}});
    }
    return finish(std::move(raw));
}

std::vector<std::string> validate_traces(const GeneratedLog &log) {
    std::vector<std::string> problems;
    std::map<std::string, std::vector<const EventRecord *>> traces;
    for (const auto &e : log.events) traces[e.case_id.str()].push_back(&e);
    std::map<std::pair<std::string, std::string>, std::map<std::string, std::string>> attrs;
    for (const auto &a : log.attributes)
        attrs[{a.event_id.str(), a.lifecycle.str()}][a.attribute.str()] = a.value.to_string();

    for (const auto &[case_id, evs] : traces) {
        auto fail = [&, id = case_id](const std::string &msg) { problems.push_back(id + ": " + msg); };
        for (std::size_t i = 1; i < evs.size(); ++i)
            if (evs[i]->timestamp < evs[i - 1]->timestamp) fail("events out of time order");
        std::vector<std::string> labels;
        for (const auto *e : evs) labels.push_back(e->activity_label.str() + "/" + e->lifecycle.str());

        std::vector<std::string> expected;
        std::size_t pos = 0;
        auto expect = [&](const std::string &l) {
            if (pos < labels.size() && labels[pos] == l) {
                ++pos;
                return true;
            }
            return false;
        };
        bool ok = true;
        if (expect("receive flyer order/complete")) {
            ok = expect("design flyer/complete") && expect("send design/complete");
            while (ok && expect("reject design/complete"))
                ok = expect("redesign flyer/complete") && expect("send design/complete");
            ok = ok && expect("accept design/complete");
        } else if (expect("receive poster order/complete")) {
            ok = expect("design poster/complete");
        } else if (expect("write bill/complete")) {
            const auto &a = attrs[{evs[0]->event_id.str(), "complete"}];
            auto it = a.find("OrderId");
            if (it == a.end()) fail("write bill without OrderId");
            else if (!traces.count(it->second)) fail("bill refers to unknown order " + it->second);
        } else {
            ok = false;
        }
        ok = ok && expect("print/start") && expect("print/complete") && expect("deliver/complete") && pos == labels.size();
        if (!ok) {
            fail("activity sequence does not follow the process");
            continue;
        }
        const auto *start = evs[pos - 3];
        const auto *done = evs[pos - 2];
        if (start->event_id != done->event_id) fail("print start and complete have different event ids");
        for (const auto *p : {start, done}) {
            const auto &a = attrs[{p->event_id.str(), p->lifecycle.str()}];
            if (!a.count("Printer") || !a.count("PaperFormat")) fail("print event without Printer/PaperFormat");
        }
    }
    return problems;
}

GeneratedLog generate_shipping_log(const ShippingConfig &cfg) {
    if (cfg.packages < 0 || cfg.cars < 1 || cfg.days < 1) throw std::invalid_argument("bad shipping config");
    Rng rng(cfg.seed);
    const std::int64_t base = parse_day(cfg.first_day).time_since_epoch().count() * kDayMs;
    std::vector<RawEvent> raw;
    std::size_t order = 0;
    for (int i = 0; i < cfg.packages; ++i) {
        const std::string id = numbered("pkg", i + 1);
        const std::int64_t bought = base + rng.between(0, cfg.days - 1) * kDayMs + rng.between(8 * 60, 20 * 60) * kMinuteMs;
        const std::int64_t shipped = bought + rng.between(1 * 24 * 60, 6 * 24 * 60) * kMinuteMs;
        const std::string car = "car-" + std::to_string(rng.between(1, cfg.cars));
        raw.push_back({Timestamp{bought}, order++, id, "purchase package", "complete", -1, {{"PackageId", Value::text(id)}}});
        raw.push_back({Timestamp{shipped}, order++, id, "deliver package", "complete", -1,
                       {{"PackageId", Value::text(id)}, {"CarId", Value::text(car)}}});
    }
    return finish(std::move(raw), "s");
}

GeneratedLog generate_abc_log(std::uint64_t seed, int traces) {
    if (traces < 0) throw std::invalid_argument("trace count must be non-negative");
    Rng rng(seed);
    const std::int64_t base = parse_day("2024-01-01").time_since_epoch().count() * kDayMs;
    const std::int64_t hour = 60 * kMinuteMs;
    std::vector<RawEvent> raw;
    std::size_t order = 0;
    for (int i = 0; i < traces; ++i) {
        const std::string id = numbered("trace", i + 1);
        std::int64_t t = base + rng.between(0, 30 * 24) * hour;
        auto emit = [&](const char *label) { raw.push_back({Timestamp{t}, order++, id, label, "complete", -1, {}}); };
        const int rounds = rng.between(1, 3);
        bool stop = false;
        for (int r = 0; r < rounds && !stop; ++r) {
            emit("A");
            if (rng.chance(0.05)) {
                stop = true;  // trace stalls after A
                break;
            }
            t += (rng.chance(0.1) ? rng.between(21, 40) : rng.between(1, 19)) * hour;
            emit(rng.chance(0.03) ? "C" : "B");
            t += rng.between(1, 30) * hour;
        }
        if (!stop && rng.chance(0.8)) emit("C");
    }
    return finish(std::move(raw), "x");
}

GeneratedLog abc_scenario() {
    const std::int64_t base = parse_day("2024-01-01").time_since_epoch().count() * kDayMs;
    const std::int64_t slot = 12 * 60 * kMinuteMs;
    const std::vector<std::pair<std::string, std::vector<std::pair<const char *, int>>>> traces{
        {"trace-1", {{"A", 0}, {"B", 1}, {"C", 2}}},
        {"trace-2", {{"A", 6}, {"B", 7}}},
        {"trace-3", {{"A", 9}}},
        {"trace-4", {{"A", 1}, {"B", 3}}},
        {"trace-5", {{"A", 0}, {"B", 1}, {"A", 3}, {"B", 6}}},
    };
    std::vector<RawEvent> raw;
    std::size_t order = 0;
    for (const auto &[id, steps] : traces)
        for (const auto &[label, at] : steps)
            raw.push_back({Timestamp{base + at * slot}, order++, id, label, "complete", -1, {}});
    return finish(std::move(raw), "f");
}

Timestamp abc_scenario_now() {
    return Timestamp{parse_day("2024-01-01").time_since_epoch().count() * kDayMs + 10 * 12 * 60 * kMinuteMs};
}

}  // namespace iscm::catalog
