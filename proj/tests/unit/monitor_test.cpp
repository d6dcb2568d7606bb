#include <gtest/gtest.h>

#include <map>

#include "iscm/catalog/catalog.hpp"
#include "iscm/catalog/generator.hpp"
#include "iscm/ivm/naive.hpp"
#include "iscm/monitor/ensemble.hpp"
#include "iscm/monitor/monitor.hpp"
#include "iscm/query/decorrelate.hpp"
#include "iscm/query/typecheck.hpp"
#include "iscm/time.hpp"
#include "support/ledger_checks.hpp"

using namespace iscm;
using namespace iscm::monitor;

namespace {

Timestamp at(const std::string &text) { return *parse_timestamp(text); }

/// Feeds hand-written events into a monitor, one insertion per Log row and
/// per attribute.
class Feed {
public:
    explicit Feed(Monitor &m) : m_(m) {}

    IngestResult event(const std::string &case_id, const std::string &label, const std::string &when,
                       const std::vector<std::pair<std::string, std::string>> &attrs = {},
                       const std::string &lifecycle = "complete", std::string event_id = "") {
        if (event_id.empty()) event_id = "e" + std::to_string(++events_);
        const EventRecord rec{Atom(case_id), Atom(event_id), Atom(label), at(when), Atom(lifecycle)};
        IngestResult out = m_.ingest({"Log", rec.to_tuple(), ++seq_});
        for (const auto &[name, value] : attrs) {
            const EventAttribute a{Atom(event_id), Atom(lifecycle), Atom(name), Value::text(value)};
            append(out, m_.ingest({"EventData", a.to_tuple(), ++seq_}));
        }
        return out;
    }

    static void append(IngestResult &into, IngestResult r) {
        into.changes.insert(into.changes.end(), r.changes.begin(), r.changes.end());
        into.diagnostics.insert(into.diagnostics.end(), r.diagnostics.begin(), r.diagnostics.end());
    }

private:
    Monitor &m_;
    std::uint64_t seq_ = 0;
    int events_ = 0;
};

std::size_t breaches(const IngestResult &r) {
    std::size_t n = 0;
    for (const auto &d : r.diagnostics) n += d.severity == Severity::ContractBreach;
    return n;
}

Tuple day(std::int64_t yyyymmdd) { return {Value::integer(yyyymmdd)}; }

const char *kSimple = R"(
# cases are traces; 'bad' is permanent unless the ensemble is inconsistent
constraint simple mode monitor
CASE: SELECT DISTINCT l.CaseId FROM Log l
VIOL_PERM:
  SELECT DISTINCT l.CaseId FROM Log l
  WHERE l.ActivityLabel = 'bad'
    AND NOT EXISTS (SELECT * FROM Log f WHERE f.CaseId = l.CaseId AND f.ActivityLabel = 'fix')
VIOL_PENDING:
  SELECT DISTINCT l.CaseId FROM Log l WHERE l.ActivityLabel = 'wait'
SAT_PENDING:
  SELECT DISTINCT l.CaseId FROM Log l
  WHERE l.ActivityLabel = 'start'
    AND NOT EXISTS (SELECT * FROM Log b WHERE b.CaseId = l.CaseId AND b.ActivityLabel = 'bad')
    AND NOT EXISTS (SELECT * FROM Log w WHERE w.CaseId = l.CaseId AND w.ActivityLabel = 'wait')
)";

}  // namespace

TEST(Ensemble, ParsesBlocksAndComments) {
    const ConstraintEnsemble e = parse_ensemble(kSimple);
    EXPECT_EQ(e.name, "simple");
    EXPECT_EQ(e.mode, Mode::Monitor);
    ASSERT_EQ(e.queries.size(), 4u);
    EXPECT_EQ(e.queries[0].role, Role::Case);
    EXPECT_EQ(e.query(Role::Case).source, "SELECT DISTINCT l.CaseId FROM Log l");
    EXPECT_NE(e.query(Role::ViolPerm).source.find("NOT EXISTS"), std::string::npos);
    EXPECT_EQ(e.query(Role::ViolPerm).line, 5u);

    const ConstraintEnsemble again = parse_ensemble(format_ensemble(e));
    EXPECT_EQ(again.name, e.name);
    for (Role r : roles_for(Mode::Monitor)) EXPECT_EQ(again.query(r).source, e.query(r).source);
}

TEST(Ensemble, RejectsMalformedFiles) {
    auto fails_at = [](const std::string &text, std::size_t line) {
        try {
            parse_ensemble(text);
        } catch (const EnsembleError &e) {
            EXPECT_EQ(e.line, line) << e.what();
            return true;
        }
        return false;
    };
    EXPECT_TRUE(fails_at("CASE: SELECT * FROM Log l", 1));
    EXPECT_TRUE(fails_at("constraint x mode sometimes\nCASE: SELECT * FROM Log l", 1));
    EXPECT_TRUE(fails_at("constraint x mode postmortem\nCASE: SELECT 1 FROM Log l\nVIOL_PERM: SELECT 1 FROM Log l", 3));
    EXPECT_TRUE(fails_at("constraint x mode postmortem\nCASE: a\nCASE: b\nVIOL: c", 3));
    EXPECT_TRUE(fails_at("constraint x mode postmortem\nSELECT 1\nCASE: a\nVIOL: b", 2));
    EXPECT_TRUE(fails_at("constraint x mode postmortem\nCASE: a", 0));
    EXPECT_TRUE(fails_at("constraint x mode postmortem\nCASE:\nVIOL: b", 2));
    EXPECT_TRUE(fails_at("", 0));
}

TEST(Monitor, ModeMismatchIsRejected) {
    Monitor m;
    EXPECT_THROW(m.register_constraint(catalog::lookup("same-car-day").ensemble()), RegistrationError);
    EXPECT_THROW(post_mortem_check(Database{}, catalog::lookup("ISC1").ensemble()), RegistrationError);
}

TEST(Monitor, RegistrationErrorsNameTheBlock) {
    Monitor m;
    ConstraintEnsemble e = parse_ensemble(kSimple);
    e.queries[2].source = "SELECT DISTINCT l.CaseId FROM Log l WHERE l.Nope = 1";
    try {
        m.register_constraint(e);
        FAIL() << "expected an error";
    } catch (const RegistrationError &err) {
        EXPECT_NE(std::string(err.what()).find("VIOL_PENDING"), std::string::npos) << err.what();
    }
    e = parse_ensemble(kSimple);
    e.queries[1].source = "SELECT DISTINCT l.CaseId FROM Log l WHERE";
    try {
        m.register_constraint(e);
        FAIL() << "expected an error";
    } catch (const RegistrationError &err) {
        EXPECT_NE(std::string(err.what()).find("column"), std::string::npos) << err.what();
    }
    e = parse_ensemble(kSimple);
    e.queries[3].source = "SELECT DISTINCT l.CaseId, l.EventId FROM Log l";
    EXPECT_THROW(m.register_constraint(e), RegistrationError);
    EXPECT_EQ(m.constraint_count(), 0u);
}

TEST(Monitor, PermanentStatesLatch) {
    Monitor m;
    const auto h = m.register_constraint(parse_ensemble(kSimple));
    Feed feed(m);
    const Tuple c1{Value::text("c1")};

    auto r = feed.event("c1", "start", "2024-01-01T08:00:00");
    ASSERT_EQ(r.changes.size(), 1u);
    EXPECT_EQ(r.changes[0].from, CaseState::NotACase);
    EXPECT_EQ(r.changes[0].to, CaseState::PendingSat);

    r = feed.event("c1", "bad", "2024-01-01T09:00:00");
    ASSERT_EQ(r.changes.size(), 1u);
    EXPECT_EQ(r.changes[0].to, CaseState::PermViol);
    EXPECT_TRUE(m.ledger(h).at(c1).latched);

    // 'fix' drops c1 from VIOL_PERM; the queries now say PermSat.
    r = feed.event("c1", "fix", "2024-01-01T10:00:00");
    EXPECT_TRUE(r.changes.empty());
    EXPECT_EQ(breaches(r), 1u);
    EXPECT_EQ(m.state(h, c1), CaseState::PermViol);
    EXPECT_TRUE(fixtures::check_history(m.ledger(h)).empty());
}

TEST(Monitor, ContractBreachesAreReported) {
    Monitor m;
    ConstraintEnsemble e = parse_ensemble(kSimple);
    // VIOL_PENDING now reaches outside CASE and overlaps SAT_PENDING.
    e.queries[0].source = "SELECT DISTINCT l.CaseId FROM Log l WHERE l.ActivityLabel <> 'ghost'";
    e.queries[2].source = "SELECT DISTINCT l.CaseId FROM Log l WHERE l.ActivityLabel = 'ghost' OR l.ActivityLabel = 'start'";
    const auto h = m.register_constraint(e);
    Feed feed(m);
    auto r = feed.event("g", "ghost", "2024-01-01T08:00:00");
    ASSERT_EQ(breaches(r), 1u);
    EXPECT_NE(r.diagnostics[0].message.find("not in CASE"), std::string::npos);
    r = feed.event("s", "start", "2024-01-01T08:05:00");
    ASSERT_EQ(breaches(r), 1u);
    EXPECT_NE(r.diagnostics[0].message.find("several state queries"), std::string::npos);
    EXPECT_EQ(m.state(h, {Value::text("s")}), CaseState::PendingViol);
}

TEST(Monitor, NonIncreasingSequenceWarns) {
    Monitor m;
    m.register_constraint(parse_ensemble(kSimple));
    const EventRecord rec{Atom("c"), Atom("e1"), Atom("start"), at("2024-01-01T08:00:00"), Atom("complete")};
    EXPECT_TRUE(m.ingest({"Log", rec.to_tuple(), 5}).diagnostics.empty());
    const EventRecord rec2{Atom("c"), Atom("e2"), Atom("start"), at("2024-01-01T08:01:00"), Atom("complete")};
    const auto r = m.ingest({"Log", rec2.to_tuple(), 5});
    ASSERT_EQ(r.diagnostics.size(), 1u);
    EXPECT_EQ(r.diagnostics[0].severity, Severity::Warning);
    const auto bad = m.ingest({"Log", Tuple{Value::text("too short")}, 6});
    ASSERT_EQ(bad.diagnostics.size(), 1u);
    EXPECT_EQ(bad.diagnostics[0].severity, Severity::Warning);
}

TEST(Monitor, ExistingCasesAreClassifiedAtRegistration) {
    Monitor m;
    Feed feed(m);
    feed.event("c1", "start", "2024-01-01T08:00:00");
    const auto h = m.register_constraint(parse_ensemble(kSimple));
    EXPECT_EQ(m.state(h, {Value::text("c1")}), CaseState::PendingSat);
}

TEST(Monitor, SameCarPendingViolationStaysEmpty) {
    Monitor m;
    const auto h = m.register_constraint(catalog::lookup("same-car-monitor").ensemble());
    Feed feed(m);
    const Tuple key{Value::text("c1"), Value::integer(20240305)};
    for (int i = 1; i <= 7; ++i) {
        feed.event("p" + std::to_string(i), "deliver package", "2024-03-05T0" + std::to_string(i) + ":00:00",
                   {{"CarId", "c1"}});
        EXPECT_EQ(m.state(h, key), CaseState::PendingSat);
        EXPECT_TRUE(m.result(h, Role::ViolPending).empty());
    }
    const auto r = feed.event("p8", "deliver package", "2024-03-05T09:00:00", {{"CarId", "c1"}});
    EXPECT_EQ(m.state(h, key), CaseState::PermViol);
    EXPECT_TRUE(m.result(h, Role::ViolPending).empty());
    EXPECT_EQ(breaches(r), 0u);

    // A quiet car-day turns PermSat once the day is over.
    feed.event("q1", "deliver package", "2024-03-05T10:00:00", {{"CarId", "c2"}});
    const Tuple quiet{Value::text("c2"), Value::integer(20240305)};
    EXPECT_EQ(m.state(h, quiet), CaseState::PendingSat);
    m.advance_clock(at("2024-03-06T00:00:00"));
    EXPECT_EQ(m.state(h, quiet), CaseState::PermSat);
    EXPECT_EQ(m.state(h, key), CaseState::PermViol);
    EXPECT_TRUE(fixtures::check_history(m.ledger(h)).empty());
}

TEST(Monitor, Printer1EleventhPrintIsPermanentViolation) {
    Monitor m;
    const auto h = m.register_constraint(catalog::lookup("ISC2b").ensemble());
    Feed feed(m);
    const Tuple today = day(20190304);
    for (int i = 1; i <= 11; ++i) {
        char when[32];
        std::snprintf(when, sizeof when, "2019-03-04T%02d:%02d:00", 8 + i / 2, (i % 2) * 30);
        const auto r = feed.event("o" + std::to_string(i), "print", when,
                                  {{"Printer", "Printer 1"}, {"PaperFormat", "A4"}}, "start");
        if (i <= 10) {
            EXPECT_EQ(m.state(h, today), CaseState::PendingSat) << "print " << i;
        } else {
            ASSERT_EQ(r.changes.size(), 1u);
            EXPECT_EQ(r.changes[0].from, CaseState::PendingSat);
            EXPECT_EQ(r.changes[0].to, CaseState::PermViol);
        }
    }
    // Printer 2 prints do not count.
    Monitor m2;
    const auto h2 = m2.register_constraint(catalog::lookup("ISC2b").ensemble());
    Feed feed2(m2);
    for (int i = 1; i <= 12; ++i)
        feed2.event("o" + std::to_string(i), "print", "2019-03-04T09:" + std::to_string(10 + i) + ":00",
                    {{"Printer", "Printer 2"}, {"PaperFormat", "A4"}}, "start");
    EXPECT_EQ(m2.state(h2, today), CaseState::PendingSat);
    m2.advance_clock(at("2019-03-05T08:00:00"));
    EXPECT_EQ(m2.state(h2, today), CaseState::PermSat);
}

TEST(Monitor, DailyDeliveryRun) {
    Monitor m;
    const auto h = m.register_constraint(catalog::lookup("ISC1").ensemble());
    Feed feed(m);
    // Day 1: two items printed, both delivered at 17:00.
    feed.event("a", "print", "2019-03-04T09:00:00", {}, "complete");
    feed.event("b", "print", "2019-03-04T10:00:00", {}, "complete");
    EXPECT_EQ(m.state(h, day(20190304)), CaseState::PendingViol);
    feed.event("a", "deliver", "2019-03-04T17:00:00");
    // b is still outstanding at this instant.
    EXPECT_EQ(m.state(h, day(20190304)), CaseState::PendingViol);
    feed.event("b", "deliver", "2019-03-04T17:00:00");
    EXPECT_EQ(m.state(h, day(20190304)), CaseState::PendingSat);

    // Day 2: a second delivery instant is permanent at once.
    feed.event("c", "print", "2019-03-05T09:00:00", {}, "complete");
    EXPECT_EQ(m.state(h, day(20190304)), CaseState::PermSat);
    feed.event("c", "deliver", "2019-03-05T12:00:00");
    EXPECT_EQ(m.state(h, day(20190305)), CaseState::PendingSat);
    feed.event("d", "print", "2019-03-05T13:00:00", {}, "complete");
    feed.event("d", "deliver", "2019-03-05T17:00:00");
    EXPECT_EQ(m.state(h, day(20190305)), CaseState::PermViol);

    // Day 3: an item left behind; day 4 has no delivery at all.
    feed.event("e", "print", "2019-03-06T09:00:00", {}, "complete");
    feed.event("f", "print", "2019-03-06T10:00:00", {}, "complete");
    feed.event("e", "deliver", "2019-03-06T17:00:00");
    EXPECT_EQ(m.state(h, day(20190306)), CaseState::PendingViol);
    feed.event("g", "receive poster order", "2019-03-07T09:00:00");
    EXPECT_EQ(m.state(h, day(20190306)), CaseState::PermViol);
    EXPECT_EQ(m.state(h, day(20190307)), CaseState::PendingViol);
    m.advance_clock(at("2019-03-08T08:00:00"));
    EXPECT_EQ(m.state(h, day(20190307)), CaseState::PermViol);
    EXPECT_TRUE(fixtures::check_history(m.ledger(h)).empty());
    EXPECT_TRUE(fixtures::check_contracts(m, h).empty());
}

TEST(Monitor, FollowedByScenarioCoversEveryState) {
    Monitor m;
    const auto h = m.register_constraint(catalog::lookup("followed-by-20h").ensemble());
    const auto log = catalog::abc_scenario();
    std::uint64_t seq = 0;
    for (auto d : to_insertions(log.events, log.attributes)) {
        d.sequence_no = ++seq;
        EXPECT_EQ(breaches(m.ingest(d)), 0u);
    }
    m.advance_clock(catalog::abc_scenario_now());
    const std::map<std::string, CaseState> expected{{"trace-1", CaseState::PermSat},
                                                    {"trace-2", CaseState::PendingSat},
                                                    {"trace-3", CaseState::PendingViol},
                                                    {"trace-4", CaseState::PermViol},
                                                    {"trace-5", CaseState::PermViol}};
    for (const auto &[trace, state] : expected)
        EXPECT_EQ(m.state(h, {Value::text(trace)}), state) << trace;

    // Past the 20 hours, the open A of trace 3 becomes permanent.
    m.advance_clock(Timestamp{catalog::abc_scenario_now().ms + 9 * 3'600'000LL});
    EXPECT_EQ(m.state(h, {Value::text("trace-3")}), CaseState::PermViol);
    EXPECT_TRUE(fixtures::check_history(m.ledger(h)).empty());
}

TEST(Monitor, MaintainedResultsMatchFromScratchEvaluation) {
    catalog::GeneratorConfig cfg;
    cfg.seed = 7;
    cfg.flyers = 40;
    cfg.posters = 40;
    cfg.arrival_days = 10;
    cfg.overlap_probability = 0.1;
    cfg.extra_run_probability = 0.2;
    cfg.late_bill_probability = 0.1;
    const auto log = catalog::generate_log(cfg);
    const auto stream = to_insertions(log.events, log.attributes);
    for (const char *name : {"ISC1", "ISC2a", "ISC2b", "ISC3", "ISC4"}) {
        Monitor m;
        const auto e = catalog::lookup(name).ensemble();
        const auto h = m.register_constraint(e);
        std::uint64_t seq = 0;
        for (const auto &d0 : stream) {
            InsertionDelta d = d0;
            d.sequence_no = ++seq;
            m.ingest(d);
            if (seq % 250 != 0 && seq != stream.size()) continue;
            const auto checked = check_ensemble(e, query::Catalog::for_database(m.database()));
            for (std::size_t i = 0; i < checked.size(); ++i) {
                const Role role = roles_for(Mode::Monitor)[i];
                const BagRelation expect =
                    ivm::evaluate_naive(*query::decorrelate(*checked[i]), m.database()).distinct();
                ASSERT_EQ(m.result(h, role), expect) << name << " " << role_name(role) << " at " << seq;
            }
        }
    }
}

TEST(PostMortem, PartitionsCases) {
    Database db;
    auto deliver = [&](int n, const std::string &car, const std::string &when) {
        const std::string id = "e" + std::to_string(n);
        db.insert({"Log", EventRecord{Atom("p" + std::to_string(n)), Atom(id), Atom("deliver package"), at(when),
                                      Atom("complete")}.to_tuple(), 0});
        db.insert({"EventData", EventAttribute{Atom(id), Atom("complete"), Atom("CarId"), Value::text(car)}.to_tuple(), 0});
    };
    for (int i = 0; i < 8; ++i) deliver(i, "c1", "2024-03-05T0" + std::to_string(i + 1) + ":00:00");
    deliver(8, "c2", "2024-03-05T10:00:00");
    deliver(9, "c1", "2024-03-06T10:00:00");

    const auto r = post_mortem_check(db, catalog::lookup("same-car-day").ensemble());
    const Tuple bad{Value::text("c1"), Value::integer(20240305)};
    EXPECT_EQ(r.violating.distinct_size(), 1u);
    EXPECT_TRUE(r.violating.contains(bad));
    EXPECT_EQ(r.satisfying.distinct_size(), 2u);
    EXPECT_TRUE(r.diagnostics.empty());

    const auto coarse = post_mortem_check(db, catalog::lookup("same-car").ensemble());
    EXPECT_TRUE(coarse.violating.contains({Value::text("c1")}));
    EXPECT_TRUE(coarse.satisfying.contains({Value::text("c2")}));

    const auto fine = post_mortem_check(db, catalog::lookup("same-car-count").ensemble());
    EXPECT_TRUE(fine.violating.contains({Value::text("c1"), Value::integer(20240305), Value::integer(8)}));
    EXPECT_EQ(fine.satisfying.distinct_size(), 2u);
}

TEST(PostMortem, ViolationOutsideCasesIsBreach) {
    Database db;
    db.insert({"Log", EventRecord{Atom("x"), Atom("e1"), Atom("a"), at("2024-01-01T00:00:00"), Atom("complete")}.to_tuple(), 0});
    const auto e = parse_ensemble(
        "constraint broken mode postmortem\n"
        "CASE: SELECT l.CaseId FROM Log l WHERE l.ActivityLabel = 'b'\n"
        "VIOL: SELECT l.CaseId FROM Log l WHERE l.ActivityLabel = 'a'\n");
    const auto r = post_mortem_check(db, e);
    ASSERT_EQ(r.diagnostics.size(), 1u);
    EXPECT_EQ(r.diagnostics[0].severity, Severity::ContractBreach);
}

TEST(PostMortem, AverageShippingMatchesDirectComputation) {
    catalog::ShippingConfig cfg;
    cfg.packages = 120;
    const auto log = catalog::generate_shipping_log(cfg);
    Database db;
    for (const auto &d : to_insertions(log.events, log.attributes)) db.insert(d);
    const auto r = post_mortem_check(db, catalog::lookup("avg-shipping").ensemble());

    std::map<std::string, std::int64_t> bought, shipped;
    for (const auto &e : log.events)
        (e.activity_label.str() == "purchase package" ? bought : shipped)[e.case_id.str()] = e.timestamp.ms;
    std::size_t bad = 0;
    for (const auto &[pkg, t0] : bought) {
        const double minutes = double(shipped.at(pkg) - t0) / 60000.0;
        const bool violates = minutes < 2880 || minutes > 7200;
        bad += violates;
        EXPECT_EQ(r.violating.contains({Value::text(pkg)}), violates) << pkg;
    }
    EXPECT_EQ(r.violating.distinct_size(), bad);
    EXPECT_EQ(r.satisfying.distinct_size(), bought.size() - bad);
    EXPECT_GT(bad, 0u);
    EXPECT_LT(bad, bought.size());
}
