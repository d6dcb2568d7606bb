#include <gtest/gtest.h>

#include <map>

#include "iscm/event.hpp"
#include "iscm/ivm/dataflow.hpp"
#include "iscm/ivm/eval.hpp"
#include "iscm/ivm/naive.hpp"
#include "iscm/query/decorrelate.hpp"
#include "iscm/query/parser.hpp"
#include "iscm/query/typecheck.hpp"
#include "support/random_plans.hpp"

using namespace iscm;
using namespace iscm::ivm;
using iscm::fixtures::prepare;
using iscm::fixtures::PreparedQuery;

namespace {

constexpr double kTolerance = 1e-9;

BagRelation apply_rows(BagRelation bag, const RowDeltas &delta) {
    bag.apply(delta);
    return bag;
}

const char *kSameCarDay =
    "SELECT e.Value AS CarId, EXTRACT(YEAR FROM e.Timestamp) * 10000 + EXTRACT(MONTH FROM e.Timestamp) * 100 + "
    "EXTRACT(DAY FROM e.Timestamp) AS Day FROM Events e "
    "WHERE e.ActivityLabel = 'deliver package' AND e.Attribute = 'CarId' "
    "GROUP BY e.Value, EXTRACT(YEAR FROM e.Timestamp) * 10000 + EXTRACT(MONTH FROM e.Timestamp) * 100 + "
    "EXTRACT(DAY FROM e.Timestamp) HAVING COUNT(*) > 7";

const char *kCarDays =
    "SELECT DISTINCT e.Value AS CarId, EXTRACT(YEAR FROM e.Timestamp) * 10000 + EXTRACT(MONTH FROM e.Timestamp) * "
    "100 + EXTRACT(DAY FROM e.Timestamp) AS Day FROM Events e "
    "WHERE e.ActivityLabel = 'deliver package' AND e.Attribute = 'CarId'";

void insert_delivery(Database &db, Dataflow &g, int n, const std::string &car, const std::string &when) {
    const std::string id = "e" + std::to_string(n);
    const Tuple log{Value::text("p" + std::to_string(n)), Value::text(id), Value::text("deliver package"),
                    Value::timestamp(*parse_timestamp(when)), Value::text("complete")};
    g.apply(db.insert(InsertionDelta{"Log", log, 0}));
    const Tuple attr{Value::text(id), Value::text("complete"), Value::text("CarId"), Value::text(car)};
    g.apply(db.insert(InsertionDelta{"EventData", attr, 0}));
}

}  // namespace

TEST(Ivm, ScanMirrorsBaseRelation) {
    Database db;
    auto q = prepare("SELECT * FROM Log", query::Catalog::standard());
    auto plan = compile(*q.plan, db);
    EXPECT_TRUE(current_result(plan).empty());
    EXPECT_EQ(plan.graph->node_count(), 1u);
    const Tuple row{Value::text("c"), Value::text("e"), Value::text("a"), Value::timestamp_ms(5), Value::text("complete")};
    const RowDeltas delta = apply_delta(plan, db.insert(InsertionDelta{"Log", row, 1}));
    ASSERT_EQ(delta.size(), 1u);
    EXPECT_EQ(delta[0].mult, 1);
    EXPECT_EQ(current_result(plan), db.scan("Log"));
}

TEST(Ivm, InitialMaterializationMatchesNaive) {
    Database db = fixtures::make_test_database();
    fixtures::RandomPlans gen(7);
    for (int i = 0; i < 200; ++i) gen.random_insertion(db);
    const auto catalog = query::Catalog::for_database(db);
    for (int t = 0; t < 16; ++t) {
        auto q = prepare(gen.random_query(t), catalog);
        SCOPED_TRACE(q.text);
        auto plan = compile(*q.plan, db);
        EXPECT_TRUE(bags_close(plan.graph->contents(plan.root), evaluate_naive(*q.plan, db), kTolerance));
    }
}

// Master property: maintained contents equal from-scratch evaluation after
// every insertion, and the emitted root delta takes the old contents to the
// new ones.
TEST(Ivm, OracleEquivalenceOnRandomPlans) {
    constexpr int kPlans = 32;
    constexpr int kInsertions = 1000;
    constexpr int kCorrelatedCheckEvery = 100;
    for (int p = 0; p < kPlans; ++p) {
        Database db = fixtures::make_test_database();
        fixtures::RandomPlans gen(1000 + static_cast<std::uint64_t>(p));
        const auto q = prepare(gen.random_query(p), query::Catalog::for_database(db));
        SCOPED_TRACE(q.text);
        auto plan = compile(*q.plan, db);
        BagRelation previous = plan.graph->contents(plan.root);
        for (int i = 1; i <= kInsertions; ++i) {
            const RowDeltas delta = apply_delta(plan, gen.random_insertion(db));
            const BagRelation &now = plan.graph->contents(plan.root);
            const BagRelation expected = evaluate_naive(*q.plan, db);
            ASSERT_TRUE(bags_close(now, expected, kTolerance)) << "after insertion " << i;
            ASSERT_TRUE(bags_close(apply_rows(previous, delta), now, kTolerance)) << "delta unsound at " << i;
            previous = now;
            if (i % kCorrelatedCheckEvery == 0)
                ASSERT_TRUE(bags_close(evaluate_naive(*q.checked, db), expected, kTolerance)) << "at " << i;
        }
    }
}

TEST(Ivm, EighthSameDayDeliveryRaisesViolation) {
    Database db;
    const auto catalog = query::Catalog::standard();
    const auto viol = prepare(kSameCarDay, catalog);
    const auto cases = prepare(kCarDays, catalog);
    auto plans = compile_ensemble({viol.plan.get(), cases.plan.get()}, db);
    Dataflow &g = *plans[0].graph;

    std::map<std::pair<std::string, std::string>, int> per_car_day;
    int n = 0;
    for (int i = 0; i < 7; ++i) {
        insert_delivery(db, g, n++, "c1", "2024-03-05T0" + std::to_string(i + 1) + ":00:00");
        ++per_car_day[{"c1", "2024-03-05"}];
    }
    insert_delivery(db, g, n++, "c2", "2024-03-05T09:00:00");
    insert_delivery(db, g, n++, "c1", "2024-03-06T09:00:00");
    per_car_day[{"c2", "2024-03-05"}]++;
    per_car_day[{"c1", "2024-03-06"}]++;
    for (const auto &[key, count] : per_car_day) ASSERT_LE(count, 7);
    EXPECT_TRUE(current_result(plans[0]).empty());
    EXPECT_EQ(current_result(plans[1]).distinct_size(), 3u);

    // A delivery for a fresh car only adds a case.
    insert_delivery(db, g, n++, "c3", "2024-03-06T10:00:00");
    const Tuple c3{Value::text("c3"), Value::integer(20240306)};
    EXPECT_EQ(g.last_delta(plans[1].root), (RowDeltas{{c3, 1}}));
    EXPECT_TRUE(current_result(plans[0]).empty());

    // The eighth delivery of c1 on 2024-03-05.
    insert_delivery(db, g, n++, "c1", "2024-03-05T10:00:00");
    const Tuple c1{Value::text("c1"), Value::integer(20240305)};
    // Attribute rows arrive after the Log row; the last tick carries the change.
    EXPECT_EQ(g.last_delta(plans[0].root), (RowDeltas{{c1, 1}}));
    BagRelation expected;
    expected.add(c1, 1);
    EXPECT_EQ(current_result(plans[0]), expected);
    EXPECT_EQ(evaluate_naive(*viol.checked, db), expected);
}

TEST(Ivm, NotExistsGuardRetractsTuple) {
    Database db = fixtures::make_test_database();
    db.insert("R", Tuple{Value::integer(1), Value::integer(1), Value::text("x"), Value::timestamp_ms(0)});
    db.insert("R", Tuple{Value::integer(2), Value::integer(2), Value::text("y"), Value::timestamp_ms(0)});
    db.insert("S", Tuple{Value::integer(2), Value::decimal(9)});
    db.insert("T", Tuple{Value::integer(1), Value::text("x")});
    db.insert("T", Tuple{Value::integer(3), Value::text("z")});
    const auto q = prepare("SELECT r.a FROM R r WHERE NOT EXISTS (SELECT * FROM S s WHERE s.a = r.a)",
                           query::Catalog::for_database(db));
    auto plan = compile(*q.plan, db);
    const BagRelation before = evaluate_naive(*q.checked, db);
    EXPECT_EQ(current_result(plan), before);
    const RowDeltas delta = apply_delta(plan, db.insert("S", Tuple{Value::integer(1), Value::decimal(0.5)}));
    const BagRelation after = evaluate_naive(*q.checked, db);
    EXPECT_EQ(delta, (RowDeltas{{Tuple{Value::integer(1)}, -1}}));
    EXPECT_EQ(apply_rows(before, delta), after);
    EXPECT_TRUE(after.empty());
}

// Every database over a 2-value universe with at most 4 tuples in total,
// checked against a direct reading of the double negation.
TEST(Ivm, DoubleNegationMatchesEnumeration) {
    const char *text =
        "SELECT a.x FROM A a WHERE NOT EXISTS (SELECT * FROM B b WHERE b.x = a.x AND NOT EXISTS "
        "(SELECT * FROM C c WHERE c.y = b.y))";
    struct Fact {
        char rel;
        int u, v;
    };
    std::vector<Fact> universe;
    for (int u = 0; u < 2; ++u) {
        universe.push_back({'A', u, 0});
        universe.push_back({'C', u, 0});
        for (int v = 0; v < 2; ++v) universe.push_back({'B', u, v});
    }
    int checked = 0;
    for (unsigned mask = 0; mask < (1u << universe.size()); ++mask) {
        if (__builtin_popcount(mask) > 4) continue;
        Database db;
        db.create_relation("A", Schema({{"", "x", Kind::Int}}));
        db.create_relation("B", Schema({{"", "x", Kind::Int}, {"", "y", Kind::Int}}));
        db.create_relation("C", Schema({{"", "y", Kind::Int}}));
        std::vector<Fact> facts;
        for (std::size_t i = 0; i < universe.size(); ++i)
            if (mask & (1u << i)) facts.push_back(universe[i]);
        Database empty = db;
        const auto q = prepare(text, query::Catalog::for_database(db));
        auto plan = compile(*q.plan, empty);
        for (const Fact &f : facts) {
            Tuple t = f.rel == 'B' ? Tuple{Value::integer(f.u), Value::integer(f.v)} : Tuple{Value::integer(f.u)};
            apply_delta(plan, empty.insert(std::string(1, f.rel), t));
        }
        BagRelation expected;
        for (const Fact &a : facts) {
            if (a.rel != 'A') continue;
            bool witness = false;
            for (const Fact &b : facts) {
                if (b.rel != 'B' || b.u != a.u) continue;
                bool covered = false;
                for (const Fact &c : facts) covered = covered || (c.rel == 'C' && c.u == b.v);
                witness = witness || !covered;
            }
            if (!witness) expected.add(Tuple{Value::integer(a.u)}, 1);
        }
        ASSERT_EQ(current_result(plan), expected) << "mask " << mask;
        ASSERT_EQ(evaluate_naive(*q.checked, empty), expected) << "mask " << mask;
        ++checked;
    }
    EXPECT_GT(checked, 100);
}

TEST(Ivm, AverageEqualsSumOverCount) {
    Database db = fixtures::make_test_database();
    fixtures::RandomPlans gen(3);
    const auto q = prepare("SELECT s.a, AVG(s.d) AS m, SUM(s.d) AS total, COUNT(s.d) AS n FROM S s GROUP BY s.a",
                           query::Catalog::for_database(db));
    auto plan = compile(*q.plan, db);
    for (int i = 0; i < 500; ++i) apply_delta(plan, db.insert("S", Tuple{gen.int_value(), gen.decimal_value()}));
    for (const auto &[row, mult] : current_result(plan)) {
        if (row[3].as_int() == 0) {
            EXPECT_TRUE(row[1].is_null());
            continue;
        }
        const double expected = row[2].as_number() / static_cast<double>(row[3].as_int());
        EXPECT_NEAR(row[1].as_number(), expected, kTolerance * std::max(1.0, std::abs(expected)));
    }
}

TEST(Ivm, CountOverEmptyInputHasNoGroups) {
    Database db = fixtures::make_test_database();
    const auto q = prepare("SELECT COUNT(*) AS n FROM S s", query::Catalog::for_database(db));
    EXPECT_TRUE(evaluate_naive(*q.plan, db).empty());
    EXPECT_TRUE(current_result(compile(*q.plan, db)).empty());
}

TEST(Ivm, EventsSubplanSharedWithinEnsemble) {
    Database db;
    const auto catalog = query::Catalog::standard();
    const auto viol = prepare(kSameCarDay, catalog);
    const auto cases = prepare(kCarDays, catalog);
    auto shared = compile_ensemble({viol.plan.get(), cases.plan.get()}, db);
    const std::size_t separate = compile(*viol.plan, db).graph->node_count() + compile(*cases.plan, db).graph->node_count();
    EXPECT_LT(shared[0].graph->node_count(), separate);
    EXPECT_EQ(shared[0].graph, shared[1].graph);
    EXPECT_NE(shared[0].graph->dump().find("(root)"), std::string::npos);
}

TEST(Ivm, RejectsSubqueriesInPlans) {
    Database db = fixtures::make_test_database();
    const auto q = prepare("SELECT r.a FROM R r WHERE EXISTS (SELECT * FROM S s WHERE s.a = r.a)",
                           query::Catalog::for_database(db));
    Dataflow g;
    EXPECT_THROW(g.add_query(*q.checked), query::UnsupportedError);
    EXPECT_NO_THROW(g.add_query(*q.plan));
}

TEST(Ivm, InvariantBreachReportsNode) {
    Database db = fixtures::make_test_database();
    const auto q = prepare("SELECT DISTINCT r.c FROM R r", query::Catalog::for_database(db));
    auto plan = compile(*q.plan, db);
    try {
        apply_delta(plan, DeltaBatch{{"R", Tuple{Value::integer(1), Value::integer(1), Value::text("x"),
                                                 Value::timestamp_ms(0)}, -1}});
        FAIL() << "expected an invariant breach";
    } catch (const std::logic_error &e) {
        EXPECT_NE(std::string(e.what()).find("node #"), std::string::npos) << e.what();
    }
}

TEST(Ivm, PushDownPreservesResults) {
    for (int seed = 0; seed < 40; ++seed) {
        Database db = fixtures::make_test_database();
        fixtures::RandomPlans gen(500 + static_cast<std::uint64_t>(seed));
        for (int i = 0; i < 45; ++i) gen.random_insertion(db);
        const auto q = prepare(gen.random_query(seed), query::Catalog::for_database(db));
        SCOPED_TRACE(q.text);
        EXPECT_TRUE(bags_close(evaluate_naive(*q.checked, db, false), evaluate_naive(*q.checked, db, true), kTolerance));
        EXPECT_TRUE(bags_close(evaluate_naive(*q.plan, db, false), evaluate_naive(*q.checked, db, false), kTolerance));
    }
}
