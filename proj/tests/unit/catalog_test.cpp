#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "iscm/catalog/catalog.hpp"
#include "iscm/catalog/generator.hpp"
#include "iscm/monitor/monitor.hpp"
#include "iscm/query/parser.hpp"
#include "iscm/query/printer.hpp"
#include "iscm/time.hpp"
#include "support/ledger_checks.hpp"

using namespace iscm;
using namespace iscm::catalog;
using query::FeatureTags;

namespace {

std::string csv_bytes(const GeneratedLog &log) {
    std::ostringstream out;
    write_log_csv(out, log.events);
    write_attribute_csv(out, log.attributes);
    return out.str();
}

}  // namespace

TEST(Catalog, IscTagsMatchFeatureTable) {
    // Rows: aggregation, OR, existence check, negation, double negation.
    const std::map<std::string, FeatureTags> table{
        {"ISC1", {false, false, true, true, true}},  {"ISC2a", {true, false, true, true, false}},
        {"ISC2b", {true, false, false, true, false}}, {"ISC3", {false, true, true, true, false}},
        {"ISC4", {false, false, false, true, false}},
    };
    for (const auto &[name, tags] : table) {
        const CatalogEntry &e = lookup(name);
        EXPECT_EQ(e.tags, tags) << name;
        EXPECT_EQ(ensemble_tags(e.ensemble()), tags) << name << ": " << ensemble_tags(e.ensemble()).to_string();
    }
}

TEST(Catalog, DeclaredTagsMatchQueries) {
    for (const auto &e : catalog_entries()) EXPECT_EQ(ensemble_tags(e.ensemble()), e.tags) << e.name;
}

TEST(Catalog, Lookup) {
    EXPECT_EQ(lookup("ISC2b").mode, monitor::Mode::Monitor);
    EXPECT_TRUE(lookup("ISC2b").tags.aggregation);
    EXPECT_TRUE(lookup("ISC2b").tags.negation);
    EXPECT_TRUE(lookup("isc3").tags.disjunction);
    for (const char *n : {"ISC1", "ISC2a", "ISC2b", "ISC4"}) EXPECT_FALSE(lookup(n).tags.disjunction) << n;
    EXPECT_THROW(lookup("ISC9"), NotFoundError);
    for (const char *n : {"same-car", "same-car-day", "same-car-count", "avg-shipping", "followed-by-20h",
                          "same-car-monitor"})
        EXPECT_NO_THROW(lookup(n)) << n;
}

TEST(Catalog, EntriesAreComplete) {
    std::set<std::string> names;
    for (const auto &e : catalog_entries()) {
        EXPECT_TRUE(names.insert(e.name).second) << "duplicate " << e.name;
        EXPECT_FALSE(e.statement.empty());
        EXPECT_FALSE(e.provenance_note.empty());
        const auto ens = e.ensemble();
        EXPECT_EQ(ens.name, e.name);
        EXPECT_EQ(ens.mode, e.mode);
    }
}

TEST(Catalog, QueriesRoundTripThroughPrinter) {
    for (const auto &e : catalog_entries()) {
        for (const auto &q : e.ensemble().queries) {
            const auto parsed = query::parse(q.source);
            const auto again = query::parse(query::print(*parsed));
            EXPECT_TRUE(query::structurally_equal(*parsed, *again)) << e.name << " " << monitor::role_name(q.role);
        }
    }
}

TEST(Catalog, EveryEntryCompiles) {
    for (const auto &e : catalog_entries()) {
        if (e.mode == monitor::Mode::Monitor) {
            monitor::Monitor m;
            EXPECT_NO_THROW(m.register_constraint(e.ensemble())) << e.name;
        } else {
            EXPECT_NO_THROW(monitor::post_mortem_check(Database{}, e.ensemble())) << e.name;
        }
    }
}

TEST(Generator, PosterAndBillTraces) {
    GeneratorConfig cfg;
    cfg.seed = 1;
    cfg.flyers = 0;
    cfg.posters = 1;
    cfg.late_bill_probability = 0;
    cfg.early_bill_probability = 0;
    const auto log = generate_log(cfg);
    std::map<std::string, std::vector<std::string>> traces;
    std::set<std::string> activities;
    for (const auto &e : log.events) {
        traces[e.case_id.str()].push_back(e.activity_label.str() + "/" + e.lifecycle.str());
        activities.insert(e.case_id.str().substr(0, 4) + ":" + e.activity_label.str());
    }
    ASSERT_EQ(traces.size(), 2u);
    EXPECT_EQ(activities.size(), 7u);
    EXPECT_EQ(traces.at("poster-0001"), (std::vector<std::string>{"receive poster order/complete",
                                                                  "design poster/complete", "print/start",
                                                                  "print/complete", "deliver/complete"}));
    EXPECT_EQ(traces.at("bill-0001"), (std::vector<std::string>{"write bill/complete", "print/start",
                                                                "print/complete", "deliver/complete"}));
    for (std::size_t i = 1; i < log.events.size(); ++i)
        EXPECT_LE(log.events[i - 1].timestamp, log.events[i].timestamp);
    EXPECT_TRUE(validate_traces(log).empty());
}

TEST(Generator, NoRedesignWithoutProbability) {
    GeneratorConfig cfg;
    cfg.flyers = 100;
    cfg.posters = 0;
    cfg.redesign_probability = 0;
    for (const auto &e : generate_log(cfg).events) EXPECT_NE(e.activity_label.str(), "redesign flyer");
    cfg.redesign_probability = 0.5;
    std::size_t redesigns = 0;
    for (const auto &e : generate_log(cfg).events) redesigns += e.activity_label.str() == "redesign flyer";
    EXPECT_GT(redesigns, 0u);
}

TEST(Generator, Deterministic) {
    GeneratorConfig cfg;
    cfg.seed = 7;
    cfg.flyers = 50;
    cfg.posters = 50;
    EXPECT_EQ(csv_bytes(generate_log(cfg)), csv_bytes(generate_log(cfg)));
    GeneratorConfig other = cfg;
    other.seed = 8;
    EXPECT_NE(csv_bytes(generate_log(cfg)), csv_bytes(generate_log(other)));
}

TEST(Generator, ZeroOrdersGiveEmptyLog) {
    GeneratorConfig cfg;
    cfg.flyers = 0;
    cfg.posters = 0;
    const auto log = generate_log(cfg);
    EXPECT_TRUE(log.events.empty());
    EXPECT_TRUE(log.attributes.empty());
}

TEST(Generator, RejectsBadConfig) {
    GeneratorConfig cfg;
    cfg.flyers = -1;
    EXPECT_THROW(generate_log(cfg), std::invalid_argument);
    cfg = {};
    cfg.redesign_probability = 1.0;
    EXPECT_THROW(generate_log(cfg), std::invalid_argument);
    cfg = {};
    cfg.first_day = "2019-01-27";  // a Sunday
    EXPECT_THROW(generate_log(cfg), std::invalid_argument);
    cfg = {};
    cfg.printers = 0;
    EXPECT_THROW(generate_log(cfg), std::invalid_argument);
}

TEST(Generator, TracesFollowTheirProcesses) {
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        GeneratorConfig cfg;
        cfg.seed = seed;
        cfg.flyers = 60;
        cfg.posters = 60;
        cfg.arrival_days = 10;
        const auto problems = validate_traces(generate_log(cfg));
        EXPECT_TRUE(problems.empty()) << "seed " << seed << ": " << problems.front();
    }
    GeneratedLog broken;
    broken.events.push_back({Atom("poster-1"), Atom("e1"), Atom("design poster"), Timestamp{0}, Atom("complete")});
    EXPECT_FALSE(validate_traces(broken).empty());
}

TEST(Generator, PrintEventsCarryPrinterAndFormat) {
    GeneratorConfig cfg;
    cfg.flyers = 20;
    cfg.posters = 20;
    const auto log = generate_log(cfg);
    std::map<std::string, std::set<std::string>> formats;
    for (const auto &a : log.attributes)
        if (a.attribute.str() == "PaperFormat") formats[a.value.to_string()].insert(a.event_id.str());
    EXPECT_EQ(formats.size(), 2u);
    EXPECT_TRUE(formats.count("A4"));
    EXPECT_TRUE(formats.count("Poster"));
}

TEST(Generator, DefaultStreamHasPinnedShape) {
    const auto log = generate_log(GeneratorConfig{});
    std::set<std::string> days, months;
    for (const auto &e : log.events) {
        const std::string t = format_timestamp(e.timestamp);
        days.insert(t.substr(0, 10));
        if (e.activity_label.str() == "print" && e.lifecycle.str() == "complete") months.insert(t.substr(0, 7));
    }
    EXPECT_EQ(to_insertions(log.events, log.attributes).size(), 30636u);
    EXPECT_EQ(days.size(), 101u);
    EXPECT_EQ(months.size(), 6u);
    EXPECT_TRUE(validate_traces(log).empty());
}

TEST(Generator, DefaultStreamReachesBothPermanentStates) {
    const auto log = generate_log(GeneratorConfig{});
    const auto stream = to_insertions(log.events, log.attributes);
    for (const char *name : {"ISC1", "ISC2a", "ISC2b", "ISC3", "ISC4"}) {
        monitor::Monitor m;
        const auto h = m.register_constraint(lookup(name).ensemble());
        std::uint64_t seq = 0;
        std::size_t breaches = 0;
        for (auto d : stream) {
            d.sequence_no = ++seq;
            for (const auto &diag : m.ingest(d).diagnostics) breaches += diag.severity == monitor::Severity::ContractBreach;
        }
        std::map<monitor::CaseState, int> states;
        for (const auto &[k, rec] : m.ledger(h)) ++states[rec.state];
        EXPECT_GT(states[monitor::CaseState::PermSat], 0) << name;
        EXPECT_GT(states[monitor::CaseState::PermViol], 0) << name;
        EXPECT_EQ(breaches, 0u) << name;
        EXPECT_TRUE(fixtures::check_history(m.ledger(h)).empty()) << name;
        EXPECT_TRUE(fixtures::check_contracts(m, h).empty()) << name;
    }
}

TEST(Generator, ShippingAndAbcLogs) {
    const auto ship = generate_shipping_log({});
    EXPECT_EQ(ship.events.size(), 600u);
    EXPECT_EQ(ship.attributes.size(), 900u);
    const auto abc = generate_abc_log(3, 40);
    std::set<std::string> traces;
    for (const auto &e : abc.events) traces.insert(e.case_id.str());
    EXPECT_EQ(traces.size(), 40u);
    EXPECT_EQ(csv_bytes(generate_abc_log(3, 40)), csv_bytes(abc));
}
