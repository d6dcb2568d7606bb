#include "iscm/catalog/catalog.hpp"

#include <algorithm>
#include <cctype>

#include "iscm/query/parser.hpp"

namespace iscm::catalog {

using monitor::Mode;

std::string day_key(std::string_view c) {
    const std::string col(c);
    return "(EXTRACT(YEAR FROM " + col + ") * 10000 + EXTRACT(MONTH FROM " + col + ") * 100 + EXTRACT(DAY FROM " +
           col + "))";
}

std::string month_key(std::string_view c) {
    const std::string col(c);
    return "(EXTRACT(YEAR FROM " + col + ") * 100 + EXTRACT(MONTH FROM " + col + "))";
}

namespace {

std::string ensemble_text(const std::string &name, Mode mode, const std::vector<std::pair<std::string, std::string>> &blocks) {
    std::string out = "constraint " + name + " mode " + std::string(monitor::mode_name(mode)) + "\n";
    for (const auto &[label, body] : blocks) out += "\n" + label + ":\n" + body + "\n";
    return out;
}

// ---- print shop -----------------------------------------------------------

std::string day_cases() { return "(SELECT DISTINCT " + day_key("l.Timestamp") + " AS Day FROM Log l)"; }
std::string today() { return "(SELECT DISTINCT " + day_key("n.Timestamp") + " AS Day FROM Now n)"; }

std::string instants() {
    return "(SELECT DISTINCT " + day_key("l.Timestamp") +
           " AS Day, l.Timestamp AS T FROM Log l WHERE l.ActivityLabel = 'deliver')";
}

// A delivery instant x on day d that is the only one of the day and took
// every item whose print completed earlier that day.
std::string good_instant(const std::string &day) {
    return "(SELECT * FROM " + instants() + " x\n"
           "   WHERE x.Day = " + day + "\n"
           "     AND NOT EXISTS (SELECT * FROM " + instants() + " y WHERE y.Day = x.Day AND y.T <> x.T)\n"
           "     AND NOT EXISTS (SELECT * FROM Log p, " + instants() + " x2\n"
           "                     WHERE x2.Day = x.Day AND x2.T = x.T\n"
           "                       AND p.ActivityLabel = 'print' AND p.Lifecycle = 'complete'\n"
           "                       AND " + day_key("p.Timestamp") + " = x2.Day AND p.Timestamp < x2.T\n"
           "                       AND NOT EXISTS (SELECT * FROM Log v WHERE v.CaseId = p.CaseId\n"
           "                                       AND v.ActivityLabel = 'deliver' AND v.Timestamp = x2.T)))";
}

std::string two_instants(const std::string &day) {
    return "(SELECT * FROM " + instants() + " x, " + instants() + " y\n"
           "   WHERE x.Day = " + day + " AND y.Day = x.Day AND x.T < y.T)";
}

CatalogEntry isc1() {
    CatalogEntry e;
    e.name = "ISC1";
    e.statement = "Each working day has a single delivery run, and that run takes every order or bill whose printing "
                  "finished earlier the same day.";
    e.mode = Mode::Monitor;
    e.source = ensemble_text(
        e.name, e.mode,
        {{"CASE", "SELECT DISTINCT " + day_key("l.Timestamp") + " AS Day FROM Log l"},
         {"VIOL_PERM", "SELECT d.Day FROM " + day_cases() + " d\n"
                       "WHERE NOT EXISTS " + good_instant("d.Day") + "\n"
                       "  AND NOT EXISTS (SELECT * FROM " + today() + " t\n"
                       "                  WHERE t.Day = d.Day AND NOT EXISTS " + two_instants("t.Day") + ")"},
         {"VIOL_PENDING", "SELECT d.Day FROM " + day_cases() + " d, " + today() + " t\n"
                          "WHERE d.Day = t.Day\n"
                          "  AND NOT EXISTS " + good_instant("d.Day") + "\n"
                          "  AND NOT EXISTS " + two_instants("d.Day")},
         {"SAT_PENDING", "SELECT d.Day FROM " + day_cases() + " d, " + today() + " t\n"
                         "WHERE d.Day = t.Day AND EXISTS " + good_instant("d.Day")}});
    e.tags = {.aggregation = false, .disjunction = false, .existence = true, .negation = true, .double_negation = true};
    e.provenance_note =
        "Reconstructed from the rule statement; no reference query text exists. A day is a case once it has any "
        "event. While the day is open it is PendingViol until a complete delivery instant exists; a second "
        "delivery instant is a permanent violation at once, any other defect becomes permanent when the day ends.";
    return e;
}

std::string print_jobs() {
    return "(SELECT s.EventId, " + month_key("c.Timestamp") + " AS Month, c.Timestamp - s.Timestamp AS Minutes\n"
           "   FROM Log s, Log c\n"
           "   WHERE c.EventId = s.EventId AND s.ActivityLabel = 'print' AND s.Lifecycle = 'start'\n"
           "     AND c.Lifecycle = 'complete')";
}

std::string month_cases() {
    return "(SELECT DISTINCT " + month_key("l.Timestamp") +
           " AS Month FROM Log l WHERE l.ActivityLabel = 'print' AND l.Lifecycle = 'complete')";
}

std::string this_month() { return "(SELECT DISTINCT " + month_key("n.Timestamp") + " AS Month FROM Now n)"; }

std::string slow_month(const std::string &month) {
    return "(SELECT * FROM (SELECT j.Month, COUNT(*) AS Jobs FROM " + print_jobs() + " j GROUP BY j.Month) a,\n"
           "                (SELECT j.Month, COUNT(*) AS Slow FROM " + print_jobs() + " j\n"
           "                 WHERE j.Minutes > 10 GROUP BY j.Month) b\n"
           "   WHERE a.Month = " + month + " AND b.Month = a.Month AND b.Slow * 20 > a.Jobs)";
}

CatalogEntry isc2a() {
    CatalogEntry e;
    e.name = "ISC2a";
    e.statement = "Per calendar month, at least 95% of the print jobs take no more than 10 minutes from start to "
                  "completion.";
    e.mode = Mode::Monitor;
    e.source = ensemble_text(
        e.name, e.mode,
        {{"CASE", "SELECT DISTINCT " + month_key("l.Timestamp") +
                      " AS Month FROM Log l WHERE l.ActivityLabel = 'print' AND l.Lifecycle = 'complete'"},
         {"VIOL_PERM", "SELECT c.Month FROM " + month_cases() + " c, " + this_month() + " t\n"
                       "WHERE c.Month < t.Month AND EXISTS " + slow_month("c.Month")},
         {"VIOL_PENDING", "SELECT c.Month FROM " + month_cases() + " c, " + this_month() + " t\n"
                          "WHERE c.Month = t.Month AND EXISTS " + slow_month("c.Month")},
         {"SAT_PENDING", "SELECT c.Month FROM " + month_cases() + " c, " + this_month() + " t\n"
                         "WHERE c.Month = t.Month AND NOT EXISTS " + slow_month("c.Month")}});
    e.tags = {.aggregation = true, .disjunction = false, .existence = true, .negation = true, .double_negation = false};
    e.provenance_note =
        "Reconstructed from the rule statement; no reference query text exists. Cases are months with a completed "
        "print job; a job belongs to the month it completes in. The ratio is checked as slow * 20 > all, and a "
        "month's state becomes permanent once Now is in a later month.";
    return e;
}

std::string printer1_days() {
    return "(SELECT " + day_key("e.Timestamp") + " AS Day, COUNT(*) AS Prints FROM Events e\n"
           "   WHERE e.ActivityLabel = 'print' AND e.Lifecycle = 'start'\n"
           "     AND e.Attribute = 'Printer' AND e.Value = 'Printer 1'\n"
           "   GROUP BY " + day_key("e.Timestamp") + ")";
}

CatalogEntry isc2b() {
    CatalogEntry e;
    e.name = "ISC2b";
    e.statement = "Printer 1 starts at most 10 print jobs on any day.";
    e.mode = Mode::Monitor;
    e.source = ensemble_text(
        e.name, e.mode,
        {{"CASE", "SELECT DISTINCT " + day_key("l.Timestamp") + " AS Day FROM Log l"},
         {"VIOL_PERM", "SELECT k.Day FROM " + printer1_days() + " k WHERE k.Prints > 10"},
         {"VIOL_PENDING", "SELECT k.Day FROM " + printer1_days() + " k\n"
                          "WHERE k.Prints > 10\n"
                          "  AND NOT EXISTS (SELECT * FROM " + printer1_days() + " k2 WHERE k2.Day = k.Day AND k2.Prints > 10)"},
         {"SAT_PENDING", "SELECT d.Day FROM " + day_cases() + " d, " + today() + " t\n"
                         "WHERE d.Day = t.Day\n"
                         "  AND NOT EXISTS (SELECT * FROM " + printer1_days() + " k WHERE k.Day = d.Day AND k.Prints > 10)"}});
    e.tags = {.aggregation = true, .disjunction = false, .existence = false, .negation = true, .double_negation = false};
    e.provenance_note =
        "Reconstructed from the rule statement; no reference query text exists. Cases are days with events, a print "
        "is a job start carrying Printer = 'Printer 1'. The 11th print is a permanent violation; VIOL_PENDING is "
        "over-limit days that are not permanent, which is empty by construction.";
    return e;
}

const char *kReceipt = "(r.ActivityLabel = 'receive flyer order' OR r.ActivityLabel = 'receive poster order')";

std::string bill_of(const std::string &order) {
    return "b.ActivityLabel = 'write bill' AND b.Attribute = 'OrderId' AND b.Value = " + order;
}

CatalogEntry isc3() {
    CatalogEntry e;
    e.name = "ISC3";
    e.statement = "Every flyer or poster order gets its bill written after the order arrives and before the order "
                  "is delivered.";
    e.mode = Mode::Monitor;
    const std::string r = kReceipt;
    e.source = ensemble_text(
        e.name, e.mode,
        {{"CASE", "SELECT DISTINCT r.CaseId FROM Log r WHERE " + r},
         {"VIOL_PERM", "SELECT r.CaseId FROM Log r, Events b\n"
                       "WHERE " + r + "\n"
                       "  AND " + bill_of("r.CaseId") + " AND b.Timestamp <= r.Timestamp\n"
                       "UNION\n"
                       "SELECT r.CaseId FROM Log r, Log o\n"
                       "WHERE " + r + "\n"
                       "  AND o.CaseId = r.CaseId AND o.ActivityLabel = 'deliver'\n"
                       "  AND NOT EXISTS (SELECT * FROM Events b WHERE " + bill_of("o.CaseId") +
                           " AND b.Timestamp < o.Timestamp)"},
         {"VIOL_PENDING", "SELECT r.CaseId FROM Log r\n"
                          "WHERE " + r + "\n"
                          "  AND NOT EXISTS (SELECT * FROM Log o WHERE o.CaseId = r.CaseId AND o.ActivityLabel = 'deliver')\n"
                          "  AND NOT EXISTS (SELECT * FROM Events b WHERE " + bill_of("r.CaseId") + ")"},
         {"SAT_PENDING", "SELECT r.CaseId FROM Log r\n"
                         "WHERE " + r + "\n"
                         "  AND NOT EXISTS (SELECT * FROM Log o WHERE o.CaseId = r.CaseId AND o.ActivityLabel = 'deliver')\n"
                         "  AND EXISTS (SELECT * FROM Events b WHERE " + bill_of("r.CaseId") +
                             " AND b.Timestamp > r.Timestamp)"}});
    e.tags = {.aggregation = false, .disjunction = true, .existence = true, .negation = true, .double_negation = false};
    e.provenance_note =
        "Reconstructed from the rule statement; no reference query text exists. Cases are received orders; the bill "
        "is the 'write bill' event whose OrderId attribute names the order. A bill written no later than the "
        "receipt, or a delivery with no earlier bill, is permanent; an undelivered order without a bill is pending.";
    return e;
}

std::string job_starts() {
    return "(SELECT s.EventId, s.Timestamp AS Start, " + day_key("s.Timestamp") +
           " AS Day, p.Value AS Printer, f.Value AS Format\n"
           "   FROM Log s, EventData p, EventData f\n"
           "   WHERE s.ActivityLabel = 'print' AND s.Lifecycle = 'start'\n"
           "     AND p.EventId = s.EventId AND p.Lifecycle = s.Lifecycle AND p.Attribute = 'Printer'\n"
           "     AND f.EventId = s.EventId AND f.Lifecycle = s.Lifecycle AND f.Attribute = 'PaperFormat')";
}

std::string overlap_days() {
    return "(SELECT DISTINCT a.Day FROM " + job_starts() + " a,\n"
           "   (SELECT c.EventId, c.Timestamp AS Done FROM Log c\n"
           "    WHERE c.ActivityLabel = 'print' AND c.Lifecycle = 'complete') ac,\n"
           "   " + job_starts() + " b\n"
           "   WHERE ac.EventId = a.EventId AND b.Printer = a.Printer AND b.Day = a.Day\n"
           "     AND b.Format <> a.Format AND b.EventId <> a.EventId\n"
           "     AND a.Start <= b.Start AND b.Start < ac.Done)";
}

CatalogEntry isc4() {
    CatalogEntry e;
    e.name = "ISC4";
    e.statement = "A printer never runs an A4 job and a Poster job at the same time: no job may start on a printer "
                  "while a job of the other format is still running there.";
    e.mode = Mode::Monitor;
    const std::string cases = "(SELECT DISTINCT " + day_key("l.Timestamp") +
                              " AS Day FROM Log l WHERE l.ActivityLabel = 'print' AND l.Lifecycle = 'start')";
    e.source = ensemble_text(
        e.name, e.mode,
        {{"CASE", "SELECT DISTINCT " + day_key("l.Timestamp") +
                      " AS Day FROM Log l WHERE l.ActivityLabel = 'print' AND l.Lifecycle = 'start'"},
         {"VIOL_PERM", "SELECT v.Day FROM " + overlap_days() + " v"},
         {"VIOL_PENDING", "SELECT v.Day FROM " + overlap_days() + " v\n"
                          "WHERE NOT EXISTS (SELECT * FROM " + overlap_days() + " w WHERE w.Day = v.Day)"},
         {"SAT_PENDING", "SELECT d.Day FROM " + cases + " d, " + today() + " t\n"
                         "WHERE d.Day = t.Day\n"
                         "  AND NOT EXISTS (SELECT * FROM " + overlap_days() + " v WHERE v.Day = d.Day)"}});
    e.tags = {.aggregation = false, .disjunction = false, .existence = false, .negation = true, .double_negation = false};
    e.provenance_note =
        "Reconstructed from the rule statement; no reference query text exists. Cases are days with print starts. "
        "Two jobs overlap when one starts at or after the other's start and before its completion; the overlap is "
        "seen when the earlier job completes and is permanent. Jobs on different days are not compared.";
    return e;
}

// ---- shipping and A/B/C examples -----------------------------------------

std::string car_days() {
    return "SELECT DISTINCT e.Value AS CarId, " + day_key("e.Timestamp") + " AS Day FROM Events e\n"
           "WHERE e.ActivityLabel = 'deliver package' AND e.Attribute = 'CarId'";
}

std::string busy_car_days() {
    return "SELECT e.Value AS CarId, " + day_key("e.Timestamp") + " AS Day FROM Events e\n"
           "WHERE e.ActivityLabel = 'deliver package' AND e.Attribute = 'CarId'\n"
           "GROUP BY e.Value, " + day_key("e.Timestamp") + "\n"
           "HAVING COUNT(*) > 7";
}

const char *kSameCarStatement = "A shipping car delivers at most seven packages per day.";
const char *kExampleNote = "Reconstructed from the rule statement; no reference query text exists.";

CatalogEntry same_car_day() {
    CatalogEntry e;
    e.name = "same-car-day";
    e.statement = kSameCarStatement;
    e.mode = Mode::PostMortem;
    e.source = ensemble_text(e.name, e.mode, {{"CASE", car_days()}, {"VIOL", busy_car_days()}});
    e.tags = {.aggregation = true};
    e.provenance_note = std::string(kExampleNote) + " Cases are (car, day) pairs.";
    return e;
}

CatalogEntry same_car() {
    CatalogEntry e;
    e.name = "same-car";
    e.statement = kSameCarStatement;
    e.mode = Mode::PostMortem;
    e.source = ensemble_text(
        e.name, e.mode,
        {{"CASE", "SELECT DISTINCT e.Value AS CarId FROM Events e\n"
                  "WHERE e.ActivityLabel = 'deliver package' AND e.Attribute = 'CarId'"},
         {"VIOL", "SELECT DISTINCT v.CarId FROM (" + busy_car_days() + ") v"}});
    e.tags = {.aggregation = true};
    e.provenance_note = std::string(kExampleNote) + " Cases are cars; a car violates if any of its days does.";
    return e;
}

CatalogEntry same_car_count() {
    CatalogEntry e;
    e.name = "same-car-count";
    e.statement = kSameCarStatement;
    e.mode = Mode::PostMortem;
    const std::string counts = "SELECT e.Value AS CarId, " + day_key("e.Timestamp") +
                               " AS Day, COUNT(*) AS Deliveries FROM Events e\n"
                               "WHERE e.ActivityLabel = 'deliver package' AND e.Attribute = 'CarId'\n"
                               "GROUP BY e.Value, " + day_key("e.Timestamp");
    e.source = ensemble_text(e.name, e.mode, {{"CASE", counts}, {"VIOL", counts + "\nHAVING COUNT(*) > 7"}});
    e.tags = {.aggregation = true};
    e.provenance_note = std::string(kExampleNote) + " Cases are (car, day, number of deliveries) triples.";
    return e;
}

CatalogEntry avg_shipping() {
    CatalogEntry e;
    e.name = "avg-shipping";
    e.statement = "Each package is, on average over its deliveries, delivered at least 2 and at most 5 days after its purchase.";
    e.mode = Mode::PostMortem;
    e.source = ensemble_text(
        e.name, e.mode,
        {{"CASE", "SELECT DISTINCT e.Value AS PackageId FROM Events e\n"
                  "WHERE e.ActivityLabel = 'purchase package' AND e.Attribute = 'PackageId'"},
         {"VIOL", "SELECT p.Value AS PackageId FROM Events p, Events d\n"
                  "WHERE p.ActivityLabel = 'purchase package' AND p.Attribute = 'PackageId'\n"
                  "  AND d.ActivityLabel = 'deliver package' AND d.Attribute = 'PackageId' AND d.Value = p.Value\n"
                  "GROUP BY p.Value\n"
                  "HAVING AVG(d.Timestamp - p.Timestamp) < 2880 OR AVG(d.Timestamp - p.Timestamp) > 7200"}});
    e.tags = {.aggregation = true, .disjunction = true};
    e.provenance_note = std::string(kExampleNote) +
                        " Times are in minutes (2880 = two days, 7200 = five days); the bounds are inclusive.";
    return e;
}

// Each A event with the event that directly follows it in its trace.
const char *kNext =
    "(SELECT a.CaseId, a.Timestamp AS At, n.ActivityLabel AS NextLabel, n.Timestamp AS NextAt\n"
    "   FROM Log a, Log n\n"
    "   WHERE a.ActivityLabel = 'A' AND n.CaseId = a.CaseId AND n.Timestamp > a.Timestamp\n"
    "     AND NOT EXISTS (SELECT * FROM Log m WHERE m.CaseId = a.CaseId\n"
    "                     AND m.Timestamp > a.Timestamp AND m.Timestamp < n.Timestamp))";

// A events that nothing has followed yet.
const char *kOpen =
    "(SELECT a.CaseId, a.Timestamp AS At FROM Log a\n"
    "   WHERE a.ActivityLabel = 'A'\n"
    "     AND NOT EXISTS (SELECT * FROM Log n WHERE n.CaseId = a.CaseId AND n.Timestamp > a.Timestamp))";

const char *kBadStep = "(p.NextLabel <> 'B' OR p.NextAt - p.At > 1200)";

CatalogEntry followed_by() {
    CatalogEntry e;
    e.name = "followed-by-20h";
    e.statement = "In every trace, each A is immediately followed by a B no more than 20 hours later.";
    e.mode = Mode::Monitor;
    const std::string next = kNext, open = kOpen, bad = kBadStep;
    e.source = ensemble_text(
        e.name, e.mode,
        {{"CASE", "SELECT DISTINCT l.CaseId FROM Log l"},
         {"VIOL_PERM", "SELECT p.CaseId FROM " + next + " p WHERE " + bad + "\n"
                       "UNION\n"
                       "SELECT o.CaseId FROM " + open + " o, Now w WHERE w.Timestamp - o.At > 1200"},
         {"VIOL_PENDING", "SELECT DISTINCT o.CaseId FROM " + open + " o, Now w\n"
                          "WHERE w.Timestamp - o.At <= 1200\n"
                          "  AND NOT EXISTS (SELECT * FROM " + next + " p WHERE p.CaseId = o.CaseId AND " + bad + ")"},
         {"SAT_PENDING", "SELECT DISTINCT c.CaseId FROM Log c\n"
                         "WHERE NOT EXISTS (SELECT * FROM Log z WHERE z.CaseId = c.CaseId AND z.ActivityLabel = 'C')\n"
                         "  AND NOT EXISTS (SELECT * FROM " + open + " o WHERE o.CaseId = c.CaseId)\n"
                         "  AND NOT EXISTS (SELECT * FROM " + next + " p WHERE p.CaseId = c.CaseId AND " + bad + ")"}});
    e.tags = {.aggregation = false, .disjunction = true, .existence = false, .negation = true, .double_negation = true};
    e.provenance_note = std::string(kExampleNote) +
                        " Cases are traces. An unanswered A is pending for 1200 minutes, then permanent; a trace "
                        "with a C and no defect is permanently satisfied.";
    return e;
}

CatalogEntry same_car_monitor() {
    CatalogEntry e;
    e.name = "same-car-monitor";
    e.statement = kSameCarStatement;
    e.mode = Mode::Monitor;
    const std::string busy = "(" + busy_car_days() + ")";
    e.source = ensemble_text(
        e.name, e.mode,
        {{"CASE", car_days()},
         {"VIOL_PERM", busy_car_days()},
         {"VIOL_PENDING", "SELECT v.CarId, v.Day FROM " + busy + " v\n"
                          "WHERE NOT EXISTS (SELECT * FROM " + busy + " w WHERE w.CarId = v.CarId AND w.Day = v.Day)"},
         {"SAT_PENDING", "SELECT c.CarId, c.Day FROM (" + car_days() + ") c, " + today() + " t\n"
                         "WHERE c.Day = t.Day\n"
                         "  AND NOT EXISTS (SELECT * FROM " + busy + " v WHERE v.CarId = c.CarId AND v.Day = c.Day)"}});
    e.tags = {.aggregation = true, .negation = true};
    e.provenance_note = std::string(kExampleNote) +
                        " CASE and VIOL_PERM are the (car, day) pair of same-car-day. Counts only grow, so "
                        "VIOL_PENDING is empty.";
    return e;
}

std::vector<CatalogEntry> build() {
    return {same_car_day(), same_car(), same_car_count(), avg_shipping(), followed_by(), same_car_monitor(),
            isc1(),         isc2a(),    isc2b(),          isc3(),         isc4()};
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return out;
}

}  // namespace

monitor::ConstraintEnsemble CatalogEntry::ensemble() const { return monitor::parse_ensemble(source); }

const std::vector<CatalogEntry> &catalog_entries() {
    static const std::vector<CatalogEntry> entries = build();
    return entries;
}

const CatalogEntry &lookup(std::string_view name) {
    const std::string key = lower(name);
    for (const auto &e : catalog_entries())
        if (lower(e.name) == key) return e;
    throw NotFoundError("no catalog constraint named '" + std::string(name) + "'");
}

query::FeatureTags ensemble_tags(const monitor::ConstraintEnsemble &e) {
    query::FeatureTags tags;
    for (const auto &q : e.queries) tags |= query::feature_tags(*query::parse(q.source));
    return tags;
}

}  // namespace iscm::catalog
