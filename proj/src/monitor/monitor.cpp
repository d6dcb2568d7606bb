#include "iscm/monitor/monitor.hpp"

#include <algorithm>
#include <unordered_set>

#include "iscm/ivm/naive.hpp"
#include "iscm/query/decorrelate.hpp"
#include "iscm/query/parser.hpp"
#include "iscm/query/typecheck.hpp"

namespace iscm::monitor {

std::string_view state_name(CaseState s) {
    switch (s) {
        case CaseState::NotACase: return "NotACase";
        case CaseState::PendingSat: return "PendingSat";
        case CaseState::PendingViol: return "PendingViol";
        case CaseState::PermSat: return "PermSat";
        case CaseState::PermViol: return "PermViol";
    }
    return "?";
}

std::string_view severity_name(Severity s) { return s == Severity::Warning ? "warning" : "contract-breach"; }

namespace {

std::string where(const ConstraintEnsemble &e, const EnsembleQuery &q) {
    std::string s = "constraint " + e.name + ", " + std::string(role_name(q.role)) + " block";
    if (q.line) s += " (line " + std::to_string(q.line) + ")";
    return s;
}

std::string key_text(const Tuple &key) { return "(" + tuple_to_string(key, ", ") + ")"; }

}  // namespace

std::vector<query::QueryPtr> check_ensemble(const ConstraintEnsemble &e, const query::Catalog &catalog) {
    std::vector<query::QueryPtr> out;
    for (Role r : roles_for(e.mode)) {
        const EnsembleQuery &q = e.query(r);
        try {
            out.push_back(query::typecheck(*query::parse(q.source), catalog));
        } catch (const query::ParseError &err) {
            std::string msg = err.what();
            msg.erase(0, msg.find(": ") + 2);
            throw RegistrationError(where(e, q) + ": query line " + std::to_string(err.line) + ", column " +
                                    std::to_string(err.column) + ": " + msg);
        } catch (const std::runtime_error &err) {
            throw RegistrationError(where(e, q) + ": " + err.what());
        }
    }
    const Schema &case_schema = out.front()->schema;
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (!query::same_shape(case_schema, out[i]->schema))
            throw RegistrationError(where(e, e.query(roles_for(e.mode)[i])) + ": schema " +
                                    out[i]->schema.to_string() + " does not match CASE schema " +
                                    case_schema.to_string());
    }
    return out;
}

struct Monitor::Registered {
    ConstraintEnsemble ensemble;
    Schema schema;
    std::vector<ivm::MaintenancePlan> plans;  // CASE, VIOL_PERM, VIOL_PENDING, SAT_PENDING
    CaseLedger ledger;

    const ivm::Dataflow &graph() const { return *plans.front().graph; }
    bool member(std::size_t i, const Tuple &key) const { return graph().contents(plans[i].root).contains(key); }
};

Monitor::Monitor() = default;
Monitor::Monitor(Database db) : db_(std::move(db)) {}
Monitor::~Monitor() = default;

std::size_t Monitor::register_constraint(const ConstraintEnsemble &e) {
    if (e.mode != Mode::Monitor)
        throw RegistrationError("constraint " + e.name + ": mode mismatch, a " + std::string(mode_name(e.mode)) +
                                " ensemble cannot be monitored");
    auto checked = check_ensemble(e, query::Catalog::for_database(db_));
    std::vector<query::QueryPtr> plans;
    for (std::size_t i = 0; i < checked.size(); ++i) {
        try {
            plans.push_back(query::decorrelate(*checked[i]));
        } catch (const std::runtime_error &err) {
            throw RegistrationError(where(e, e.query(roles_for(e.mode)[i])) + ": " + err.what());
        }
    }
    auto reg = std::make_unique<Registered>();
    reg->ensemble = e;
    reg->schema = checked.front()->schema;
    std::vector<const query::Query *> ptrs;
    for (const auto &p : plans) ptrs.push_back(p.get());
    try {
        reg->plans = ivm::compile_ensemble(ptrs, db_);
    } catch (const std::runtime_error &err) {
        throw RegistrationError("constraint " + e.name + ": " + err.what());
    }

    std::unordered_set<Tuple, TupleHash> seen;
    std::vector<Tuple> keys;
    for (const auto &p : reg->plans)
        for (const auto &[t, m] : reg->graph().contents(p.root))
            if (seen.insert(t).second) keys.push_back(t);
    IngestResult ignored;
    classify(*reg, keys, last_seq_, ignored);
    constraints_.push_back(std::move(reg));
    return constraints_.size() - 1;
}

IngestResult Monitor::ingest(const InsertionDelta &delta) {
    IngestResult out;
    if (last_seq_ != 0 && delta.sequence_no <= last_seq_) {
        out.diagnostics.push_back({delta.sequence_no, Severity::Warning, "", {},
                                   "sequence number " + std::to_string(delta.sequence_no) +
                                       " does not increase (last " + std::to_string(last_seq_) + ")"});
    }
    DeltaBatch batch;
    try {
        batch = db_.insert(delta);
    } catch (const SchemaError &err) {
        out.diagnostics.push_back(
            {delta.sequence_no, Severity::Warning, "", {}, "insertion into " + delta.target + " skipped: " + err.what()});
        return out;
    }
    last_seq_ = std::max(last_seq_, delta.sequence_no);
    IngestResult r = propagate(batch, delta.sequence_no);
    out.changes = std::move(r.changes);
    out.diagnostics.insert(out.diagnostics.end(), r.diagnostics.begin(), r.diagnostics.end());
    return out;
}

IngestResult Monitor::advance_clock(Timestamp t) { return propagate(db_.advance_now(t), last_seq_); }

IngestResult Monitor::propagate(const DeltaBatch &batch, std::uint64_t seq) {
    IngestResult out;
    if (batch.empty()) return out;
    for (auto &c : constraints_) {
        auto &graph = *c->plans.front().graph;
        graph.apply(batch);
        std::unordered_set<Tuple, TupleHash> seen;
        std::vector<Tuple> keys;
        for (const auto &p : c->plans)
            for (const auto &d : graph.last_delta(p.root))
                if (seen.insert(d.tuple).second) keys.push_back(d.tuple);
        std::sort(keys.begin(), keys.end(), tuple_less);
        classify(*c, keys, seq, out);
    }
    return out;
}

void Monitor::classify(Registered &c, const std::vector<Tuple> &keys, std::uint64_t seq, IngestResult &out) {
    const std::string &name = c.ensemble.name;
    for (const Tuple &key : keys) {
        const bool in_case = c.member(0, key);
        const bool perm = c.member(1, key);
        const bool pending = c.member(2, key);
        const bool sat = c.member(3, key);

        if ((perm || pending || sat) && !in_case)
            out.diagnostics.push_back({seq, Severity::ContractBreach, name, key,
                                       "case " + key_text(key) + " is in a state query but not in CASE"});
        if (int(perm) + int(pending) + int(sat) > 1) {
            std::string which;
            if (perm) which += " VIOL_PERM";
            if (pending) which += " VIOL_PENDING";
            if (sat) which += " SAT_PENDING";
            out.diagnostics.push_back({seq, Severity::ContractBreach, name, key,
                                       "case " + key_text(key) + " is in several state queries:" + which});
        }

        CaseState next = CaseState::NotACase;
        if (perm) next = CaseState::PermViol;
        else if (pending) next = CaseState::PendingViol;
        else if (sat) next = CaseState::PendingSat;
        else if (in_case) next = CaseState::PermSat;

        auto it = c.ledger.find(key);
        if (it == c.ledger.end()) {
            if (next == CaseState::NotACase) continue;
            it = c.ledger.emplace(key, CaseRecord{}).first;
        }
        CaseRecord &rec = it->second;
        if (next == rec.state) continue;
        if (rec.latched) {
            if (next == CaseState::NotACase)
                out.diagnostics.push_back({seq, Severity::Warning, name, key,
                                           "latched case " + key_text(key) + " left CASE; keeping " +
                                               std::string(state_name(rec.state))});
            else
                out.diagnostics.push_back({seq, Severity::ContractBreach, name, key,
                                           "queries classify latched case " + key_text(key) + " as " +
                                               std::string(state_name(next)) + "; keeping " +
                                               std::string(state_name(rec.state))});
            continue;
        }
        rec.history.push_back({seq, rec.state, next});
        out.changes.push_back({seq, name, key, rec.state, next});
        rec.state = next;
        rec.latched = is_permanent(next);
    }
}

Snapshot Monitor::snapshot() const {
    Snapshot s{last_seq_, db_.now(), {}};
    for (const auto &c : constraints_) {
        ConstraintSnapshot cs;
        cs.name = c->ensemble.name;
        const auto &roles = roles_for(Mode::Monitor);
        std::size_t in_states = 0;
        const BagRelation &cases = c->graph().contents(c->plans[0].root);
        for (std::size_t i = 0; i < roles.size(); ++i)
            cs.sizes.emplace_back(roles[i], c->graph().contents(c->plans[i].root).distinct_size());
        for (const auto &[t, m] : cases)
            if (c->member(1, t) || c->member(2, t) || c->member(3, t)) ++in_states;
        cs.sat_perm = cases.distinct_size() - in_states;
        for (const auto &[k, rec] : c->ledger) ++cs.states[rec.state];
        s.constraints.push_back(std::move(cs));
    }
    return s;
}

std::size_t Monitor::constraint_count() const { return constraints_.size(); }
const std::string &Monitor::name(std::size_t h) const { return constraints_.at(h)->ensemble.name; }
const CaseLedger &Monitor::ledger(std::size_t h) const { return constraints_.at(h)->ledger; }
const Schema &Monitor::case_schema(std::size_t h) const { return constraints_.at(h)->schema; }

BagRelation Monitor::result(std::size_t h, Role role) const {
    const auto &c = *constraints_.at(h);
    const auto &roles = roles_for(Mode::Monitor);
    const auto pos = std::find(roles.begin(), roles.end(), role);
    if (pos == roles.end()) throw std::out_of_range("monitored constraints have no VIOL query");
    return ivm::current_result(c.plans[std::size_t(pos - roles.begin())]).distinct();
}

CaseState Monitor::state(std::size_t h, const Tuple &key) const {
    const auto &ledger = constraints_.at(h)->ledger;
    auto it = ledger.find(key);
    return it == ledger.end() ? CaseState::NotACase : it->second.state;
}

std::string Monitor::plan_dump(std::size_t h) const { return constraints_.at(h)->graph().dump(); }

std::size_t Monitor::state_size() const {
    std::size_t n = 0;
    for (const auto &c : constraints_) n += c->graph().state_size();
    return n;
}

PostMortemResult post_mortem_check(const Database &db, const ConstraintEnsemble &e) {
    if (e.mode != Mode::PostMortem)
        throw RegistrationError("constraint " + e.name + ": mode mismatch, a " + std::string(mode_name(e.mode)) +
                                " ensemble cannot be checked post-mortem");
    auto checked = check_ensemble(e, query::Catalog::for_database(db));
    PostMortemResult out;
    out.schema = checked[0]->schema;
    auto evaluate = [&db](const query::Query &q) {
        query::QueryPtr plan;
        try {
            plan = query::decorrelate(q);
        } catch (const query::UnsupportedError &) {
            return ivm::evaluate_naive(q, db).distinct();
        }
        return ivm::evaluate_naive(*plan, db).distinct();
    };
    const BagRelation cases = evaluate(*checked[0]);
    out.violating = evaluate(*checked[1]);
    out.satisfying = BagRelation(out.schema);
    out.violating.set_schema(out.schema);
    for (const auto &[t, m] : cases)
        if (!out.violating.contains(t)) out.satisfying.add(t, 1);
    for (const auto &[t, m] : out.violating.sorted())
        if (!cases.contains(t))
            out.diagnostics.push_back({0, Severity::ContractBreach, e.name, t,
                                       "violation " + key_text(t) + " is not a case of CASE"});
    return out;
}

}  // namespace iscm::monitor
