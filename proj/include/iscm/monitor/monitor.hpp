#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "iscm/event.hpp"
#include "iscm/ivm/dataflow.hpp"
#include "iscm/monitor/ensemble.hpp"
#include "iscm/query/ast.hpp"
#include "iscm/query/typecheck.hpp"
#include "iscm/relation.hpp"

namespace iscm::monitor {

enum class CaseState : std::uint8_t { NotACase, PendingSat, PendingViol, PermSat, PermViol };

std::string_view state_name(CaseState s);
inline bool is_permanent(CaseState s) { return s == CaseState::PermSat || s == CaseState::PermViol; }

enum class Severity : std::uint8_t { Warning, ContractBreach };
std::string_view severity_name(Severity s);

struct Diagnostic {
    std::uint64_t seq = 0;
    Severity severity = Severity::Warning;
    std::string constraint;
    Tuple case_key;
    std::string message;
};

struct StateChange {
    std::uint64_t seq = 0;
    std::string constraint;
    Tuple case_key;
    CaseState from = CaseState::NotACase;
    CaseState to = CaseState::NotACase;
};

struct Transition {
    std::uint64_t seq = 0;
    CaseState from = CaseState::NotACase;
    CaseState to = CaseState::NotACase;
};

struct CaseRecord {
    CaseState state = CaseState::NotACase;
    bool latched = false;
    std::vector<Transition> history;
};

struct TupleOrder {
    bool operator()(const Tuple &a, const Tuple &b) const { return tuple_less(a, b); }
};
using CaseLedger = std::map<Tuple, CaseRecord, TupleOrder>;

struct IngestResult {
    std::vector<StateChange> changes;
    std::vector<Diagnostic> diagnostics;
};

struct ConstraintSnapshot {
    std::string name;
    std::vector<std::pair<Role, std::size_t>> sizes;  ///< distinct rows per member query
    std::size_t sat_perm = 0;                         ///< cases in no state query
    std::map<CaseState, std::size_t> states;          ///< ledger histogram
};

struct Snapshot {
    std::uint64_t seq = 0;
    Timestamp now;
    std::vector<ConstraintSnapshot> constraints;
};

/// Rejected ensemble: wrong mode, member that fails to parse, typecheck or
/// compile, or member schemas that disagree.
struct RegistrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Typechecks each member of `e` against `catalog`; errors name the
/// constraint, the block and the source position.
std::vector<query::QueryPtr> check_ensemble(const ConstraintEnsemble &e, const query::Catalog &catalog);

/// Maintains monitoring-mode ensembles over an owned database and keeps a
/// per-case state ledger. Permanent states latch: later query output that
/// contradicts them is reported, never applied.
class Monitor {
public:
    Monitor();
    explicit Monitor(Database db);
    ~Monitor();
    Monitor(const Monitor &) = delete;
    Monitor &operator=(const Monitor &) = delete;

    /// Returns the constraint handle. Cases already present in the database
    /// are classified immediately (sequence number of the last insertion).
    std::size_t register_constraint(const ConstraintEnsemble &e);

    IngestResult ingest(const InsertionDelta &delta);
    /// Moves Now forward without an insertion.
    IngestResult advance_clock(Timestamp t);

    Snapshot snapshot() const;

    std::size_t constraint_count() const;
    const std::string &name(std::size_t handle) const;
    const CaseLedger &ledger(std::size_t handle) const;
    /// Current (distinct) result of one member query.
    BagRelation result(std::size_t handle, Role role) const;
    CaseState state(std::size_t handle, const Tuple &case_key) const;
    const Schema &case_schema(std::size_t handle) const;
    std::string plan_dump(std::size_t handle) const;
    std::size_t state_size() const;

    const Database &database() const { return db_; }
    std::uint64_t last_sequence() const { return last_seq_; }

private:
    struct Registered;
    IngestResult propagate(const DeltaBatch &batch, std::uint64_t seq);
    void classify(Registered &c, const std::vector<Tuple> &keys, std::uint64_t seq, IngestResult &out);

    Database db_;
    std::vector<std::unique_ptr<Registered>> constraints_;
    std::uint64_t last_seq_ = 0;
};

struct PostMortemResult {
    Schema schema;
    BagRelation satisfying;
    BagRelation violating;
    std::vector<Diagnostic> diagnostics;
};

/// Evaluates a post-mortem ensemble once: violating = Q_viol, satisfying =
/// Q_case minus Q_viol. Violations outside Q_case are reported as breaches.
PostMortemResult post_mortem_check(const Database &db, const ConstraintEnsemble &e);

}  // namespace iscm::monitor
