#pragma once

// State-machine checks over a monitor's ledger and query results, shared by
// the unit tests and the acceptance binary.

#include <set>
#include <string>
#include <vector>

#include "iscm/monitor/monitor.hpp"

namespace iscm::fixtures {

using monitor::CaseState;

/// Transition rules: latched (permanent) states are never left, and every
/// recorded transition starts from the state the previous one ended in.
inline std::vector<std::string> check_history(const monitor::CaseLedger &ledger) {
    std::vector<std::string> problems;
    for (const auto &[key, rec] : ledger) {
        CaseState prev = CaseState::NotACase;
        std::uint64_t last_seq = 0;
        for (const auto &t : rec.history) {
            const std::string where = "case (" + tuple_to_string(key, ", ") + ") at " + std::to_string(t.seq);
            if (t.from != prev) problems.push_back(where + ": transition starts from the wrong state");
            if (monitor::is_permanent(prev)) problems.push_back(where + ": left a permanent state");
            if (t.from == t.to) problems.push_back(where + ": empty transition");
            if (t.seq < last_seq) problems.push_back(where + ": history out of order");
            prev = t.to;
            last_seq = t.seq;
        }
        if (prev != rec.state) problems.push_back("case (" + tuple_to_string(key, ", ") + "): history ends elsewhere");
        if (rec.latched != monitor::is_permanent(rec.state))
            problems.push_back("case (" + tuple_to_string(key, ", ") + "): latch flag disagrees with state");
    }
    return problems;
}

/// Subset and disjointness of the three state queries against CASE, unless
/// the offending case carries a contract-breach diagnostic in `reported`.
inline std::vector<std::string> check_contracts(const monitor::Monitor &m, std::size_t h,
                                                const std::set<Tuple, monitor::TupleOrder> &reported = {}) {
    using monitor::Role;
    std::vector<std::string> problems;
    const BagRelation cases = m.result(h, Role::Case);
    const BagRelation perm = m.result(h, Role::ViolPerm);
    const BagRelation pending = m.result(h, Role::ViolPending);
    const BagRelation sat = m.result(h, Role::SatPending);
    for (const BagRelation *r : {&perm, &pending, &sat}) {
        for (const auto &[t, n] : *r) {
            if (reported.count(t)) continue;
            if (!cases.contains(t)) problems.push_back("(" + tuple_to_string(t, ", ") + ") outside CASE");
            const int in = int(perm.contains(t)) + int(pending.contains(t)) + int(sat.contains(t));
            if (in > 1) problems.push_back("(" + tuple_to_string(t, ", ") + ") in " + std::to_string(in) + " state queries");
        }
    }
    return problems;
}

}  // namespace iscm::fixtures
