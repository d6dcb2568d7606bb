#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace iscm::monitor {

enum class Mode : std::uint8_t { PostMortem, Monitor };
enum class Role : std::uint8_t { Case, Viol, ViolPerm, ViolPending, SatPending };

std::string_view mode_name(Mode m);
/// Block label as written in constraint files: CASE, VIOL, VIOL_PERM, ...
std::string_view role_name(Role r);

/// Roles a mode requires, in canonical order (CASE first).
const std::vector<Role> &roles_for(Mode m);

struct EnsembleQuery {
    Role role = Role::Case;
    std::string source;
    std::size_t line = 0;  ///< line of the block label in the file, 0 if built in code
};

/// A named constraint: the scoping query plus the violation query
/// (post-mortem) or the three state queries (monitoring).
struct ConstraintEnsemble {
    std::string name;
    Mode mode = Mode::Monitor;
    std::vector<EnsembleQuery> queries;

    bool has(Role r) const;
    const EnsembleQuery &query(Role r) const;
};

struct EnsembleError : std::runtime_error {
    EnsembleError(std::size_t line, const std::string &message);
    std::size_t line;
};

/// Reads the constraint file format:
///
///   # comment
///   constraint <name> mode <postmortem|monitor>
///   CASE:
///     SELECT ...
///   VIOL:            (postmortem)
///   VIOL_PERM: / VIOL_PENDING: / SAT_PENDING:   (monitor)
///
/// Query text may start on the label line. Checks that exactly the blocks
/// of the mode are present; queries themselves are not parsed here.
ConstraintEnsemble parse_ensemble(std::string_view text);
ConstraintEnsemble load_ensemble(const std::string &path);

/// Inverse of parse_ensemble.
std::string format_ensemble(const ConstraintEnsemble &e);

}  // namespace iscm::monitor
