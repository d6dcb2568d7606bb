#pragma once

#include <stdexcept>
#include <string>

#include "iscm/query/ast.hpp"

namespace iscm::query {

/// A construct that parses and typechecks but cannot be turned into a
/// maintainable plan.
struct UnsupportedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rewrites EXISTS / NOT EXISTS / IN / NOT IN conditions of WHERE clauses
/// into SemiJoin / AntiJoin nodes. The input must be typechecked; the output
/// keeps every schema and column binding valid and contains no subqueries.
///
/// Supported: subqueries as AND-ed WHERE conditions, correlated through WHERE
/// conjuncts of the subquery that reference the immediately enclosing block.
/// `x NOT IN (S)` has the meaning of `NOT EXISTS (S WHERE s = x)`.
QueryPtr decorrelate(const Query &q);

/// True if any column reference inside `q` points `levels` or more scopes
/// outside of it.
bool references_outer(const Query &q, int levels = 1);

}  // namespace iscm::query
