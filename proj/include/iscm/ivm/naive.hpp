#pragma once

#include "iscm/query/ast.hpp"
#include "iscm/relation.hpp"

namespace iscm::ivm {

/// From-scratch bottom-up evaluation of a typechecked query, correlated or
/// decorrelated. Correlated subqueries are re-evaluated per outer row.
/// Joins hash on their equality conjuncts; with `push_down` set, WHERE
/// conjuncts are first moved onto the join inputs they mention.
BagRelation evaluate_naive(const query::Query &q, const Database &db, bool push_down = true);

}  // namespace iscm::ivm
