#pragma once

#include <vector>

#include "iscm/query/ast.hpp"

namespace iscm::ivm {

/// Equality conjuncts usable as hash keys for a binary operator whose input
/// row is (left ++ right). Right key expressions are rebased onto the right
/// tuple alone.
struct JoinKeys {
    std::vector<query::ExprPtr> left;
    std::vector<query::ExprPtr> right;
};

JoinKeys extract_join_keys(const query::Expr *condition, std::size_t left_width);

/// Splits WHERE conjuncts over comma/JOIN chains: single-relation conjuncts
/// become filters on that relation, the rest attach to the join step where
/// their last relation enters. Join order is the written order.
query::QueryPtr push_down_predicates(const query::Query &q);

/// Copy of `e` with every current-row column index moved by `delta`.
query::ExprPtr shift_columns(const query::Expr &e, int delta);

}  // namespace iscm::ivm
