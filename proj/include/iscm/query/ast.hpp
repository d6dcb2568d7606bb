#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "iscm/relation.hpp"
#include "iscm/time.hpp"
#include "iscm/value.hpp"

namespace iscm::query {

enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
enum class UnaryOp : std::uint8_t { Neg, Not };
enum class AggFn : std::uint8_t { CountStar, Count, Sum, Avg, Min, Max };

std::string_view binary_op_symbol(BinaryOp op);
std::string_view agg_fn_name(AggFn fn);
bool is_comparison(BinaryOp op);
bool is_arithmetic(BinaryOp op);

struct Query;
struct Expr;
using ExprPtr = std::unique_ptr<Expr>;
using QueryPtr = std::unique_ptr<Query>;

/// Scalar expression. One tagged node type keeps cloning, structural
/// equality and printing in one place.
struct Expr {
    enum class Type : std::uint8_t {
        Literal,
        Column,
        GroupKey,   ///< slot `slot` of the enclosing GroupAggregate's keys
        AggRef,     ///< slot `slot` of the enclosing GroupAggregate's aggregates
        Unary,
        Binary,
        Extract,
        Aggregate,  ///< only inside GroupAggregate::aggregates
        Exists,
        InSubquery,
    };

    Type type = Type::Literal;

    Value literal;
    std::string qualifier;  // Column
    std::string name;       // Column
    std::size_t slot = 0;   // GroupKey / AggRef
    UnaryOp unary = UnaryOp::Not;
    BinaryOp binary = BinaryOp::Eq;
    DatePart part = DatePart::Year;
    AggFn agg = AggFn::CountStar;
    bool distinct = false;  // COUNT(DISTINCT x)
    bool negated = false;   // NOT EXISTS / NOT IN
    std::vector<ExprPtr> args;
    QueryPtr subquery;      // Exists / InSubquery

    // Annotations filled in by typecheck.
    Kind kind = Kind::Null;
    int depth = -1;   ///< Column: 0 = current row, n = n-th enclosing scope
    int index = -1;   ///< Column / GroupKey / AggRef: position in that row
    bool dynamic = false;  ///< comparison involving an untyped (Any) operand

    static ExprPtr make_literal(Value v);
    static ExprPtr make_column(std::string qualifier, std::string name);
    static ExprPtr make_unary(UnaryOp op, ExprPtr arg);
    static ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
    static ExprPtr make_extract(DatePart part, ExprPtr arg);
    static ExprPtr make_aggregate(AggFn fn, ExprPtr arg, bool distinct);
    static ExprPtr make_exists(QueryPtr sub, bool negated);
    static ExprPtr make_in(ExprPtr needle, QueryPtr sub, bool negated);
    static ExprPtr make_slot(Type type, std::size_t slot);
    /// Resolved column reference (used when rewriting plans).
    static ExprPtr make_bound_column(int index, Kind kind, std::string name = {});

    ExprPtr clone() const;
};

/// Relational operator tree. Parser output has the shape of SQL blocks:
///   [Distinct] Project [GroupAggregate] [Filter] <from tree>
/// combined by Union. Decorrelation introduces SemiJoin / AntiJoin.
struct Query {
    enum class Op : std::uint8_t {
        Scan,
        Rename,  ///< derived table `(query) AS alias`
        Filter,
        Project,
        Join,
        GroupAggregate,
        Distinct,
        Union,  ///< bag union (UNION ALL); set UNION is Distinct(Union)
        SemiJoin,
        AntiJoin,
    };

    Op op = Op::Scan;
    std::vector<QueryPtr> inputs;

    std::string relation;  // Scan
    std::string alias;     // Scan, Rename

    ExprPtr condition;  // Filter, Join (null = cross join), SemiJoin, AntiJoin

    std::vector<ExprPtr> exprs;  // Project
    std::vector<std::string> names;  // Project: explicit aliases ("" if none)
    bool star = false;               // Project: SELECT *

    std::vector<ExprPtr> keys;        // GroupAggregate
    std::vector<ExprPtr> aggregates;  // GroupAggregate (Expr::Type::Aggregate)
    ExprPtr having;                   // GroupAggregate, over keys ++ aggregates

    Schema schema;  // annotation: output schema after typecheck

    static QueryPtr make_scan(std::string relation, std::string alias);
    static QueryPtr make(Op op, QueryPtr input);
    static QueryPtr make(Op op, QueryPtr left, QueryPtr right);

    const Query &input(std::size_t i = 0) const { return *inputs[i]; }
    QueryPtr clone() const;
};

/// Structural equality ignoring typecheck annotations.
bool structurally_equal(const Expr &a, const Expr &b);
bool structurally_equal(const Query &a, const Query &b);

/// Splits a conjunction into its AND-ed parts (null yields nothing).
std::vector<const Expr *> conjuncts(const Expr *e);
std::vector<ExprPtr> take_conjuncts(ExprPtr e);
/// AND-combines parts; empty input yields null.
ExprPtr make_conjunction(std::vector<ExprPtr> parts);

/// Visits every expression node (not descending into subqueries).
template <typename F>
void visit_expr(const Expr &e, F &&f) {
    f(e);
    for (const auto &a : e.args) visit_expr(*a, f);
}

}  // namespace iscm::query
