#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "iscm/query/ast.hpp"
#include "iscm/relation.hpp"

namespace iscm::ivm {

__extension__ using Int128 = __int128;

/// A row seen as the concatenation of two tuples, so join conditions can be
/// evaluated without building the joined tuple.
struct RowView {
    std::span<const Value> left;
    std::span<const Value> right;

    RowView() = default;
    RowView(const Tuple &t) : left(t) {}  // NOLINT(google-explicit-constructor)
    RowView(const Tuple &a, const Tuple &b) : left(a), right(b) {}

    const Value &operator[](std::size_t i) const { return i < left.size() ? left[i] : right[i - left.size()]; }
    std::size_t size() const noexcept { return left.size() + right.size(); }
    Tuple materialize() const;
};

/// Evaluates EXISTS / IN subqueries for the naive evaluator. `frames[0]` is
/// the row of the block containing the subquery.
class SubqueryEvaluator {
public:
    virtual ~SubqueryEvaluator() = default;
    virtual bool exists(const query::Query &sub, const std::vector<RowView> &frames) = 0;
    virtual bool contains(const query::Query &sub, const Value &needle, const std::vector<RowView> &frames) = 0;
};

struct EvalContext {
    RowView row;
    const std::vector<RowView> *outer = nullptr;  ///< outer[0] is depth 1
    SubqueryEvaluator *subqueries = nullptr;
};

/// Three-valued evaluation: boolean expressions yield Bool or null.
/// Arithmetic on null and division by zero yield null.
Value eval(const query::Expr &e, const EvalContext &ctx);

/// True iff the predicate evaluates to TRUE (unknown collapses to false).
bool holds(const query::Expr &e, const EvalContext &ctx);
inline bool holds(const query::Expr *e, const RowView &row) {
    return !e || holds(*e, EvalContext{row});
}

/// Predicate equality of two non-null values (Int and Decimal compare
/// numerically; mismatched kinds are unequal).
bool values_equal(const Value &a, const Value &b);

/// Hash-key form of a value: Int widened to Decimal so that keys agree with
/// numeric equality.
Value key_value(const Value &v);

/// Evaluates key expressions; nullopt if any component is null (such a row
/// can never satisfy the equality).
std::optional<Tuple> eval_key(const std::vector<query::ExprPtr> &exprs, const RowView &row);

/// Order used by MIN / MAX.
struct ValueOrder {
    bool operator()(const Value &a, const Value &b) const noexcept;
};

/// Running state of one aggregate over a bag; supports signed updates.
class AggAccumulator {
public:
    explicit AggAccumulator(const query::Expr &agg);

    /// Adds `mult` copies of `v` (`v` is ignored by COUNT(*)).
    void add(const Value &v, std::int64_t mult);
    Value result() const;
    std::size_t state_size() const noexcept { return ordered_.size() + distinct_.size(); }

private:
    query::AggFn fn_;
    bool distinct_flag_;
    Kind kind_;
    std::int64_t rows_ = 0;
    std::int64_t nonnull_ = 0;
    Int128 int_sum_ = 0;
    long double real_sum_ = 0;
    std::map<Value, std::int64_t, ValueOrder> ordered_;
    std::unordered_map<Value, std::int64_t> distinct_;
};

/// Per-group aggregate state: total multiplicity plus one accumulator per
/// aggregate of the GroupAggregate node.
struct GroupState {
    std::int64_t rows = 0;
    std::vector<AggAccumulator> accs;

    explicit GroupState(const std::vector<query::ExprPtr> &aggregates);
    void add(const RowView &row, const std::vector<query::ExprPtr> &aggregates, std::int64_t mult);
    /// keys ++ aggregate results.
    Tuple output(const Tuple &keys) const;
};

/// Decimal-tolerant tuple comparison (relative tolerance for Decimal values).
bool tuples_close(const Tuple &a, const Tuple &b, double rel_tol);
/// Bags equal up to `rel_tol` on Decimal components.
bool bags_close(const BagRelation &a, const BagRelation &b, double rel_tol);

}  // namespace iscm::ivm
