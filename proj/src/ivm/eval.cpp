#include "iscm/ivm/eval.hpp"

#include <cmath>
#include <stdexcept>

#include "iscm/time.hpp"

namespace iscm::ivm {

using query::AggFn;
using query::BinaryOp;
using query::Expr;
using query::UnaryOp;

Tuple RowView::materialize() const {
    Tuple t;
    t.reserve(size());
    t.insert(t.end(), left.begin(), left.end());
    t.insert(t.end(), right.begin(), right.end());
    return t;
}

namespace {

bool numeric(const Value &v) { return v.kind() == Kind::Int || v.kind() == Kind::Decimal; }

Value truth(bool b) { return Value::boolean(b); }

Value arithmetic(BinaryOp op, const Value &a, const Value &b) {
    if (a.is_null() || b.is_null()) return Value::null();
    if (a.kind() == Kind::Timestamp && b.kind() == Kind::Timestamp && op == BinaryOp::Sub)
        return Value::decimal(static_cast<double>(a.as_timestamp().ms - b.as_timestamp().ms) / kMillisPerMinute);
    if (!numeric(a) || !numeric(b)) return Value::null();
    if (op == BinaryOp::Div) {
        const double den = b.as_number();
        if (den == 0.0) return Value::null();
        return Value::decimal(a.as_number() / den);
    }
    if (a.kind() == Kind::Int && b.kind() == Kind::Int) {
        std::int64_t r = 0;
        bool overflow = false;
        switch (op) {
            case BinaryOp::Add: overflow = __builtin_add_overflow(a.as_int(), b.as_int(), &r); break;
            case BinaryOp::Sub: overflow = __builtin_sub_overflow(a.as_int(), b.as_int(), &r); break;
            case BinaryOp::Mul: overflow = __builtin_mul_overflow(a.as_int(), b.as_int(), &r); break;
            default: break;
        }
        return overflow ? Value::null() : Value::integer(r);
    }
    const double x = a.as_number(), y = b.as_number();
    switch (op) {
        case BinaryOp::Add: return Value::decimal(x + y);
        case BinaryOp::Sub: return Value::decimal(x - y);
        case BinaryOp::Mul: return Value::decimal(x * y);
        default: return Value::null();
    }
}

bool kinds_comparable(const Value &a, const Value &b) {
    return a.kind() == b.kind() || (numeric(a) && numeric(b));
}

Value comparison(BinaryOp op, const Value &a, const Value &b) {
    if (a.is_null() || b.is_null() || !kinds_comparable(a, b)) return Value::null();
    if (a.kind() == Kind::Text && (op == BinaryOp::Eq || op == BinaryOp::Ne))
        return truth((a.as_atom() == b.as_atom()) == (op == BinaryOp::Eq));
    const std::partial_ordering c = compare_values(a, b);
    if (c == std::partial_ordering::unordered) return Value::null();
    switch (op) {
        case BinaryOp::Eq: return truth(c == 0);
        case BinaryOp::Ne: return truth(c != 0);
        case BinaryOp::Lt: return truth(c < 0);
        case BinaryOp::Le: return truth(c <= 0);
        case BinaryOp::Gt: return truth(c > 0);
        case BinaryOp::Ge: return truth(c >= 0);
        default: return Value::null();
    }
}

// Bool, or null for unknown / non-boolean.
int tri(const Value &v) {
    if (v.kind() != Kind::Bool) return -1;
    return v.as_bool() ? 1 : 0;
}

const Value &column(const Expr &e, const EvalContext &ctx) {
    if (e.depth <= 0) return ctx.row[static_cast<std::size_t>(e.index)];
    if (!ctx.outer || static_cast<std::size_t>(e.depth) > ctx.outer->size())
        throw std::logic_error("unbound outer reference " + e.name);
    return (*ctx.outer)[static_cast<std::size_t>(e.depth) - 1][static_cast<std::size_t>(e.index)];
}

std::vector<RowView> push_frame(const EvalContext &ctx) {
    std::vector<RowView> frames;
    frames.reserve(1 + (ctx.outer ? ctx.outer->size() : 0));
    frames.push_back(ctx.row);
    if (ctx.outer) frames.insert(frames.end(), ctx.outer->begin(), ctx.outer->end());
    return frames;
}

}  // namespace

Value eval(const Expr &e, const EvalContext &ctx) {
    switch (e.type) {
        case Expr::Type::Literal: return e.literal;
        case Expr::Type::Column: return column(e, ctx);
        case Expr::Type::GroupKey:
        case Expr::Type::AggRef: return ctx.row[static_cast<std::size_t>(e.index)];
        case Expr::Type::Unary: {
            const Value v = eval(*e.args[0], ctx);
            if (e.unary == UnaryOp::Not) {
                const int t = tri(v);
                return t < 0 ? Value::null() : truth(t == 0);
            }
            if (v.kind() == Kind::Int) {
                if (v.as_int() == INT64_MIN) return Value::null();
                return Value::integer(-v.as_int());
            }
            if (v.kind() == Kind::Decimal) return Value::decimal(-v.as_decimal());
            return Value::null();
        }
        case Expr::Type::Binary: {
            if (e.binary == BinaryOp::And || e.binary == BinaryOp::Or) {
                const int l = tri(eval(*e.args[0], ctx));
                const bool is_and = e.binary == BinaryOp::And;
                if (is_and && l == 0) return truth(false);
                if (!is_and && l == 1) return truth(true);
                const int r = tri(eval(*e.args[1], ctx));
                if (is_and) {
                    if (r == 0) return truth(false);
                    if (l == 1 && r == 1) return truth(true);
                } else {
                    if (r == 1) return truth(true);
                    if (l == 0 && r == 0) return truth(false);
                }
                return Value::null();
            }
            const Value a = eval(*e.args[0], ctx);
            const Value b = eval(*e.args[1], ctx);
            if (query::is_comparison(e.binary)) return comparison(e.binary, a, b);
            return arithmetic(e.binary, a, b);
        }
        case Expr::Type::Extract: {
            const Value v = eval(*e.args[0], ctx);
            if (v.kind() != Kind::Timestamp) return Value::null();
            return Value::integer(extract(e.part, v.as_timestamp()));
        }
        case Expr::Type::Aggregate: throw std::logic_error("aggregate evaluated outside a group");
        case Expr::Type::Exists: {
            if (!ctx.subqueries) throw std::logic_error("EXISTS evaluated without a subquery evaluator");
            const bool found = ctx.subqueries->exists(*e.subquery, push_frame(ctx));
            return truth(found != e.negated);
        }
        case Expr::Type::InSubquery: {
            if (!ctx.subqueries) throw std::logic_error("IN evaluated without a subquery evaluator");
            const Value needle = eval(*e.args[0], ctx);
            const bool found = !needle.is_null() && ctx.subqueries->contains(*e.subquery, needle, push_frame(ctx));
            return truth(found != e.negated);
        }
    }
    return Value::null();
}

bool holds(const Expr &e, const EvalContext &ctx) {
    const Value v = eval(e, ctx);
    return v.kind() == Kind::Bool && v.as_bool();
}

bool values_equal(const Value &a, const Value &b) {
    const Value r = comparison(BinaryOp::Eq, a, b);
    return r.kind() == Kind::Bool && r.as_bool();
}

Value key_value(const Value &v) {
    if (v.kind() == Kind::Int) return Value::decimal(static_cast<double>(v.as_int()));
    if (v.kind() == Kind::Decimal && v.as_decimal() == 0.0) return Value::decimal(0.0);
    return v;
}

std::optional<Tuple> eval_key(const std::vector<query::ExprPtr> &exprs, const RowView &row) {
    Tuple key;
    key.reserve(exprs.size());
    const EvalContext ctx{row};
    for (const auto &e : exprs) {
        Value v = eval(*e, ctx);
        if (v.is_null()) return std::nullopt;
        key.push_back(key_value(v));
    }
    return key;
}

bool ValueOrder::operator()(const Value &a, const Value &b) const noexcept {
    if (numeric(a) && numeric(b)) {
        const double x = a.as_number(), y = b.as_number();
        if (x != y) return x < y;
        return a.kind() < b.kind();
    }
    return canonical_less(a, b);
}

AggAccumulator::AggAccumulator(const Expr &agg)
    : fn_(agg.agg), distinct_flag_(agg.distinct), kind_(agg.args.empty() ? Kind::Null : agg.args[0]->kind) {}

void AggAccumulator::add(const Value &v, std::int64_t mult) {
    rows_ += mult;
    if (fn_ == AggFn::CountStar || v.is_null()) return;
    nonnull_ += mult;
    switch (fn_) {
        case AggFn::Count:
            if (distinct_flag_) {
                auto [it, inserted] = distinct_.try_emplace(v, 0);
                it->second += mult;
                if (it->second < 0) throw std::logic_error("COUNT DISTINCT multiplicity below zero");
                if (it->second == 0) distinct_.erase(it);
            }
            break;
        case AggFn::Sum:
        case AggFn::Avg:
            if (v.kind() == Kind::Int) int_sum_ += static_cast<Int128>(v.as_int()) * mult;
            else real_sum_ += static_cast<long double>(v.as_number()) * mult;
            break;
        case AggFn::Min:
        case AggFn::Max: {
            auto [it, inserted] = ordered_.try_emplace(v, 0);
            it->second += mult;
            if (it->second < 0) throw std::logic_error("MIN/MAX multiplicity below zero");
            if (it->second == 0) ordered_.erase(it);
            break;
        }
        default: break;
    }
    if (rows_ < 0 || nonnull_ < 0) throw std::logic_error("aggregate row count below zero");
}

Value AggAccumulator::result() const {
    switch (fn_) {
        case AggFn::CountStar: return Value::integer(rows_);
        case AggFn::Count:
            return Value::integer(distinct_flag_ ? static_cast<std::int64_t>(distinct_.size()) : nonnull_);
        case AggFn::Sum:
            if (nonnull_ == 0) return Value::null();
            if (kind_ == Kind::Int || kind_ == Kind::Null) return Value::integer(static_cast<std::int64_t>(int_sum_));
            return Value::decimal(static_cast<double>(real_sum_ + static_cast<long double>(int_sum_)));
        case AggFn::Avg:
            if (nonnull_ == 0) return Value::null();
            return Value::decimal(
                static_cast<double>((real_sum_ + static_cast<long double>(int_sum_)) / static_cast<long double>(nonnull_)));
        case AggFn::Min:
            if (ordered_.empty()) return Value::null();
            return ordered_.begin()->first;
        case AggFn::Max:
            if (ordered_.empty()) return Value::null();
            return ordered_.rbegin()->first;
    }
    return Value::null();
}

GroupState::GroupState(const std::vector<query::ExprPtr> &aggregates) {
    accs.reserve(aggregates.size());
    for (const auto &a : aggregates) accs.emplace_back(*a);
}

void GroupState::add(const RowView &row, const std::vector<query::ExprPtr> &aggregates, std::int64_t mult) {
    rows += mult;
    if (rows < 0) throw std::logic_error("group multiplicity below zero");
    const EvalContext ctx{row};
    for (std::size_t i = 0; i < aggregates.size(); ++i) {
        const Expr &a = *aggregates[i];
        accs[i].add(a.args.empty() ? Value::null() : eval(*a.args[0], ctx), mult);
    }
}

Tuple GroupState::output(const Tuple &keys) const {
    Tuple out = keys;
    out.reserve(keys.size() + accs.size());
    for (const auto &a : accs) out.push_back(a.result());
    return out;
}

bool tuples_close(const Tuple &a, const Tuple &b, double rel_tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) continue;
        if (a[i].kind() != Kind::Decimal || b[i].kind() != Kind::Decimal) return false;
        const double x = a[i].as_decimal(), y = b[i].as_decimal();
        if (std::fabs(x - y) > rel_tol * std::max({1.0, std::fabs(x), std::fabs(y)})) return false;
    }
    return true;
}

bool bags_close(const BagRelation &a, const BagRelation &b, double rel_tol) {
    if (a == b) return true;
    if (a.distinct_size() != b.distinct_size() || a.total() != b.total()) return false;
    auto sa = a.sorted();
    auto sb = b.sorted();
    for (std::size_t i = 0; i < sa.size(); ++i)
        if (sa[i].second != sb[i].second || !tuples_close(sa[i].first, sb[i].first, rel_tol)) return false;
    return true;
}

}  // namespace iscm::ivm
