#include "iscm/query/ast.hpp"

namespace iscm::query {

std::string_view binary_op_symbol(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return "+";
        case BinaryOp::Sub: return "-";
        case BinaryOp::Mul: return "*";
        case BinaryOp::Div: return "/";
        case BinaryOp::Eq: return "=";
        case BinaryOp::Ne: return "<>";
        case BinaryOp::Lt: return "<";
        case BinaryOp::Le: return "<=";
        case BinaryOp::Gt: return ">";
        case BinaryOp::Ge: return ">=";
        case BinaryOp::And: return "AND";
        case BinaryOp::Or: return "OR";
    }
    return "?";
}

std::string_view agg_fn_name(AggFn fn) {
    switch (fn) {
        case AggFn::CountStar:
        case AggFn::Count: return "COUNT";
        case AggFn::Sum: return "SUM";
        case AggFn::Avg: return "AVG";
        case AggFn::Min: return "MIN";
        case AggFn::Max: return "MAX";
    }
    return "?";
}

bool is_comparison(BinaryOp op) {
    switch (op) {
        case BinaryOp::Eq:
        case BinaryOp::Ne:
        case BinaryOp::Lt:
        case BinaryOp::Le:
        case BinaryOp::Gt:
        case BinaryOp::Ge: return true;
        default: return false;
    }
}

bool is_arithmetic(BinaryOp op) {
    return op == BinaryOp::Add || op == BinaryOp::Sub || op == BinaryOp::Mul || op == BinaryOp::Div;
}

ExprPtr Expr::make_literal(Value v) {
    auto e = std::make_unique<Expr>();
    e->type = Type::Literal;
    e->literal = std::move(v);
    return e;
}

ExprPtr Expr::make_column(std::string qualifier, std::string name) {
    auto e = std::make_unique<Expr>();
    e->type = Type::Column;
    e->qualifier = std::move(qualifier);
    e->name = std::move(name);
    return e;
}

ExprPtr Expr::make_unary(UnaryOp op, ExprPtr arg) {
    auto e = std::make_unique<Expr>();
    e->type = Type::Unary;
    e->unary = op;
    e->args.push_back(std::move(arg));
    return e;
}

ExprPtr Expr::make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
    auto e = std::make_unique<Expr>();
    e->type = Type::Binary;
    e->binary = op;
    e->args.push_back(std::move(lhs));
    e->args.push_back(std::move(rhs));
    return e;
}

ExprPtr Expr::make_extract(DatePart part, ExprPtr arg) {
    auto e = std::make_unique<Expr>();
    e->type = Type::Extract;
    e->part = part;
    e->args.push_back(std::move(arg));
    return e;
}

ExprPtr Expr::make_aggregate(AggFn fn, ExprPtr arg, bool distinct) {
    auto e = std::make_unique<Expr>();
    e->type = Type::Aggregate;
    e->agg = fn;
    e->distinct = distinct;
    if (arg) e->args.push_back(std::move(arg));
    return e;
}

ExprPtr Expr::make_exists(QueryPtr sub, bool negated) {
    auto e = std::make_unique<Expr>();
    e->type = Type::Exists;
    e->subquery = std::move(sub);
    e->negated = negated;
    return e;
}

ExprPtr Expr::make_in(ExprPtr needle, QueryPtr sub, bool negated) {
    auto e = std::make_unique<Expr>();
    e->type = Type::InSubquery;
    e->args.push_back(std::move(needle));
    e->subquery = std::move(sub);
    e->negated = negated;
    return e;
}

ExprPtr Expr::make_slot(Type type, std::size_t slot) {
    auto e = std::make_unique<Expr>();
    e->type = type;
    e->slot = slot;
    return e;
}

ExprPtr Expr::make_bound_column(int index, Kind kind, std::string name) {
    auto e = std::make_unique<Expr>();
    e->type = Type::Column;
    e->name = std::move(name);
    e->depth = 0;
    e->index = index;
    e->kind = kind;
    return e;
}

ExprPtr Expr::clone() const {
    auto e = std::make_unique<Expr>();
    e->type = type;
    e->literal = literal;
    e->qualifier = qualifier;
    e->name = name;
    e->slot = slot;
    e->unary = unary;
    e->binary = binary;
    e->part = part;
    e->agg = agg;
    e->distinct = distinct;
    e->negated = negated;
    for (const auto &a : args) e->args.push_back(a->clone());
    if (subquery) e->subquery = subquery->clone();
    e->kind = kind;
    e->depth = depth;
    e->index = index;
    e->dynamic = dynamic;
    return e;
}

QueryPtr Query::make_scan(std::string relation, std::string alias) {
    auto q = std::make_unique<Query>();
    q->op = Op::Scan;
    q->relation = std::move(relation);
    q->alias = std::move(alias);
    return q;
}

QueryPtr Query::make(Op op, QueryPtr input) {
    auto q = std::make_unique<Query>();
    q->op = op;
    q->inputs.push_back(std::move(input));
    return q;
}

QueryPtr Query::make(Op op, QueryPtr left, QueryPtr right) {
    auto q = std::make_unique<Query>();
    q->op = op;
    q->inputs.push_back(std::move(left));
    q->inputs.push_back(std::move(right));
    return q;
}

QueryPtr Query::clone() const {
    auto q = std::make_unique<Query>();
    q->op = op;
    for (const auto &i : inputs) q->inputs.push_back(i->clone());
    q->relation = relation;
    q->alias = alias;
    if (condition) q->condition = condition->clone();
    for (const auto &e : exprs) q->exprs.push_back(e->clone());
    q->names = names;
    q->star = star;
    for (const auto &k : keys) q->keys.push_back(k->clone());
    for (const auto &a : aggregates) q->aggregates.push_back(a->clone());
    if (having) q->having = having->clone();
    q->schema = schema;
    return q;
}

namespace {

bool equal_ptr(const ExprPtr &a, const ExprPtr &b) {
    if (!a || !b) return !a && !b;
    return structurally_equal(*a, *b);
}

bool equal_list(const std::vector<ExprPtr> &a, const std::vector<ExprPtr> &b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!structurally_equal(*a[i], *b[i])) return false;
    return true;
}

}  // namespace

bool structurally_equal(const Expr &a, const Expr &b) {
    if (a.type != b.type) return false;
    switch (a.type) {
        case Expr::Type::Literal:
            if (!(a.literal == b.literal)) return false;
            break;
        case Expr::Type::Column:
            if (a.qualifier != b.qualifier || a.name != b.name) return false;
            break;
        case Expr::Type::GroupKey:
        case Expr::Type::AggRef:
            if (a.slot != b.slot) return false;
            break;
        case Expr::Type::Unary:
            if (a.unary != b.unary) return false;
            break;
        case Expr::Type::Binary:
            if (a.binary != b.binary) return false;
            break;
        case Expr::Type::Extract:
            if (a.part != b.part) return false;
            break;
        case Expr::Type::Aggregate:
            if (a.agg != b.agg || a.distinct != b.distinct) return false;
            break;
        case Expr::Type::Exists:
        case Expr::Type::InSubquery:
            if (a.negated != b.negated) return false;
            if (!a.subquery || !b.subquery || !structurally_equal(*a.subquery, *b.subquery)) return false;
            break;
    }
    return equal_list(a.args, b.args);
}

bool structurally_equal(const Query &a, const Query &b) {
    if (a.op != b.op || a.inputs.size() != b.inputs.size()) return false;
    if (a.relation != b.relation || a.alias != b.alias || a.star != b.star || a.names != b.names) return false;
    if (!equal_ptr(a.condition, b.condition) || !equal_ptr(a.having, b.having)) return false;
    if (!equal_list(a.exprs, b.exprs) || !equal_list(a.keys, b.keys) || !equal_list(a.aggregates, b.aggregates))
        return false;
    for (std::size_t i = 0; i < a.inputs.size(); ++i)
        if (!structurally_equal(*a.inputs[i], *b.inputs[i])) return false;
    return true;
}

std::vector<const Expr *> conjuncts(const Expr *e) {
    std::vector<const Expr *> out;
    if (!e) return out;
    if (e->type == Expr::Type::Binary && e->binary == BinaryOp::And) {
        for (const auto &a : e->args) {
            auto sub = conjuncts(a.get());
            out.insert(out.end(), sub.begin(), sub.end());
        }
    } else {
        out.push_back(e);
    }
    return out;
}

std::vector<ExprPtr> take_conjuncts(ExprPtr e) {
    std::vector<ExprPtr> out;
    if (!e) return out;
    if (e->type == Expr::Type::Binary && e->binary == BinaryOp::And) {
        for (auto &a : e->args) {
            auto sub = take_conjuncts(std::move(a));
            for (auto &s : sub) out.push_back(std::move(s));
        }
    } else {
        out.push_back(std::move(e));
    }
    return out;
}

ExprPtr make_conjunction(std::vector<ExprPtr> parts) {
    ExprPtr acc;
    for (auto &p : parts) {
        if (!acc) {
            acc = std::move(p);
        } else {
            const Kind k = Kind::Bool;
            acc = Expr::make_binary(BinaryOp::And, std::move(acc), std::move(p));
            acc->kind = k;
        }
    }
    return acc;
}

}  // namespace iscm::query
