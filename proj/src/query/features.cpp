#include "iscm/query/features.hpp"

namespace iscm::query {

namespace {

void scan_query(const Query &q, int neg_depth, FeatureTags &t);

void scan_expr(const Expr &e, int neg_depth, FeatureTags &t) {
    switch (e.type) {
        case Expr::Type::Aggregate: t.aggregation = true; break;
        case Expr::Type::Binary:
            if (e.binary == BinaryOp::Or) t.disjunction = true;
            break;
        case Expr::Type::Unary:
            if (e.unary == UnaryOp::Not) t.negation = true;
            break;
        case Expr::Type::Exists:
        case Expr::Type::InSubquery:
            if (e.negated) {
                t.negation = true;
                if (neg_depth > 0) t.double_negation = true;
            } else {
                t.existence = true;
            }
            scan_query(*e.subquery, neg_depth + (e.negated ? 1 : 0), t);
            break;
        default: break;
    }
    for (const auto &a : e.args) scan_expr(*a, neg_depth, t);
}

void scan_query(const Query &q, int neg_depth, FeatureTags &t) {
    if (q.op == Query::Op::GroupAggregate) t.aggregation = true;
    if (q.op == Query::Op::AntiJoin) t.negation = true;
    if (q.op == Query::Op::SemiJoin) t.existence = true;
    auto visit = [&](const ExprPtr &e) {
        if (e) scan_expr(*e, neg_depth, t);
    };
    visit(q.condition);
    visit(q.having);
    for (const auto &e : q.exprs) visit(e);
    for (const auto &e : q.keys) visit(e);
    for (const auto &e : q.aggregates) visit(e);
    for (const auto &in : q.inputs) scan_query(*in, neg_depth, t);
}

}  // namespace

FeatureTags &FeatureTags::operator|=(const FeatureTags &o) {
    aggregation |= o.aggregation;
    disjunction |= o.disjunction;
    existence |= o.existence;
    negation |= o.negation;
    double_negation |= o.double_negation;
    return *this;
}

std::string FeatureTags::to_string() const {
    std::string out;
    auto add = [&](bool on, const char *name) {
        if (!on) return;
        if (!out.empty()) out += ", ";
        out += name;
    };
    add(aggregation, "aggregation");
    add(disjunction, "or");
    add(existence, "existence check");
    add(negation, "negation");
    add(double_negation, "double negation");
    return out.empty() ? "none" : out;
}

FeatureTags feature_tags(const Query &q) {
    FeatureTags t;
    scan_query(q, 0, t);
    return t;
}

}  // namespace iscm::query
