#include "iscm/ivm/optimize.hpp"

#include <algorithm>
#include <set>

namespace iscm::ivm {

using query::BinaryOp;
using query::Expr;
using query::ExprPtr;
using query::Query;
using query::QueryPtr;

namespace {

struct Refs {
    int min_index = -1;
    int max_index = -1;
    bool outer = false;
    bool subquery = false;
};

Refs refs_of(const Expr &e) {
    Refs r;
    query::visit_expr(e, [&](const Expr &x) {
        if (x.type == Expr::Type::Column) {
            if (x.depth != 0) {
                r.outer = true;
                return;
            }
            r.min_index = r.min_index < 0 ? x.index : std::min(r.min_index, x.index);
            r.max_index = std::max(r.max_index, x.index);
        } else if (x.type == Expr::Type::Exists || x.type == Expr::Type::InSubquery) {
            r.subquery = true;
        } else if (x.type == Expr::Type::GroupKey || x.type == Expr::Type::AggRef) {
            r.outer = true;
        }
    });
    return r;
}

bool only_left(const Refs &r, int width) { return !r.outer && !r.subquery && r.max_index >= 0 && r.max_index < width; }
bool only_right(const Refs &r, int width) { return !r.outer && !r.subquery && r.min_index >= width; }

struct Leaf {
    QueryPtr query;
    int offset = 0;
    int width = 0;
    std::vector<ExprPtr> filters;
};

void flatten(const Query &q, std::vector<const Query *> &leaves, std::vector<const Expr *> &conds) {
    if (q.op == Query::Op::Join) {
        flatten(q.input(0), leaves, conds);
        leaves.push_back(&q.input(1));
        for (const Expr *c : query::conjuncts(q.condition.get())) conds.push_back(c);
        return;
    }
    leaves.push_back(&q);
}

QueryPtr rebuild(const Query &q);

QueryPtr place(const Query &join_tree, const std::vector<const Expr *> &extra) {
    std::vector<const Query *> raw;
    std::vector<const Expr *> conds;
    flatten(join_tree, raw, conds);
    conds.insert(conds.end(), extra.begin(), extra.end());

    std::vector<Leaf> leaves;
    int offset = 0;
    for (const Query *l : raw) {
        Leaf leaf;
        leaf.query = rebuild(*l);
        leaf.offset = offset;
        leaf.width = static_cast<int>(l->schema.size());
        offset += leaf.width;
        leaves.push_back(std::move(leaf));
    }
    auto leaf_of = [&](int index) {
        for (std::size_t i = leaves.size(); i-- > 0;)
            if (index >= leaves[i].offset) return static_cast<int>(i);
        return 0;
    };
    std::vector<std::vector<ExprPtr>> steps(leaves.size());
    for (const Expr *c : conds) {
        const Refs r = refs_of(*c);
        if (r.outer || r.subquery) {
            steps.back().push_back(c->clone());
            continue;
        }
        if (r.max_index < 0) {
            leaves.front().filters.push_back(c->clone());
            continue;
        }
        const int lo = leaf_of(r.min_index), hi = leaf_of(r.max_index);
        if (lo == hi) leaves[static_cast<std::size_t>(lo)].filters.push_back(shift_columns(*c, -leaves[static_cast<std::size_t>(lo)].offset));
        else steps[static_cast<std::size_t>(hi)].push_back(c->clone());
    }
    auto with_filters = [](Leaf &leaf) {
        if (leaf.filters.empty()) return std::move(leaf.query);
        const Schema schema = leaf.query->schema;
        auto f = Query::make(Query::Op::Filter, std::move(leaf.query));
        f->condition = query::make_conjunction(std::move(leaf.filters));
        f->schema = schema;
        return f;
    };
    QueryPtr node = with_filters(leaves.front());
    for (std::size_t k = 1; k < leaves.size(); ++k) {
        QueryPtr right = with_filters(leaves[k]);
        const Schema schema = node->schema + right->schema;
        node = Query::make(Query::Op::Join, std::move(node), std::move(right));
        node->condition = query::make_conjunction(std::move(steps[k]));
        node->schema = schema;
    }
    if (!steps.front().empty()) {
        // Only reachable for single-leaf trees with outer references.
        const Schema schema = node->schema;
        auto f = Query::make(Query::Op::Filter, std::move(node));
        f->condition = query::make_conjunction(std::move(steps.front()));
        f->schema = schema;
        node = std::move(f);
    }
    return node;
}

QueryPtr rebuild(const Query &q) {
    if (q.op == Query::Op::Filter) {
        std::vector<const Expr *> conds;
        const Query *inner = &q;
        while (inner->op == Query::Op::Filter) {
            for (const Expr *c : query::conjuncts(inner->condition.get())) conds.push_back(c);
            inner = &inner->input();
        }
        return place(*inner, conds);
    }
    if (q.op == Query::Op::Join) return place(q, {});
    auto out = std::make_unique<Query>();
    out->op = q.op;
    out->relation = q.relation;
    out->alias = q.alias;
    out->names = q.names;
    out->star = q.star;
    out->schema = q.schema;
    if (q.condition) out->condition = q.condition->clone();
    for (const auto &e : q.exprs) out->exprs.push_back(e->clone());
    for (const auto &e : q.keys) out->keys.push_back(e->clone());
    for (const auto &e : q.aggregates) out->aggregates.push_back(e->clone());
    if (q.having) out->having = q.having->clone();
    for (const auto &in : q.inputs) out->inputs.push_back(rebuild(*in));
    return out;
}

}  // namespace

ExprPtr shift_columns(const Expr &e, int delta) {
    auto out = e.clone();
    std::vector<Expr *> stack{out.get()};
    while (!stack.empty()) {
        Expr *x = stack.back();
        stack.pop_back();
        if (x->type == Expr::Type::Column && x->depth == 0) x->index += delta;
        for (auto &a : x->args) stack.push_back(a.get());
    }
    return out;
}

JoinKeys extract_join_keys(const Expr *condition, std::size_t left_width) {
    JoinKeys keys;
    const int w = static_cast<int>(left_width);
    for (const Expr *c : query::conjuncts(condition)) {
        if (c->type != Expr::Type::Binary || c->binary != BinaryOp::Eq) continue;
        const Refs a = refs_of(*c->args[0]);
        const Refs b = refs_of(*c->args[1]);
        if (only_left(a, w) && only_right(b, w)) {
            keys.left.push_back(c->args[0]->clone());
            keys.right.push_back(shift_columns(*c->args[1], -w));
        } else if (only_left(b, w) && only_right(a, w)) {
            keys.left.push_back(c->args[1]->clone());
            keys.right.push_back(shift_columns(*c->args[0], -w));
        }
    }
    return keys;
}

QueryPtr push_down_predicates(const Query &q) { return rebuild(q); }

}  // namespace iscm::ivm
