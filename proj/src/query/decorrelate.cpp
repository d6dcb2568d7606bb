#include "iscm/query/decorrelate.hpp"

namespace iscm::query {

namespace {

bool has_subquery(const Expr &e) {
    bool found = false;
    visit_expr(e, [&](const Expr &x) {
        found = found || x.type == Expr::Type::Exists || x.type == Expr::Type::InSubquery;
    });
    return found;
}

int max_direct_depth(const Expr &e) {
    int d = -1;
    visit_expr(e, [&](const Expr &x) {
        if (x.type == Expr::Type::Column) d = std::max(d, x.depth);
    });
    return d;
}

bool expr_escapes(const Expr &e, int levels) {
    bool out = false;
    visit_expr(e, [&](const Expr &x) {
        if (out) return;
        if (x.type == Expr::Type::Column && x.depth >= levels) out = true;
        if (x.subquery && references_outer(*x.subquery, levels + 1)) out = true;
    });
    return out;
}

ExprPtr make_eq(ExprPtr a, ExprPtr b) {
    const bool dyn = a->kind == Kind::Any || b->kind == Kind::Any;
    auto e = Expr::make_binary(BinaryOp::Eq, std::move(a), std::move(b));
    e->kind = Kind::Bool;
    e->dynamic = dyn;
    return e;
}

/// Rebinds a subquery-level expression onto the concatenated row
/// (outer ++ inner): outer refs move to depth 0, inner refs shift right.
ExprPtr rebind(const Expr &e, std::size_t outer_width) {
    auto out = e.clone();
    std::vector<Expr *> stack{out.get()};
    while (!stack.empty()) {
        Expr *x = stack.back();
        stack.pop_back();
        if (x->type == Expr::Type::Column) {
            if (x->depth == 1) x->depth = 0;
            else if (x->depth == 0) x->index += static_cast<int>(outer_width);
            else throw UnsupportedError("correlated reference spans more than one query level: " + x->name);
        }
        for (auto &a : x->args) stack.push_back(a.get());
    }
    return out;
}

class Rewriter {
public:
    QueryPtr rewrite(const Query &q) {
        if (q.op == Query::Op::Filter) return filter(rewrite(q.input()), *q.condition);
        auto out = std::make_unique<Query>();
        out->op = q.op;
        out->relation = q.relation;
        out->alias = q.alias;
        out->names = q.names;
        out->star = q.star;
        out->schema = q.schema;
        for (const auto &in : q.inputs) out->inputs.push_back(rewrite(*in));
        auto take = [&](const ExprPtr &e, const char *where) -> ExprPtr {
            if (!e) return nullptr;
            if (has_subquery(*e)) throw UnsupportedError(std::string("subqueries are not supported in ") + where);
            return e->clone();
        };
        out->condition = take(q.condition, q.op == Query::Op::Join ? "JOIN ... ON" : "this position");
        for (const auto &e : q.exprs) out->exprs.push_back(take(e, "the SELECT list"));
        for (const auto &e : q.keys) out->keys.push_back(take(e, "GROUP BY"));
        for (const auto &e : q.aggregates) out->aggregates.push_back(take(e, "aggregate arguments"));
        out->having = take(q.having, "HAVING");
        return out;
    }

private:
    QueryPtr filter(QueryPtr input, const Expr &cond) {
        std::vector<ExprPtr> simple;
        std::vector<const Expr *> subs;
        for (const Expr *p : conjuncts(&cond)) {
            if (p->type == Expr::Type::Exists || p->type == Expr::Type::InSubquery) subs.push_back(p);
            else if (has_subquery(*p))
                throw UnsupportedError("EXISTS / IN are only supported as AND-ed conditions of WHERE (not under OR or NOT)");
            else simple.push_back(p->clone());
        }
        const Schema schema = input->schema;
        QueryPtr node = std::move(input);
        if (!simple.empty()) {
            node = Query::make(Query::Op::Filter, std::move(node));
            node->condition = make_conjunction(std::move(simple));
            node->schema = schema;
        }
        for (const Expr *s : subs) node = attach(std::move(node), *s);
        return node;
    }

    struct Split {
        QueryPtr rest;                   ///< subquery body with correlation removed
        std::vector<const Expr *> corr;  ///< correlated WHERE conjuncts
    };

    // `block` is the part of the subquery below any Distinct/Project.
    Split split(const Query &block) {
        Split out;
        if (block.op != Query::Op::Filter) {
            out.rest = block.clone();
        } else {
            std::vector<ExprPtr> local;
            for (const Expr *p : conjuncts(block.condition.get())) {
                if (max_direct_depth(*p) >= 1) {
                    if (has_subquery(*p))
                        throw UnsupportedError("a correlated condition may not itself contain a subquery");
                    if (max_direct_depth(*p) >= 2)
                        throw UnsupportedError("correlated reference spans more than one query level");
                    out.corr.push_back(p);
                } else {
                    local.push_back(p->clone());
                }
            }
            if (local.empty()) {
                out.rest = block.input().clone();
            } else {
                out.rest = Query::make(Query::Op::Filter, block.input().clone());
                out.rest->condition = make_conjunction(std::move(local));
                out.rest->schema = block.schema;
            }
        }
        if (references_outer(*out.rest, 1))
            throw UnsupportedError(
                "correlated references are only supported in WHERE conditions of the subquery itself "
                "(not in joins, grouping, derived tables or deeper subqueries)");
        return out;
    }

    QueryPtr attach(QueryPtr left, const Expr &e) {
        const Query &sub = *e.subquery;
        const std::size_t width = left->schema.size();
        QueryPtr right;
        std::vector<ExprPtr> cond;

        if (e.type == Expr::Type::Exists) {
            if (!references_outer(sub, 1)) {
                // One-row guard: non-empty iff the subquery is non-empty.
                auto proj = Query::make(Query::Op::Project, rewrite(sub));
                right = Query::make(Query::Op::Distinct, std::move(proj));
            } else {
                const Query *body = &sub;
                while (body->op == Query::Op::Distinct || body->op == Query::Op::Project) body = &body->input();
                if (body->op == Query::Op::GroupAggregate || body->op == Query::Op::Union)
                    throw UnsupportedError("correlated subqueries with GROUP BY or UNION are not supported");
                Split s = split(*body);
                right = rewrite(*s.rest);
                for (const Expr *c : s.corr) cond.push_back(rebind(*c, width));
            }
        } else {
            if (has_subquery(*e.args[0])) throw UnsupportedError("IN needle may not contain a subquery");
            const Kind kind = sub.schema[0].kind;
            if (!references_outer(sub, 1)) {
                right = Query::make(Query::Op::Distinct, rewrite(sub));
                right->schema = sub.schema;
                cond.push_back(make_eq(e.args[0]->clone(), Expr::make_bound_column(static_cast<int>(width), kind,
                                                                                   sub.schema[0].name)));
            } else {
                const Query *body = &sub;
                if (body->op == Query::Op::Distinct) body = &body->input();
                if (body->op != Query::Op::Project || body->star || body->input().op == Query::Op::GroupAggregate)
                    throw UnsupportedError("correlated IN subqueries must be a plain SELECT expr FROM ... WHERE block");
                Split s = split(body->input());
                right = rewrite(*s.rest);
                for (const Expr *c : s.corr) cond.push_back(rebind(*c, width));
                cond.push_back(make_eq(e.args[0]->clone(), rebind(*body->exprs[0], width)));
            }
        }
        const Schema schema = left->schema;
        auto node = Query::make(e.negated ? Query::Op::AntiJoin : Query::Op::SemiJoin, std::move(left), std::move(right));
        node->condition = make_conjunction(std::move(cond));
        node->schema = schema;
        return node;
    }
};

}  // namespace

bool references_outer(const Query &q, int levels) {
    auto check = [&](const ExprPtr &e) { return e && expr_escapes(*e, levels); };
    if (check(q.condition) || check(q.having)) return true;
    for (const auto &e : q.exprs)
        if (check(e)) return true;
    for (const auto &e : q.keys)
        if (check(e)) return true;
    for (const auto &e : q.aggregates)
        if (check(e)) return true;
    for (const auto &in : q.inputs)
        if (references_outer(*in, levels)) return true;
    return false;
}

QueryPtr decorrelate(const Query &q) { return Rewriter().rewrite(q); }

}  // namespace iscm::query
