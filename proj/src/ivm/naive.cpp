#include "iscm/ivm/naive.hpp"

#include <unordered_map>

#include "iscm/ivm/eval.hpp"
#include "iscm/ivm/optimize.hpp"

namespace iscm::ivm {

using query::Expr;
using query::Query;

namespace {

using Rows = std::vector<std::pair<Tuple, std::int64_t>>;
using Frames = std::vector<RowView>;

class Naive final : public SubqueryEvaluator {
public:
    explicit Naive(const Database &db) : db_(db) {}

    Rows run(const Query &q, const Frames &outer) {
        switch (q.op) {
            case Query::Op::Scan: {
                const BagRelation &rel = db_.scan(q.relation);
                return Rows(rel.begin(), rel.end());
            }
            case Query::Op::Rename: return run(q.input(), outer);
            case Query::Op::Filter: {
                Rows in = run(q.input(), outer);
                Rows out;
                for (auto &[t, m] : in)
                    if (holds(*q.condition, ctx(t, outer))) out.emplace_back(std::move(t), m);
                return out;
            }
            case Query::Op::Project: {
                Rows in = run(q.input(), outer);
                if (q.star) return in;
                Rows out;
                out.reserve(in.size());
                for (auto &[t, m] : in) {
                    const EvalContext c = ctx(t, outer);
                    Tuple row;
                    row.reserve(q.exprs.size());
                    for (const auto &e : q.exprs) row.push_back(eval(*e, c));
                    out.emplace_back(std::move(row), m);
                }
                return out;
            }
            case Query::Op::Join:
            case Query::Op::SemiJoin:
            case Query::Op::AntiJoin: return join(q, outer);
            case Query::Op::GroupAggregate: return group(q, outer);
            case Query::Op::Distinct: {
                BagRelation bag;
                for (auto &[t, m] : run(q.input(), outer)) bag.add(t, m);
                Rows out;
                for (const auto &[t, m] : bag) out.emplace_back(t, 1);
                return out;
            }
            case Query::Op::Union: {
                Rows out = run(q.input(0), outer);
                Rows r = run(q.input(1), outer);
                out.insert(out.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
                return out;
            }
        }
        return {};
    }

    bool exists(const Query &sub, const Frames &frames) override {
        for (const auto &[t, m] : run(sub, frames))
            if (m > 0) return true;
        return false;
    }

    bool contains(const Query &sub, const Value &needle, const Frames &frames) override {
        for (const auto &[t, m] : run(sub, frames))
            if (m > 0 && values_equal(needle, t[0])) return true;
        return false;
    }

private:
    EvalContext ctx(const RowView &row, const Frames &outer) { return EvalContext{row, &outer, this}; }

    Rows join(const Query &q, const Frames &outer) {
        Rows left = run(q.input(0), outer);
        Rows right = run(q.input(1), outer);
        const std::size_t width = q.input(0).schema.size();
        const JoinKeys keys = extract_join_keys(q.condition.get(), width);
        std::unordered_map<Tuple, std::vector<std::size_t>, TupleHash> index;
        for (std::size_t i = 0; i < right.size(); ++i)
            if (auto k = eval_key(keys.right, right[i].first)) index[*k].push_back(i);

        Rows out;
        for (auto &[l, lm] : left) {
            auto k = eval_key(keys.left, l);
            const std::vector<std::size_t> *bucket = nullptr;
            if (k) {
                auto it = index.find(*k);
                if (it != index.end()) bucket = &it->second;
            }
            bool matched = false;
            if (bucket) {
                for (std::size_t i : *bucket) {
                    const auto &[r, rm] = right[i];
                    if (q.condition && !holds(*q.condition, ctx(RowView(l, r), outer))) continue;
                    matched = true;
                    if (q.op != Query::Op::Join) break;
                    out.emplace_back(RowView(l, r).materialize(), lm * rm);
                }
            }
            if (q.op == Query::Op::SemiJoin && matched) out.emplace_back(std::move(l), lm);
            if (q.op == Query::Op::AntiJoin && !matched) out.emplace_back(std::move(l), lm);
        }
        return out;
    }

    Rows group(const Query &q, const Frames &outer) {
        Rows in = run(q.input(), outer);
        std::unordered_map<Tuple, GroupState, TupleHash> groups;
        std::vector<const Tuple *> order;
        for (const auto &[t, m] : in) {
            const EvalContext c = ctx(t, outer);
            Tuple key;
            key.reserve(q.keys.size());
            for (const auto &k : q.keys) key.push_back(eval(*k, c));
            auto it = groups.find(key);
            if (it == groups.end()) {
                it = groups.emplace(key, GroupState(q.aggregates)).first;
                order.push_back(&it->first);
            }
            it->second.add(t, q.aggregates, m);
        }
        Rows out;
        for (const Tuple *key : order) {
            const GroupState &g = groups.find(*key)->second;
            if (g.rows <= 0) continue;
            Tuple row = g.output(*key);
            if (q.having && !holds(*q.having, ctx(row, outer))) continue;
            out.emplace_back(std::move(row), 1);
        }
        return out;
    }

    const Database &db_;
};

}  // namespace

BagRelation evaluate_naive(const Query &q, const Database &db, bool push_down) {
    Naive naive(db);
    BagRelation out(q.schema);
    const query::QueryPtr optimized = push_down ? push_down_predicates(q) : nullptr;
    for (const auto &[t, m] : naive.run(optimized ? *optimized : q, {})) out.add(t, m);
    return out;
}

}  // namespace iscm::ivm
