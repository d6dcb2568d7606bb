#include "iscm/ivm/dataflow.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

#include "iscm/ivm/eval.hpp"
#include "iscm/ivm/optimize.hpp"
#include "iscm/query/decorrelate.hpp"
#include "iscm/query/printer.hpp"

namespace iscm::ivm {

using query::Expr;
using query::ExprPtr;
using query::Query;
using query::UnsupportedError;

namespace {

using TupleCounts = std::unordered_map<Tuple, std::int64_t, TupleHash>;

std::string_view op_name(Query::Op op) {
    switch (op) {
        case Query::Op::Scan: return "Scan";
        case Query::Op::Rename: return "Rename";
        case Query::Op::Filter: return "Filter";
        case Query::Op::Project: return "Project";
        case Query::Op::Join: return "Join";
        case Query::Op::GroupAggregate: return "GroupAggregate";
        case Query::Op::Distinct: return "Distinct";
        case Query::Op::Union: return "Union";
        case Query::Op::SemiJoin: return "SemiJoin";
        case Query::Op::AntiJoin: return "AntiJoin";
    }
    return "?";
}

void fingerprint(const Expr &e, std::string &out) {
    out += '(';
    out += std::to_string(static_cast<int>(e.type));
    switch (e.type) {
        case Expr::Type::Literal:
            out += kind_name(e.literal.kind());
            out += ':';
            out += e.literal.to_string();
            break;
        case Expr::Type::Column:
            if (e.depth != 0) throw UnsupportedError("reference to an enclosing query block in a maintained plan");
            out += 'c' + std::to_string(e.index);
            break;
        case Expr::Type::GroupKey:
        case Expr::Type::AggRef: out += 's' + std::to_string(e.index); break;
        case Expr::Type::Unary: out += 'u' + std::to_string(static_cast<int>(e.unary)); break;
        case Expr::Type::Binary:
            out += 'b' + std::to_string(static_cast<int>(e.binary));
            if (e.dynamic) out += 'd';
            break;
        case Expr::Type::Extract: out += 'x' + std::to_string(static_cast<int>(e.part)); break;
        case Expr::Type::Aggregate:
            out += 'a' + std::to_string(static_cast<int>(e.agg));
            if (e.distinct) out += 'd';
            break;
        case Expr::Type::Exists:
        case Expr::Type::InSubquery: throw UnsupportedError("subquery left in a maintained plan; decorrelate first");
    }
    for (const auto &a : e.args) fingerprint(*a, out);
    out += ')';
}

std::string fingerprint(const Expr *e) {
    std::string out;
    if (e) fingerprint(*e, out);
    return out;
}

std::string describe(const Expr *e) {
    if (!e) return "true";
    try {
        return query::print(*e);
    } catch (const std::exception &) {
        return fingerprint(e);
    }
}

struct SideIndex {
    std::unordered_map<Tuple, TupleCounts, TupleHash> buckets;
    std::size_t entries = 0;

    void add(const Tuple &key, const Tuple &t, std::int64_t m) {
        auto &bucket = buckets[key];
        auto [it, fresh] = bucket.try_emplace(t, 0);
        if (fresh) ++entries;
        it->second += m;
        if (it->second < 0) throw std::logic_error("negative multiplicity in join index for " + tuple_to_string(t));
        if (it->second == 0) {
            bucket.erase(it);
            --entries;
            if (bucket.empty()) buckets.erase(key);
        }
    }
    const TupleCounts *find(const Tuple &key) const {
        auto it = buckets.find(key);
        return it == buckets.end() ? nullptr : &it->second;
    }
};

Tuple concat(const Tuple &a, const Tuple &b) {
    Tuple out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

}  // namespace

class Node {
public:
    virtual ~Node() = default;

    /// Consumes pending input and returns the output delta (unconsolidated).
    virtual RowDeltas process() = 0;
    virtual std::size_t state_size() const { return 0; }
    virtual std::string detail() const { return {}; }

    Query::Op op = Query::Op::Scan;
    Schema schema;
    std::vector<int> inputs;
    std::vector<std::pair<int, std::size_t>> consumers;
    std::vector<RowDeltas> pending;
    bool dirty = false;
    bool root = false;
    bool keep = false;
    BagRelation contents;
    RowDeltas last;

protected:
    RowDeltas take(std::size_t slot) { return consolidate(std::move(pending[slot])); }
};

namespace {

class ScanNode final : public Node {
public:
    explicit ScanNode(std::string relation) : relation_(std::move(relation)) {}
    RowDeltas process() override { return std::move(pending[0]); }
    std::string detail() const override { return relation_; }

private:
    std::string relation_;
};

class FilterNode final : public Node {
public:
    explicit FilterNode(ExprPtr cond) : cond_(std::move(cond)) {}
    RowDeltas process() override {
        RowDeltas out;
        for (auto &d : pending[0])
            if (holds(cond_.get(), d.tuple)) out.push_back(std::move(d));
        pending[0].clear();
        return out;
    }
    std::string detail() const override { return describe(cond_.get()); }

private:
    ExprPtr cond_;
};

class ProjectNode final : public Node {
public:
    explicit ProjectNode(std::vector<ExprPtr> exprs) : exprs_(std::move(exprs)) {}
    RowDeltas process() override {
        RowDeltas out;
        out.reserve(pending[0].size());
        for (const auto &d : pending[0]) {
            const EvalContext ctx{RowView(d.tuple)};
            Tuple row;
            row.reserve(exprs_.size());
            for (const auto &e : exprs_) row.push_back(eval(*e, ctx));
            out.push_back({std::move(row), d.mult});
        }
        pending[0].clear();
        return out;
    }
    std::string detail() const override {
        std::string s;
        for (const auto &e : exprs_) s += (s.empty() ? "" : ", ") + describe(e.get());
        return s;
    }

private:
    std::vector<ExprPtr> exprs_;
};

class JoinNode final : public Node {
public:
    JoinNode(ExprPtr cond, std::size_t left_width) : cond_(std::move(cond)), keys_(extract_join_keys(cond_.get(), left_width)) {}

    RowDeltas process() override {
        const RowDeltas dl = take(0);
        const RowDeltas dr = take(1);
        RowDeltas out;
        for (const auto &[l, m] : dl) {
            auto key = eval_key(keys_.left, l);
            if (!key) continue;
            if (const TupleCounts *bucket = right_.find(*key))
                for (const auto &[r, rm] : *bucket)
                    if (holds(cond_.get(), RowView(l, r))) out.push_back({concat(l, r), m * rm});
            left_.add(*key, l, m);
        }
        for (const auto &[r, m] : dr) {
            auto key = eval_key(keys_.right, r);
            if (!key) continue;
            if (const TupleCounts *bucket = left_.find(*key))
                for (const auto &[l, lm] : *bucket)
                    if (holds(cond_.get(), RowView(l, r))) out.push_back({concat(l, r), lm * m});
            right_.add(*key, r, m);
        }
        return out;
    }
    std::size_t state_size() const override { return left_.entries + right_.entries; }
    std::string detail() const override {
        return describe(cond_.get()) + " keys=" + std::to_string(keys_.left.size());
    }

private:
    ExprPtr cond_;
    JoinKeys keys_;
    SideIndex left_;
    SideIndex right_;
};

/// Semi- and anti-join. Each stored left tuple carries the total
/// multiplicity of right tuples satisfying the condition with it.
class SemiAntiNode final : public Node {
public:
    SemiAntiNode(bool anti, ExprPtr cond, std::size_t left_width)
        : anti_(anti), cond_(std::move(cond)), keys_(extract_join_keys(cond_.get(), left_width)) {}

    RowDeltas process() override {
        const RowDeltas dl = take(0);
        const RowDeltas dr = take(1);
        RowDeltas out;
        for (const auto &[r, m] : dr) {
            auto key = eval_key(keys_.right, r);
            if (!key) continue;
            auto bucket = left_.find(*key);
            if (bucket != left_.end()) {
                for (auto &[l, entry] : bucket->second) {
                    if (!holds(cond_.get(), RowView(l, r))) continue;
                    const std::int64_t before = entry.support;
                    entry.support += m;
                    if (entry.support < 0)
                        throw std::logic_error("negative support count for " + tuple_to_string(l));
                    if ((before == 0) == (entry.support == 0)) continue;
                    const bool matched = entry.support > 0;
                    out.push_back({l, matched != anti_ ? entry.mult : -entry.mult});
                }
            }
            right_.add(*key, r, m);
        }
        for (const auto &[l, m] : dl) {
            auto key = eval_key(keys_.left, l);
            if (!key) {
                if (anti_) out.push_back({l, m});
                continue;
            }
            auto &bucket = left_[*key];
            auto [it, fresh] = bucket.try_emplace(l);
            Entry &entry = it->second;
            if (fresh) {
                ++entries_;
                if (const TupleCounts *rb = right_.find(*key))
                    for (const auto &[r, rm] : *rb)
                        if (holds(cond_.get(), RowView(l, r))) entry.support += rm;
            }
            entry.mult += m;
            if (entry.mult < 0) throw std::logic_error("negative multiplicity in semi/anti-join for " + tuple_to_string(l));
            if ((entry.support > 0) != anti_) out.push_back({l, m});
            if (entry.mult == 0) {
                bucket.erase(it);
                --entries_;
                if (bucket.empty()) left_.erase(*key);
            }
        }
        return out;
    }
    std::size_t state_size() const override { return entries_ + right_.entries; }
    std::string detail() const override {
        return describe(cond_.get()) + " keys=" + std::to_string(keys_.left.size());
    }

private:
    struct Entry {
        std::int64_t mult = 0;
        std::int64_t support = 0;
    };

    bool anti_;
    ExprPtr cond_;
    JoinKeys keys_;
    std::unordered_map<Tuple, std::unordered_map<Tuple, Entry, TupleHash>, TupleHash> left_;
    std::size_t entries_ = 0;
    SideIndex right_;
};

class GroupNode final : public Node {
public:
    GroupNode(std::vector<ExprPtr> keys, std::vector<ExprPtr> aggregates, ExprPtr having)
        : keys_(std::move(keys)), aggs_(std::move(aggregates)), having_(std::move(having)) {}

    RowDeltas process() override {
        const RowDeltas in = take(0);
        std::unordered_map<Tuple, std::optional<Tuple>, TupleHash> before;
        std::vector<const Tuple *> touched;
        for (const auto &[t, m] : in) {
            const EvalContext ctx{RowView(t)};
            Tuple key;
            key.reserve(keys_.size());
            for (const auto &k : keys_) key.push_back(eval(*k, ctx));
            auto it = groups_.find(key);
            if (it == groups_.end()) it = groups_.emplace(key, GroupState(aggs_)).first;
            auto [b, fresh] = before.try_emplace(key);
            if (fresh) {
                b->second = visible(it->first, it->second);
                touched.push_back(&b->first);
            }
            it->second.add(t, aggs_, m);
        }
        RowDeltas out;
        for (const Tuple *key : touched) {
            auto it = groups_.find(*key);
            if (it->second.rows < 0) throw std::logic_error("negative group size for key " + tuple_to_string(*key));
            std::optional<Tuple> after = visible(it->first, it->second);
            const std::optional<Tuple> &old = before.find(*key)->second;
            if (old != after) {
                if (old) out.push_back({*old, -1});
                if (after) out.push_back({std::move(*after), 1});
            }
            if (it->second.rows == 0) groups_.erase(it);
        }
        return out;
    }
    std::size_t state_size() const override {
        std::size_t n = groups_.size();
        for (const auto &[k, g] : groups_)
            for (const auto &a : g.accs) n += a.state_size();
        return n;
    }
    std::string detail() const override {
        std::string s = "keys=" + std::to_string(keys_.size()) + " aggs=" + std::to_string(aggs_.size());
        if (having_) s += " having " + describe(having_.get());
        return s;
    }

private:
    std::optional<Tuple> visible(const Tuple &key, const GroupState &g) const {
        if (g.rows <= 0) return std::nullopt;
        Tuple row = g.output(key);
        if (having_ && !holds(having_.get(), row)) return std::nullopt;
        return row;
    }

    std::vector<ExprPtr> keys_;
    std::vector<ExprPtr> aggs_;
    ExprPtr having_;
    std::unordered_map<Tuple, GroupState, TupleHash> groups_;
};

class DistinctNode final : public Node {
public:
    RowDeltas process() override {
        RowDeltas out;
        for (const auto &[t, m] : take(0)) {
            auto [it, fresh] = counts_.try_emplace(t, 0);
            const std::int64_t before = it->second;
            it->second += m;
            if (it->second < 0) throw std::logic_error("negative count in distinct for " + tuple_to_string(t));
            if (before == 0 && it->second > 0) out.push_back({t, 1});
            if (before > 0 && it->second == 0) out.push_back({t, -1});
            if (it->second == 0) counts_.erase(it);
        }
        return out;
    }
    std::size_t state_size() const override { return counts_.size(); }

private:
    TupleCounts counts_;
};

class UnionNode final : public Node {
public:
    RowDeltas process() override {
        RowDeltas out = std::move(pending[0]);
        out.insert(out.end(), std::make_move_iterator(pending[1].begin()), std::make_move_iterator(pending[1].end()));
        pending[0].clear();
        pending[1].clear();
        return out;
    }
};

std::vector<ExprPtr> clone_all(const std::vector<ExprPtr> &v) {
    std::vector<ExprPtr> out;
    out.reserve(v.size());
    for (const auto &e : v) out.push_back(e->clone());
    return out;
}

}  // namespace

Dataflow::Dataflow() = default;
Dataflow::~Dataflow() = default;

int Dataflow::intern(std::unique_ptr<Node> node, const std::string &fp) {
    for (const auto &[f, id] : fingerprints_)
        if (f == fp) return id;
    const int id = static_cast<int>(nodes_.size());
    node->pending.resize(std::max<std::size_t>(1, node->inputs.size()));
    for (std::size_t slot = 0; slot < node->inputs.size(); ++slot)
        nodes_[static_cast<std::size_t>(node->inputs[slot])]->consumers.emplace_back(id, slot);
    node->contents.set_schema(node->schema);
    nodes_.push_back(std::move(node));
    fingerprints_.emplace_back(fp, id);
    return id;
}

int Dataflow::compile(const Query &q) {
    if (q.op == Query::Op::Rename) return compile(q.input());
    std::vector<int> children;
    for (const auto &in : q.inputs) children.push_back(compile(*in));

    std::string fp(op_name(q.op));
    for (int c : children) fp += ' ' + std::to_string(c);
    fp += '|';

    std::unique_ptr<Node> node;
    switch (q.op) {
        case Query::Op::Scan:
            fp += q.relation;
            node = std::make_unique<ScanNode>(q.relation);
            break;
        case Query::Op::Filter:
            fp += fingerprint(q.condition.get());
            node = std::make_unique<FilterNode>(q.condition->clone());
            break;
        case Query::Op::Project: {
            if (q.star) return children[0];
            for (const auto &e : q.exprs) fp += fingerprint(e.get());
            node = std::make_unique<ProjectNode>(clone_all(q.exprs));
            break;
        }
        case Query::Op::Join:
        case Query::Op::SemiJoin:
        case Query::Op::AntiJoin: {
            fp += fingerprint(q.condition.get());
            ExprPtr cond = q.condition ? q.condition->clone() : nullptr;
            const std::size_t width = q.input(0).schema.size();
            if (q.op == Query::Op::Join) node = std::make_unique<JoinNode>(std::move(cond), width);
            else node = std::make_unique<SemiAntiNode>(q.op == Query::Op::AntiJoin, std::move(cond), width);
            break;
        }
        case Query::Op::GroupAggregate:
            for (const auto &e : q.keys) fp += fingerprint(e.get());
            fp += '/';
            for (const auto &e : q.aggregates) fp += fingerprint(e.get());
            fp += '/' + fingerprint(q.having.get());
            node = std::make_unique<GroupNode>(clone_all(q.keys), clone_all(q.aggregates),
                                               q.having ? q.having->clone() : nullptr);
            break;
        case Query::Op::Distinct: node = std::make_unique<DistinctNode>(); break;
        case Query::Op::Union: node = std::make_unique<UnionNode>(); break;
        case Query::Op::Rename: break;
    }
    node->op = q.op;
    node->schema = q.schema;
    node->inputs = children;
    const int id = intern(std::move(node), fp);
    if (q.op == Query::Op::Scan) {
        bool known = false;
        for (const auto &[name, sid] : scans_) known = known || sid == id;
        if (!known) scans_.emplace_back(q.relation, id);
    }
    return id;
}

int Dataflow::add_query(const Query &q) {
    if (initialized_) throw std::logic_error("queries must be added before the dataflow is initialized");
    const int id = compile(*push_down_predicates(q));
    nodes_[static_cast<std::size_t>(id)]->root = true;
    return id;
}

void Dataflow::initialize(const Database &db) {
    if (initialized_) throw std::logic_error("dataflow already initialized");
    for (auto &n : nodes_) n->keep = n->root || materialize_all_;
    initialized_ = true;
    DeltaBatch batch;
    for (const auto &[name, id] : scans_) {
        if (!db.has_relation(name)) throw SchemaError("unknown relation " + name);
        for (const auto &[t, m] : db.scan(name)) batch.push_back({name, t, m});
    }
    apply(batch);
}

void Dataflow::apply(const DeltaBatch &batch) {
    if (!initialized_) throw std::logic_error("dataflow used before initialization");
    for (auto &n : nodes_) n->last.clear();
    for (const auto &d : batch) {
        for (const auto &[name, id] : scans_) {
            if (name != d.relation) continue;
            Node &n = *nodes_[static_cast<std::size_t>(id)];
            n.pending[0].push_back({d.tuple, d.mult});
            n.dirty = true;
        }
    }
    run_tick();
}

void Dataflow::run_tick() {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        Node &n = *nodes_[i];
        if (!n.dirty) continue;
        n.dirty = false;
        RowDeltas out;
        try {
            out = consolidate(n.process());
            if (n.keep) n.contents.apply(out);
        } catch (const std::logic_error &e) {
            std::ostringstream msg;
            msg << "invariant breach at node #" << i << " " << op_name(n.op) << " " << n.detail() << " schema "
                << n.schema.to_string() << ": " << e.what();
            throw std::logic_error(msg.str());
        }
        if (out.empty()) continue;
        for (const auto &[consumer, slot] : n.consumers) {
            Node &c = *nodes_[static_cast<std::size_t>(consumer)];
            c.pending[slot].insert(c.pending[slot].end(), out.begin(), out.end());
            c.dirty = true;
        }
        if (n.root) n.last = std::move(out);
    }
}

const RowDeltas &Dataflow::last_delta(int root) const { return nodes_.at(static_cast<std::size_t>(root))->last; }

const BagRelation &Dataflow::contents(int root) const {
    const Node &n = *nodes_.at(static_cast<std::size_t>(root));
    if (!n.keep) throw std::logic_error("node #" + std::to_string(root) + " is not materialized");
    return n.contents;
}

const BagRelation &Dataflow::node_contents(int node) const { return contents(node); }

std::size_t Dataflow::node_count() const noexcept { return nodes_.size(); }

std::size_t Dataflow::state_size() const {
    std::size_t n = 0;
    for (const auto &node : nodes_) n += node->state_size() + (node->keep ? node->contents.distinct_size() : 0);
    return n;
}

std::string Dataflow::dump() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node &n = *nodes_[i];
        out << '#' << i << ' ' << op_name(n.op);
        if (!n.inputs.empty()) {
            out << " <-";
            for (int c : n.inputs) out << " #" << c;
        }
        const std::string d = n.detail();
        if (!d.empty()) out << " [" << d << ']';
        out << " schema " << n.schema.to_string() << " state " << n.state_size();
        if (n.keep) out << " rows " << n.contents.distinct_size();
        if (n.root) out << " (root)";
        out << '\n';
    }
    return out.str();
}

bool has_set_semantics(const Query &q) {
    const Query *cur = &q;
    while (cur->op == Query::Op::Project || cur->op == Query::Op::Filter || cur->op == Query::Op::Rename) cur = &cur->input();
    return cur->op == Query::Op::Distinct || cur->op == Query::Op::GroupAggregate;
}

std::vector<MaintenancePlan> compile_ensemble(const std::vector<const Query *> &queries, const Database &db) {
    auto graph = std::make_shared<Dataflow>();
    std::vector<MaintenancePlan> plans;
    for (const Query *q : queries) plans.push_back({graph, graph->add_query(*q), q->schema, has_set_semantics(*q)});
    graph->initialize(db);
    return plans;
}

MaintenancePlan compile(const Query &q, const Database &db) { return compile_ensemble({&q}, db).front(); }

RowDeltas apply_delta(MaintenancePlan &plan, const DeltaBatch &batch) {
    plan.graph->apply(batch);
    return plan.graph->last_delta(plan.root);
}

BagRelation current_result(const MaintenancePlan &plan) {
    const BagRelation &rows = plan.graph->contents(plan.root);
    BagRelation out = plan.set_semantics ? rows.distinct() : rows;
    out.set_schema(plan.schema);
    return out;
}

}  // namespace iscm::ivm
