#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "iscm/query/ast.hpp"
#include "iscm/relation.hpp"

namespace iscm::ivm {

class Node;

/// Operator DAG maintained by counting. Structurally equal subplans of all
/// queries added to one graph share nodes. Queries are added first, then the
/// graph is initialized from a database and fed base deltas.
class Dataflow {
public:
    Dataflow();
    ~Dataflow();
    Dataflow(const Dataflow &) = delete;
    Dataflow &operator=(const Dataflow &) = delete;

    /// Compiles a typechecked, decorrelated query and returns its root node.
    /// Throws query::UnsupportedError for subqueries or outer references.
    int add_query(const query::Query &q);

    /// Feeds the current contents of `db` (all base relations) as one tick.
    void initialize(const Database &db);
    bool initialized() const noexcept { return initialized_; }

    /// Propagates one batch of base deltas through every node.
    void apply(const DeltaBatch &batch);

    /// Consolidated output delta of `root` during the last tick.
    const RowDeltas &last_delta(int root) const;
    /// Current contents of a root node.
    const BagRelation &contents(int root) const;

    std::size_t node_count() const noexcept;
    /// Total number of stored tuples and accumulator entries.
    std::size_t state_size() const;
    /// Textual DAG with per-node schema and state size.
    std::string dump() const;

    /// Keeps contents for every node (for debugging and tests).
    void set_materialize_all(bool on) { materialize_all_ = on; }
    const BagRelation &node_contents(int node) const;

private:
    int compile(const query::Query &q);
    int intern(std::unique_ptr<Node> node, const std::string &fingerprint);
    void run_tick();

    std::vector<std::unique_ptr<Node>> nodes_;
    std::vector<std::pair<std::string, int>> fingerprints_;
    std::vector<std::pair<std::string, int>> scans_;
    bool initialized_ = false;
    bool materialize_all_ = false;
};

/// One query compiled into a (possibly shared) dataflow graph.
struct MaintenancePlan {
    std::shared_ptr<Dataflow> graph;
    int root = -1;
    Schema schema;
    bool set_semantics = false;
};

/// True if the result of `q` is a set: DISTINCT at the top, or a grouping
/// beneath the final projections and filters.
bool has_set_semantics(const query::Query &q);

/// Compiles `q` into a new graph initialized from `db`.
MaintenancePlan compile(const query::Query &q, const Database &db);

/// Compiles several queries into one shared graph initialized from `db`.
std::vector<MaintenancePlan> compile_ensemble(const std::vector<const query::Query *> &queries, const Database &db);

/// Applies base deltas to the plan's graph and returns the root delta. When
/// plans share a graph, call Dataflow::apply once and read last_delta.
RowDeltas apply_delta(MaintenancePlan &plan, const DeltaBatch &batch);

/// Root contents, distinct-projected for set-semantics queries.
BagRelation current_result(const MaintenancePlan &plan);

}  // namespace iscm::ivm
