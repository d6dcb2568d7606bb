#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "iscm/value.hpp"

namespace iscm {

struct InsertionDelta;

struct Column {
    std::string qualifier;  ///< table alias, may be empty
    std::string name;
    Kind kind = Kind::Any;
};

class Schema {
public:
    Schema() = default;
    explicit Schema(std::vector<Column> columns);

    std::size_t size() const noexcept { return columns_.size(); }
    bool empty() const noexcept { return columns_.empty(); }
    const Column &operator[](std::size_t i) const { return columns_[i]; }
    const std::vector<Column> &columns() const noexcept { return columns_; }
    auto begin() const noexcept { return columns_.begin(); }
    auto end() const noexcept { return columns_.end(); }

    std::optional<std::size_t> index_of(std::string_view name) const;
    /// Same columns re-qualified with `alias`.
    Schema with_qualifier(const std::string &alias) const;
    /// Concatenation, used for join outputs.
    Schema operator+(const Schema &rhs) const;

    std::string to_string() const;

private:
    std::vector<Column> columns_;
};

using Tuple = std::vector<Value>;

struct TupleHash {
    std::size_t operator()(const Tuple &t) const noexcept {
        std::size_t h = t.size();
        for (const Value &v : t) h = hash_combine(h, v.hash());
        return h;
    }
};

/// Lexicographic canonical_less; deterministic ordering for reports.
bool tuple_less(const Tuple &a, const Tuple &b) noexcept;
std::string tuple_to_string(const Tuple &t, std::string_view sep = "|");

/// A signed change to a bag: `mult` copies of `tuple` added (or removed).
struct RowDelta {
    Tuple tuple;
    std::int64_t mult = 0;
    friend bool operator==(const RowDelta &, const RowDelta &) = default;
};
using RowDeltas = std::vector<RowDelta>;

/// Sums multiplicities of equal tuples and drops zero entries.
RowDeltas consolidate(RowDeltas deltas);

/// Multiset of tuples. Tuples whose multiplicity reaches zero are erased.
class BagRelation {
public:
    using Map = std::unordered_map<Tuple, std::int64_t, TupleHash>;

    BagRelation() = default;
    explicit BagRelation(Schema schema) : schema_(std::move(schema)) {}

    const Schema &schema() const noexcept { return schema_; }
    void set_schema(Schema s) { schema_ = std::move(s); }

    /// Adds `mult` (may be negative). Throws std::logic_error if the
    /// multiplicity would drop below zero.
    void add(const Tuple &t, std::int64_t mult);
    void apply(const RowDeltas &deltas) {
        for (const auto &d : deltas) add(d.tuple, d.mult);
    }

    std::int64_t multiplicity(const Tuple &t) const;
    bool contains(const Tuple &t) const { return rows_.count(t) != 0; }
    std::size_t distinct_size() const noexcept { return rows_.size(); }
    std::int64_t total() const noexcept { return total_; }
    bool empty() const noexcept { return rows_.empty(); }

    const Map &rows() const noexcept { return rows_; }
    auto begin() const noexcept { return rows_.begin(); }
    auto end() const noexcept { return rows_.end(); }

    /// Set projection: every tuple with multiplicity 1.
    BagRelation distinct() const;
    /// Tuples in canonical order (with multiplicities).
    std::vector<std::pair<Tuple, std::int64_t>> sorted() const;

    friend bool operator==(const BagRelation &a, const BagRelation &b) { return a.rows_ == b.rows_; }

private:
    Schema schema_;
    Map rows_;
    std::int64_t total_ = 0;
};

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A change to one base relation.
struct BaseDelta {
    std::string relation;
    Tuple tuple;
    std::int64_t mult = 0;
};
using DeltaBatch = std::vector<BaseDelta>;

namespace relations {
inline constexpr std::string_view kLog = "Log";
inline constexpr std::string_view kEventData = "EventData";
inline constexpr std::string_view kNow = "Now";
}  // namespace relations

Schema log_schema();
Schema event_data_schema();
Schema now_schema();

/// Named bag relations. Always contains Log, EventData and the single-tuple
/// Now relation; tests may register extra relations.
class Database {
public:
    Database();

    void create_relation(const std::string &name, Schema schema);
    bool has_relation(std::string_view name) const;
    const BagRelation &scan(std::string_view name) const;
    std::vector<std::string> relation_names() const;

    /// Applies an ingested insertion. For Log rows, also advances Now to the
    /// maximum event time seen. Returns every base change performed.
    DeltaBatch insert(const InsertionDelta &delta);
    /// Inserts a tuple into any relation (Now excluded).
    DeltaBatch insert(const std::string &relation, Tuple tuple);
    /// Moves Now forward to `t` if it is later than the current value.
    DeltaBatch advance_now(Timestamp t);

    Timestamp now() const;

private:
    void check_conformance(const BagRelation &rel, const Tuple &tuple, std::string_view name) const;

    std::map<std::string, BagRelation, std::less<>> relations_;
};

}  // namespace iscm
