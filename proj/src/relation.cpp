#include "iscm/relation.hpp"

#include <algorithm>
#include <sstream>

#include "iscm/event.hpp"

namespace iscm {

Schema::Schema(std::vector<Column> columns) : columns_(std::move(columns)) {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        for (std::size_t j = i + 1; j < columns_.size(); ++j)
            if (columns_[i].name == columns_[j].name && columns_[i].qualifier == columns_[j].qualifier)
                throw SchemaError("duplicate attribute '" + columns_[i].name + "' in schema");
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].name == name) return i;
    return std::nullopt;
}

Schema Schema::with_qualifier(const std::string &alias) const {
    Schema out;
    out.columns_ = columns_;
    for (auto &c : out.columns_) c.qualifier = alias;
    return out;
}

Schema Schema::operator+(const Schema &rhs) const {
    Schema out;
    out.columns_ = columns_;
    out.columns_.insert(out.columns_.end(), rhs.columns_.begin(), rhs.columns_.end());
    return out;
}

std::string Schema::to_string() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i) os << ", ";
        if (!columns_[i].qualifier.empty()) os << columns_[i].qualifier << '.';
        os << columns_[i].name << ':' << kind_name(columns_[i].kind);
    }
    os << ')';
    return os.str();
}

bool tuple_less(const Tuple &a, const Tuple &b) noexcept {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), canonical_less);
}

std::string tuple_to_string(const Tuple &t, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) out += sep;
        out += t[i].to_string();
    }
    return out;
}

RowDeltas consolidate(RowDeltas deltas) {
    if (deltas.size() <= 1) {
        if (!deltas.empty() && deltas.front().mult == 0) deltas.clear();
        return deltas;
    }
    std::unordered_map<Tuple, std::int64_t, TupleHash> sums;
    std::vector<const Tuple *> order;
    sums.reserve(deltas.size());
    for (auto &d : deltas) {
        auto [it, inserted] = sums.try_emplace(std::move(d.tuple), 0);
        if (inserted) order.push_back(&it->first);
        it->second += d.mult;
    }
    RowDeltas out;
    out.reserve(order.size());
    for (const Tuple *t : order) {
        const std::int64_t m = sums.find(*t)->second;
        if (m != 0) out.push_back(RowDelta{*t, m});
    }
    return out;
}

void BagRelation::add(const Tuple &t, std::int64_t mult) {
    if (mult == 0) return;
    auto it = rows_.find(t);
    if (it == rows_.end()) {
        if (mult < 0) throw std::logic_error("negative multiplicity for absent tuple " + tuple_to_string(t));
        rows_.emplace(t, mult);
    } else {
        it->second += mult;
        if (it->second < 0) throw std::logic_error("negative multiplicity for tuple " + tuple_to_string(t));
        if (it->second == 0) rows_.erase(it);
    }
    total_ += mult;
}

std::int64_t BagRelation::multiplicity(const Tuple &t) const {
    auto it = rows_.find(t);
    return it == rows_.end() ? 0 : it->second;
}

BagRelation BagRelation::distinct() const {
    BagRelation out(schema_);
    for (const auto &[t, m] : rows_) out.add(t, 1);
    return out;
}

std::vector<std::pair<Tuple, std::int64_t>> BagRelation::sorted() const {
    std::vector<std::pair<Tuple, std::int64_t>> out(rows_.begin(), rows_.end());
    std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return tuple_less(a.first, b.first); });
    return out;
}

Schema log_schema() {
    return Schema({{"", "CaseId", Kind::Text},
                   {"", "EventId", Kind::Text},
                   {"", "ActivityLabel", Kind::Text},
                   {"", "Timestamp", Kind::Timestamp},
                   {"", "Lifecycle", Kind::Text}});
}

Schema event_data_schema() {
    return Schema({{"", "EventId", Kind::Text},
                   {"", "Lifecycle", Kind::Text},
                   {"", "Attribute", Kind::Text},
                   {"", "Value", Kind::Any}});
}

Schema now_schema() { return Schema({{"", "Timestamp", Kind::Timestamp}}); }

Database::Database() {
    relations_.emplace(std::string(relations::kLog), BagRelation(log_schema()));
    relations_.emplace(std::string(relations::kEventData), BagRelation(event_data_schema()));
    BagRelation now(now_schema());
    now.add(Tuple{Value::timestamp_ms(0)}, 1);
    relations_.emplace(std::string(relations::kNow), std::move(now));
}

void Database::create_relation(const std::string &name, Schema schema) {
    if (has_relation(name)) throw SchemaError("relation '" + name + "' already exists");
    relations_.emplace(name, BagRelation(std::move(schema)));
}

bool Database::has_relation(std::string_view name) const { return relations_.find(name) != relations_.end(); }

const BagRelation &Database::scan(std::string_view name) const {
    auto it = relations_.find(name);
    if (it == relations_.end()) throw SchemaError("unknown relation '" + std::string(name) + "'");
    return it->second;
}

std::vector<std::string> Database::relation_names() const {
    std::vector<std::string> out;
    for (const auto &[name, rel] : relations_) out.push_back(name);
    return out;
}

void Database::check_conformance(const BagRelation &rel, const Tuple &tuple, std::string_view name) const {
    const Schema &s = rel.schema();
    if (tuple.size() != s.size())
        throw SchemaError("arity mismatch for " + std::string(name) + ": expected " + std::to_string(s.size()) +
                          ", got " + std::to_string(tuple.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Kind want = s[i].kind;
        const Kind have = tuple[i].kind();
        if (want == Kind::Any || have == Kind::Null || want == have) continue;
        throw SchemaError("kind mismatch for " + std::string(name) + "." + s[i].name + ": expected " +
                          std::string(kind_name(want)) + ", got " + std::string(kind_name(have)));
    }
}

DeltaBatch Database::insert(const InsertionDelta &delta) {
    DeltaBatch out = insert(std::string(delta.target), delta.tuple);
    if (delta.target == relations::kLog) {
        const Value &ts = delta.tuple[3];
        if (!ts.is_null()) {
            DeltaBatch now = advance_now(ts.as_timestamp());
            out.insert(out.end(), std::make_move_iterator(now.begin()), std::make_move_iterator(now.end()));
        }
    }
    return out;
}

DeltaBatch Database::insert(const std::string &relation, Tuple tuple) {
    if (relation == relations::kNow) throw SchemaError("Now is advanced by the database, not inserted into");
    auto it = relations_.find(relation);
    if (it == relations_.end()) throw SchemaError("unknown relation '" + relation + "'");
    check_conformance(it->second, tuple, relation);
    it->second.add(tuple, 1);
    DeltaBatch out;
    out.push_back(BaseDelta{relation, std::move(tuple), 1});
    return out;
}

DeltaBatch Database::advance_now(Timestamp t) {
    DeltaBatch out;
    const Timestamp current = now();
    if (t <= current) return out;
    BagRelation &rel = relations_.find(relations::kNow)->second;
    Tuple old_row{Value::timestamp(current)};
    Tuple new_row{Value::timestamp(t)};
    rel.add(old_row, -1);
    rel.add(new_row, 1);
    out.push_back(BaseDelta{std::string(relations::kNow), std::move(old_row), -1});
    out.push_back(BaseDelta{std::string(relations::kNow), std::move(new_row), 1});
    return out;
}

Timestamp Database::now() const {
    const BagRelation &rel = relations_.find(relations::kNow)->second;
    return rel.begin()->first[0].as_timestamp();
}

}  // namespace iscm
