#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "iscm/query/ast.hpp"
#include "iscm/relation.hpp"

namespace iscm::query {

struct TypeCheckError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Base relation schemas plus named views. Views are expanded in place by
/// `typecheck` into `(body) AS alias`.
class Catalog {
public:
    /// Log, EventData, Now and the Events view.
    static Catalog standard();
    /// The standard catalog extended with every relation of `db`.
    static Catalog for_database(const Database &db);

    void add_relation(const std::string &name, Schema schema);
    void add_view(const std::string &name, std::string_view source);

    const Schema *relation(std::string_view name) const;
    const Query *view(std::string_view name) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, Schema, std::less<>> relations_;
    std::map<std::string, QueryPtr, std::less<>> views_;
};

/// Text of the Events view: Log joined with EventData on (EventId, Lifecycle).
extern const std::string_view kEventsViewSource;

/// Resolves names, infers kinds and annotates every node with its output
/// schema. Views are expanded. Throws TypeCheckError.
QueryPtr typecheck(const Query &q, const Catalog &catalog);

/// Kind compatibility used by comparisons and UNION.
bool comparable(Kind a, Kind b);

/// Equality of kinds and arity, ignoring names.
bool same_shape(const Schema &a, const Schema &b);

}  // namespace iscm::query
