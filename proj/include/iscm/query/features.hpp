#pragma once

#include <string>

#include "iscm/query/ast.hpp"

namespace iscm::query {

/// Query-language features a query uses, in the vocabulary of constraint
/// catalogs: aggregation, OR, positive existence checks (EXISTS / IN),
/// negation (NOT, NOT EXISTS, NOT IN) and a negated subquery nested inside
/// another negated subquery.
struct FeatureTags {
    bool aggregation = false;
    bool disjunction = false;
    bool existence = false;
    bool negation = false;
    bool double_negation = false;

    FeatureTags &operator|=(const FeatureTags &o);
    friend bool operator==(const FeatureTags &, const FeatureTags &) = default;
    std::string to_string() const;
};

/// Tags of a parsed (not decorrelated) query.
FeatureTags feature_tags(const Query &q);

}  // namespace iscm::query
