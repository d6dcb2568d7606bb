#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "iscm/monitor/ensemble.hpp"
#include "iscm/query/features.hpp"

namespace iscm::catalog {

enum class Provenance : std::uint8_t { Verbatim, Reconstructed };

struct CatalogEntry {
    std::string name;
    std::string statement;  ///< the rule in one sentence
    monitor::Mode mode = monitor::Mode::Monitor;
    std::string source;     ///< constraint file text
    Provenance provenance = Provenance::Reconstructed;
    std::string provenance_note;
    query::FeatureTags tags;  ///< features the queries are expected to use

    monitor::ConstraintEnsemble ensemble() const;
};

struct NotFoundError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

const std::vector<CatalogEntry> &catalog_entries();
/// Case-insensitive lookup by name. Throws NotFoundError.
const CatalogEntry &lookup(std::string_view name);

/// Union of the feature tags of every member query.
query::FeatureTags ensemble_tags(const monitor::ConstraintEnsemble &e);

/// Expression texts for the integer day key (yyyymmdd) and month key
/// (yyyymm) of a timestamp column, as used by the catalog queries.
std::string day_key(std::string_view column);
std::string month_key(std::string_view column);

}  // namespace iscm::catalog
