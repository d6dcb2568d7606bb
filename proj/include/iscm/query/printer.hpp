#pragma once

#include <string>

#include "iscm/query/ast.hpp"

namespace iscm::query {

/// Renders a query in the dialect accepted by `parse`. Supported shapes are
/// those the parser and the typechecker produce; anything else (semi-joins,
/// anti-joins) throws std::invalid_argument.
std::string print(const Query &q);

/// Renders a scalar expression. Group slots print as `key<i>` / `agg<j>`.
std::string print(const Expr &e);

/// Identifier as it must be written: quoted when reserved or not a plain word.
std::string quote_identifier(const std::string &name);

}  // namespace iscm::query
