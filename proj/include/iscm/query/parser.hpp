#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "iscm/query/ast.hpp"

namespace iscm::query {

struct ParseError : std::runtime_error {
    ParseError(std::size_t line, std::size_t column, const std::string &message);
    std::size_t line;
    std::size_t column;
};

/// Parses one query of the constraint dialect:
///
///   query   := select ( UNION [ALL] select )*
///   select  := SELECT [DISTINCT] (* | item, ...) FROM from
///              [WHERE expr] [GROUP BY expr, ...] [HAVING expr]
///   from    := source ( , source | [INNER] JOIN source ON expr )*
///   source  := name [[AS] alias] | ( query ) [AS] alias
///
/// Expressions cover arithmetic, comparisons, AND/OR/NOT, [NOT] EXISTS,
/// [NOT] IN (subquery), EXTRACT(part FROM ts), aggregates, and literals
/// (numbers, 'text', TRUE/FALSE, NULL, TIMESTAMP '...'). A trailing `;` is
/// accepted.
QueryPtr parse(std::string_view text);

/// Parses a standalone scalar expression (used by tests and tools).
ExprPtr parse_expression(std::string_view text);

}  // namespace iscm::query
