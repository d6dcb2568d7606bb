#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iscm::csv {

/// One parsed record and the 1-based line on which it started.
struct Record {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

/// Streaming reader for comma-separated, double-quote-escaped text.
/// Quoted fields may span lines; `""` inside quotes is a literal quote.
class Reader {
public:
    explicit Reader(std::istream &in) : in_(in) {}

    std::optional<Record> next();

private:
    std::istream &in_;
    std::size_t line_ = 0;
};

/// Quotes `field` if it contains a comma, quote, or line break.
std::string escape(std::string_view field);
void write_row(std::ostream &out, const std::vector<std::string> &fields);

}  // namespace iscm::csv
