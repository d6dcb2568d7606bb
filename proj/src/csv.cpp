#include "iscm/csv.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

namespace iscm::csv {

std::optional<Record> Reader::next() {
    std::string line;
    if (!std::getline(in_, line)) return std::nullopt;
    ++line_;
    Record rec;
    rec.line = line_;

    std::string field;
    bool quoted = false;
    std::size_t i = 0;
    for (;;) {
        if (i >= line.size()) {
            if (quoted) {
                // Quoted field continues on the next physical line.
                if (!std::getline(in_, line)) throw std::runtime_error("unterminated quoted field starting on line " +
                                                                       std::to_string(rec.line));
                ++line_;
                field += '\n';
                i = 0;
                continue;
            }
            break;
        }
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            rec.fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r' && i + 1 == line.size()) {
            // CRLF line ending
        } else {
            field += c;
        }
        ++i;
    }
    rec.fields.push_back(std::move(field));
    return rec;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_row(std::ostream &out, const std::vector<std::string> &fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << escape(fields[i]);
    }
    out << '\n';
}

}  // namespace iscm::csv
