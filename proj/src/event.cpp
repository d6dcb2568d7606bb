#include "iscm/event.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "iscm/csv.hpp"
#include "iscm/time.hpp"

namespace iscm {

namespace {

struct PairHash {
    std::size_t operator()(const std::pair<Atom, Atom> &p) const noexcept {
        return hash_combine(p.first.hash(), p.second.hash());
    }
};

std::size_t require_column(const std::vector<std::string> &header, const std::string &name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError("missing mandatory column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

const std::string &field_at(const csv::Record &rec, std::size_t idx) {
    if (idx >= rec.fields.size())
        throw InputError("row has " + std::to_string(rec.fields.size()) + " fields, expected at least " +
                             std::to_string(idx + 1),
                         rec.line);
    return rec.fields[idx];
}

std::ifstream open_input(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    return in;
}

std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return std::string(s);
}

}  // namespace

InputError::InputError(const std::string &what, std::size_t line_no)
    : std::runtime_error(line_no ? "line " + std::to_string(line_no) + ": " + what : what), line(line_no) {}

Tuple EventRecord::to_tuple() const {
    return Tuple{Value(case_id), Value(event_id), Value(activity_label), Value::timestamp(timestamp), Value(lifecycle)};
}

Tuple EventAttribute::to_tuple() const { return Tuple{Value(event_id), Value(lifecycle), Value(attribute), value}; }

void LogColumns::remap(std::string_view spec) {
    const auto eq = spec.find('=');
    if (eq == std::string_view::npos) throw InputError("column mapping must be field=header: '" + std::string(spec) + "'");
    const std::string field = trim(spec.substr(0, eq));
    const std::string header = trim(spec.substr(eq + 1));
    if (field == "case") case_id = header;
    else if (field == "event") event_id = header;
    else if (field == "activity") activity = header;
    else if (field == "timestamp") timestamp = header;
    else if (field == "lifecycle") lifecycle = header;
    else throw InputError("unknown log field '" + field + "' in mapping");
}

std::vector<EventRecord> parse_log_csv(std::istream &in, const LogColumns &columns, IngestNotes *notes) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) throw InputError("log file has no header row");
    const std::size_t c_case = require_column(header->fields, columns.case_id);
    const std::size_t c_event = require_column(header->fields, columns.event_id);
    const std::size_t c_act = require_column(header->fields, columns.activity);
    const std::size_t c_ts = require_column(header->fields, columns.timestamp);
    const std::size_t c_life = require_column(header->fields, columns.lifecycle);

    std::vector<EventRecord> out;
    while (auto rec = reader.next()) {
        if (rec->fields.size() == 1 && rec->fields[0].empty()) continue;
        const std::string &ts_text = field_at(*rec, c_ts);
        const auto ts = parse_timestamp(ts_text);
        if (!ts) throw InputError("unparseable timestamp '" + ts_text + "'", rec->line);
        const std::string &life = field_at(*rec, c_life);
        if (life.empty()) throw InputError("empty lifecycle", rec->line);
        if (notes && life != "start" && life != "complete")
            notes->push_back({rec->line, "unknown lifecycle value '" + life + "'"});
        out.push_back(EventRecord{Atom(field_at(*rec, c_case)), Atom(field_at(*rec, c_event)),
                                  Atom(field_at(*rec, c_act)), *ts, Atom(life)});
    }
    return out;
}

std::vector<EventRecord> parse_log_csv(const std::filesystem::path &path, const LogColumns &columns,
                                       IngestNotes *notes) {
    auto in = open_input(path);
    return parse_log_csv(in, columns, notes);
}

std::string_view value_type_name(Kind kind) {
    switch (kind) {
        case Kind::Int: return "int";
        case Kind::Decimal: return "decimal";
        case Kind::Bool: return "bool";
        case Kind::Timestamp: return "timestamp";
        default: return "text";
    }
}

Value parse_typed_value(std::string_view text, std::string_view type) {
    if (type == "text" || type.empty()) return Value::text(text);
    if (type == "int") {
        std::int64_t v = 0;
        auto res = std::from_chars(text.data(), text.data() + text.size(), v);
        if (res.ec != std::errc() || res.ptr != text.data() + text.size())
            throw InputError("invalid int value '" + std::string(text) + "'");
        return Value::integer(v);
    }
    if (type == "decimal") {
        double v = 0;
        auto res = std::from_chars(text.data(), text.data() + text.size(), v);
        if (res.ec != std::errc() || res.ptr != text.data() + text.size())
            throw InputError("invalid decimal value '" + std::string(text) + "'");
        return Value::decimal(v);
    }
    if (type == "bool") {
        if (text == "true" || text == "TRUE" || text == "1") return Value::boolean(true);
        if (text == "false" || text == "FALSE" || text == "0") return Value::boolean(false);
        throw InputError("invalid bool value '" + std::string(text) + "'");
    }
    if (type == "timestamp") {
        auto ts = parse_timestamp(text);
        if (!ts) throw InputError("invalid timestamp value '" + std::string(text) + "'");
        return Value::timestamp(*ts);
    }
    throw InputError("unknown value_type '" + std::string(type) + "'");
}

std::vector<EventAttribute> parse_attribute_csv(std::istream &in, IngestNotes *notes) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) throw InputError("attribute file has no header row");
    const std::size_t c_event = require_column(header->fields, "event");
    const std::size_t c_life = require_column(header->fields, "lifecycle");
    const std::size_t c_attr = require_column(header->fields, "attribute");
    const std::size_t c_value = require_column(header->fields, "value");
    const std::size_t c_type = require_column(header->fields, "value_type");

    std::vector<EventAttribute> out;
    std::unordered_set<std::string> seen;
    while (auto rec = reader.next()) {
        if (rec->fields.size() == 1 && rec->fields[0].empty()) continue;
        Value value;
        try {
            value = parse_typed_value(field_at(*rec, c_value), field_at(*rec, c_type));
        } catch (const InputError &e) {
            throw InputError(e.what(), rec->line);
        }
        EventAttribute attr{Atom(field_at(*rec, c_event)), Atom(field_at(*rec, c_life)), Atom(field_at(*rec, c_attr)),
                            value};
        std::string key = attr.event_id.str() + '\x1f' + attr.lifecycle.str() + '\x1f' + attr.attribute.str();
        if (!seen.insert(std::move(key)).second) {
            if (notes)
                notes->push_back({rec->line, "duplicate attribute '" + attr.attribute.str() + "' for event " +
                                                 attr.event_id.str() + "/" + attr.lifecycle.str() + " dropped"});
            continue;
        }
        out.push_back(std::move(attr));
    }
    return out;
}

std::vector<EventAttribute> parse_attribute_csv(const std::filesystem::path &path, IngestNotes *notes) {
    auto in = open_input(path);
    return parse_attribute_csv(in, notes);
}

std::vector<EventRecord> merge_streams(const std::vector<std::vector<EventRecord>> &streams, IngestNotes *notes) {
    std::vector<EventRecord> all;
    std::unordered_set<std::pair<Atom, Atom>, PairHash> seen;
    for (const auto &stream : streams) {
        for (const auto &ev : stream) {
            if (!seen.insert({ev.event_id, ev.lifecycle}).second) {
                if (notes)
                    notes->push_back({0, "duplicate event " + ev.event_id.str() + "/" + ev.lifecycle.str() +
                                             " dropped (first occurrence kept)"});
                continue;
            }
            all.push_back(ev);
        }
    }
    std::stable_sort(all.begin(), all.end(), [](const EventRecord &a, const EventRecord &b) {
        if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
        if (a.event_id != b.event_id) return a.event_id < b.event_id;
        return a.lifecycle < b.lifecycle;
    });
    return all;
}

std::vector<InsertionDelta> to_insertions(const std::vector<EventRecord> &events,
                                          const std::vector<EventAttribute> &attributes, IngestNotes *notes) {
    std::unordered_map<std::pair<Atom, Atom>, std::vector<std::size_t>, PairHash> by_event;
    for (std::size_t i = 0; i < attributes.size(); ++i)
        by_event[{attributes[i].event_id, attributes[i].lifecycle}].push_back(i);

    std::vector<InsertionDelta> out;
    out.reserve(events.size() + attributes.size());
    std::uint64_t seq = 0;
    std::vector<bool> used(attributes.size(), false);
    const std::string log(relations::kLog);
    const std::string data(relations::kEventData);
    for (const auto &ev : events) {
        out.push_back(InsertionDelta{log, ev.to_tuple(), ++seq});
        auto it = by_event.find({ev.event_id, ev.lifecycle});
        if (it == by_event.end()) continue;
        for (std::size_t idx : it->second) {
            if (used[idx]) continue;
            used[idx] = true;
            out.push_back(InsertionDelta{data, attributes[idx].to_tuple(), ++seq});
        }
    }
    for (std::size_t i = 0; i < attributes.size(); ++i) {
        if (used[i]) continue;
        if (notes)
            notes->push_back({0, "attribute '" + attributes[i].attribute.str() + "' references unknown event " +
                                     attributes[i].event_id.str() + "/" + attributes[i].lifecycle.str()});
        out.push_back(InsertionDelta{data, attributes[i].to_tuple(), ++seq});
    }
    return out;
}

void write_log_csv(std::ostream &out, const std::vector<EventRecord> &events) {
    csv::write_row(out, {"case", "event", "activity", "timestamp", "lifecycle"});
    for (const auto &ev : events)
        csv::write_row(out, {ev.case_id.str(), ev.event_id.str(), ev.activity_label.str(),
                             format_timestamp(ev.timestamp), ev.lifecycle.str()});
}

void write_attribute_csv(std::ostream &out, const std::vector<EventAttribute> &attributes) {
    csv::write_row(out, {"event", "lifecycle", "attribute", "value", "value_type"});
    for (const auto &a : attributes)
        csv::write_row(out, {a.event_id.str(), a.lifecycle.str(), a.attribute.str(), a.value.to_string(),
                             std::string(value_type_name(a.value.kind()))});
}

}  // namespace iscm
