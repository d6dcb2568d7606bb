#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "iscm/relation.hpp"
#include "iscm/value.hpp"

namespace iscm {

/// One logged activity occurrence.
struct EventRecord {
    Atom case_id;
    Atom event_id;
    Atom activity_label;
    Timestamp timestamp;
    Atom lifecycle;

    Tuple to_tuple() const;
    friend bool operator==(const EventRecord &, const EventRecord &) = default;
};

/// One payload attribute of an (event, lifecycle) pair.
struct EventAttribute {
    Atom event_id;
    Atom lifecycle;
    Atom attribute;
    Value value;

    Tuple to_tuple() const;
    friend bool operator==(const EventAttribute &, const EventAttribute &) = default;
};

/// One insertion into a base relation; `sequence_no` is the monitor's
/// logical clock and strictly increases along a stream.
struct InsertionDelta {
    std::string target;
    Tuple tuple;
    std::uint64_t sequence_no = 0;
};

/// Bad input: missing file or column, unparseable field. `line` is 0 for
/// file-level problems.
struct InputError : std::runtime_error {
    InputError(const std::string &what, std::size_t line = 0);
    std::size_t line;
};

/// Non-fatal ingestion finding (unknown lifecycle, duplicate key, ...).
struct IngestNote {
    std::size_t line = 0;
    std::string message;
};
using IngestNotes = std::vector<IngestNote>;

/// Header names for the Log CSV columns.
struct LogColumns {
    std::string case_id = "case";
    std::string event_id = "event";
    std::string activity = "activity";
    std::string timestamp = "timestamp";
    std::string lifecycle = "lifecycle";

    /// Applies one `field=header` remapping, e.g. `case=CaseID`.
    void remap(std::string_view spec);
};

std::vector<EventRecord> parse_log_csv(std::istream &in, const LogColumns &columns = {}, IngestNotes *notes = nullptr);
std::vector<EventRecord> parse_log_csv(const std::filesystem::path &path, const LogColumns &columns = {},
                                       IngestNotes *notes = nullptr);

/// Attribute CSV: event, lifecycle, attribute, value, value_type.
std::vector<EventAttribute> parse_attribute_csv(std::istream &in, IngestNotes *notes = nullptr);
std::vector<EventAttribute> parse_attribute_csv(const std::filesystem::path &path, IngestNotes *notes = nullptr);

/// Parses a typed attribute value; `type` is one of text, int, decimal, bool, timestamp.
Value parse_typed_value(std::string_view text, std::string_view type);
std::string_view value_type_name(Kind kind);

/// Merges several event sequences into one ordered by (timestamp, event_id,
/// lifecycle), stable for fully equal keys. Repeated (event_id, lifecycle)
/// pairs keep their first occurrence and produce a note.
std::vector<EventRecord> merge_streams(const std::vector<std::vector<EventRecord>> &streams,
                                       IngestNotes *notes = nullptr);

/// Emits one Log insertion per event, each followed by that event's
/// attribute insertions. Attributes whose (event_id, lifecycle) never
/// appears go at the end of the stream with a note.
std::vector<InsertionDelta> to_insertions(const std::vector<EventRecord> &events,
                                          const std::vector<EventAttribute> &attributes,
                                          IngestNotes *notes = nullptr);

void write_log_csv(std::ostream &out, const std::vector<EventRecord> &events);
void write_attribute_csv(std::ostream &out, const std::vector<EventAttribute> &attributes);

}  // namespace iscm
