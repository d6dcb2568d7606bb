#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "iscm/value.hpp"

namespace iscm {

enum class DatePart : std::uint8_t { Year, Month, Day, Hour, Minute };

std::string_view date_part_name(DatePart p);
std::optional<DatePart> date_part_from_name(std::string_view name);

/// Parses ISO-8601 date-times: `YYYY-MM-DD[(T| )hh:mm[:ss[.fff]]][Z|(+|-)hh[:]mm]`.
/// Naive timestamps are taken as UTC. Returns nullopt on malformed input.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// Canonical rendering, e.g. `2017-01-02T09:00:00.000Z`.
std::string format_timestamp(Timestamp t);

/// Calendar field of the UTC instant.
std::int64_t extract(DatePart part, Timestamp t);

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0, int minute = 0, int second = 0,
                         int millis = 0);

inline constexpr std::int64_t kMillisPerMinute = 60'000;
inline constexpr std::int64_t kMillisPerHour = 60 * kMillisPerMinute;
inline constexpr std::int64_t kMillisPerDay = 24 * kMillisPerHour;

}  // namespace iscm
