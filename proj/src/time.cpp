#include "iscm/time.hpp"

#include <array>
#include <cctype>
#include <chrono>
#include <cstdio>

namespace iscm {

namespace {

using std::chrono::days;
using std::chrono::sys_days;
using std::chrono::year_month_day;

// Reads exactly `width` digits starting at `pos`.
bool read_digits(std::string_view s, std::size_t &pos, int width, int &out) {
    if (pos + width > s.size()) return false;
    int v = 0;
    for (int i = 0; i < width; ++i) {
        const char c = s[pos + i];
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        v = v * 10 + (c - '0');
    }
    pos += width;
    out = v;
    return true;
}

bool expect(std::string_view s, std::size_t &pos, char c) {
    if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
    }
    return false;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

std::string_view date_part_name(DatePart p) {
    switch (p) {
        case DatePart::Year: return "YEAR";
        case DatePart::Month: return "MONTH";
        case DatePart::Day: return "DAY";
        case DatePart::Hour: return "HOUR";
        case DatePart::Minute: return "MINUTE";
    }
    return "?";
}

std::optional<DatePart> date_part_from_name(std::string_view name) {
    static constexpr std::array parts{DatePart::Year, DatePart::Month, DatePart::Day, DatePart::Hour, DatePart::Minute};
    for (DatePart p : parts) {
        const std::string_view n = date_part_name(p);
        if (n.size() != name.size()) continue;
        bool same = true;
        for (std::size_t i = 0; i < n.size(); ++i)
            same = same && std::toupper(static_cast<unsigned char>(name[i])) == n[i];
        if (same) return p;
    }
    return std::nullopt;
}

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour, int minute, int second, int millis) {
    const sys_days d = std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day};
    const std::int64_t day_ms = static_cast<std::int64_t>(d.time_since_epoch().count()) * kMillisPerDay;
    return Timestamp{day_ms + hour * kMillisPerHour + minute * kMillisPerMinute + second * 1000LL + millis};
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);

    std::size_t pos = 0;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0, ms = 0;
    if (!read_digits(s, pos, 4, y) || !expect(s, pos, '-') || !read_digits(s, pos, 2, mo) || !expect(s, pos, '-') ||
        !read_digits(s, pos, 2, d))
        return std::nullopt;
    if (pos < s.size() && (s[pos] == 'T' || s[pos] == 't' || s[pos] == ' ')) {
        ++pos;
        if (!read_digits(s, pos, 2, h) || !expect(s, pos, ':') || !read_digits(s, pos, 2, mi)) return std::nullopt;
        if (expect(s, pos, ':')) {
            if (!read_digits(s, pos, 2, sec)) return std::nullopt;
            if (expect(s, pos, '.') || expect(s, pos, ',')) {
                // Fractional seconds: keep millisecond precision, truncate the rest.
                int digits = 0;
                int frac = 0;
                while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
                    if (digits < 3) frac = frac * 10 + (s[pos] - '0');
                    ++digits;
                    ++pos;
                }
                if (digits == 0) return std::nullopt;
                for (int i = digits; i < 3; ++i) frac *= 10;
                ms = frac;
            }
        }
    }
    std::int64_t offset_min = 0;
    if (pos < s.size()) {
        if (s[pos] == 'Z' || s[pos] == 'z') {
            ++pos;
        } else if (s[pos] == '+' || s[pos] == '-') {
            const int sign = s[pos] == '-' ? -1 : 1;
            ++pos;
            int oh = 0, om = 0;
            if (!read_digits(s, pos, 2, oh)) return std::nullopt;
            expect(s, pos, ':');
            if (pos < s.size() && !read_digits(s, pos, 2, om)) return std::nullopt;
            offset_min = sign * (oh * 60 + om);
        }
    }
    if (pos != s.size()) return std::nullopt;
    if (mo < 1 || mo > 12 || h > 23 || mi > 59 || sec > 60) return std::nullopt;
    const year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                             std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    Timestamp t = make_timestamp(y, mo, d, h, mi, sec, ms);
    t.ms -= offset_min * kMillisPerMinute;
    return t;
}

std::string format_timestamp(Timestamp t) {
    const std::int64_t day_index = floor_div(t.ms, kMillisPerDay);
    const std::int64_t in_day = t.ms - day_index * kMillisPerDay;
    const year_month_day ymd{sys_days{days{day_index}}};
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(in_day / kMillisPerHour),
                  static_cast<long long>((in_day / kMillisPerMinute) % 60),
                  static_cast<long long>((in_day / 1000) % 60), static_cast<long long>(in_day % 1000));
    return buf;
}

std::int64_t extract(DatePart part, Timestamp t) {
    const std::int64_t day_index = floor_div(t.ms, kMillisPerDay);
    const std::int64_t in_day = t.ms - day_index * kMillisPerDay;
    switch (part) {
        case DatePart::Hour: return in_day / kMillisPerHour;
        case DatePart::Minute: return (in_day / kMillisPerMinute) % 60;
        default: break;
    }
    const year_month_day ymd{sys_days{days{day_index}}};
    switch (part) {
        case DatePart::Year: return static_cast<int>(ymd.year());
        case DatePart::Month: return static_cast<unsigned>(ymd.month());
        case DatePart::Day: return static_cast<unsigned>(ymd.day());
        default: return 0;
    }
}

}  // namespace iscm
