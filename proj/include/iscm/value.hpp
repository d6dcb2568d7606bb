#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace iscm {

/// Runtime kinds of scalar values. `Any` only appears in schemas (the
/// semi-structured `EventData.Value` column); a Value itself is never `Any`.
enum class Kind : std::uint8_t { Null, Text, Int, Decimal, Bool, Timestamp, Any };

std::string_view kind_name(Kind k);

/// Raised when values of incompatible kinds meet in a comparison or an
/// arithmetic operation.
struct TypeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// UTC instant with millisecond precision.
struct Timestamp {
    std::int64_t ms = 0;
    friend constexpr auto operator<=>(Timestamp, Timestamp) = default;
};

/// Interned text atom. Two atoms are equal iff they point at the same pooled
/// string, so copies and equality checks are pointer operations.
class Atom {
public:
    Atom();
    explicit Atom(std::string_view text);

    struct Entry {
        std::string text;
        std::size_t hash;
    };

    const std::string &str() const noexcept { return entry_->text; }
    std::size_t hash() const noexcept { return entry_->hash; }

    friend bool operator==(Atom a, Atom b) noexcept { return a.entry_ == b.entry_; }
    friend std::strong_ordering operator<=>(Atom a, Atom b) noexcept {
        if (a.entry_ == b.entry_) return std::strong_ordering::equal;
        return a.str().compare(b.str()) < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
    }

private:
    const Entry *entry_;
};

class Value {
public:
    Value() = default;
    static Value null() { return Value(); }
    static Value text(std::string_view s) { return Value(Atom(s)); }
    static Value integer(std::int64_t v) { return Value(v); }
    static Value decimal(double v) { return Value(v); }
    static Value boolean(bool v) { return Value(v); }
    static Value timestamp(Timestamp t) { return Value(t); }
    static Value timestamp_ms(std::int64_t ms) { return Value(Timestamp{ms}); }

    explicit Value(Atom a) : v_(a) {}
    explicit Value(std::int64_t v) : v_(v) {}
    explicit Value(double v) : v_(v) {}
    explicit Value(bool v) : v_(v) {}
    explicit Value(Timestamp t) : v_(t) {}

    Kind kind() const noexcept { return static_cast<Kind>(v_.index()); }
    bool is_null() const noexcept { return v_.index() == 0; }

    Atom as_atom() const;
    const std::string &as_text() const { return as_atom().str(); }
    std::int64_t as_int() const;
    double as_decimal() const;
    bool as_bool() const;
    Timestamp as_timestamp() const;
    /// Int or Decimal widened to double.
    double as_number() const;

    std::size_t hash() const noexcept;

    /// Grouping equality: same kind and same payload; null equals null.
    friend bool operator==(const Value &a, const Value &b) noexcept { return a.v_ == b.v_; }

    /// Human-readable rendering used by CSV output (null renders empty).
    std::string to_string() const;

private:
    std::variant<std::monostate, Atom, std::int64_t, double, bool, Timestamp> v_;
};

/// Ordering comparison used by predicates. Returns `unordered` when either
/// side is null. Int and Decimal compare numerically; any other pair of
/// distinct kinds throws TypeError.
std::partial_ordering compare_values(const Value &a, const Value &b);

/// Total order over all values (kind first, then payload). Used only to
/// produce deterministic output orderings, never by query predicates.
bool canonical_less(const Value &a, const Value &b) noexcept;

inline std::size_t hash_combine(std::size_t seed, std::size_t h) noexcept {
    return seed ^ (h + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

}  // namespace iscm

template <>
struct std::hash<iscm::Value> {
    std::size_t operator()(const iscm::Value &v) const noexcept { return v.hash(); }
};
