#include "iscm/value.hpp"

#include <charconv>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "iscm/time.hpp"

namespace iscm {

namespace {

class AtomPool {
public:
    const Atom::Entry *intern(std::string_view text) {
        std::lock_guard lock(mutex_);
        if (auto it = entries_.find(text); it != entries_.end()) return it->second.get();
        auto entry = std::make_unique<Atom::Entry>(Atom::Entry{std::string(text), std::hash<std::string_view>{}(text)});
        const Atom::Entry *raw = entry.get();
        entries_.emplace(std::string_view(raw->text), std::move(entry));
        return raw;
    }

private:
    std::mutex mutex_;
    std::unordered_map<std::string_view, std::unique_ptr<Atom::Entry>> entries_;
};

AtomPool &pool() {
    static AtomPool instance;
    return instance;
}

[[noreturn]] void wrong_kind(Kind want, Kind have) {
    throw TypeError("expected " + std::string(kind_name(want)) + " value, found " + std::string(kind_name(have)));
}

}  // namespace

std::string_view kind_name(Kind k) {
    switch (k) {
        case Kind::Null: return "null";
        case Kind::Text: return "text";
        case Kind::Int: return "int";
        case Kind::Decimal: return "decimal";
        case Kind::Bool: return "bool";
        case Kind::Timestamp: return "timestamp";
        case Kind::Any: return "any";
    }
    return "?";
}

Atom::Atom() : entry_(pool().intern("")) {}
Atom::Atom(std::string_view text) : entry_(pool().intern(text)) {}

Atom Value::as_atom() const {
    if (auto p = std::get_if<Atom>(&v_)) return *p;
    wrong_kind(Kind::Text, kind());
}

std::int64_t Value::as_int() const {
    if (auto p = std::get_if<std::int64_t>(&v_)) return *p;
    wrong_kind(Kind::Int, kind());
}

double Value::as_decimal() const {
    if (auto p = std::get_if<double>(&v_)) return *p;
    wrong_kind(Kind::Decimal, kind());
}

bool Value::as_bool() const {
    if (auto p = std::get_if<bool>(&v_)) return *p;
    wrong_kind(Kind::Bool, kind());
}

Timestamp Value::as_timestamp() const {
    if (auto p = std::get_if<Timestamp>(&v_)) return *p;
    wrong_kind(Kind::Timestamp, kind());
}

double Value::as_number() const {
    if (auto p = std::get_if<std::int64_t>(&v_)) return static_cast<double>(*p);
    if (auto p = std::get_if<double>(&v_)) return *p;
    wrong_kind(Kind::Decimal, kind());
}

std::size_t Value::hash() const noexcept {
    std::size_t h = v_.index();
    switch (kind()) {
        case Kind::Null: break;
        case Kind::Text: h = hash_combine(h, std::get<Atom>(v_).hash()); break;
        case Kind::Int: h = hash_combine(h, std::hash<std::int64_t>{}(std::get<std::int64_t>(v_))); break;
        case Kind::Decimal: h = hash_combine(h, std::hash<double>{}(std::get<double>(v_))); break;
        case Kind::Bool: h = hash_combine(h, std::get<bool>(v_) ? 1 : 2); break;
        case Kind::Timestamp: h = hash_combine(h, std::hash<std::int64_t>{}(std::get<Timestamp>(v_).ms)); break;
        case Kind::Any: break;
    }
    return h;
}

std::string Value::to_string() const {
    switch (kind()) {
        case Kind::Null: return {};
        case Kind::Text: return as_text();
        case Kind::Int: return std::to_string(as_int());
        case Kind::Decimal: {
            char buf[64];
            auto res = std::to_chars(buf, buf + sizeof buf, as_decimal());
            return std::string(buf, res.ptr);
        }
        case Kind::Bool: return as_bool() ? "true" : "false";
        case Kind::Timestamp: return format_timestamp(as_timestamp());
        case Kind::Any: break;
    }
    return {};
}

std::partial_ordering compare_values(const Value &a, const Value &b) {
    if (a.is_null() || b.is_null()) return std::partial_ordering::unordered;
    const Kind ka = a.kind();
    const Kind kb = b.kind();
    if (ka != kb) {
        const bool numeric = (ka == Kind::Int || ka == Kind::Decimal) && (kb == Kind::Int || kb == Kind::Decimal);
        if (!numeric)
            throw TypeError("cannot compare " + std::string(kind_name(ka)) + " with " + std::string(kind_name(kb)));
        return a.as_number() <=> b.as_number();
    }
    switch (ka) {
        case Kind::Text: return a.as_atom() <=> b.as_atom();
        case Kind::Int: return a.as_int() <=> b.as_int();
        case Kind::Decimal: return a.as_decimal() <=> b.as_decimal();
        case Kind::Bool: return a.as_bool() <=> b.as_bool();
        case Kind::Timestamp: return a.as_timestamp() <=> b.as_timestamp();
        default: break;
    }
    return std::partial_ordering::unordered;
}

bool canonical_less(const Value &a, const Value &b) noexcept {
    if (a.kind() != b.kind()) return a.kind() < b.kind();
    switch (a.kind()) {
        case Kind::Text: return a.as_text() < b.as_text();
        case Kind::Int: return a.as_int() < b.as_int();
        case Kind::Decimal: return a.as_decimal() < b.as_decimal();
        case Kind::Bool: return !a.as_bool() && b.as_bool();
        case Kind::Timestamp: return a.as_timestamp() < b.as_timestamp();
        default: return false;
    }
}

}  // namespace iscm
