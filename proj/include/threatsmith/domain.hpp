#pragma once

#include "threatsmith/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace threatsmith {

// ---------------------------------------------------------------------------
// Text helpers shared by the parsers below and by scope handling.
// ---------------------------------------------------------------------------
namespace text {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
               return std::tolower(x) == std::tolower(y);
           });
}

inline bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(),
                                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

template <typename Int>
std::optional<Int> to_int(std::string_view s) {
    if (!all_digits(s)) return std::nullopt;
    Int value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

}  // namespace text

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

/// A weakness identifier, "CWE-<n>" with n > 0.
struct CweId {
    std::uint32_t number = 0;

    std::string str() const { return "CWE-" + std::to_string(number); }
    friend auto operator<=>(const CweId&, const CweId&) = default;
};

/// A feed record that names no mappable weakness ("NVD-CWE-noinfo",
/// "NVD-CWE-Other"). Keeps the source text so it renders back unchanged.
struct UnmappedWeakness {
    std::string sentinel;

    const std::string& str() const { return sentinel; }
    friend auto operator<=>(const UnmappedWeakness&, const UnmappedWeakness&) = default;
};

using Weakness = std::variant<CweId, UnmappedWeakness>;

inline constexpr std::array<std::string_view, 2> kUnmappedSentinels{"NVD-CWE-noinfo",
                                                                    "NVD-CWE-Other"};

inline std::string to_string(const Weakness& w) {
    return std::visit([](const auto& v) { return std::string(v.str()); }, w);
}

inline bool is_mapped(const Weakness& w) { return std::holds_alternative<CweId>(w); }

/// Accepts "CWE-119" (prefix case-insensitive, leading zeros tolerated) and the
/// NVD sentinel strings. Anything else is a MalformedIdentifier.
inline Weakness parse_cwe_id(std::string_view raw) {
    const auto s = text::trim(raw);
    for (auto sentinel : kUnmappedSentinels) {
        if (s == sentinel) return UnmappedWeakness{std::string(sentinel)};
    }
    if (s.size() > 4 && text::iequals(s.substr(0, 4), "CWE-")) {
        auto digits = s.substr(4);
        if (digits.size() <= 9) {
            if (auto n = text::to_int<std::uint32_t>(digits); n && *n > 0) return CweId{*n};
        }
    }
    throw MalformedIdentifier(std::string(raw));
}

/// Strict variant for places where a sentinel is not acceptable.
inline CweId parse_mapped_cwe_id(std::string_view raw) {
    auto w = parse_cwe_id(raw);
    if (auto* id = std::get_if<CweId>(&w)) return *id;
    throw MalformedIdentifier(std::string(raw));
}

/// "CVE-YYYY-NNNN..." where the sequence has at least four digits.
struct CveId {
    std::uint16_t year = 0;
    std::uint64_t sequence = 0;

    std::string str() const {
        char buf[48];
        std::snprintf(buf, sizeof buf, "CVE-%04u-%04llu", static_cast<unsigned>(year),
                      static_cast<unsigned long long>(sequence));
        return buf;
    }
    friend auto operator<=>(const CveId&, const CveId&) = default;
};

inline CveId parse_cve_id(std::string_view raw) {
    const auto s = text::trim(raw);
    if (s.size() >= 13 && text::iequals(s.substr(0, 4), "CVE-") && s[8] == '-') {
        auto year = s.substr(4, 4);
        auto seq = s.substr(9);
        // Only four-digit sequences carry leading zeros in canonical form.
        const bool canonical_seq = seq.size() >= 4 && seq.size() <= 19 &&
                                   (seq.size() == 4 || seq.front() != '0');
        auto y = text::to_int<std::uint16_t>(year);
        auto n = text::to_int<std::uint64_t>(seq);
        if (canonical_seq && y && n && *y >= 1999) return CveId{*y, *n};
    }
    throw MalformedIdentifier(std::string(raw));
}

// ---------------------------------------------------------------------------
// Time
// ---------------------------------------------------------------------------

using UtcTimestamp = std::chrono::sys_seconds;
using UtcDate = std::chrono::year_month_day;

/// ISO-8601 "YYYY-MM-DDTHH:MM:SSZ".
inline std::string format_timestamp(UtcTimestamp t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss hms{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), int(hms.hours().count()),
                  int(hms.minutes().count()), int(hms.seconds().count()));
    return buf;
}

inline std::string format_date(UtcDate d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(d.year()), unsigned(d.month()),
                  unsigned(d.day()));
    return buf;
}

/// Parses a leading "YYYY-MM-DD"; trailing text (a time part) is ignored.
inline std::optional<UtcDate> parse_date(std::string_view s) {
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto y = text::to_int<int>(s.substr(0, 4));
    auto m = text::to_int<unsigned>(s.substr(5, 2));
    auto d = text::to_int<unsigned>(s.substr(8, 2));
    if (!y || !m || !d) return std::nullopt;
    UtcDate date{std::chrono::year{*y}, std::chrono::month{*m}, std::chrono::day{*d}};
    if (!date.ok()) return std::nullopt;
    return date;
}

inline std::optional<UtcTimestamp> parse_timestamp(std::string_view s) {
    using namespace std::chrono;
    if (s.size() != 20 || s[10] != 'T' || s[13] != ':' || s[16] != ':' || s[19] != 'Z')
        return std::nullopt;
    auto date = parse_date(s);
    auto hh = text::to_int<int>(s.substr(11, 2));
    auto mm = text::to_int<int>(s.substr(14, 2));
    auto ss = text::to_int<int>(s.substr(17, 2));
    if (!date || !hh || !mm || !ss || *hh > 23 || *mm > 59 || *ss > 59) return std::nullopt;
    return sys_days{*date} + hours{*hh} + minutes{*mm} + seconds{*ss};
}

inline UtcTimestamp utc_now() {
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

// ---------------------------------------------------------------------------
// Vulnerability evidence
// ---------------------------------------------------------------------------

struct CveRecord {
    CveId id;
    std::string description;
    std::vector<Weakness> weakness_ids;
    std::optional<UtcDate> published;
    std::optional<double> severity;  // CVSS base score, never used for ranking

    /// Drops repeated weakness ids (keeping first occurrence) and checks the
    /// severity range.
    void normalize() {
        std::vector<Weakness> unique;
        for (auto& w : weakness_ids) {
            if (std::find(unique.begin(), unique.end(), w) == unique.end()) unique.push_back(w);
        }
        weakness_ids = std::move(unique);
        if (severity && !(*severity >= 0.0 && *severity <= 10.0)) {
            throw Error(id.str() + ": severity out of range");
        }
    }

    std::vector<CweId> mapped_weaknesses() const {
        std::vector<CweId> out;
        for (const auto& w : weakness_ids) {
            if (auto* id = std::get_if<CweId>(&w)) out.push_back(*id);
        }
        return out;
    }

    friend bool operator==(const CveRecord&, const CveRecord&) = default;
};

struct CveCwePair {
    CveId cve;
    CweId cwe;

    friend auto operator<=>(const CveCwePair&, const CveCwePair&) = default;
};

// ---------------------------------------------------------------------------
// Components and scope
// ---------------------------------------------------------------------------

enum class BuiltinKind { PLC, SCADA, HMI, Sensor, Actuator, RTU, IED };

inline constexpr std::array<BuiltinKind, 7> kBuiltinKinds{
    BuiltinKind::PLC,      BuiltinKind::SCADA, BuiltinKind::HMI, BuiltinKind::Sensor,
    BuiltinKind::Actuator, BuiltinKind::RTU,   BuiltinKind::IED};

inline std::string_view kind_name(BuiltinKind k) {
    switch (k) {
        case BuiltinKind::PLC: return "PLC";
        case BuiltinKind::SCADA: return "SCADA";
        case BuiltinKind::HMI: return "HMI";
        case BuiltinKind::Sensor: return "Sensor";
        case BuiltinKind::Actuator: return "Actuator";
        case BuiltinKind::RTU: return "RTU";
        case BuiltinKind::IED: return "IED";
    }
    return "?";
}

inline std::optional<BuiltinKind> find_builtin_kind(std::string_view name) {
    for (auto k : kBuiltinKinds) {
        if (text::iequals(kind_name(k), text::trim(name))) return k;
    }
    return std::nullopt;
}

inline BuiltinKind parse_builtin_kind(std::string_view name) {
    if (auto k = find_builtin_kind(name)) return *k;
    throw UnknownKind(std::string(name));
}

/// Default search strings per built-in kind. Overridable per component.
inline std::vector<std::string> default_keywords(BuiltinKind k) {
    switch (k) {
        case BuiltinKind::PLC: return {"PLC", "programmable logic controller"};
        case BuiltinKind::SCADA: return {"SCADA"};
        case BuiltinKind::HMI: return {"HMI", "human machine interface"};
        case BuiltinKind::Sensor: return {"sensor"};
        case BuiltinKind::Actuator: return {"actuator"};
        case BuiltinKind::RTU: return {"RTU", "remote terminal unit"};
        case BuiltinKind::IED: return {"IED", "intelligent electronic device"};
    }
    return {};
}

/// Every default keyword of every built-in kind, in kind order.
inline std::vector<std::string> all_default_keywords() {
    std::vector<std::string> out;
    for (auto k : kBuiltinKinds) {
        for (auto& kw : default_keywords(k)) out.push_back(std::move(kw));
    }
    return out;
}

struct CustomKind {
    std::string name;
    std::string description;

    friend bool operator==(const CustomKind&, const CustomKind&) = default;
};

using ComponentKind = std::variant<BuiltinKind, CustomKind>;

inline std::string kind_label(const ComponentKind& k) {
    if (auto* b = std::get_if<BuiltinKind>(&k)) return std::string(kind_name(*b));
    return "Custom";
}

struct Component {
    std::string id;
    ComponentKind kind;
    std::string label;
    std::vector<std::string> keywords;

    friend bool operator==(const Component&, const Component&) = default;
};

struct Scope {
    std::string name;
    std::vector<Component> components;
    UtcTimestamp created{};

    const Component* find(std::string_view id) const {
        for (const auto& c : components) {
            if (c.id == id) return &c;
        }
        return nullptr;
    }

    friend bool operator==(const Scope&, const Scope&) = default;
};

struct ScopeViolation {
    enum class Code { EmptyScope, DuplicateId, DuplicateCustomName, EmptyKeywords, EmptyId, EmptyCustomName };
    Code code;
    std::string message;

    friend bool operator==(const ScopeViolation&, const ScopeViolation&) = default;
};

inline std::string custom_name_key(std::string_view name) { return text::lower(text::trim(name)); }

/// Reports every violated scope rule, in component order.
inline std::vector<ScopeViolation> validate_scope(const Scope& scope) {
    using Code = ScopeViolation::Code;
    std::vector<ScopeViolation> out;
    if (scope.components.empty()) out.push_back({Code::EmptyScope, "empty scope"});

    std::set<std::string> ids;
    std::set<std::string> custom_names;
    for (const auto& c : scope.components) {
        if (c.id.empty()) out.push_back({Code::EmptyId, "component with empty id"});
        else if (!ids.insert(c.id).second)
            out.push_back({Code::DuplicateId, "duplicate component id '" + c.id + "'"});

        if (auto* custom = std::get_if<CustomKind>(&c.kind)) {
            auto key = custom_name_key(custom->name);
            if (key.empty())
                out.push_back({Code::EmptyCustomName, "custom component '" + c.id + "' has no name"});
            else if (!custom_names.insert(key).second)
                out.push_back({Code::DuplicateCustomName,
                               "duplicate custom name '" + std::string(text::trim(custom->name)) + "'"});
        }

        const bool keywords_ok =
            !c.keywords.empty() && std::none_of(c.keywords.begin(), c.keywords.end(),
                                                [](const auto& k) { return text::trim(k).empty(); });
        if (!keywords_ok)
            out.push_back({Code::EmptyKeywords, "component '" + c.id + "' has an empty keyword list or a blank keyword"});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Analysis results
// ---------------------------------------------------------------------------

struct ThreatEntry {
    CweId cwe;
    std::string title;
    std::size_t occurrence_count = 0;
    std::set<CveId> supporting_cves;
    std::vector<std::string> mitigation_refs;

    friend bool operator==(const ThreatEntry&, const ThreatEntry&) = default;
};

/// Ranking order: higher occurrence first, then ascending CWE number.
inline bool threat_order(const ThreatEntry& a, const ThreatEntry& b) {
    if (a.occurrence_count != b.occurrence_count) return a.occurrence_count > b.occurrence_count;
    return a.cwe < b.cwe;
}

struct ThreatList {
    std::string component_id;
    std::vector<ThreatEntry> entries;
    std::size_t total_cve_count = 0;
    std::size_t unmapped_cve_count = 0;
    UtcTimestamp snapshot_stamp{};

    friend bool operator==(const ThreatList&, const ThreatList&) = default;
};

// ---------------------------------------------------------------------------
// Rate limiting
// ---------------------------------------------------------------------------

struct RateLimitPolicy {
    std::size_t max_requests = 5;
    std::chrono::nanoseconds window = std::chrono::seconds{30};

    static constexpr RateLimitPolicy keyless() { return {5, std::chrono::seconds{30}}; }
    static constexpr RateLimitPolicy keyed() { return {50, std::chrono::seconds{30}}; }

    friend bool operator==(const RateLimitPolicy&, const RateLimitPolicy&) = default;
};

}  // namespace threatsmith
