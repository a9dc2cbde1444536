#pragma once

#include "threatsmith/domain.hpp"
#include "threatsmith/threat_library.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace threatsmith {

// ---------------------------------------------------------------------------
// Mitigation catalog
// ---------------------------------------------------------------------------

struct CatalogEntry {
    std::string title;
    std::vector<std::string> mitigations;
};

class MitigationCatalog {
public:
    MitigationCatalog() = default;

    void add(CweId id, CatalogEntry entry) {
        if (text::trim(entry.title).empty()) throw Error(id.str() + ": catalog title is empty");
        entries_[id] = std::move(entry);
    }

    const CatalogEntry* find(CweId id) const {
        auto it = entries_.find(id);
        return it == entries_.end() ? nullptr : &it->second;
    }

    std::size_t size() const noexcept { return entries_.size(); }

    /// JSON map "CWE-<n>" -> {title, mitigations: [text]}.
    static MitigationCatalog from_json(const nlohmann::json& doc) {
        if (!doc.is_object()) throw Error("mitigation catalog must be a JSON object");
        MitigationCatalog catalog;
        for (const auto& [key, value] : doc.items()) {
            try {
                CatalogEntry entry{value.at("title").get<std::string>(),
                                   value.value("mitigations", std::vector<std::string>{})};
                catalog.add(parse_mapped_cwe_id(key), std::move(entry));
            } catch (const nlohmann::json::exception& e) {
                throw Error("catalog entry '" + key + "': " + e.what());
            }
        }
        return catalog;
    }

    static MitigationCatalog load(const std::filesystem::path& path) {
        try {
            return from_json(nlohmann::json::parse(read_file(path)));
        } catch (const nlohmann::json::exception& e) {
            throw Error("mitigation catalog '" + path.string() + "': " + e.what());
        }
    }

private:
    std::map<CweId, CatalogEntry> entries_;
};

// ---------------------------------------------------------------------------
// Threat identification and prioritization
// ---------------------------------------------------------------------------

/// One entry per distinct CWE. A CWE's occurrence count is the number of
/// distinct CVEs naming it, so repeated pairs never inflate it.
inline ThreatList identify_threats(std::span<const CveCwePair> pairs, std::size_t total_cve_count,
                                   std::size_t unmapped_cve_count, const MitigationCatalog& catalog) {
    std::map<CweId, std::set<CveId>> by_cwe;
    std::set<CveId> seen;
    for (const auto& p : pairs) {
        by_cwe[p.cwe].insert(p.cve);
        seen.insert(p.cve);
    }
    if (total_cve_count < seen.size()) {
        throw InconsistentCounts("total_cve_count " + std::to_string(total_cve_count) + " is below the " +
                                 std::to_string(seen.size()) + " distinct CVEs present in the pairs");
    }

    ThreatList list;
    list.total_cve_count = total_cve_count;
    list.unmapped_cve_count = unmapped_cve_count;
    list.entries.reserve(by_cwe.size());
    for (auto& [cwe, cves] : by_cwe) {
        ThreatEntry entry;
        entry.cwe = cwe;
        entry.occurrence_count = cves.size();
        entry.supporting_cves = std::move(cves);
        if (const auto* info = catalog.find(cwe)) {
            entry.title = info->title;
            entry.mitigation_refs = info->mitigations;
        } else {
            entry.title = cwe.str();
        }
        list.entries.push_back(std::move(entry));
    }
    std::sort(list.entries.begin(), list.entries.end(), threat_order);
    return list;
}

/// The first min(k, size) entries of an already ranked list.
inline std::vector<ThreatEntry> top_k(const ThreatList& list, std::size_t k) {
    if (k == 0) throw Error("top_k needs k >= 1");
    const auto n = std::min(k, list.entries.size());
    return {list.entries.begin(), list.entries.begin() + static_cast<std::ptrdiff_t>(n)};
}

/// round(100 * count / total), halves rounded away from zero.
inline int occurrence_percentage(std::size_t count, std::size_t total) {
    if (total == 0) throw DivisionByZeroGuard();
    return static_cast<int>((200 * count + total) / (2 * total));
}

inline int occurrence_percentage(const ThreatEntry& entry, std::size_t total) {
    return occurrence_percentage(entry.occurrence_count, total);
}

// ---------------------------------------------------------------------------
// Whole-scope analysis
// ---------------------------------------------------------------------------

/// A component whose keywords are absent from the snapshot.
struct MissingData {
    std::vector<std::string> missing_keywords;

    friend bool operator==(const MissingData&, const MissingData&) = default;
};

using ComponentResult = std::variant<ThreatList, MissingData>;
using ScopeResults = std::map<std::string, ComponentResult>;  // keyed by component id

class InvalidScope : public Error {
public:
    explicit InvalidScope(std::vector<ScopeViolation> violations)
        : Error(describe(violations)), violations_(std::move(violations)) {}

    const std::vector<ScopeViolation>& violations() const noexcept { return violations_; }

private:
    static std::string describe(const std::vector<ScopeViolation>& v) {
        std::string out = "invalid scope:";
        for (const auto& x : v) out += " " + x.message + ";";
        return out;
    }
    std::vector<ScopeViolation> violations_;
};

/// Threat list for one component: pairs of all its keywords unioned with
/// (cve, cwe) de-duplication. Unmapped counts add up per keyword.
inline ComponentResult analyze_component(const Component& component, const LibrarySnapshot& snapshot,
                                         const MitigationCatalog& catalog) {
    MissingData missing;
    std::set<CveCwePair> pairs;
    std::size_t unmapped = 0;
    for (const auto& raw : component.keywords) {
        const std::string keyword(text::trim(raw));
        const auto* entry = snapshot.find(keyword);
        if (!entry) {
            missing.missing_keywords.push_back(keyword);
            continue;
        }
        pairs.insert(entry->pairs.begin(), entry->pairs.end());
        unmapped += entry->unmapped_count;
    }
    if (!missing.missing_keywords.empty()) return missing;

    std::set<CveId> cves;
    for (const auto& p : pairs) cves.insert(p.cve);
    const std::vector<CveCwePair> flat(pairs.begin(), pairs.end());
    auto list = identify_threats(flat, cves.size() + unmapped, unmapped, catalog);
    list.component_id = component.id;
    list.snapshot_stamp = snapshot.fetched_at;
    return list;
}

inline ScopeResults analyze_scope(const Scope& scope, const LibrarySnapshot& snapshot,
                                  const MitigationCatalog& catalog) {
    if (auto violations = validate_scope(scope); !violations.empty()) throw InvalidScope(std::move(violations));
    ScopeResults results;
    for (const auto& component : scope.components)
        results.emplace(component.id, analyze_component(component, snapshot, catalog));
    return results;
}

inline bool has_missing_data(const ScopeResults& results) {
    return std::any_of(results.begin(), results.end(),
                       [](const auto& kv) { return std::holds_alternative<MissingData>(kv.second); });
}

}  // namespace threatsmith
