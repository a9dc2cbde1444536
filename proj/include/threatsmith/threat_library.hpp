#pragma once

#include "threatsmith/domain.hpp"
#include "threatsmith/vuln_source.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace threatsmith {

inline constexpr long long kSnapshotFormatVersion = 1;

struct KeywordEntry {
    std::vector<CveCwePair> pairs;  // sorted, unique
    std::size_t unmapped_count = 0;

    /// Distinct CVEs behind this entry, mapped or not.
    std::size_t total_cves() const {
        std::set<CveId> ids;
        for (const auto& p : pairs) ids.insert(p.cve);
        return ids.size() + unmapped_count;
    }

    friend bool operator==(const KeywordEntry&, const KeywordEntry&) = default;
};

struct LibrarySnapshot {
    long long format_version = kSnapshotFormatVersion;
    UtcTimestamp fetched_at{};
    std::string source_note;
    std::map<std::string, KeywordEntry> entries;

    const KeywordEntry* find(const std::string& keyword) const {
        auto it = entries.find(keyword);
        return it == entries.end() ? nullptr : &it->second;
    }

    friend bool operator==(const LibrarySnapshot&, const LibrarySnapshot&) = default;
};

inline bool same_entries(const LibrarySnapshot& a, const LibrarySnapshot& b) {
    return a.entries == b.entries;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json snapshot_to_json(const LibrarySnapshot& snap) {
    nlohmann::json entries = nlohmann::json::object();
    for (const auto& [keyword, entry] : snap.entries) {
        auto pairs = entry.pairs;
        std::sort(pairs.begin(), pairs.end());
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& p : pairs) arr.push_back({{"cve", p.cve.str()}, {"cwe", p.cwe.str()}});
        entries[keyword] = {{"pairs", std::move(arr)}, {"unmapped_count", entry.unmapped_count}};
    }
    return {{"format_version", snap.format_version},
            {"fetched_at", format_timestamp(snap.fetched_at)},
            {"source_note", snap.source_note},
            {"entries", std::move(entries)}};
}

/// Canonical text: sorted keys, two-space indent, trailing newline.
inline std::string serialize_snapshot(const LibrarySnapshot& snap) {
    return snapshot_to_json(snap).dump(2) + "\n";
}

inline LibrarySnapshot snapshot_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw MalformedSnapshot("snapshot is not a JSON object");
    auto version_it = doc.find("format_version");
    if (version_it == doc.end() || !version_it->is_number_integer())
        throw MalformedSnapshot("missing integer format_version");
    const auto version = version_it->get<long long>();
    if (version != kSnapshotFormatVersion) throw UnsupportedVersion(version);

    static const std::set<std::string> fields{"format_version", "fetched_at", "source_note", "entries"};
    for (const auto& [key, _] : doc.items()) {
        if (!fields.count(key)) throw MalformedSnapshot("unexpected field '" + key + "'");
    }
    for (const auto& f : fields) {
        if (!doc.contains(f)) throw MalformedSnapshot("missing field '" + f + "'");
    }

    LibrarySnapshot snap;
    snap.format_version = version;
    try {
        auto stamp = parse_timestamp(doc.at("fetched_at").get<std::string>());
        if (!stamp) throw MalformedSnapshot("fetched_at is not an ISO-8601 UTC timestamp");
        snap.fetched_at = *stamp;
        snap.source_note = doc.at("source_note").get<std::string>();

        const auto& entries = doc.at("entries");
        if (!entries.is_object()) throw MalformedSnapshot("entries is not an object");
        for (const auto& [keyword, value] : entries.items()) {
            if (text::trim(keyword).empty()) throw MalformedSnapshot("blank keyword");
            KeywordEntry entry;
            const auto& unmapped = value.at("unmapped_count");
            if (!unmapped.is_number_unsigned() && !(unmapped.is_number_integer() && unmapped.get<long long>() >= 0))
                throw MalformedSnapshot("'" + keyword + "': unmapped_count must be a non-negative integer");
            entry.unmapped_count = unmapped.get<std::size_t>();
            for (const auto& p : value.at("pairs")) {
                entry.pairs.push_back({parse_cve_id(p.at("cve").get<std::string>()),
                                       parse_mapped_cwe_id(p.at("cwe").get<std::string>())});
            }
            std::sort(entry.pairs.begin(), entry.pairs.end());
            if (std::adjacent_find(entry.pairs.begin(), entry.pairs.end()) != entry.pairs.end())
                throw MalformedSnapshot("'" + keyword + "': duplicated (cve, cwe) pair");
            snap.entries.emplace(keyword, std::move(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw MalformedSnapshot(std::string("snapshot structure: ") + e.what());
    } catch (const MalformedIdentifier& e) {
        throw MalformedSnapshot(e.what());
    }
    return snap;
}

inline LibrarySnapshot parse_snapshot(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedSnapshot(std::string("snapshot is not valid JSON: ") + e.what());
    }
    return snapshot_from_json(doc);
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoFailure("read error on '" + path.string() + "'");
    return ss.str();
}

/// Writes to a sibling temporary file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoFailure("cannot open '" + tmp.string() + "' for writing");
        out << contents;
        out.flush();
        if (!out) throw IoFailure("write error on '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoFailure("cannot replace '" + path.string() + "'");
    }
}

inline void save_snapshot(const LibrarySnapshot& snap, const std::filesystem::path& destination) {
    if (snap.format_version != kSnapshotFormatVersion) throw UnsupportedVersion(snap.format_version);
    write_file_atomic(destination, serialize_snapshot(snap));
}

inline LibrarySnapshot load_snapshot(const std::filesystem::path& source) {
    return parse_snapshot(read_file(source));
}

// ---------------------------------------------------------------------------
// Update
// ---------------------------------------------------------------------------

struct KeywordOutcome {
    std::string keyword;
    bool ok = false;
    std::size_t pair_count = 0;
    std::size_t unmapped_count = 0;
    std::size_t total_cves = 0;
    std::string error;  // set when !ok
    bool network_error = false;
};

struct UpdateResult {
    LibrarySnapshot snapshot;
    std::vector<KeywordOutcome> outcomes;  // in request order

    std::size_t failures() const {
        return static_cast<std::size_t>(
            std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return !o.ok; }));
    }
};

struct UpdateOptions {
    std::size_t workers = 1;
    std::function<void(std::size_t done, std::size_t total)> progress;
    std::function<UtcTimestamp()> now = utc_now;
};

/// Refreshes each keyword wholesale from `source`. Failed keywords keep their
/// previous entry. `current` is left untouched.
inline UpdateResult update_library(const LibrarySnapshot& current, const std::vector<std::string>& keywords,
                                   VulnSource& source, const UpdateOptions& options = {}) {
    std::vector<std::string> unique;
    for (const auto& k : keywords) {
        std::string kw(text::trim(k));
        if (kw.empty()) throw EmptyKeyword();
        if (std::find(unique.begin(), unique.end(), kw) == unique.end()) unique.push_back(std::move(kw));
    }

    UpdateResult result{current, std::vector<KeywordOutcome>(unique.size())};
    std::vector<std::optional<KeywordEntry>> fresh(unique.size());
    std::mutex progress_mutex;
    std::size_t done = 0;
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= unique.size()) return;
            auto& outcome = result.outcomes[i];
            outcome.keyword = unique[i];
            try {
                auto harvest = source.fetch_pairs_for_keyword(unique[i]);
                outcome.ok = true;
                outcome.pair_count = harvest.pairs.size();
                outcome.unmapped_count = harvest.unmapped_count;
                outcome.total_cves = harvest.processed.size();
                fresh[i] = KeywordEntry{std::move(harvest.pairs), harvest.unmapped_count};
            } catch (const PartialFetch& e) {
                outcome.error = e.what();
                outcome.network_error = e.network();
            } catch (const Error& e) {
                outcome.error = e.what();
            }
            if (options.progress) {
                std::lock_guard lock(progress_mutex);
                options.progress(++done, unique.size());
            }
        }
    };

    const auto workers = std::max<std::size_t>(1, std::min(options.workers, unique.size()));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    for (std::size_t i = 0; i < unique.size(); ++i) {
        if (fresh[i]) result.snapshot.entries[unique[i]] = std::move(*fresh[i]);
    }
    result.snapshot.fetched_at = options.now();
    return result;
}

}  // namespace threatsmith
