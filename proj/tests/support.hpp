#pragma once

// Test doubles shared by the suites: fake clock, scripted and fixture-backed
// transports, and NVD-shaped document builders.

#include "threatsmith/threatsmith.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

namespace threatsmith::testkit {

inline std::filesystem::path data_dir() { return THREATSMITH_TEST_DATA_DIR; }
inline std::filesystem::path fixture_dir() { return THREATSMITH_TEST_FIXTURE_DIR; }

inline LibrarySnapshot case_study_snapshot() { return load_snapshot(data_dir() / "case_study_snapshot.json"); }
inline MitigationCatalog bundled_catalog() { return MitigationCatalog::load(data_dir() / "cwe_catalog.json"); }

inline nlohmann::json read_json(const std::filesystem::path& p) { return nlohmann::json::parse(read_file(p)); }

/// A scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("threatsmith-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Monotonic clock that only moves when something sleeps on it.
class FakeClock {
public:
    Instant now() const {
        std::lock_guard lock(mutex_);
        return now_;
    }
    void advance(Duration d) {
        std::lock_guard lock(mutex_);
        now_ += d;
        slept_ += d;
    }
    Duration slept() const {
        std::lock_guard lock(mutex_);
        return slept_;
    }
    VulnSource::Clock clock() {
        return [this] { return now(); };
    }
    VulnSource::Sleeper sleeper() {
        return [this](Duration d) { advance(d); };
    }

private:
    mutable std::mutex mutex_;
    Instant now_{};
    Duration slept_{};
};

// ---------------------------------------------------------------------------
// NVD-shaped documents, built independently of the parsers under test.
// ---------------------------------------------------------------------------

inline nlohmann::json nvd_document(const nlohmann::json& cves, std::size_t start = 0,
                                   std::optional<std::size_t> total = std::nullopt) {
    nlohmann::json vulns = nlohmann::json::array();
    for (const auto& c : cves) vulns.push_back({{"cve", c}});
    return {{"resultsPerPage", cves.size()},
            {"startIndex", start},
            {"totalResults", total.value_or(cves.size())},
            {"format", "NVD_CVE"},
            {"version", "2.0"},
            {"vulnerabilities", std::move(vulns)}};
}

inline nlohmann::json nvd_cve(const std::string& id, const std::vector<std::string>& weaknesses,
                              const std::string& description = "fixture record") {
    nlohmann::json cve{{"id", id},
                       {"published", "2021-03-04T05:06:07.890"},
                       {"descriptions", {{{"lang", "en"}, {"value", description}}}}};
    if (!weaknesses.empty()) {
        nlohmann::json desc = nlohmann::json::array();
        for (const auto& w : weaknesses) desc.push_back({{"lang", "en"}, {"value", w}});
        cve["weaknesses"] = {{{"source", "nvd@nist.gov"}, {"type", "Primary"}, {"description", desc}}};
    }
    return cve;
}

inline std::string query_param(const std::string& url, const std::string& name) {
    auto q = url.find('?');
    if (q == std::string::npos) return {};
    std::string query = url.substr(q + 1);
    std::size_t pos = 0;
    while (pos <= query.size()) {
        auto amp = query.find('&', pos);
        auto part = query.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
        auto eq = part.find('=');
        if (eq != std::string::npos && part.substr(0, eq) == name) {
            std::string raw = part.substr(eq + 1), out;
            for (std::size_t i = 0; i < raw.size(); ++i) {
                if (raw[i] == '%' && i + 2 < raw.size()) {
                    out.push_back(static_cast<char>(std::stoi(raw.substr(i + 1, 2), nullptr, 16)));
                    i += 2;
                } else {
                    out.push_back(raw[i]);
                }
            }
            return out;
        }
        if (amp == std::string::npos) break;
        pos = amp + 1;
    }
    return {};
}

/// Serves keyword searches as pre-split pages and detail lookups from a map.
/// Knobs allow fault injection per keyword or per CVE.
class FixtureTransport : public Transport {
public:
    /// keyword -> pages of CVE ids
    std::map<std::string, std::vector<std::vector<std::string>>> searches;
    /// CVE id -> weakness strings
    std::map<std::string, std::vector<std::string>> details;
    /// Raw detail bodies that take precedence over `details`.
    std::map<std::string, std::string> raw_details;
    /// keyword -> recorded page bodies keyed by startIndex
    std::map<std::string, std::map<std::size_t, std::string>> raw_pages;

    std::set<std::string> failing_keywords;  // always 503
    std::set<std::string> failing_cves;      // always 503

    HttpResponse get(const std::string& url, const HttpHeaders& headers) override {
        {
            std::lock_guard lock(mutex_);
            calls.push_back(url);
            last_headers = headers;
        }
        if (auto id = query_param(url, "cveId"); !id.empty()) {
            if (failing_cves.count(id)) return {503, "unavailable"};
            if (auto it = raw_details.find(id); it != raw_details.end()) return {200, it->second};
            auto it = details.find(id);
            if (it == details.end()) return {200, nvd_document(nlohmann::json::array()).dump()};
            return {200, nvd_document(nlohmann::json::array({nvd_cve(id, it->second)})).dump()};
        }
        const auto keyword = query_param(url, "keywordSearch");
        const auto start = std::stoul(query_param(url, "startIndex"));
        if (failing_keywords.count(keyword)) return {503, "unavailable"};
        if (auto it = raw_pages.find(keyword); it != raw_pages.end()) {
            auto page = it->second.find(start);
            if (page == it->second.end()) return {200, nvd_document(nlohmann::json::array(), start, 0).dump()};
            return {200, page->second};
        }
        auto it = searches.find(keyword);
        if (it == searches.end()) return {200, nvd_document(nlohmann::json::array(), start, 0).dump()};
        std::size_t total = 0;
        for (const auto& p : it->second) total += p.size();
        std::size_t offset = 0;
        for (const auto& p : it->second) {
            if (offset == start) {
                nlohmann::json cves = nlohmann::json::array();
                for (const auto& id : p) cves.push_back({{"id", id}});
                return {200, nvd_document(cves, start, total).dump()};
            }
            offset += p.size();
        }
        return {200, nvd_document(nlohmann::json::array(), start, total).dump()};
    }

    std::size_t call_count() const {
        std::lock_guard lock(mutex_);
        return calls.size();
    }

    std::vector<std::string> calls;
    HttpHeaders last_headers;

private:
    mutable std::mutex mutex_;
};

/// Replays the recorded PLC search pages and detail documents.
inline std::shared_ptr<FixtureTransport> recorded_plc_transport() {
    auto t = std::make_shared<FixtureTransport>();
    const auto pages = read_json(fixture_dir() / "nvd" / "plc_search_pages.json");
    for (const auto& page : pages) t->raw_pages["PLC"][page.at("startIndex").get<std::size_t>()] = page.dump();
    const auto details = read_json(fixture_dir() / "nvd" / "plc_details.json");
    for (const auto& [id, doc] : details.items()) t->raw_details[id] = doc.dump();
    return t;
}

/// Returns scripted responses in order; a status of -1 throws NetworkFailure.
class ScriptedTransport : public Transport {
public:
    std::deque<HttpResponse> script;
    HttpResponse fallback{200, R"({"totalResults":0,"vulnerabilities":[]})"};
    std::size_t attempts = 0;

    HttpResponse get(const std::string&, const HttpHeaders&) override {
        ++attempts;
        if (script.empty()) return fallback;
        auto r = script.front();
        script.pop_front();
        if (r.status == -1) throw NetworkFailure("connection reset (scripted)");
        return r;
    }
};

/// Config for tests: no real waiting thanks to the fake clock, small backoff.
inline SourceConfig test_config(std::optional<std::string> key = std::nullopt) {
    auto cfg = SourceConfig::with_key(std::move(key));
    cfg.search_endpoint = "http://mock.invalid/search";
    cfg.detail_endpoint = "http://mock.invalid/detail";
    cfg.backoff_base = std::chrono::milliseconds{100};
    return cfg;
}

}  // namespace threatsmith::testkit
