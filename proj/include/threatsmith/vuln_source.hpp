#pragma once

#include "threatsmith/domain.hpp"
#include "threatsmith/rate_limiter.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace threatsmith {

inline constexpr const char* kApiKeyEnvVar = "THREATSMITH_API_KEY";
inline constexpr const char* kDefaultSearchEndpoint = "https://services.nvd.nist.gov/rest/json/cves/2.0";
inline constexpr const char* kDefaultDetailEndpoint = "https://services.nvd.nist.gov/rest/json/cves/2.0";

using HttpHeaders = std::multimap<std::string, std::string>;

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// One HTTP GET. Implementations throw NetworkFailure when no response arrives.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse get(const std::string& url, const HttpHeaders& headers) = 0;
};

struct SourceConfig {
    std::string search_endpoint = kDefaultSearchEndpoint;
    std::string detail_endpoint = kDefaultDetailEndpoint;
    std::optional<std::string> api_key;
    RateLimitPolicy policy = RateLimitPolicy::keyless();
    std::size_t retry_max = 4;  // total attempts per request
    Duration backoff_base = std::chrono::seconds{2};
    Duration backoff_cap = std::chrono::seconds{60};
    std::size_t page_size = 2000;
    std::size_t detail_workers = 1;
    std::uint64_t jitter_seed = 0x5eed;

    /// Keyed preset iff a key is present.
    static SourceConfig with_key(std::optional<std::string> key) {
        SourceConfig cfg;
        if (key && text::trim(*key).empty()) key.reset();
        cfg.policy = key ? RateLimitPolicy::keyed() : RateLimitPolicy::keyless();
        cfg.api_key = std::move(key);
        return cfg;
    }
};

inline std::string url_encode(std::string_view s) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return out;
}

inline std::string with_query(const std::string& endpoint, const std::string& query) {
    return endpoint + (endpoint.find('?') == std::string::npos ? '?' : '&') + query;
}

// ---------------------------------------------------------------------------
// Response parsing (NVD CVE API 2.0 document shape)
// ---------------------------------------------------------------------------

struct SearchPage {
    std::vector<CveId> ids;
    std::size_t start_index = 0;
    std::size_t total_results = 0;
};

inline nlohmann::json parse_body(const std::string& body, const std::string& context) {
    try {
        return nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw SourceRejection(200, context + ": unparsable response body: " + e.what());
    }
}

inline SearchPage parse_search_page(const std::string& body) {
    auto doc = parse_body(body, "search");
    SearchPage page;
    try {
        page.start_index = doc.value("startIndex", std::size_t{0});
        page.total_results = doc.value("totalResults", std::size_t{0});
        for (const auto& v : doc.value("vulnerabilities", nlohmann::json::array()))
            page.ids.push_back(parse_cve_id(v.at("cve").at("id").get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
        throw SourceRejection(200, std::string("search: unexpected document shape: ") + e.what());
    } catch (const MalformedIdentifier& e) {
        throw SourceRejection(200, std::string("search: ") + e.what());
    }
    return page;
}

/// Extracts the record for `id` from a detail response. NotFound when the
/// document holds no such vulnerability.
inline CveRecord parse_cve_detail(const std::string& body, const CveId& id) {
    auto doc = parse_body(body, id.str());
    try {
        for (const auto& v : doc.value("vulnerabilities", nlohmann::json::array())) {
            const auto& cve = v.at("cve");
            if (parse_cve_id(cve.at("id").get<std::string>()) != id) continue;

            CveRecord rec;
            rec.id = id;
            for (const auto& d : cve.value("descriptions", nlohmann::json::array())) {
                if (d.value("lang", "") == "en") {
                    rec.description = d.value("value", "");
                    break;
                }
            }
            for (const auto& w : cve.value("weaknesses", nlohmann::json::array())) {
                for (const auto& d : w.value("description", nlohmann::json::array()))
                    rec.weakness_ids.push_back(parse_cwe_id(d.at("value").get<std::string>()));
            }
            if (cve.contains("published")) rec.published = parse_date(cve["published"].get<std::string>());

            // Prefer the newest CVSS version that carries a base score.
            const auto metrics = cve.value("metrics", nlohmann::json::object());
            for (const char* key : {"cvssMetricV40", "cvssMetricV31", "cvssMetricV30", "cvssMetricV2"}) {
                auto it = metrics.find(key);
                if (it == metrics.end() || !it->is_array() || it->empty()) continue;
                const auto& data = (*it)[0].value("cvssData", nlohmann::json::object());
                if (data.contains("baseScore")) {
                    rec.severity = data["baseScore"].get<double>();
                    break;
                }
            }
            rec.normalize();
            return rec;
        }
    } catch (const nlohmann::json::exception& e) {
        throw SourceRejection(200, id.str() + ": unexpected document shape: " + e.what());
    } catch (const MalformedIdentifier& e) {
        throw SourceRejection(200, id.str() + ": " + e.what());
    }
    throw NotFound(id.str() + " not known to the detail source");
}

// ---------------------------------------------------------------------------
// Pair expansion
// ---------------------------------------------------------------------------

/// Pairs harvested for one keyword. `processed` lists every CVE whose detail
/// has been folded in, so an interrupted harvest can resume.
struct PairHarvest {
    std::vector<CveCwePair> pairs;
    std::size_t unmapped_count = 0;
    std::set<CveId> processed;

    /// A CVE with k distinct mapped weaknesses contributes k pairs; one with
    /// none (sentinels only, or no weakness section) counts as unmapped.
    void add(const CveRecord& rec) {
        if (!processed.insert(rec.id).second) return;
        auto mapped = rec.mapped_weaknesses();
        if (mapped.empty()) {
            ++unmapped_count;
            return;
        }
        std::sort(mapped.begin(), mapped.end());
        mapped.erase(std::unique(mapped.begin(), mapped.end()), mapped.end());
        for (const auto& cwe : mapped) pairs.push_back({rec.id, cwe});
    }

    void canonicalize() { std::sort(pairs.begin(), pairs.end()); }
};

/// A keyword harvest stopped by an error; `partial` holds what was gathered.
class PartialFetch : public Error {
public:
    PartialFetch(std::string keyword, PairHarvest partial, const std::string& cause, bool network)
        : Error("fetch for '" + keyword + "' interrupted: " + cause),
          keyword_(std::move(keyword)),
          partial_(std::move(partial)),
          network_(network) {}

    const std::string& keyword() const noexcept { return keyword_; }
    const PairHarvest& partial() const noexcept { return partial_; }
    bool network() const noexcept { return network_; }

private:
    std::string keyword_;
    PairHarvest partial_;
    bool network_;
};

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

/// Keyword search plus per-CVE detail lookup, every request holding a permit
/// from a shared limiter.
class VulnSource {
public:
    using Clock = std::function<Instant()>;
    using Sleeper = std::function<void(Duration)>;

    VulnSource(SourceConfig config, std::shared_ptr<Transport> transport,
               std::shared_ptr<RateLimiter> limiter = nullptr, Clock clock = nullptr,
               Sleeper sleep = nullptr)
        : config_(std::move(config)),
          transport_(std::move(transport)),
          limiter_(limiter ? std::move(limiter) : std::make_shared<RateLimiter>(config_.policy)),
          clock_(clock ? std::move(clock) : Clock([] { return MonoClock::now(); })),
          sleep_(sleep ? std::move(sleep) : Sleeper([](Duration d) { std::this_thread::sleep_for(d); })),
          rng_(config_.jitter_seed) {
        if (!transport_) throw Error("VulnSource needs a transport");
        if (config_.retry_max == 0) throw Error("retry_max must be at least 1");
        if (config_.page_size == 0) throw Error("page_size must be positive");
    }

    const SourceConfig& config() const noexcept { return config_; }
    RateLimiter& limiter() noexcept { return *limiter_; }

    /// Complete, de-duplicated result set ordered by (year, sequence).
    std::vector<CveId> search_cves(std::string_view keyword) {
        auto kw = std::string(text::trim(keyword));
        if (kw.empty()) throw EmptyKeyword();

        std::set<CveId> ids;
        std::size_t start = 0;
        for (;;) {
            const auto url = with_query(config_.search_endpoint,
                                        "keywordSearch=" + url_encode(kw) +
                                            "&startIndex=" + std::to_string(start) +
                                            "&resultsPerPage=" + std::to_string(config_.page_size));
            auto resp = request(url, "search '" + kw + "'");
            if (resp.status == 404) throw SourceRejection(404, "search endpoint not found");
            auto page = parse_search_page(resp.body);
            ids.insert(page.ids.begin(), page.ids.end());
            start += page.ids.size();
            if (page.ids.empty() || start >= page.total_results) break;
        }
        return {ids.begin(), ids.end()};
    }

    CveRecord fetch_cve_detail(const CveId& id) {
        auto resp = request(with_query(config_.detail_endpoint, "cveId=" + id.str()), id.str());
        if (resp.status == 404) throw NotFound(id.str() + " not known to the detail source");
        return parse_cve_detail(resp.body, id);
    }

    /// search_cves followed by one detail lookup per CVE not already in
    /// `resume.processed`. Throws PartialFetch carrying progress on failure.
    PairHarvest fetch_pairs_for_keyword(std::string_view keyword, PairHarvest resume = {}) {
        const std::string kw(text::trim(keyword));
        std::vector<CveId> ids;
        try {
            ids = search_cves(kw);
        } catch (const EmptyKeyword&) {
            throw;
        } catch (const NetworkFailure& e) {
            throw PartialFetch(kw, std::move(resume), e.what(), true);
        } catch (const Error& e) {
            throw PartialFetch(kw, std::move(resume), e.what(), false);
        }

        std::vector<CveId> todo;
        for (const auto& id : ids) {
            if (!resume.processed.count(id)) todo.push_back(id);
        }

        std::vector<std::optional<CveRecord>> records(todo.size());
        std::atomic<std::size_t> next{0};
        std::atomic<bool> stop{false};
        std::mutex error_mutex;
        std::optional<std::pair<std::string, bool>> failure;

        auto worker = [&] {
            for (;;) {
                if (stop.load()) return;
                const auto i = next.fetch_add(1);
                if (i >= todo.size()) return;
                try {
                    records[i] = fetch_cve_detail(todo[i]);
                } catch (const Error& e) {
                    std::lock_guard lock(error_mutex);
                    if (!failure)
                        failure.emplace(e.what(), dynamic_cast<const NetworkFailure*>(&e) != nullptr);
                    stop = true;
                    return;
                }
            }
        };

        const auto workers = std::max<std::size_t>(1, std::min(config_.detail_workers, todo.size()));
        if (workers == 1) {
            worker();
        } else {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        }

        PairHarvest harvest = std::move(resume);
        for (const auto& rec : records) {
            if (rec) harvest.add(*rec);
        }
        harvest.canonicalize();
        if (failure) throw PartialFetch(kw, std::move(harvest), failure->first, failure->second);
        return harvest;
    }

private:
    static bool transient_status(int status) {
        return status == 403 || status == 429 || status == 500 || status == 502 || status == 503 ||
               status == 504;
    }

    /// GET with permit, retry on transient failures, and exponential backoff
    /// with jitter. Returns 200 and 404 responses; anything else non-transient
    /// is a SourceRejection.
    HttpResponse request(const std::string& url, const std::string& what) {
        HttpHeaders headers;
        if (config_.api_key) headers.emplace("apiKey", *config_.api_key);

        std::string last_error;
        for (std::size_t attempt = 0; attempt < config_.retry_max; ++attempt) {
            if (attempt > 0) sleep_(backoff(attempt - 1));
            limiter_->acquire(clock_, sleep_);
            try {
                auto resp = transport_->get(url, headers);
                if (resp.status == 200 || resp.status == 404) return resp;
                if (!transient_status(resp.status))
                    throw SourceRejection(resp.status, what + ": status " + std::to_string(resp.status));
                last_error = "status " + std::to_string(resp.status);
            } catch (const NetworkFailure& e) {
                last_error = e.what();
            }
        }
        throw NetworkFailure(what + ": gave up after " + std::to_string(config_.retry_max) +
                             " attempts (" + last_error + ")");
    }

    Duration backoff(std::size_t retry) {
        const double base = static_cast<double>(config_.backoff_base.count());
        const double cap = static_cast<double>(config_.backoff_cap.count());
        const double raw = std::min(cap, base * std::pow(2.0, static_cast<double>(retry)));
        double jitter;
        {
            std::lock_guard lock(rng_mutex_);
            jitter = std::uniform_real_distribution<double>(0.5, 1.0)(rng_);
        }
        return Duration{static_cast<Duration::rep>(raw * jitter)};
    }

    SourceConfig config_;
    std::shared_ptr<Transport> transport_;
    std::shared_ptr<RateLimiter> limiter_;
    Clock clock_;
    Sleeper sleep_;
    std::mutex rng_mutex_;
    std::mt19937_64 rng_;
};

}  // namespace threatsmith
