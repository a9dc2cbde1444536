#pragma once

#include "threatsmith/analysis.hpp"
#include "threatsmith/reporting.hpp"
#include "threatsmith/scope_file.hpp"
#include "threatsmith/threat_library.hpp"
#include "threatsmith/vuln_source.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace threatsmith {

enum class JobState { Idle, Running, Done, Failed };

inline std::string_view job_state_name(JobState s) {
    switch (s) {
        case JobState::Idle: return "idle";
        case JobState::Running: return "running";
        case JobState::Done: return "done";
        case JobState::Failed: return "failed";
    }
    return "?";
}

struct UpdateJob {
    JobState state = JobState::Idle;
    std::size_t done = 0;
    std::size_t total = 0;
    std::string reason;
    std::vector<KeywordOutcome> outcomes;
};

/// Single-session local service backing the web UI. Owns the current scope,
/// the published snapshot, the last analysis, and at most one update job.
class Service {
public:
    struct Options {
        std::filesystem::path snapshot_path;
        std::filesystem::path scope_path;
        MitigationCatalog catalog;
        std::function<std::shared_ptr<VulnSource>()> source_factory;
        std::string cors_origin = "*";
        std::function<UtcTimestamp()> now = utc_now;
        std::size_t update_workers = 1;
    };

    explicit Service(Options options) : options_(std::move(options)) {
        snapshot_ = std::make_shared<const LibrarySnapshot>(load_snapshot(options_.snapshot_path));
        if (!options_.scope_path.empty() && std::filesystem::exists(options_.scope_path))
            scope_ = load_scope_file(options_.scope_path);
        else
            scope_ = Scope{"untitled", {}, options_.now()};
    }

    ~Service() { wait_for_job(); }

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    void wait_for_job() {
        std::jthread job;
        {
            std::lock_guard lock(mutex_);
            job = std::move(job_thread_);
        }
        if (job.joinable()) job.join();
    }

    std::shared_ptr<const LibrarySnapshot> snapshot() const {
        std::lock_guard lock(mutex_);
        return snapshot_;
    }

    UpdateJob job_status() const {
        std::lock_guard lock(mutex_);
        return job_;
    }

    void mount(httplib::Server& server) {
        server.set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", options_.cors_origin);
            res.set_header("Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
        });
        server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
            reply(res, 200, {{"status", "ok"}, {"snapshot_stamp", format_timestamp(snapshot()->fetched_at)}});
        });

        server.Get("/components/kinds", [](const httplib::Request&, httplib::Response& res) {
            nlohmann::json kinds = nlohmann::json::array();
            for (auto k : kBuiltinKinds)
                kinds.push_back({{"name", kind_name(k)}, {"default_keywords", default_keywords(k)}});
            reply(res, 200, {{"kinds", std::move(kinds)}});
        });

        server.Get("/scope", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(mutex_);
            reply(res, 200, scope_to_json(scope_));
        });

        server.Put("/scope", [this](const httplib::Request& req, httplib::Response& res) { put_scope(req, res); });
        server.Post("/analyze", [this](const httplib::Request&, httplib::Response& res) { analyze(res); });
        server.Get("/results", [this](const httplib::Request& req, httplib::Response& res) { results(req, res); });
        server.Get(R"(/chart/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            chart(req.matches[1].str(), res);
        });
        server.Post("/library/update", [this](const httplib::Request& req, httplib::Response& res) {
            start_update(req, res);
        });
        server.Get("/library/status", [this](const httplib::Request&, httplib::Response& res) {
            reply(res, 200, status_json());
        });
        server.Post("/library/ack", [this](const httplib::Request&, httplib::Response& res) { acknowledge(res); });
    }

private:
    static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void fail(httplib::Response& res, int status, const std::string& message) {
        reply(res, status, {{"error", message}});
    }

    static nlohmann::json violations_json(const std::vector<ScopeViolation>& violations) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& v : violations) out.push_back(v.message);
        return out;
    }

    void put_scope(const httplib::Request& req, httplib::Response& res) {
        Scope scope;
        try {
            scope = scope_from_json(nlohmann::json::parse(req.body));
        } catch (const nlohmann::json::exception& e) {
            return fail(res, 400, std::string("body is not JSON: ") + e.what());
        } catch (const Error& e) {
            return fail(res, 400, e.what());
        }
        // An empty draft may be stored; analysis rejects it.
        auto violations = validate_scope(scope);
        std::erase_if(violations, [](const auto& v) { return v.code == ScopeViolation::Code::EmptyScope; });
        if (!violations.empty())
            return reply(res, 400, {{"error", "invalid scope"}, {"violations", violations_json(violations)}});

        std::lock_guard lock(mutex_);
        try {
            if (!options_.scope_path.empty()) save_scope_file(scope, options_.scope_path);
        } catch (const Error& e) {
            return fail(res, 500, e.what());
        }
        scope_ = std::move(scope);
        reply(res, 200, scope_to_json(scope_));
    }

    void analyze(httplib::Response& res) {
        Scope scope;
        std::shared_ptr<const LibrarySnapshot> snap;
        {
            std::lock_guard lock(mutex_);
            if (swapping_) return fail(res, 503, "threat library snapshot is being replaced");
            scope = scope_;
            snap = snapshot_;
        }
        if (auto violations = validate_scope(scope); !violations.empty())
            return reply(res, 400, {{"error", "invalid scope"}, {"violations", violations_json(violations)}});

        auto results = analyze_scope(scope, *snap, options_.catalog);
        auto report = report_to_json(results, scope, options_.now());
        {
            std::lock_guard lock(mutex_);
            last_report_ = report;
        }
        reply(res, 200, report);
    }

    void results(const httplib::Request& req, httplib::Response& res) {
        const auto view = req.has_param("view") ? req.get_param_value("view") : std::string("all");
        if (view != "all" && view != "top5") return fail(res, 400, "view must be 'all' or 'top5'");
        std::optional<nlohmann::json> report;
        {
            std::lock_guard lock(mutex_);
            report = last_report_;
        }
        if (!report) return fail(res, 404, "no analysis has been run");
        if (view == "top5") {
            for (auto& c : (*report)["components"]) c["threats"] = c["top5"];
        }
        (*report)["view"] = view;
        reply(res, 200, *report);
    }

    void chart(const std::string& component_id, httplib::Response& res) {
        std::lock_guard lock(mutex_);
        if (!last_report_) return fail(res, 404, "no analysis has been run");
        for (const auto& c : (*last_report_)["components"]) {
            if (c["id"] == component_id) {
                auto body = c["chart"];
                body["status"] = c["status"];
                return reply(res, 200, body);
            }
        }
        fail(res, 404, "unknown component '" + component_id + "'");
    }

    nlohmann::json status_json() const {
        std::lock_guard lock(mutex_);
        nlohmann::json outcomes = nlohmann::json::array();
        for (const auto& o : job_.outcomes) {
            outcomes.push_back({{"keyword", o.keyword},
                                {"ok", o.ok},
                                {"pairs", o.pair_count},
                                {"unmapped", o.unmapped_count},
                                {"error", o.error}});
        }
        return {{"state", job_state_name(job_.state)},
                {"done", job_.done},
                {"total", job_.total},
                {"reason", job_.reason},
                {"outcomes", std::move(outcomes)},
                {"snapshot_stamp", format_timestamp(snapshot_->fetched_at)}};
    }

    void start_update(const httplib::Request& req, httplib::Response& res) {
        std::vector<std::string> keywords;
        try {
            if (!text::trim(req.body).empty()) {
                auto body = nlohmann::json::parse(req.body);
                keywords = body.value("keywords", std::vector<std::string>{});
            }
        } catch (const nlohmann::json::exception& e) {
            return fail(res, 400, std::string("body: ") + e.what());
        }
        if (keywords.empty()) keywords = all_default_keywords();
        if (std::any_of(keywords.begin(), keywords.end(), [](const auto& k) { return text::trim(k).empty(); }))
            return fail(res, 400, "blank keyword");

        std::jthread previous;
        {
            std::lock_guard lock(mutex_);
            if (job_.state != JobState::Idle)
                return fail(res, 409, std::string("an update job is ") + std::string(job_state_name(job_.state)) +
                                          (job_.state == JobState::Running ? "" : "; acknowledge it first"));
            if (!options_.source_factory) return fail(res, 500, "no vulnerability source configured");
            job_ = UpdateJob{JobState::Running, 0, keywords.size(), {}, {}};
            previous = std::move(job_thread_);
            job_thread_ = std::jthread([this, keywords] { run_update(keywords); });
        }
        if (previous.joinable()) previous.join();
        reply(res, 202, {{"state", "running"}, {"total", keywords.size()}});
    }

    void run_update(const std::vector<std::string>& keywords) {
        try {
            auto source = options_.source_factory();
            auto current = snapshot();
            UpdateOptions opts;
            opts.workers = options_.update_workers;
            opts.now = options_.now;
            opts.progress = [this](std::size_t done, std::size_t total) {
                std::lock_guard lock(mutex_);
                job_.done = done;
                job_.total = total;
            };
            auto result = update_library(*current, keywords, *source, opts);
            auto fresh = std::make_shared<const LibrarySnapshot>(std::move(result.snapshot));

            {
                std::lock_guard lock(mutex_);
                swapping_ = true;
            }
            std::optional<std::string> save_error;
            try {
                save_snapshot(*fresh, options_.snapshot_path);
            } catch (const Error& e) {
                save_error = e.what();
            }

            const auto failures = result.failures();
            std::lock_guard lock(mutex_);
            swapping_ = false;
            job_.outcomes = std::move(result.outcomes);
            if (save_error) {
                job_.state = JobState::Failed;
                job_.reason = *save_error;
                return;
            }
            snapshot_ = fresh;
            job_.state = failures ? JobState::Failed : JobState::Done;
            if (failures) job_.reason = std::to_string(failures) + " keyword(s) failed; their previous entries were kept";
        } catch (const std::exception& e) {
            std::lock_guard lock(mutex_);
            job_.state = JobState::Failed;
            job_.reason = e.what();
        }
    }

    void acknowledge(httplib::Response& res) {
        std::lock_guard lock(mutex_);
        if (job_.state != JobState::Done && job_.state != JobState::Failed)
            return fail(res, 409, std::string("nothing to acknowledge; job is ") + std::string(job_state_name(job_.state)));
        job_ = UpdateJob{};
        reply(res, 200, {{"state", "idle"}});
    }

    Options options_;
    mutable std::mutex mutex_;
    Scope scope_;
    std::shared_ptr<const LibrarySnapshot> snapshot_;
    std::optional<nlohmann::json> last_report_;
    UpdateJob job_;
    bool swapping_ = false;
    std::jthread job_thread_;
};

}  // namespace threatsmith
