#pragma once

#include "threatsmith/analysis.hpp"
#include "threatsmith/http_transport.hpp"
#include "threatsmith/reporting.hpp"
#include "threatsmith/scope_file.hpp"
#include "threatsmith/service.hpp"
#include "threatsmith/threat_library.hpp"
#include "threatsmith/vuln_source.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace threatsmith::cli {

/// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kValidation = 2,  // invalid scope, malformed or unreadable input files
    kPartial = 3,     // report written, but some component had no library data
    kUpdateFailure = 4,
};

/// Everything the commands touch outside their arguments. Tests substitute
/// the transport and the clock; the defaults talk to the real world.
struct Environment {
    std::function<std::optional<std::string>(const char*)> getenv = [](const char* name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name)) return std::string(v);
        return std::nullopt;
    };
    std::function<std::shared_ptr<Transport>()> transport = [] { return std::make_shared<HttplibTransport>(); };
    std::function<Instant()> clock = [] { return MonoClock::now(); };
    std::function<void(Duration)> sleep = [](Duration d) { std::this_thread::sleep_for(d); };
    std::function<UtcTimestamp()> now = utc_now;
    std::filesystem::path data_dir =
#ifdef THREATSMITH_DATA_DIR
        THREATSMITH_DATA_DIR;
#else
        "data";
#endif
};

namespace detail {

inline void print_violations(std::ostream& err, const std::vector<ScopeViolation>& violations) {
    err << "scope is invalid:\n";
    for (const auto& v : violations) err << "  - " << v.message << "\n";
}

inline void print_scope(std::ostream& out, const Scope& scope) {
    out << "Scope: " << scope.name << " (" << scope.components.size() << " components)\n";
    for (const auto& c : scope.components) {
        out << "  " << c.id << "  " << kind_label(c.kind) << "  \"" << c.label << "\"  keywords:";
        for (std::size_t i = 0; i < c.keywords.size(); ++i) out << (i ? ", " : " ") << c.keywords[i];
        if (const auto* custom = std::get_if<CustomKind>(&c.kind); custom && !custom->description.empty())
            out << "  -- " << custom->description;
        out << "\n";
    }
}

inline void print_summary(std::ostream& out, const ScopeResults& results, const Scope& scope) {
    out << "Threats per component\n";
    for (const auto& row : summary_table(results, scope)) {
        out << "  " << row.label << ": ";
        if (row.threat_count) out << *row.threat_count;
        else out << kMissingDataMarker;
        out << "\n";
    }
}

inline MitigationCatalog load_catalog(const std::string& path, const Environment& env) {
    if (!path.empty()) return MitigationCatalog::load(path);
    const auto fallback = env.data_dir / "cwe_catalog.json";
    if (std::filesystem::exists(fallback)) return MitigationCatalog::load(fallback);
    return {};
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const Environment& env = {}) {
    CLI::App app{"Evidence-based threat modeling for ICS components from CVE-CWE pairs", "threatsmith"};
    app.require_subcommand(1);

    std::function<int()> action;

    // scope ------------------------------------------------------------------
    auto* scope_cmd = app.add_subcommand("scope", "Manage the components under analysis");
    scope_cmd->require_subcommand(1);
    std::string scope_path = "scope.json";

    auto* init = scope_cmd->add_subcommand("init", "Create an empty scope file");
    std::string scope_name = "untitled";
    bool force = false;
    init->add_option("--file,-f", scope_path, "Scope file")->capture_default_str();
    init->add_option("--name", scope_name, "Scope name")->capture_default_str();
    init->add_flag("--force", force, "Overwrite an existing scope file");
    init->callback([&] {
        action = [&]() -> int {
            if (std::filesystem::exists(scope_path) && !force) {
                err << "error: '" << scope_path << "' already exists (use --force to overwrite)\n";
                return kValidation;
            }
            save_scope_file(Scope{scope_name, {}, env.now()}, scope_path);
            out << "created " << scope_path << "\n";
            return kOk;
        };
    });

    auto* add = scope_cmd->add_subcommand("add", "Add a built-in or custom component");
    std::string kind, custom_name, custom_desc, label;
    bool custom = false;
    std::vector<std::string> keywords;
    add->add_option("--file,-f", scope_path, "Scope file")->capture_default_str();
    auto* kind_opt = add->add_option("--kind", kind, "Built-in kind: PLC, SCADA, HMI, Sensor, Actuator, RTU, IED");
    auto* custom_flag = add->add_flag("--custom", custom, "Add a custom component");
    auto* name_opt = add->add_option("--name", custom_name, "Custom component name");
    add->add_option("--desc", custom_desc, "Custom component description");
    add->add_option("--label", label, "Display label (built-in kinds)");
    add->add_option("--keyword", keywords, "Search keyword; repeat to give several (overrides the defaults)");
    kind_opt->excludes(custom_flag);
    name_opt->needs(custom_flag);
    add->callback([&] {
        action = [&]() -> int {
            auto scope = load_scope_file(scope_path);
            if (custom) {
                if (text::trim(custom_name).empty()) {
                    err << "error: --custom needs --name\n";
                    return kUsage;
                }
                const auto& c = add_custom_component(scope, custom_name, custom_desc, keywords);
                out << "added " << c.id << " (custom \"" << c.label << "\")\n";
            } else {
                if (kind.empty()) {
                    err << "error: give --kind or --custom\n";
                    return kUsage;
                }
                const auto& c = add_builtin_component(scope, parse_builtin_kind(kind),
                                                      label.empty() ? std::nullopt : std::optional(label), keywords);
                out << "added " << c.id << " (" << kind_label(c.kind) << ")\n";
            }
            save_scope_file(scope, scope_path);
            return kOk;
        };
    });

    auto* remove = scope_cmd->add_subcommand("remove", "Remove a component by id");
    std::string remove_id;
    remove->add_option("--file,-f", scope_path, "Scope file")->capture_default_str();
    remove->add_option("--id", remove_id, "Component id")->required();
    remove->callback([&] {
        action = [&]() -> int {
            auto scope = load_scope_file(scope_path);
            remove_component(scope, remove_id);
            save_scope_file(scope, scope_path);
            out << "removed " << remove_id << "\n";
            return kOk;
        };
    });

    auto* list = scope_cmd->add_subcommand("list", "List components");
    list->add_option("--file,-f", scope_path, "Scope file")->capture_default_str();
    list->callback([&] {
        action = [&]() -> int {
            detail::print_scope(out, load_scope_file(scope_path));
            return kOk;
        };
    });

    // analyze ----------------------------------------------------------------
    auto* analyze = app.add_subcommand("analyze", "Derive per-component threat lists and write a report");
    std::string snapshot_path = "snapshot.json", report_path = "report.json", format = "json", catalog_path, timestamp;
    analyze->add_option("--scope", scope_path, "Scope file")->capture_default_str();
    analyze->add_option("--snapshot", snapshot_path, "Threat library snapshot")->capture_default_str();
    analyze->add_option("--out,-o", report_path, "Report destination")->capture_default_str();
    analyze->add_option("--format", format, "json or markdown")->capture_default_str();
    analyze->add_option("--catalog", catalog_path, "Mitigation catalog (defaults to the bundled one)");
    analyze->add_option("--generated-at", timestamp, "Report timestamp, YYYY-MM-DDTHH:MM:SSZ (defaults to now)");
    analyze->callback([&] {
        action = [&]() -> int {
            const auto fmt = parse_report_format(format);
            UtcTimestamp generated = env.now();
            if (!timestamp.empty()) {
                auto t = parse_timestamp(timestamp);
                if (!t) {
                    err << "error: --generated-at must look like 2024-06-01T00:00:00Z\n";
                    return kUsage;
                }
                generated = *t;
            }
            auto scope = load_scope_file(scope_path);
            if (auto violations = validate_scope(scope); !violations.empty()) {
                detail::print_violations(err, violations);
                return kValidation;
            }
            auto snapshot = load_snapshot(snapshot_path);
            auto catalog = detail::load_catalog(catalog_path, env);
            auto results = analyze_scope(scope, snapshot, catalog);
            write_file_atomic(report_path, render_report(results, scope, fmt, generated));
            detail::print_summary(out, results, scope);
            out << "report written to " << report_path << "\n";
            if (has_missing_data(results)) {
                err << "warning: some components have no data in the snapshot; run 'update' for their keywords\n";
                return kPartial;
            }
            return kOk;
        };
    });

    // results ----------------------------------------------------------------
    auto* results_cmd = app.add_subcommand("results", "Show threats from a JSON report");
    bool show_all = false, show_top5 = false;
    results_cmd->add_option("--report,-r", report_path, "JSON report")->capture_default_str();
    auto* all_flag = results_cmd->add_flag("--all", show_all, "List every threat");
    auto* top_flag = results_cmd->add_flag("--top5", show_top5, "List the five most frequent threats (default)");
    all_flag->excludes(top_flag);
    results_cmd->callback([&] {
        action = [&]() -> int {
            auto report = parse_report(read_file(report_path));
            out << render_results_text(report, show_all ? ResultsView::All : ResultsView::Top5);
            return kOk;
        };
    });

    // update -----------------------------------------------------------------
    auto* update = app.add_subcommand("update", "Refresh the threat library from the vulnerability sources");
    std::vector<std::string> update_keywords;
    std::string search_endpoint = kDefaultSearchEndpoint, detail_endpoint = kDefaultDetailEndpoint;
    std::size_t workers = 1;
    update->add_option("--snapshot", snapshot_path, "Snapshot file to refresh (created if absent)")->capture_default_str();
    update->add_option("--keywords", update_keywords, "Keywords to refresh (default: every built-in kind's keywords)");
    update->add_option("--search-endpoint", search_endpoint, "Keyword search endpoint")->capture_default_str();
    update->add_option("--detail-endpoint", detail_endpoint, "CVE detail endpoint")->capture_default_str();
    update->add_option("--workers", workers, "Keywords fetched concurrently")->capture_default_str()->check(CLI::PositiveNumber);
    update->callback([&] {
        action = [&]() -> int {
            LibrarySnapshot current;
            if (std::filesystem::exists(snapshot_path)) current = load_snapshot(snapshot_path);
            if (update_keywords.empty()) update_keywords = all_default_keywords();

            auto config = SourceConfig::with_key(env.getenv(kApiKeyEnvVar));
            config.search_endpoint = search_endpoint;
            config.detail_endpoint = detail_endpoint;
            if (!config.api_key) {
                err << "warning: " << kApiKeyEnvVar << " is not set; using the keyless limit of "
                    << config.policy.max_requests << " requests per 30 s, so the update will be slow\n";
            }
            VulnSource source(config, env.transport(), nullptr, env.clock, env.sleep);
            UpdateOptions opts;
            opts.workers = workers;
            opts.now = env.now;
            opts.progress = [&](std::size_t done, std::size_t total) {
                err << "  [" << done << "/" << total << "]\n";
            };
            auto result = update_library(current, update_keywords, source, opts);
            if (current.source_note.empty())
                result.snapshot.source_note = "Fetched from " + search_endpoint + " and " + detail_endpoint;
            save_snapshot(result.snapshot, snapshot_path);

            for (const auto& o : result.outcomes) {
                if (o.ok)
                    out << "  ok      " << o.keyword << ": " << o.total_cves << " CVEs, " << o.pair_count
                        << " CVE-CWE pairs, " << o.unmapped_count << " unmapped\n";
                else
                    out << "  FAILED  " << o.keyword << ": " << o.error << " (previous entry kept)\n";
            }
            out << "snapshot written to " << snapshot_path << " (" << result.failures() << " failure(s))\n";
            return result.failures() ? kUpdateFailure : kOk;
        };
    });

    // serve ------------------------------------------------------------------
    auto* serve = app.add_subcommand("serve", "Run the local HTTP API for the web UI");
    std::string host = "127.0.0.1", cors_origin = "*";
    int port = 8765;
    serve->add_option("--snapshot", snapshot_path, "Threat library snapshot")->capture_default_str();
    serve->add_option("--scope", scope_path, "Scope file (created on first save)")->capture_default_str();
    serve->add_option("--catalog", catalog_path, "Mitigation catalog (defaults to the bundled one)");
    serve->add_option("--host", host, "Bind address")->capture_default_str();
    serve->add_option("--port", port, "Port")->capture_default_str();
    serve->add_option("--cors-origin", cors_origin, "Allowed browser origin")->capture_default_str();
    serve->callback([&] {
        action = [&]() -> int {
            Service::Options opts;
            opts.snapshot_path = snapshot_path;
            opts.scope_path = scope_path;
            opts.catalog = detail::load_catalog(catalog_path, env);
            opts.cors_origin = cors_origin;
            opts.source_factory = [&env] {
                return std::make_shared<VulnSource>(SourceConfig::with_key(env.getenv(kApiKeyEnvVar)), env.transport(),
                                                    nullptr, env.clock, env.sleep);
            };
            Service service(std::move(opts));
            httplib::Server server;
            service.mount(server);
            out << "listening on http://" << host << ":" << port << "\n" << std::flush;
            if (!server.listen(host, port)) {
                err << "error: cannot listen on " << host << ":" << port << "\n";
                return kUsage;
            }
            return kOk;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        return action ? action() : kUsage;
    } catch (const UnknownKind& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const UnsupportedFormat& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const InvalidScope& e) {
        detail::print_violations(err, e.violations());
        return kValidation;
    } catch (const NetworkFailure& e) {
        err << "error: " << e.what() << "\n";
        return kUpdateFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    }
}

}  // namespace threatsmith::cli
