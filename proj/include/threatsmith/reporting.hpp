#pragma once

#include "threatsmith/analysis.hpp"
#include "threatsmith/domain.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace threatsmith {

// ---------------------------------------------------------------------------
// Chart data
// ---------------------------------------------------------------------------

struct ChartSlice {
    std::string label;
    std::size_t count = 0;
    int percent = 0;

    friend bool operator==(const ChartSlice&, const ChartSlice&) = default;
};

struct ChartData {
    std::string component_label;
    std::vector<ChartSlice> slices;  // at most five, in ranking order
    std::size_t other_count = 0;     // occurrences of every entry past the top five
    int other_percent = 0;

    friend bool operator==(const ChartData&, const ChartData&) = default;
};

inline constexpr std::size_t kChartSlices = 5;

inline ChartData chart_data(const ThreatList& list, const std::string& component_label) {
    ChartData chart{component_label, {}, 0, 0};
    if (list.entries.empty()) return chart;
    for (const auto& e : top_k(list, kChartSlices))
        chart.slices.push_back({e.cwe.str(), e.occurrence_count, occurrence_percentage(e, list.total_cve_count)});
    for (std::size_t i = kChartSlices; i < list.entries.size(); ++i) chart.other_count += list.entries[i].occurrence_count;
    chart.other_percent = occurrence_percentage(chart.other_count, list.total_cve_count);
    return chart;
}

inline nlohmann::json chart_to_json(const ChartData& chart) {
    nlohmann::json slices = nlohmann::json::array();
    for (const auto& s : chart.slices) slices.push_back({{"label", s.label}, {"count", s.count}, {"percent", s.percent}});
    return {{"component_label", chart.component_label},
            {"slices", std::move(slices)},
            {"other_count", chart.other_count},
            {"other_percent", chart.other_percent}};
}

// ---------------------------------------------------------------------------
// Summary table
// ---------------------------------------------------------------------------

struct SummaryRow {
    std::string component_id;
    std::string label;
    std::optional<std::size_t> threat_count;  // empty when data was missing

    friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

inline constexpr const char* kMissingDataMarker = "missing data";

/// One row per scope component, in scope order.
inline std::vector<SummaryRow> summary_table(const ScopeResults& results, const Scope& scope) {
    std::vector<SummaryRow> rows;
    for (const auto& c : scope.components) {
        auto it = results.find(c.id);
        if (it == results.end()) continue;
        SummaryRow row{c.id, c.label, std::nullopt};
        if (const auto* list = std::get_if<ThreatList>(&it->second)) row.threat_count = list->entries.size();
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Report document
// ---------------------------------------------------------------------------

enum class ReportFormat { Json, Markdown };

inline ReportFormat parse_report_format(std::string_view name) {
    if (text::iequals(name, "json")) return ReportFormat::Json;
    if (text::iequals(name, "markdown") || text::iequals(name, "md")) return ReportFormat::Markdown;
    throw UnsupportedFormat(std::string(name));
}

struct ReportComponent {
    std::string id;
    std::string label;
    std::string kind;
    ComponentResult result;

    friend bool operator==(const ReportComponent&, const ReportComponent&) = default;
};

/// A rendered report read back from its JSON form.
struct Report {
    std::string scope_name;
    UtcTimestamp generated_at{};
    UtcTimestamp snapshot_stamp{};
    std::vector<ReportComponent> components;

    ScopeResults results() const {
        ScopeResults out;
        for (const auto& c : components) out.emplace(c.id, c.result);
        return out;
    }
};

namespace detail {

inline UtcTimestamp results_stamp(const ScopeResults& results) {
    for (const auto& [_, r] : results) {
        if (const auto* list = std::get_if<ThreatList>(&r)) return list->snapshot_stamp;
    }
    return {};
}

inline nlohmann::json threat_to_json(const ThreatEntry& e, std::size_t total) {
    std::vector<std::string> cves;
    for (const auto& id : e.supporting_cves) cves.push_back(id.str());
    return {{"cwe", e.cwe.str()},
            {"title", e.title},
            {"count", e.occurrence_count},
            {"percent", occurrence_percentage(e, total)},
            {"cves", std::move(cves)},
            {"mitigations", e.mitigation_refs}};
}

inline ThreatEntry threat_from_json(const nlohmann::json& j) {
    ThreatEntry e;
    e.cwe = parse_mapped_cwe_id(j.at("cwe").get<std::string>());
    e.title = j.at("title").get<std::string>();
    e.occurrence_count = j.at("count").get<std::size_t>();
    for (const auto& id : j.at("cves")) e.supporting_cves.insert(parse_cve_id(id.get<std::string>()));
    e.mitigation_refs = j.at("mitigations").get<std::vector<std::string>>();
    if (e.occurrence_count != e.supporting_cves.size())
        throw MalformedReport(e.cwe.str() + ": count does not match its supporting CVEs");
    return e;
}

inline std::string md_cell(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += "\\|";
        else if (c == '\n') out += ' ';
        else out += c;
    }
    return out;
}

}  // namespace detail

inline nlohmann::json report_to_json(const ScopeResults& results, const Scope& scope, UtcTimestamp generated_at) {
    nlohmann::json components = nlohmann::json::array();
    for (const auto& c : scope.components) {
        auto it = results.find(c.id);
        if (it == results.end()) continue;
        nlohmann::json j{{"id", c.id}, {"label", c.label}, {"kind", kind_label(c.kind)}};
        if (const auto* missing = std::get_if<MissingData>(&it->second)) {
            j["status"] = "missing_data";
            j["missing_keywords"] = missing->missing_keywords;
            j["total_cves"] = 0;
            j["unmapped_cves"] = 0;
            j["threats"] = nlohmann::json::array();
            j["top5"] = nlohmann::json::array();
            j["chart"] = chart_to_json(ChartData{c.label, {}, 0, 0});
        } else {
            const auto& list = std::get<ThreatList>(it->second);
            nlohmann::json threats = nlohmann::json::array();
            for (const auto& e : list.entries) threats.push_back(detail::threat_to_json(e, list.total_cve_count));
            nlohmann::json top5 = nlohmann::json::array();
            if (!list.entries.empty()) {
                for (const auto& e : top_k(list, kChartSlices))
                    top5.push_back(detail::threat_to_json(e, list.total_cve_count));
            }
            j["status"] = "ok";
            j["missing_keywords"] = nlohmann::json::array();
            j["total_cves"] = list.total_cve_count;
            j["unmapped_cves"] = list.unmapped_cve_count;
            j["threats"] = std::move(threats);
            j["top5"] = std::move(top5);
            j["chart"] = chart_to_json(chart_data(list, c.label));
        }
        components.push_back(std::move(j));
    }
    return {{"scope", scope.name},
            {"generated_at", format_timestamp(generated_at)},
            {"snapshot_stamp", format_timestamp(detail::results_stamp(results))},
            {"components", std::move(components)}};
}

inline Report parse_report(const nlohmann::json& doc) {
    try {
        Report report;
        report.scope_name = doc.at("scope").get<std::string>();
        auto generated = parse_timestamp(doc.at("generated_at").get<std::string>());
        auto stamp = parse_timestamp(doc.at("snapshot_stamp").get<std::string>());
        if (!generated || !stamp) throw MalformedReport("report timestamps are not ISO-8601 UTC");
        report.generated_at = *generated;
        report.snapshot_stamp = *stamp;
        for (const auto& c : doc.at("components")) {
            ReportComponent rc{c.at("id").get<std::string>(), c.at("label").get<std::string>(),
                               c.at("kind").get<std::string>(), MissingData{}};
            if (c.at("status").get<std::string>() == "missing_data") {
                rc.result = MissingData{c.at("missing_keywords").get<std::vector<std::string>>()};
            } else {
                ThreatList list;
                list.component_id = rc.id;
                list.total_cve_count = c.at("total_cves").get<std::size_t>();
                list.unmapped_cve_count = c.at("unmapped_cves").get<std::size_t>();
                list.snapshot_stamp = report.snapshot_stamp;
                for (const auto& t : c.at("threats")) list.entries.push_back(detail::threat_from_json(t));
                rc.result = std::move(list);
            }
            report.components.push_back(std::move(rc));
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedReport(std::string("report structure: ") + e.what());
    } catch (const MalformedIdentifier& e) {
        throw MalformedReport(e.what());
    }
}

inline Report parse_report(const std::string& text) {
    try {
        return parse_report(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedReport(std::string("report is not valid JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Markdown
// ---------------------------------------------------------------------------

namespace detail {

inline void md_threat_rows(std::ostringstream& out, const std::vector<ThreatEntry>& entries, std::size_t total,
                           bool with_cves) {
    out << (with_cves ? "| # | CWE | Title | Count | Percent | Supporting CVEs |\n|---|---|---|---|---|---|\n"
                      : "| # | CWE | Title | Count | Percent |\n|---|---|---|---|---|\n");
    std::size_t rank = 0;
    for (const auto& e : entries) {
        out << "| " << ++rank << " | " << e.cwe.str() << " | " << md_cell(e.title) << " | " << e.occurrence_count
            << " | " << occurrence_percentage(e, total) << "% |";
        if (with_cves) out << " " << e.supporting_cves.size() << " |";
        out << "\n";
    }
}

}  // namespace detail

inline std::string render_markdown(const ScopeResults& results, const Scope& scope, UtcTimestamp generated_at) {
    std::ostringstream out;
    out << "# Threat model: " << scope.name << "\n\n"
        << "Generated " << format_timestamp(generated_at) << " from threat library snapshot "
        << format_timestamp(detail::results_stamp(results)) << ".\n\n"
        << "## Threats per component\n\n| Component | Threats |\n|---|---|\n";
    for (const auto& row : summary_table(results, scope)) {
        out << "| " << detail::md_cell(row.label) << " | ";
        if (row.threat_count) out << *row.threat_count;
        else out << kMissingDataMarker;
        out << " |\n";
    }

    for (const auto& c : scope.components) {
        auto it = results.find(c.id);
        if (it == results.end()) continue;
        out << "\n## " << detail::md_cell(c.label) << " (" << kind_label(c.kind) << ", id " << c.id << ")\n\n";
        if (const auto* missing = std::get_if<MissingData>(&it->second)) {
            out << "No data in the threat library for keyword(s):";
            for (const auto& k : missing->missing_keywords) out << " `" << k << "`";
            out << ". Update the library and re-run the analysis.\n";
            continue;
        }
        const auto& list = std::get<ThreatList>(it->second);
        out << list.entries.size() << " threats identified from " << list.total_cve_count << " CVEs ("
            << list.unmapped_cve_count << " without a mapped weakness).\n";
        if (list.entries.empty()) continue;

        out << "\n### Top 5 threats\n\n";
        detail::md_threat_rows(out, top_k(list, kChartSlices), list.total_cve_count, false);
        out << "\n### All threats\n\n";
        detail::md_threat_rows(out, list.entries, list.total_cve_count, true);
        out << "\n### Mitigations\n\n";
        for (const auto& e : list.entries) {
            out << "- **" << e.cwe.str() << "** " << detail::md_cell(e.title) << "\n";
            if (e.mitigation_refs.empty()) out << "  - No catalogued mitigation.\n";
            for (const auto& m : e.mitigation_refs) out << "  - " << m << "\n";
        }
    }
    return out.str();
}

/// JSON output is canonical: sorted object keys, fixed array order.
inline std::string render_report(const ScopeResults& results, const Scope& scope, ReportFormat format,
                                 UtcTimestamp generated_at) {
    if (format == ReportFormat::Json) return report_to_json(results, scope, generated_at).dump(2) + "\n";
    return render_markdown(results, scope, generated_at);
}

inline std::string render_report(const ScopeResults& results, const Scope& scope, std::string_view format,
                                 UtcTimestamp generated_at) {
    return render_report(results, scope, parse_report_format(format), generated_at);
}

// ---------------------------------------------------------------------------
// Plain-text result listing
// ---------------------------------------------------------------------------

enum class ResultsView { All, Top5 };

inline std::string render_results_text(const Report& report, ResultsView view) {
    std::ostringstream out;
    out << "Scope: " << report.scope_name << "\n";
    for (const auto& c : report.components) {
        out << "\n" << c.label << " [" << c.kind << "]";
        if (const auto* missing = std::get_if<MissingData>(&c.result)) {
            out << ": " << kMissingDataMarker << " (";
            for (std::size_t i = 0; i < missing->missing_keywords.size(); ++i)
                out << (i ? ", " : "") << missing->missing_keywords[i];
            out << ")\n";
            continue;
        }
        const auto& list = std::get<ThreatList>(c.result);
        out << ": " << list.entries.size() << " threats from " << list.total_cve_count << " CVEs\n";
        const auto n = view == ResultsView::Top5 ? std::min(kChartSlices, list.entries.size()) : list.entries.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto& e = list.entries[i];
            char line[64];
            std::snprintf(line, sizeof line, "%4zu. %-9s %5zu %4d%%  ", i + 1, e.cwe.str().c_str(), e.occurrence_count,
                          occurrence_percentage(e, list.total_cve_count));
            out << line << e.title << "\n";
        }
    }
    return out.str();
}

}  // namespace threatsmith
