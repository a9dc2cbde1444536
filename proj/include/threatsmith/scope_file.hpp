#pragma once

#include "threatsmith/domain.hpp"
#include "threatsmith/threat_library.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace threatsmith {

inline nlohmann::json component_to_json(const Component& c) {
    nlohmann::json j{{"id", c.id}, {"kind", kind_label(c.kind)}, {"label", c.label}, {"keywords", c.keywords}};
    if (const auto* custom = std::get_if<CustomKind>(&c.kind))
        j["custom"] = {{"name", custom->name}, {"description", custom->description}};
    return j;
}

inline Component component_from_json(const nlohmann::json& j) {
    try {
        Component c;
        c.id = j.at("id").get<std::string>();
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "Custom") {
            const auto& custom = j.at("custom");
            c.kind = CustomKind{custom.at("name").get<std::string>(), custom.value("description", "")};
        } else {
            c.kind = parse_builtin_kind(kind);
        }
        c.label = j.value("label", kind);
        c.keywords = j.at("keywords").get<std::vector<std::string>>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedScope(std::string("component: ") + e.what());
    } catch (const UnknownKind& e) {
        throw MalformedScope(e.what());
    }
}

inline nlohmann::json scope_to_json(const Scope& scope) {
    nlohmann::json components = nlohmann::json::array();
    for (const auto& c : scope.components) components.push_back(component_to_json(c));
    return {{"name", scope.name}, {"created", format_timestamp(scope.created)}, {"components", std::move(components)}};
}

inline Scope scope_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw MalformedScope("scope is not a JSON object");
    try {
        Scope scope;
        scope.name = j.value("name", "");
        auto created = parse_timestamp(j.value("created", "1970-01-01T00:00:00Z"));
        if (!created) throw MalformedScope("created is not an ISO-8601 UTC timestamp");
        scope.created = *created;
        for (const auto& c : j.value("components", nlohmann::json::array()))
            scope.components.push_back(component_from_json(c));
        return scope;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedScope(std::string("scope: ") + e.what());
    }
}

inline std::string serialize_scope(const Scope& scope) { return scope_to_json(scope).dump(2) + "\n"; }

inline Scope load_scope_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingScopeFile(path.string());
    try {
        return scope_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedScope(std::string("scope file is not valid JSON: ") + e.what());
    }
}

inline void save_scope_file(const Scope& scope, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_scope(scope));
}

// ---------------------------------------------------------------------------
// Editing
// ---------------------------------------------------------------------------

/// Smallest unused "c<n>" token.
inline std::string next_component_id(const Scope& scope) {
    for (std::size_t n = 1;; ++n) {
        auto id = "c" + std::to_string(n);
        if (!scope.find(id)) return id;
    }
}

inline std::vector<std::string> clean_keywords(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    for (const auto& k : raw) {
        std::string kw(text::trim(k));
        if (!kw.empty() && std::find(out.begin(), out.end(), kw) == out.end()) out.push_back(std::move(kw));
    }
    return out;
}

inline const Component& add_builtin_component(Scope& scope, BuiltinKind kind,
                                              std::optional<std::string> label = std::nullopt,
                                              std::vector<std::string> keywords = {}) {
    auto kws = clean_keywords(keywords);
    Component c{next_component_id(scope), kind, label ? *label : std::string(kind_name(kind)),
                kws.empty() ? default_keywords(kind) : std::move(kws)};
    scope.components.push_back(std::move(c));
    return scope.components.back();
}

/// Custom components search by their name unless keywords are given.
inline const Component& add_custom_component(Scope& scope, const std::string& name, const std::string& description,
                                             std::vector<std::string> keywords = {}) {
    const auto key = custom_name_key(name);
    if (key.empty()) throw MalformedScope("custom component needs a non-empty name");
    for (const auto& c : scope.components) {
        if (const auto* custom = std::get_if<CustomKind>(&c.kind); custom && custom_name_key(custom->name) == key)
            throw DuplicateCustomName(std::string(text::trim(name)));
    }
    auto kws = clean_keywords(keywords);
    const std::string trimmed(text::trim(name));
    Component c{next_component_id(scope), CustomKind{trimmed, description}, trimmed,
                kws.empty() ? std::vector<std::string>{trimmed} : std::move(kws)};
    scope.components.push_back(std::move(c));
    return scope.components.back();
}

inline void remove_component(Scope& scope, const std::string& id) {
    auto it = std::find_if(scope.components.begin(), scope.components.end(),
                           [&](const Component& c) { return c.id == id; });
    if (it == scope.components.end()) throw UnknownComponent(id);
    scope.components.erase(it);
}

/// The five-component case-study scope: PLC, RTU, SCADA, Sensor, Actuator.
inline Scope case_study_scope(UtcTimestamp created = {}) {
    Scope scope{"case-study SCADA network", {}, created};
    for (auto k : {BuiltinKind::PLC, BuiltinKind::RTU, BuiltinKind::SCADA, BuiltinKind::Sensor,
                   BuiltinKind::Actuator})
        add_builtin_component(scope, k);
    return scope;
}

}  // namespace threatsmith
