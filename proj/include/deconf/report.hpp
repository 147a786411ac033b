#pragma once

/***
 * Canonical report documents.
 *
 * Reports are JSON with sorted keys and fixed number formatting: every
 * quantity carries a full-precision "value" (17 significant digits) plus a
 * rounded "display" companion, both as strings so the byte stream is
 * identical on every run. Undefined quantities serialize as an explicit
 * reason, infinities as an explicit tag; NaN never appears.
 */

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "deconf/effects.hpp"
#include "deconf/errors.hpp"
#include "deconf/projection.hpp"
#include "deconf/simulate.hpp"
#include "deconf/table.hpp"

namespace deconf {

namespace detail {

inline std::string format_full(double v) {
    char b[48];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

inline std::string format_display(double v) {
    char b[48];
    std::snprintf(b, sizeof b, "%.6g", v);
    return b;
}

}  // namespace detail

inline nlohmann::json quantity(double v) {
    if (std::isnan(v)) return nlohmann::json{{"undefined", "not a number"}};
    if (std::isinf(v)) return nlohmann::json{{"infinite", v > 0.0}};
    return nlohmann::json{{"value", detail::format_full(v)},
                          {"display", detail::format_display(v)}};
}

inline nlohmann::json quantity(const std::optional<double>& v, std::string_view reason) {
    if (!v) return nlohmann::json{{"undefined", std::string(reason)}};
    return quantity(*v);
}

inline nlohmann::json dataset_digest(const JointTable& t, std::string_view source) {
    const Schema& s = t.schema();
    nlohmann::json vars = nlohmann::json::array();
    for (const auto& v : s.variables())
        vars.push_back({{"name", v.name},
                        {"role", std::string(role_name(v.role))},
                        {"levels", v.levels}});
    nlohmann::json sup = nlohmann::json::object();
    const Support obs = support(t);
    for (std::size_t a = 0; a < s.variable_count(); ++a)
        sup[s.variable(a).name] = obs.observed[a];
    return nlohmann::json{{"source", std::string(source)},
                          {"n", quantity(t.total())},
                          {"cells", t.size()},
                          {"variables", vars},
                          {"support", sup}};
}

// Projection block with the base distribution and fit side by side per cell.
inline nlohmann::json projection_json(const ProjectionResult& result, const JointTable& f,
                                      std::string_view kind) {
    nlohmann::json constraints = nlohmann::json::array();
    for (std::size_t k = 0; k < result.constraint_names.size(); ++k)
        constraints.push_back({{"name", result.constraint_names[k]},
                               {"residual", quantity(result.residuals[k])}});
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t c = 0; c < result.q.size(); ++c)
        cells.push_back({{"levels", result.q.schema().cell_labels(c)},
                         {"f", quantity(f.weight(c))},
                         {"q", quantity(result.q.weight(c))}});
    return nlohmann::json{{"kind", std::string(kind)},
                          {"iterations", result.iterations},
                          {"converged", result.converged},
                          {"divergence_nats", quantity(result.divergence)},
                          {"constraints", constraints},
                          {"cells", cells}};
}

namespace detail {

inline nlohmann::json group_values_json(const std::vector<GroupValue>& values,
                                        std::string_view reason) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& v : values)
        out.push_back({{"group", v.group}, {"value", quantity(v.value, reason)}});
    return out;
}

inline nlohmann::json stratum_values_json(const std::vector<StratumValue>& values,
                                          std::string_view reason) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& v : values)
        out.push_back({{"group", v.group},
                       {"stratum", v.stratum},
                       {"value", quantity(v.value, reason)}});
    return out;
}

}  // namespace detail

inline nlohmann::json effects_json(const EffectReport& rep) {
    nlohmann::json p_values = nlohmann::json::object();
    for (const auto& [name, p] : rep.p_values) p_values[name] = quantity(p);
    return nlohmann::json{
        {"event", rep.event_level},
        {"reference", rep.reference_group},
        {"odds", detail::group_values_json(rep.odds_by_group,
                                           "zero conditioning mass or probability 1")},
        {"intervention_or",
         detail::group_values_json(rep.intervention_or_by_group, "odds undefined in group")},
        {"risk_ratio",
         detail::group_values_json(rep.risk_ratio_by_group,
                                   "zero reference probability or empty group")},
        {"arr", detail::group_values_json(rep.arr_by_group, "empty group")},
        {"mantel_haenszel_or",
         detail::group_values_json(rep.mh_or_by_group, "no stratum with positive b*c")},
        {"stratified_or",
         detail::stratum_values_json(rep.stratified_or, "odds undefined in stratum")},
        {"stratified_arr",
         detail::stratum_values_json(rep.stratified_arr, "zero conditioning mass")},
        {"heterogeneity",
         detail::stratum_values_json(rep.heterogeneity, "reference conditional is zero")},
        {"p_values", p_values}};
}

inline nlohmann::json fluctuation_json(const FluctuationSummary& sum) {
    nlohmann::json metrics = nlohmann::json::array();
    for (const auto& m : sum.metrics) {
        nlohmann::json entry{{"name", m.name},
                             {"defined", m.defined_count},
                             {"undefined", m.undefined_count}};
        if (m.empty()) {
            entry["summary"] = nlohmann::json{{"undefined", "all replicates undefined"}};
        } else {
            entry["summary"] = nlohmann::json{
                {"min", quantity(m.min)},           {"q1", quantity(m.q1)},
                {"median", quantity(m.median)},     {"q3", quantity(m.q3)},
                {"max", quantity(m.max)},           {"mean", quantity(m.mean)},
                {"sd", quantity(m.sd)},             {"fence_low", quantity(m.fence_low)},
                {"fence_high", quantity(m.fence_high)}};
        }
        metrics.push_back(std::move(entry));
    }
    return nlohmann::json{{"n_subjects", sum.n_subjects},
                          {"n_replicates", sum.n_replicates},
                          {"seed", sum.seed},
                          {"metrics", metrics}};
}

struct ReportInputs {
    const JointTable* counts = nullptr;             // raw study table
    std::string source;                             // builtin name or file path
    const ProjectionResult* projection = nullptr;   // optional
    std::string projection_kind;
    const EffectReport* effects_empirical = nullptr;
    const EffectReport* effects_projected = nullptr;
    const FluctuationSummary* fluctuation = nullptr;
};

inline nlohmann::json report_document(const ReportInputs& in) {
    if (!in.counts) throw TableError("report needs an input table");
    nlohmann::json doc{{"dataset", dataset_digest(*in.counts, in.source)}};
    if (in.projection)
        doc["projection"] =
            projection_json(*in.projection, normalize(*in.counts), in.projection_kind);
    if (in.effects_empirical || in.effects_projected) {
        nlohmann::json eff = nlohmann::json::object();
        if (in.effects_empirical) eff["empirical"] = effects_json(*in.effects_empirical);
        if (in.effects_projected) eff["projected"] = effects_json(*in.effects_projected);
        doc["effects"] = std::move(eff);
    }
    if (in.fluctuation) doc["fluctuation"] = fluctuation_json(*in.fluctuation);
    return doc;
}

inline std::string render_report(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

// Empty path or "-" writes to standard output.
inline void write_report(const nlohmann::json& doc, const std::string& path) {
    const std::string text = render_report(doc);
    if (path.empty() || path == "-") {
        std::cout << text;
        if (!std::cout) throw Error("write to standard output failed");
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace deconf
