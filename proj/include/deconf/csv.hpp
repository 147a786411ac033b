#pragma once

/***
 * Cell-list CSV: one header row naming the variables plus a count column,
 * then one row per observed cell. UTF-8, LF or CRLF, RFC-4180 quoting.
 * Microdata mode treats every row as a single subject (no count column).
 */

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "deconf/errors.hpp"
#include "deconf/table.hpp"

namespace deconf {

struct TableFileSpec {
    std::string path;
    std::string outcome;                     // exactly one outcome column
    std::vector<std::string> independents;   // at least one
    std::vector<std::string> confounders;    // at least one
    std::string count_column = "count";
    bool merge_duplicates = false;           // duplicate cells error by default
    bool microdata = false;                  // one row per subject, counts implied
};

namespace detail {

inline std::vector<std::vector<std::string>> parse_csv_text(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

    std::vector<std::string> row;
    std::string field;
    bool quoted = false, row_started = false;
    std::size_t i = 0;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_started = false;
    };
    while (i < text.size()) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
            row_started = true;
        } else if (c == ',') {
            end_field();
            row_started = true;
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            if (row_started || !field.empty() || !row.empty()) end_row();
        } else {
            field += c;
            row_started = true;
        }
        ++i;
    }
    if (quoted) throw CsvError("unterminated quoted field");
    if (row_started || !field.empty() || !row.empty()) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        end_row();
    }
    return rows;
}

inline double parse_count(const std::string& text, std::size_t row_number) {
    if (text.empty())
        throw CsvError("row " + std::to_string(row_number) + ": empty count");
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || !std::isfinite(v))
        throw CsvError("row " + std::to_string(row_number) + ": count '" + text +
                       "' is not a number");
    if (v < 0.0)
        throw CsvError("row " + std::to_string(row_number) + ": negative count " + text);
    const double r = std::nearbyint(v);
    if (std::fabs(v - r) > 1e-9)
        throw CsvError("row " + std::to_string(row_number) + ": count " + text +
                       " is not an integer");
    return r;
}

}  // namespace detail

// Parse an in-memory CSV document against the file spec. Variable order
// follows column order in the file; level order follows first appearance.
inline JointTable load_csv_text(std::string_view text, const TableFileSpec& spec) {
    if (spec.independents.empty() || spec.confounders.empty() || spec.outcome.empty())
        throw CsvError("role map needs one outcome, >=1 independent, >=1 confounder");
    const auto rows = detail::parse_csv_text(text);
    if (rows.empty()) throw CsvError("empty CSV: no header row");
    const auto& header = rows.front();

    std::unordered_map<std::string, Role> role_of;
    role_of[spec.outcome] = Role::outcome;
    for (const auto& v : spec.independents) {
        if (role_of.count(v)) throw CsvError("column '" + v + "' mapped to two roles");
        role_of[v] = Role::independent;
    }
    for (const auto& v : spec.confounders) {
        if (role_of.count(v)) throw CsvError("column '" + v + "' mapped to two roles");
        role_of[v] = Role::confounder;
    }

    std::vector<std::size_t> var_cols;   // columns holding variables, file order
    std::vector<Role> var_roles;
    std::optional<std::size_t> count_col;
    std::unordered_map<std::string, std::size_t> seen_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& name = header[c];
        if (seen_cols.count(name)) throw CsvError("duplicate column '" + name + "'");
        seen_cols[name] = c;
        if (!spec.microdata && name == spec.count_column) {
            count_col = c;
        } else if (auto it = role_of.find(name); it != role_of.end()) {
            var_cols.push_back(c);
            var_roles.push_back(it->second);
        } else {
            throw CsvError("column '" + name + "' is not mapped to a role");
        }
    }
    for (const auto& kv : role_of)
        if (!seen_cols.count(kv.first)) throw CsvError("missing column '" + kv.first + "'");
    if (!spec.microdata && !count_col)
        throw CsvError("missing count column '" + spec.count_column + "'");

    // First pass: level domains in order of first appearance.
    std::vector<std::vector<std::string>> levels(var_cols.size());
    std::vector<std::unordered_map<std::string, std::size_t>> level_idx(var_cols.size());
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size())
            throw CsvError("row " + std::to_string(r + 1) + " has " +
                           std::to_string(rows[r].size()) + " fields, header has " +
                           std::to_string(header.size()));
        for (std::size_t v = 0; v < var_cols.size(); ++v) {
            const std::string& lvl = rows[r][var_cols[v]];
            if (!level_idx[v].count(lvl)) {
                level_idx[v][lvl] = levels[v].size();
                levels[v].push_back(lvl);
            }
        }
    }
    if (rows.size() < 2) throw CsvError("CSV has a header but no data rows");

    std::vector<Variable> vars;
    for (std::size_t v = 0; v < var_cols.size(); ++v)
        vars.push_back(Variable{header[var_cols[v]], var_roles[v], levels[v]});
    Schema schema(std::move(vars));

    std::vector<double> weights(schema.cell_count(), 0.0);
    std::vector<char> seen(schema.cell_count(), 0);
    std::vector<std::size_t> idx(var_cols.size());
    for (std::size_t r = 1; r < rows.size(); ++r) {
        for (std::size_t v = 0; v < var_cols.size(); ++v)
            idx[v] = level_idx[v][rows[r][var_cols[v]]];
        const std::size_t cell = schema.pack(idx);
        const double count =
            spec.microdata ? 1.0 : detail::parse_count(rows[r][*count_col], r + 1);
        if (seen[cell] && !spec.merge_duplicates && !spec.microdata) {
            std::string labels = detail::join_labels(schema.cell_labels(cell));
            throw CsvError("row " + std::to_string(r + 1) + ": cell (" + labels +
                           ") listed twice; pass the merge flag to aggregate");
        }
        seen[cell] = 1;
        weights[cell] += count;
    }
    return JointTable(std::move(schema), std::move(weights), TableKind::counts);
}

inline JointTable load_csv(const TableFileSpec& spec) {
    std::ifstream in(spec.path, std::ios::binary);
    if (!in) throw CsvError("cannot open '" + spec.path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_csv_text(buf.str(), spec);
}

namespace detail {

inline std::string csv_quote(const std::string& field) {
    const bool needs = field.find_first_of(",\"\n\r") != std::string::npos ||
                       (!field.empty() && (field.front() == ' ' || field.back() == ' '));
    if (!needs) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string format_weight(double w) {
    char buf[40];
    if (w == std::nearbyint(w) && std::fabs(w) < 1e15)
        std::snprintf(buf, sizeof buf, "%.0f", w);
    else
        std::snprintf(buf, sizeof buf, "%.17g", w);
    return buf;
}

}  // namespace detail

// Serialize every cell (zeros included) in canonical row-major order, so a
// reload reproduces the schema, counts, and support exactly.
inline std::string to_csv(const JointTable& t, const std::string& count_column = "count") {
    std::string out;
    const Schema& s = t.schema();
    for (std::size_t a = 0; a < s.variable_count(); ++a) {
        out += detail::csv_quote(s.variable(a).name);
        out += ',';
    }
    out += detail::csv_quote(count_column);
    out += '\n';
    for (std::size_t c = 0; c < t.size(); ++c) {
        for (const auto& lbl : s.cell_labels(c)) {
            out += detail::csv_quote(lbl);
            out += ',';
        }
        out += detail::format_weight(t.weight(c));
        out += '\n';
    }
    return out;
}

inline void save_csv(const JointTable& t, const std::string& path,
                     const std::string& count_column = "count") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CsvError("cannot open '" + path + "' for writing");
    out << to_csv(t, count_column);
    if (!out) throw CsvError("write to '" + path + "' failed");
}

}  // namespace deconf
