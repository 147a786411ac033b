#pragma once

/***
 * Categorical contingency tables.
 *
 * A Schema is an ordered list of named variables, each with a role
 * (outcome / independent / confounder) and an ordered list of level labels.
 * A JointTable holds one nonnegative weight per cell of the full product
 * space, either as raw counts or as a probability distribution. Cells are
 * stored row-major with the first variable slowest, so cell indices and
 * label tuples convert both ways through the schema.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "deconf/errors.hpp"

namespace deconf {

enum class Role { outcome, independent, confounder };

inline std::string_view role_name(Role r) {
    switch (r) {
        case Role::outcome: return "outcome";
        case Role::independent: return "independent";
        case Role::confounder: return "confounder";
    }
    return "?";
}

inline Role role_from_name(std::string_view s) {
    if (s == "outcome") return Role::outcome;
    if (s == "independent") return Role::independent;
    if (s == "confounder") return Role::confounder;
    throw SchemaError("unknown role '" + std::string(s) + "'");
}

struct Variable {
    std::string name;
    Role role = Role::confounder;
    std::vector<std::string> levels;
};

class Schema {
  public:
    Schema() = default;

    explicit Schema(std::vector<Variable> variables) : vars_(std::move(variables)) {
        if (vars_.empty()) throw SchemaError("schema needs at least one variable");
        std::unordered_set<std::string> names;
        for (const auto& v : vars_) {
            if (v.name.empty()) throw SchemaError("variable with empty name");
            if (!names.insert(v.name).second)
                throw SchemaError("duplicate variable '" + v.name + "'");
            if (v.levels.empty())
                throw SchemaError("variable '" + v.name + "' has no levels");
            std::unordered_set<std::string> seen;
            for (const auto& lvl : v.levels)
                if (!seen.insert(lvl).second)
                    throw SchemaError("variable '" + v.name + "' repeats level '" + lvl + "'");
        }
        strides_.assign(vars_.size(), 1);
        for (std::size_t a = vars_.size(); a-- > 1;)
            strides_[a - 1] = strides_[a] * vars_[a].levels.size();
        cells_ = strides_[0] * vars_[0].levels.size();
    }

    std::size_t variable_count() const noexcept { return vars_.size(); }
    const std::vector<Variable>& variables() const noexcept { return vars_; }
    const Variable& variable(std::size_t axis) const { return vars_.at(axis); }
    std::size_t cell_count() const noexcept { return cells_; }
    std::size_t stride(std::size_t axis) const { return strides_.at(axis); }
    std::size_t level_count(std::size_t axis) const { return vars_.at(axis).levels.size(); }

    std::optional<std::size_t> find_axis(std::string_view name) const noexcept {
        for (std::size_t a = 0; a < vars_.size(); ++a)
            if (vars_[a].name == name) return a;
        return std::nullopt;
    }

    std::size_t axis_of(std::string_view name) const {
        if (auto a = find_axis(name)) return *a;
        throw SchemaError("unknown variable '" + std::string(name) + "'");
    }

    std::size_t level_index(std::size_t axis, std::string_view label) const {
        const auto& lv = vars_.at(axis).levels;
        for (std::size_t i = 0; i < lv.size(); ++i)
            if (lv[i] == label) return i;
        throw SchemaError("variable '" + vars_.at(axis).name + "' has no level '" +
                          std::string(label) + "'");
    }

    std::size_t pack(std::span<const std::size_t> idx) const {
        std::size_t cell = 0;
        for (std::size_t a = 0; a < vars_.size(); ++a) cell += idx[a] * strides_[a];
        return cell;
    }

    void unpack(std::size_t cell, std::span<std::size_t> out) const {
        for (std::size_t a = 0; a < vars_.size(); ++a) {
            out[a] = cell / strides_[a];
            cell %= strides_[a];
        }
    }

    // Axis indices for the given variable names, sorted into schema order.
    std::vector<std::size_t> axes_of(std::span<const std::string> names) const {
        std::vector<std::size_t> axes;
        axes.reserve(names.size());
        for (const auto& n : names) axes.push_back(axis_of(n));
        std::sort(axes.begin(), axes.end());
        if (std::adjacent_find(axes.begin(), axes.end()) != axes.end())
            throw SchemaError("variable list repeats a variable");
        return axes;
    }

    std::vector<std::size_t> axes_with_role(Role r) const {
        std::vector<std::size_t> axes;
        for (std::size_t a = 0; a < vars_.size(); ++a)
            if (vars_[a].role == r) axes.push_back(a);
        return axes;
    }

    // Sub-schema over the given axes (must be sorted, strictly increasing).
    Schema subset(std::span<const std::size_t> axes) const {
        std::vector<Variable> vs;
        vs.reserve(axes.size());
        for (std::size_t a : axes) vs.push_back(vars_.at(a));
        return Schema(std::move(vs));
    }

    // Same variable names and level lists in the same order. Roles included:
    // two tables are only comparable if they describe the same study layout.
    bool layout_equal(const Schema& o) const {
        if (vars_.size() != o.vars_.size()) return false;
        for (std::size_t a = 0; a < vars_.size(); ++a) {
            if (vars_[a].name != o.vars_[a].name) return false;
            if (vars_[a].role != o.vars_[a].role) return false;
            if (vars_[a].levels != o.vars_[a].levels) return false;
        }
        return true;
    }

    // A study needs exactly one outcome and at least one of each other role.
    void require_study_roles() const {
        std::size_t y = 0, x = 0, s = 0;
        for (const auto& v : vars_) {
            if (v.role == Role::outcome) ++y;
            if (v.role == Role::independent) ++x;
            if (v.role == Role::confounder) ++s;
        }
        if (y != 1)
            throw SchemaError("study schema needs exactly one outcome variable, found " +
                              std::to_string(y));
        if (x == 0) throw SchemaError("study schema needs at least one independent variable");
        if (s == 0) throw SchemaError("study schema needs at least one confounder variable");
    }

    std::vector<std::string> cell_labels(std::size_t cell) const {
        std::vector<std::size_t> idx(vars_.size());
        unpack(cell, idx);
        std::vector<std::string> out;
        out.reserve(vars_.size());
        for (std::size_t a = 0; a < vars_.size(); ++a) out.push_back(vars_[a].levels[idx[a]]);
        return out;
    }

  private:
    std::vector<Variable> vars_;
    std::vector<std::size_t> strides_;
    std::size_t cells_ = 0;
};

enum class TableKind { counts, distribution };

class JointTable {
  public:
    JointTable() = default;

    JointTable(Schema schema, std::vector<double> weights, TableKind kind)
        : schema_(std::move(schema)), weights_(std::move(weights)), kind_(kind) {
        if (weights_.size() != schema_.cell_count())
            throw TableError("weight vector has " + std::to_string(weights_.size()) +
                             " entries for a schema with " +
                             std::to_string(schema_.cell_count()) + " cells");
        double sum = 0.0;
        for (std::size_t c = 0; c < weights_.size(); ++c) {
            const double w = weights_[c];
            if (!(w >= 0.0) || !std::isfinite(w))
                throw TableError("negative or non-finite weight in cell " + std::to_string(c));
            sum += w;
        }
        total_ = sum;
        if (kind_ == TableKind::distribution && std::fabs(sum - 1.0) > 1e-8)
            throw TableError("distribution weights sum to " + std::to_string(sum) +
                             ", expected 1");
    }

    const Schema& schema() const noexcept { return schema_; }
    std::span<const double> weights() const noexcept { return weights_; }
    double weight(std::size_t cell) const { return weights_.at(cell); }
    double total() const noexcept { return total_; }
    TableKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return weights_.size(); }

    // Label-addressed lookup; labels follow schema variable order.
    double at(std::initializer_list<std::string_view> labels) const {
        if (labels.size() != schema_.variable_count())
            throw TableError("expected one label per variable");
        std::vector<std::size_t> idx(schema_.variable_count());
        std::size_t a = 0;
        for (auto lbl : labels) {
            idx[a] = schema_.level_index(a, lbl);
            ++a;
        }
        return weights_[schema_.pack(idx)];
    }

  private:
    Schema schema_;
    std::vector<double> weights_;
    double total_ = 0.0;
    TableKind kind_ = TableKind::counts;
};

struct CellCount {
    std::vector<std::string> levels;  // one label per variable, schema order
    double count = 0.0;
};

// Dense table from a sparse cell list; unlisted cells get weight zero.
inline JointTable build_table(const Schema& schema, std::span<const CellCount> cells) {
    std::vector<double> w(schema.cell_count(), 0.0);
    std::vector<char> seen(schema.cell_count(), 0);
    std::vector<std::size_t> idx(schema.variable_count());
    for (const auto& cell : cells) {
        if (cell.levels.size() != schema.variable_count())
            throw TableError("cell lists " + std::to_string(cell.levels.size()) +
                             " labels for " + std::to_string(schema.variable_count()) +
                             " variables");
        for (std::size_t a = 0; a < idx.size(); ++a)
            idx[a] = schema.level_index(a, cell.levels[a]);
        const std::size_t c = schema.pack(idx);
        if (seen[c]) throw TableError("cell listed twice in build_table input");
        seen[c] = 1;
        if (!(cell.count >= 0.0) || !std::isfinite(cell.count))
            throw TableError("negative or non-finite count");
        w[c] = cell.count;
    }
    return JointTable(schema, std::move(w), TableKind::counts);
}

inline JointTable build_table(const Schema& schema,
                              std::initializer_list<CellCount> cells) {
    return build_table(schema, std::span<const CellCount>(cells.begin(), cells.size()));
}

inline JointTable normalize(const JointTable& t) {
    if (t.total() <= 0.0) throw TableError("cannot normalize a table with zero total");
    std::vector<double> w(t.weights().begin(), t.weights().end());
    for (double& x : w) x /= t.total();
    return JointTable(t.schema(), std::move(w), TableKind::distribution);
}

namespace detail {

inline std::string join_labels(const std::vector<std::string>& labels) {
    std::string out;
    for (const auto& l : labels) out += (out.empty() ? "" : "/") + l;
    return out;
}

// For each full-schema cell, the packed index over the given (sorted) axes.
inline std::vector<std::uint32_t> subset_cellmap(const Schema& full,
                                                 std::span<const std::size_t> axes) {
    std::vector<std::size_t> sub_stride(axes.size(), 1);
    for (std::size_t i = axes.size(); i-- > 1;)
        sub_stride[i - 1] = sub_stride[i] * full.level_count(axes[i]);
    std::vector<std::uint32_t> map(full.cell_count());
    std::vector<std::size_t> idx(full.variable_count());
    for (std::size_t c = 0; c < full.cell_count(); ++c) {
        full.unpack(c, idx);
        std::size_t m = 0;
        for (std::size_t i = 0; i < axes.size(); ++i) m += idx[axes[i]] * sub_stride[i];
        map[c] = static_cast<std::uint32_t>(m);
    }
    return map;
}

inline JointTable marginal_over_axes(const JointTable& t, std::span<const std::size_t> axes) {
    if (axes.empty()) throw TableError("marginal needs at least one variable");
    Schema sub = t.schema().subset(axes);
    const auto map = subset_cellmap(t.schema(), axes);
    std::vector<double> w(sub.cell_count(), 0.0);
    const auto full = t.weights();
    for (std::size_t c = 0; c < full.size(); ++c) w[map[c]] += full[c];
    return JointTable(std::move(sub), std::move(w), t.kind());
}

}  // namespace detail

// Marginal over the named variables; result keeps schema variable order.
inline JointTable marginal(const JointTable& t, std::span<const std::string> vars) {
    return detail::marginal_over_axes(t, t.schema().axes_of(vars));
}

inline JointTable marginal(const JointTable& t, std::initializer_list<std::string> vars) {
    std::vector<std::string> v(vars);
    return marginal(t, std::span<const std::string>(v));
}

/***
 * Conditional distribution p(target | given).
 *
 * Values are stored given-major; a given-cell whose conditioning mass is
 * zero is marked undefined rather than filled with garbage.
 */
class ConditionalTable {
  public:
    ConditionalTable(Schema target, Schema given, std::vector<double> values,
                     std::vector<char> defined)
        : target_(std::move(target)),
          given_(std::move(given)),
          values_(std::move(values)),
          defined_(std::move(defined)) {}

    const Schema& target_schema() const noexcept { return target_; }
    const Schema& given_schema() const noexcept { return given_; }

    bool defined(std::size_t given_cell) const { return defined_.at(given_cell) != 0; }

    double probability(std::size_t given_cell, std::size_t target_cell) const {
        if (!defined(given_cell))
            throw TableError("conditional undefined: conditioning cell has zero mass");
        return values_[given_cell * target_.cell_count() + target_cell];
    }

    // Label-addressed lookup; nullopt when the conditioning mass is zero.
    std::optional<double> at(std::span<const std::string> given_labels,
                             std::span<const std::string> target_labels) const {
        const std::size_t g = cell_from_labels(given_, given_labels);
        if (!defined(g)) return std::nullopt;
        const std::size_t t = cell_from_labels(target_, target_labels);
        return values_[g * target_.cell_count() + t];
    }

    std::optional<double> at(std::initializer_list<std::string> given_labels,
                             std::initializer_list<std::string> target_labels) const {
        std::vector<std::string> g(given_labels), t(target_labels);
        return at(std::span<const std::string>(g), std::span<const std::string>(t));
    }

  private:
    static std::size_t cell_from_labels(const Schema& s, std::span<const std::string> labels) {
        if (labels.size() != s.variable_count())
            throw TableError("expected one label per variable");
        std::vector<std::size_t> idx(labels.size());
        for (std::size_t a = 0; a < labels.size(); ++a)
            idx[a] = s.level_index(a, labels[a]);
        return s.pack(idx);
    }

    Schema target_;
    Schema given_;
    std::vector<double> values_;
    std::vector<char> defined_;
};

inline ConditionalTable conditional(const JointTable& t,
                                    std::span<const std::string> target_vars,
                                    std::span<const std::string> given_vars) {
    const auto t_axes = t.schema().axes_of(target_vars);
    const auto g_axes = t.schema().axes_of(given_vars);
    for (std::size_t a : t_axes)
        if (std::find(g_axes.begin(), g_axes.end(), a) != g_axes.end())
            throw TableError("variable '" + t.schema().variable(a).name +
                             "' appears on both sides of the conditional");
    Schema target = t.schema().subset(t_axes);
    Schema given = t.schema().subset(g_axes);
    const auto t_map = detail::subset_cellmap(t.schema(), t_axes);
    const auto g_map = detail::subset_cellmap(t.schema(), g_axes);

    const std::size_t nt = target.cell_count(), ng = given.cell_count();
    std::vector<double> joint(ng * nt, 0.0), mass(ng, 0.0);
    const auto w = t.weights();
    for (std::size_t c = 0; c < w.size(); ++c) {
        joint[g_map[c] * nt + t_map[c]] += w[c];
        mass[g_map[c]] += w[c];
    }
    std::vector<char> defined(ng, 0);
    for (std::size_t g = 0; g < ng; ++g) {
        if (mass[g] > 0.0) {
            defined[g] = 1;
            for (std::size_t k = 0; k < nt; ++k) joint[g * nt + k] /= mass[g];
        }
    }
    return ConditionalTable(std::move(target), std::move(given), std::move(joint),
                            std::move(defined));
}

inline ConditionalTable conditional(const JointTable& t,
                                    std::initializer_list<std::string> target_vars,
                                    std::initializer_list<std::string> given_vars) {
    std::vector<std::string> tv(target_vars), gv(given_vars);
    return conditional(t, std::span<const std::string>(tv), std::span<const std::string>(gv));
}

// Observed domains: per variable, the levels with positive one-way marginal.
struct Support {
    std::vector<std::vector<std::string>> observed;  // aligned with schema axes

    bool full(const Schema& schema) const {
        for (std::size_t a = 0; a < schema.variable_count(); ++a)
            if (observed[a].size() != schema.level_count(a)) return false;
        return true;
    }
};

inline Support support(const JointTable& t) {
    const Schema& s = t.schema();
    Support out;
    out.observed.resize(s.variable_count());
    std::vector<std::vector<double>> mass(s.variable_count());
    for (std::size_t a = 0; a < s.variable_count(); ++a)
        mass[a].assign(s.level_count(a), 0.0);
    std::vector<std::size_t> idx(s.variable_count());
    const auto w = t.weights();
    for (std::size_t c = 0; c < w.size(); ++c) {
        if (w[c] <= 0.0) continue;
        s.unpack(c, idx);
        for (std::size_t a = 0; a < idx.size(); ++a) mass[a][idx[a]] += w[c];
    }
    for (std::size_t a = 0; a < s.variable_count(); ++a)
        for (std::size_t i = 0; i < s.level_count(a); ++i)
            if (mass[a][i] > 0.0) out.observed[a].push_back(s.variable(a).levels[i]);
    return out;
}

}  // namespace deconf
