#pragma once

/***
 * Effect sizes, heterogeneity, and significance for categorical studies.
 *
 * Probabilities are conditioned through profiles: lists of variable=level
 * pairs. Odds and odds ratios are tagged undefined (std::nullopt) where a
 * denominator vanishes; only a degenerate reference group is an error.
 * Significance tests require raw counts and are therefore impossible to run
 * on projected (hypothetical) distributions.
 */

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deconf/errors.hpp"
#include "deconf/table.hpp"

namespace deconf {

// Ordered (variable, level) pairs naming one cell of a sub-space.
using Profile = std::vector<std::pair<std::string, std::string>>;

// "a=b" or "a=b,c=d"; splits on commas, then on the first '=' of each part,
// trimming surrounding whitespace. Level labels may contain spaces.
inline Profile parse_profile(std::string_view text) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
        return s;
    };
    Profile out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string_view::npos) comma = text.size();
        std::string_view part = trim(text.substr(pos, comma - pos));
        if (!part.empty()) {
            const std::size_t eq = part.find('=');
            if (eq == std::string_view::npos)
                throw SchemaError("profile part '" + std::string(part) +
                                  "' is not of the form variable=level");
            out.emplace_back(std::string(trim(part.substr(0, eq))),
                             std::string(trim(part.substr(eq + 1))));
        }
        pos = comma + 1;
    }
    if (out.empty()) throw SchemaError("empty profile");
    return out;
}

struct GroupValue {
    std::vector<std::string> group;  // level labels, schema order
    std::optional<double> value;
};

struct StratumValue {
    std::vector<std::string> group;
    std::vector<std::string> stratum;
    std::optional<double> value;
};

// One stratum of a 2x2 comparison: rows are exposure (group vs reference),
// columns are outcome (event vs complement).
//   a: group, event        b: group, complement
//   c: reference, event    d: reference, complement
struct StratumTable2x2 {
    double a = 0, b = 0, c = 0, d = 0;
    std::vector<std::string> stratum;  // confounder labels, empty when collapsed
    double n() const { return a + b + c + d; }
};

namespace detail {

struct Slice {
    std::vector<std::pair<std::size_t, std::size_t>> fixed;  // (axis, level)
};

inline Slice resolve_profile(const Schema& schema, const Profile& profile,
                             bool forbid_outcome = true) {
    Slice s;
    for (const auto& [var, level] : profile) {
        const std::size_t axis = schema.axis_of(var);
        if (forbid_outcome && schema.variable(axis).role == Role::outcome)
            throw SchemaError("cannot condition on the outcome variable '" + var + "'");
        for (const auto& f : s.fixed)
            if (f.first == axis) throw SchemaError("profile repeats variable '" + var + "'");
        s.fixed.emplace_back(axis, schema.level_index(axis, level));
    }
    return s;
}

// The profile must name exactly the variables carrying the given role.
inline void require_covers_role(const Schema& schema, const Slice& s, Role role,
                                std::string_view what) {
    const auto axes = schema.axes_with_role(role);
    if (s.fixed.size() != axes.size())
        throw SchemaError(std::string(what) + " must name exactly the " +
                          std::string(role_name(role)) + " variables");
    for (std::size_t a : axes) {
        bool found = false;
        for (const auto& f : s.fixed) found = found || f.first == a;
        if (!found)
            throw SchemaError(std::string(what) + " is missing variable '" +
                              schema.variable(a).name + "'");
    }
}

inline Slice merge_slices(const Slice& p, const Slice& q) {
    Slice out = p;
    for (const auto& f : q.fixed) {
        for (const auto& g : out.fixed)
            if (g.first == f.first)
                throw SchemaError("profiles overlap on variable index " +
                                  std::to_string(f.first));
        out.fixed.push_back(f);
    }
    return out;
}

// Total weight of cells matching the slice, optionally also fixing the
// outcome level.
inline double slice_mass(const JointTable& t, const Slice& s, std::int64_t y_axis = -1,
                         std::int64_t y_level = -1) {
    const Schema& sc = t.schema();
    std::vector<std::size_t> idx(sc.variable_count());
    const auto w = t.weights();
    double sum = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c) {
        if (w[c] == 0.0) continue;
        sc.unpack(c, idx);
        bool match = true;
        for (const auto& f : s.fixed) match = match && idx[f.first] == f.second;
        if (y_axis >= 0)
            match = match && idx[static_cast<std::size_t>(y_axis)] ==
                                 static_cast<std::size_t>(y_level);
        if (match) sum += w[c];
    }
    return sum;
}

struct Event {
    std::size_t axis;
    std::size_t level;
};

}  // namespace detail

// Resolve an event designation against the outcome variable. Accepted forms,
// in order: "variable=level" naming the outcome variable; a bare outcome
// level label; the outcome variable's own name when its levels are exactly
// {no, yes}, which selects "yes".
inline detail::Event resolve_event(const Schema& schema, std::string_view event_spec) {
    const auto y_axes = schema.axes_with_role(Role::outcome);
    if (y_axes.size() != 1) throw SchemaError("schema needs exactly one outcome variable");
    const std::size_t axis = y_axes[0];
    const Variable& y = schema.variable(axis);

    const std::size_t eq = event_spec.find('=');
    if (eq != std::string_view::npos) {
        const std::string var(event_spec.substr(0, eq));
        const std::string level(event_spec.substr(eq + 1));
        if (var != y.name)
            throw SchemaError("event names variable '" + var + "' but the outcome is '" +
                              y.name + "'");
        return {axis, schema.level_index(axis, level)};
    }
    for (std::size_t i = 0; i < y.levels.size(); ++i)
        if (y.levels[i] == event_spec) return {axis, i};
    if (event_spec == y.name && y.levels == std::vector<std::string>{"no", "yes"})
        return {axis, 1};
    throw SchemaError("event '" + std::string(event_spec) + "' matches neither a level of '" +
                      y.name + "' nor a supported shorthand");
}

// P(Y = event | given); nullopt when the conditioning mass is zero.
inline std::optional<double> event_probability(const JointTable& t, std::string_view event,
                                               const Profile& given) {
    const auto ev = resolve_event(t.schema(), event);
    const auto slice = detail::resolve_profile(t.schema(), given);
    const double mass = detail::slice_mass(t, slice);
    if (mass <= 0.0) return std::nullopt;
    return detail::slice_mass(t, slice, static_cast<std::int64_t>(ev.axis),
                              static_cast<std::int64_t>(ev.level)) /
           mass;
}

// Odds of the event against its complement, p/(1-p); undefined when the
// conditioning mass is zero or p = 1.
inline std::optional<double> odds(const JointTable& t, std::string_view event,
                                  const Profile& given) {
    const auto p = event_probability(t, event, given);
    if (!p) return std::nullopt;
    if (*p >= 1.0) return std::nullopt;
    return *p / (1.0 - *p);
}

namespace detail {

inline Profile profile_for_cell(const Schema& sub, std::size_t cell) {
    Profile out;
    const auto labels = sub.cell_labels(cell);
    for (std::size_t a = 0; a < sub.variable_count(); ++a)
        out.emplace_back(sub.variable(a).name, labels[a]);
    return out;
}

}  // namespace detail

// Odds ratio of every group against the reference group x0. OR(x0) is
// exactly 1; groups with undefined odds are tagged. A reference whose odds
// are undefined or zero cannot anchor the comparison and is an error.
inline std::vector<GroupValue> intervention_or(const JointTable& t, std::string_view event,
                                               const Profile& x0) {
    const Schema& sc = t.schema();
    const auto ref_slice = detail::resolve_profile(sc, x0);
    detail::require_covers_role(sc, ref_slice, Role::independent, "reference group");
    const auto ref_odds = odds(t, event, x0);
    if (!ref_odds) throw TableError("reference group odds are undefined");
    if (*ref_odds == 0.0) throw TableError("reference group odds are zero");

    const auto x_axes = sc.axes_with_role(Role::independent);
    const JointTable fx = detail::marginal_over_axes(t, x_axes);
    const Schema& xs = fx.schema();

    std::size_t ref_cell = 0;
    {
        std::vector<std::size_t> idx(xs.variable_count());
        for (const auto& f : ref_slice.fixed)
            for (std::size_t a = 0; a < x_axes.size(); ++a)
                if (x_axes[a] == f.first) idx[a] = f.second;
        ref_cell = xs.pack(idx);
    }

    std::vector<GroupValue> out;
    out.reserve(xs.cell_count());
    for (std::size_t g = 0; g < xs.cell_count(); ++g) {
        GroupValue gv;
        gv.group = xs.cell_labels(g);
        if (g == ref_cell) {
            gv.value = 1.0;
        } else {
            const auto og = odds(t, event, detail::profile_for_cell(xs, g));
            if (og) gv.value = *og / *ref_odds;
        }
        out.push_back(std::move(gv));
    }
    return out;
}

// Odds ratio of x against x0 inside one confounder stratum s; undefined when
// either conditional odds is undefined or the reference odds are zero.
inline std::optional<double> stratified_or(const JointTable& t, std::string_view event,
                                           const Profile& x, const Profile& x0,
                                           const Profile& s) {
    const Schema& sc = t.schema();
    detail::require_covers_role(sc, detail::resolve_profile(sc, x), Role::independent,
                                "group");
    detail::require_covers_role(sc, detail::resolve_profile(sc, x0), Role::independent,
                                "reference group");
    detail::require_covers_role(sc, detail::resolve_profile(sc, s), Role::confounder,
                                "confounder profile");
    Profile gx = x, gx0 = x0;
    gx.insert(gx.end(), s.begin(), s.end());
    gx0.insert(gx0.end(), s.begin(), s.end());
    const auto ox = odds(t, event, gx);
    const auto ox0 = odds(t, event, gx0);
    if (!ox || !ox0 || *ox0 == 0.0) return std::nullopt;
    return *ox / *ox0;
}

// Absolute risk reduction p(bad|x0[,s]) - p(bad|x[,s]). Throws when a
// conditioning cell carries no mass.
inline double arr(const JointTable& t, std::string_view bad_outcome, const Profile& x,
                  const Profile& x0, const Profile* s = nullptr) {
    Profile gx = x, gx0 = x0;
    if (s) {
        gx.insert(gx.end(), s->begin(), s->end());
        gx0.insert(gx0.end(), s->begin(), s->end());
    }
    const auto px = event_probability(t, bad_outcome, gx);
    const auto px0 = event_probability(t, bad_outcome, gx0);
    if (!px || !px0) throw TableError("arr: conditioning cell has zero mass");
    return *px0 - *px;
}

// Mantel-Haenszel pooled odds ratio over 2x2 strata.
inline double mantel_haenszel_or(std::span<const StratumTable2x2> strata) {
    double num = 0.0, den = 0.0;
    for (const auto& st : strata) {
        if (st.a < 0 || st.b < 0 || st.c < 0 || st.d < 0)
            throw TableError("mantel_haenszel_or: negative cell");
        const double n = st.n();
        if (n <= 0.0) continue;
        num += st.a * st.d / n;
        den += st.b * st.c / n;
    }
    if (den == 0.0)
        throw TableError("mantel_haenszel_or: no stratum with positive b*c, pooled "
                         "denominator is zero");
    return num / den;
}

// The 2x2 strata comparing x against x0 across every confounder profile.
inline std::vector<StratumTable2x2> strata_2x2(const JointTable& t, std::string_view event,
                                               const Profile& x, const Profile& x0) {
    const Schema& sc = t.schema();
    const auto ev = resolve_event(sc, event);
    const auto sx = detail::resolve_profile(sc, x);
    const auto sx0 = detail::resolve_profile(sc, x0);
    detail::require_covers_role(sc, sx, Role::independent, "group");
    detail::require_covers_role(sc, sx0, Role::independent, "reference group");

    const auto s_axes = sc.axes_with_role(Role::confounder);
    if (s_axes.empty()) throw SchemaError("schema has no confounder variables");
    const Schema ss = sc.subset(s_axes);

    std::vector<StratumTable2x2> out;
    out.reserve(ss.cell_count());
    std::vector<std::size_t> sidx(ss.variable_count());
    for (std::size_t cell = 0; cell < ss.cell_count(); ++cell) {
        ss.unpack(cell, sidx);
        detail::Slice stratum;
        for (std::size_t a = 0; a < s_axes.size(); ++a)
            stratum.fixed.emplace_back(s_axes[a], sidx[a]);
        const auto gx = detail::merge_slices(sx, stratum);
        const auto gx0 = detail::merge_slices(sx0, stratum);
        const std::int64_t ya = static_cast<std::int64_t>(ev.axis);
        const std::int64_t yl = static_cast<std::int64_t>(ev.level);
        StratumTable2x2 st;
        st.a = detail::slice_mass(t, gx, ya, yl);
        st.b = detail::slice_mass(t, gx) - st.a;
        st.c = detail::slice_mass(t, gx0, ya, yl);
        st.d = detail::slice_mass(t, gx0) - st.c;
        st.stratum = ss.cell_labels(cell);
        out.push_back(std::move(st));
    }
    return out;
}

// Confounder composition ratio f_{S|X}(s|x) / f_{S|X}(s|x0) per profile s.
// 1 everywhere iff the two groups draw from identical confounder mixes.
inline std::vector<StratumValue> heterogeneity_ratio(const JointTable& t, const Profile& x,
                                                     const Profile& x0) {
    const Schema& sc = t.schema();
    const auto sx = detail::resolve_profile(sc, x);
    const auto sx0 = detail::resolve_profile(sc, x0);
    detail::require_covers_role(sc, sx, Role::independent, "group");
    detail::require_covers_role(sc, sx0, Role::independent, "reference group");
    const double mx = detail::slice_mass(t, sx);
    const double mx0 = detail::slice_mass(t, sx0);
    if (mx <= 0.0 || mx0 <= 0.0)
        throw TableError("heterogeneity_ratio: a group has zero mass");

    const auto s_axes = sc.axes_with_role(Role::confounder);
    if (s_axes.empty()) throw SchemaError("schema has no confounder variables");
    const Schema ss = sc.subset(s_axes);

    std::vector<StratumValue> out;
    out.reserve(ss.cell_count());
    std::vector<std::size_t> sidx(ss.variable_count());
    std::vector<std::string> group_labels, ref_labels;
    for (const auto& [var, level] : x) group_labels.push_back(level);
    for (std::size_t cell = 0; cell < ss.cell_count(); ++cell) {
        ss.unpack(cell, sidx);
        detail::Slice stratum;
        for (std::size_t a = 0; a < s_axes.size(); ++a)
            stratum.fixed.emplace_back(s_axes[a], sidx[a]);
        const double num = detail::slice_mass(t, detail::merge_slices(sx, stratum)) / mx;
        const double den = detail::slice_mass(t, detail::merge_slices(sx0, stratum)) / mx0;
        StratumValue sv;
        sv.group = group_labels;
        sv.stratum = ss.cell_labels(cell);
        if (den > 0.0) sv.value = num / den;
        out.push_back(std::move(sv));
    }
    return out;
}

namespace detail {

inline double log_choose(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline double require_count(double v, std::string_view what) {
    if (!(v >= 0.0) || !std::isfinite(v))
        throw TableError(std::string(what) + ": negative or non-finite count");
    const double r = std::nearbyint(v);
    if (std::fabs(v - r) > 1e-9)
        throw TableError(std::string(what) + ": count " + std::to_string(v) +
                         " is not an integer");
    return r;
}

// Regularized upper incomplete gamma Q(a, x): series for P below a+1, Lentz
// continued fraction for Q above. Relative accuracy ~1e-14 in the ranges a
// up to a few hundred, x up to 1e6; underflows cleanly to 0 for huge x.
inline double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw TableError("gamma_q: need a > 0, x >= 0");
    if (x == 0.0) return 1.0;
    const double lg = -x + a * std::log(x) - std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 1000; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
        }
        return 1.0 - sum * std::exp(lg);
    }
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(lg) * h;
}

}  // namespace detail

// Two-sided Fisher exact test on one 2x2 stratum of integer counts: the sum
// of hypergeometric probabilities, at the observed margins, of all tables no
// more probable than the observed one (with (1+1e-7) slack for ties).
inline double fisher_exact_2x2(const StratumTable2x2& t) {
    const double a = detail::require_count(t.a, "fisher_exact_2x2");
    const double b = detail::require_count(t.b, "fisher_exact_2x2");
    const double c = detail::require_count(t.c, "fisher_exact_2x2");
    const double d = detail::require_count(t.d, "fisher_exact_2x2");
    const double r1 = a + b, r2 = c + d, c1 = a + c, n = r1 + r2;
    if (n == 0.0) return 1.0;

    const double log_denom = detail::log_choose(n, c1);
    const auto log_pmf = [&](double k) {
        return detail::log_choose(r1, k) + detail::log_choose(r2, c1 - k) - log_denom;
    };
    const double lo = std::max(0.0, c1 - r2), hi = std::min(r1, c1);
    const double cutoff = log_pmf(a) + std::log1p(1e-7);
    double p = 0.0;
    for (double k = lo; k <= hi; k += 1.0) {
        const double lp = log_pmf(k);
        if (lp <= cutoff) p += std::exp(lp);
    }
    return p < 1.0 ? p : 1.0;
}

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

// Pearson chi-square test of independence between two variable sets, on raw
// counts. dof = (r-1)(c-1) over the full level products.
inline ChiSquareResult chi_square_independence(const JointTable& t,
                                               std::span<const std::string> rows,
                                               std::span<const std::string> cols) {
    if (t.kind() != TableKind::counts)
        throw TableError("chi_square_independence needs raw counts, not a distribution");
    const Schema& sc = t.schema();
    const auto r_axes = sc.axes_of(rows);
    const auto c_axes = sc.axes_of(cols);
    for (std::size_t a : r_axes)
        for (std::size_t b : c_axes)
            if (a == b)
                throw TableError("row and column variable sets overlap on '" +
                                 sc.variable(a).name + "'");

    const auto r_map = detail::subset_cellmap(sc, r_axes);
    const auto c_map = detail::subset_cellmap(sc, c_axes);
    std::size_t nr = 1, nc = 1;
    for (std::size_t a : r_axes) nr *= sc.level_count(a);
    for (std::size_t a : c_axes) nc *= sc.level_count(a);
    if (nr < 2 || nc < 2)
        throw TableError("chi_square_independence needs at least two rows and two columns");

    std::vector<double> obs(nr * nc, 0.0), rt(nr, 0.0), ct(nc, 0.0);
    const auto w = t.weights();
    for (std::size_t cell = 0; cell < w.size(); ++cell)
        obs[r_map[cell] * nc + c_map[cell]] += w[cell];
    for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t j = 0; j < nc; ++j) rt[i] += obs[i * nc + j];
    for (std::size_t j = 0; j < nc; ++j)
        for (std::size_t i = 0; i < nr; ++i) ct[j] += obs[i * nc + j];
    const double n = t.total();
    if (n <= 0.0) throw TableError("chi_square_independence: empty table");

    double stat = 0.0;
    for (std::size_t i = 0; i < nr; ++i) {
        for (std::size_t j = 0; j < nc; ++j) {
            const double e = rt[i] * ct[j] / n;
            if (e <= 0.0)
                throw TableError("chi_square_independence: zero expected count in row " +
                                 std::to_string(i) + ", column " + std::to_string(j));
            const double diff = obs[i * nc + j] - e;
            stat += diff * diff / e;
        }
    }
    ChiSquareResult out;
    out.statistic = stat;
    out.dof = static_cast<int>((nr - 1) * (nc - 1));
    out.p_value = detail::gamma_q(out.dof / 2.0, stat / 2.0);
    return out;
}

inline ChiSquareResult chi_square_independence(const JointTable& t,
                                               std::initializer_list<std::string> rows,
                                               std::initializer_list<std::string> cols) {
    std::vector<std::string> r(rows), c(cols);
    return chi_square_independence(t, std::span<const std::string>(r),
                                   std::span<const std::string>(c));
}

struct EffectReport {
    std::string event_level;
    std::vector<std::string> reference_group;
    std::vector<GroupValue> odds_by_group;
    std::vector<GroupValue> intervention_or_by_group;
    std::vector<GroupValue> risk_ratio_by_group;
    std::vector<GroupValue> arr_by_group;          // risk difference vs reference
    std::vector<GroupValue> mh_or_by_group;        // pooled over confounder strata
    std::vector<StratumValue> stratified_or;       // per (group, stratum)
    std::vector<StratumValue> stratified_arr;
    std::vector<StratumValue> heterogeneity;       // composition ratio vs reference
    std::map<std::string, double> p_values;        // counts tables only
};

// Assemble the full effect-size panel of t against one reference group.
// ARR entries are risk differences in the event's complement, i.e.
// p(event|x,s) - p(event|x0,s). with_p_values requires raw counts; p-values
// are never produced for projected distributions.
inline EffectReport build_effect_report(const JointTable& t, std::string_view event,
                                        const Profile& reference, bool with_p_values) {
    const Schema& sc = t.schema();
    sc.require_study_roles();
    if (with_p_values && t.kind() != TableKind::counts)
        throw TableError("p-values need raw counts; a projected table is hypothetical");

    const auto ev = resolve_event(sc, event);
    const auto ref_slice = detail::resolve_profile(sc, reference);
    detail::require_covers_role(sc, ref_slice, Role::independent, "reference group");

    EffectReport rep;
    rep.event_level = sc.variable(ev.axis).levels[ev.level];

    const auto x_axes = sc.axes_with_role(Role::independent);
    const auto s_axes = sc.axes_with_role(Role::confounder);
    const Schema xs = sc.subset(x_axes);
    const Schema ss = sc.subset(s_axes);

    std::size_t ref_cell = 0;
    {
        std::vector<std::size_t> idx(xs.variable_count());
        for (const auto& f : ref_slice.fixed)
            for (std::size_t a = 0; a < x_axes.size(); ++a)
                if (x_axes[a] == f.first) idx[a] = f.second;
        ref_cell = xs.pack(idx);
    }
    rep.reference_group = xs.cell_labels(ref_cell);
    const Profile ref_profile = detail::profile_for_cell(xs, ref_cell);

    const auto p_ref = event_probability(t, event, ref_profile);
    if (!p_ref) throw TableError("reference group has zero mass");
    rep.intervention_or_by_group = intervention_or(t, event, ref_profile);

    for (std::size_t g = 0; g < xs.cell_count(); ++g) {
        const Profile gp = detail::profile_for_cell(xs, g);
        const auto labels = xs.cell_labels(g);
        rep.odds_by_group.push_back({labels, odds(t, event, gp)});

        const auto p_g = event_probability(t, event, gp);
        GroupValue rr{labels, std::nullopt}, ad{labels, std::nullopt};
        if (g == ref_cell) {
            rr.value = 1.0;
            ad.value = 0.0;
        } else if (p_g) {
            if (*p_ref > 0.0) rr.value = *p_g / *p_ref;
            ad.value = *p_g - *p_ref;
        }
        rep.risk_ratio_by_group.push_back(std::move(rr));
        rep.arr_by_group.push_back(std::move(ad));

        GroupValue mh{labels, std::nullopt};
        if (g == ref_cell) {
            mh.value = 1.0;
        } else {
            const auto strata = strata_2x2(t, event, gp, ref_profile);
            double num = 0.0, den = 0.0;
            for (const auto& st : strata) {
                const double n = st.n();
                if (n <= 0.0) continue;
                num += st.a * st.d / n;
                den += st.b * st.c / n;
            }
            if (den > 0.0) mh.value = num / den;
        }
        rep.mh_or_by_group.push_back(std::move(mh));

        if (g != ref_cell) {
            for (auto& hv : heterogeneity_ratio(t, gp, ref_profile)) {
                hv.group = labels;
                rep.heterogeneity.push_back(std::move(hv));
            }
        }

        for (std::size_t cell = 0; cell < ss.cell_count(); ++cell) {
            const Profile sp = detail::profile_for_cell(ss, cell);
            StratumValue orv{labels, ss.cell_labels(cell),
                             g == ref_cell ? std::optional<double>(1.0)
                                           : stratified_or(t, event, gp, ref_profile, sp)};
            rep.stratified_or.push_back(std::move(orv));

            StratumValue arrv{labels, ss.cell_labels(cell), std::nullopt};
            Profile gps = gp, rps = ref_profile;
            gps.insert(gps.end(), sp.begin(), sp.end());
            rps.insert(rps.end(), sp.begin(), sp.end());
            const auto pg = event_probability(t, event, gps);
            const auto pr = event_probability(t, event, rps);
            if (g == ref_cell)
                arrv.value = 0.0;
            else if (pg && pr)
                arrv.value = *pg - *pr;
            rep.stratified_arr.push_back(std::move(arrv));
        }
    }

    if (with_p_values) {
        for (std::size_t g = 0; g < xs.cell_count(); ++g) {
            if (g == ref_cell) continue;
            const Profile gp = detail::profile_for_cell(xs, g);
            const auto gs = detail::resolve_profile(sc, gp);
            const std::int64_t ya = static_cast<std::int64_t>(ev.axis);
            const std::int64_t yl = static_cast<std::int64_t>(ev.level);
            StratumTable2x2 st;
            st.a = detail::slice_mass(t, gs, ya, yl);
            st.b = detail::slice_mass(t, gs) - st.a;
            st.c = detail::slice_mass(t, ref_slice, ya, yl);
            st.d = detail::slice_mass(t, ref_slice) - st.c;
            rep.p_values["fisher_exact[" + detail::join_labels(xs.cell_labels(g)) + " vs " +
                         detail::join_labels(rep.reference_group) + "]"] =
                fisher_exact_2x2(st);
        }
        std::vector<std::string> sv, xv, yv{sc.variable(ev.axis).name};
        for (auto a : s_axes) sv.push_back(sc.variable(a).name);
        for (auto a : x_axes) xv.push_back(sc.variable(a).name);
        try {
            rep.p_values["chi_square[confounders x groups]"] =
                chi_square_independence(t, std::span<const std::string>(sv),
                                        std::span<const std::string>(xv))
                    .p_value;
        } catch (const TableError&) {
        }
        try {
            rep.p_values["chi_square[confounders x outcome]"] =
                chi_square_independence(t, std::span<const std::string>(sv),
                                        std::span<const std::string>(yv))
                    .p_value;
        } catch (const TableError&) {
        }
    }
    return rep;
}

}  // namespace deconf
