#pragma once

/***
 * Information projections of contingency distributions.
 *
 * ipf_fit finds the I-projection of a base distribution f onto the set of
 * distributions with prescribed marginals: the unique minimizer of
 * D(q || f) = sum q ln(q/f), by iterative proportional fitting. Each cycle
 * rescales q so one constraint's marginal matches its target exactly; the
 * scheme preserves the support of the starting table and converges whenever
 * the constraints are jointly satisfiable on that support.
 *
 * Presets:
 *   pr_projection          parity p_{X,S} = f_X (x) f_S  plus realism p_{Y,S} = f_{Y,S}
 *   parity_only_projection parity plus outcome prevalence p_Y = f_Y
 *   logit_projection       all three pairwise marginals of f, fitted from a
 *                          uniform start (maximum-entropy / no-three-way-
 *                          interaction reference model)
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "deconf/errors.hpp"
#include "deconf/table.hpp"

namespace deconf {

struct MarginalConstraint {
    std::string name;                // used in diagnostics and reports
    std::vector<std::string> vars;   // subset of the base schema's variables
    JointTable target;               // distribution over exactly those variables
};

struct ProjectionSpec {
    std::vector<MarginalConstraint> constraints;
    double tolerance = 1e-10;
    int max_iterations = 10000;
};

struct ProjectionResult {
    JointTable q;
    int iterations = 0;
    std::vector<std::string> constraint_names;
    std::vector<double> residuals;   // per constraint, max abs marginal deviation
    double divergence = 0.0;         // D(q || f) in nats; +inf possible for logit
    bool converged = false;
};

// D(p || f) in nats. Throws SupportViolation if p puts mass where f has none.
inline double kl_divergence(const JointTable& p, const JointTable& f) {
    if (!p.schema().layout_equal(f.schema()))
        throw TableError("kl_divergence: tables have different schemas");
    if (p.kind() != TableKind::distribution || f.kind() != TableKind::distribution)
        throw TableError("kl_divergence expects distributions; call normalize first");
    double sum = 0.0;
    const auto pw = p.weights(), fw = f.weights();
    for (std::size_t c = 0; c < pw.size(); ++c) {
        if (pw[c] <= 0.0) continue;
        if (fw[c] <= 0.0)
            throw SupportViolation("kl_divergence infinite: p has mass on cell " +
                                   std::to_string(c) + " where f has none");
        sum += pw[c] * std::log(pw[c] / fw[c]);
    }
    return sum < 0.0 ? 0.0 : sum;
}

namespace detail {

struct CompiledConstraint {
    std::string name;
    std::vector<std::uint32_t> map;  // full cell -> marginal cell
    std::vector<double> target;
};

inline double divergence_allow_inf(std::span<const double> q, std::span<const double> f) {
    double sum = 0.0;
    for (std::size_t c = 0; c < q.size(); ++c) {
        if (q[c] <= 0.0) continue;
        if (f[c] <= 0.0) return std::numeric_limits<double>::infinity();
        sum += q[c] * std::log(q[c] / f[c]);
    }
    return sum < 0.0 ? 0.0 : sum;
}

struct IpfRun {
    std::vector<double> q;
    int iterations = 0;
    std::vector<double> residuals;
    bool converged = false;
};

// Core IPF loop. Deterministic: fixed constraint order, fixed summation
// order over cells. Stagnation of the worst residual (relative decrease
// below 1e-3 across 50 cycles while still above tolerance) is reported as
// infeasibility.
inline IpfRun ipf_run(std::vector<double> q, std::span<const CompiledConstraint> cons,
                      double tolerance, int max_iterations) {
    if (cons.empty()) throw TableError("ipf needs at least one constraint");
    if (!(tolerance > 0.0)) throw TableError("ipf tolerance must be positive");
    if (max_iterations < 1) throw TableError("ipf max_iterations must be at least 1");

    std::vector<std::vector<double>> cur(cons.size());
    for (std::size_t k = 0; k < cons.size(); ++k) cur[k].resize(cons[k].target.size());

    IpfRun out;
    out.residuals.assign(cons.size(), 0.0);
    std::vector<double> worst_history;
    worst_history.reserve(256);

    for (int iter = 1; iter <= max_iterations; ++iter) {
        for (const auto& con : cons) {
            auto& m = cur[&con - cons.data()];
            std::fill(m.begin(), m.end(), 0.0);
            for (std::size_t c = 0; c < q.size(); ++c) m[con.map[c]] += q[c];
            for (std::size_t j = 0; j < m.size(); ++j)
                m[j] = m[j] > 0.0 ? con.target[j] / m[j] : 1.0;
            for (std::size_t c = 0; c < q.size(); ++c) q[c] *= m[con.map[c]];
        }

        double worst = 0.0;
        for (std::size_t k = 0; k < cons.size(); ++k) {
            auto& m = cur[k];
            std::fill(m.begin(), m.end(), 0.0);
            for (std::size_t c = 0; c < q.size(); ++c) m[cons[k].map[c]] += q[c];
            double res = 0.0;
            for (std::size_t j = 0; j < m.size(); ++j)
                res = std::max(res, std::fabs(m[j] - cons[k].target[j]));
            out.residuals[k] = res;
            worst = std::max(worst, res);
        }
        out.iterations = iter;
        if (worst <= tolerance) {
            out.converged = true;
            break;
        }

        worst_history.push_back(worst);
        const std::size_t n = worst_history.size();
        if (n > 50) {
            const double before = worst_history[n - 51];
            if (before > 0.0 && (before - worst) < 1e-3 * before) {
                std::size_t bad = 0;
                for (std::size_t k = 1; k < cons.size(); ++k)
                    if (out.residuals[k] > out.residuals[bad]) bad = k;
                throw InfeasibleError(
                    "marginal constraints appear jointly infeasible: residual on '" +
                        cons[bad].name + "' stalled at " + std::to_string(out.residuals[bad]) +
                        " after " + std::to_string(iter) + " cycles",
                    cons[bad].name, out.residuals[bad]);
            }
        }
    }
    out.q = std::move(q);
    return out;
}

inline std::vector<CompiledConstraint> compile_constraints(
    const Schema& schema, std::span<const MarginalConstraint> constraints) {
    std::vector<CompiledConstraint> out;
    out.reserve(constraints.size());
    for (const auto& con : constraints) {
        const auto axes = schema.axes_of(con.vars);
        if (axes.size() == schema.variable_count())
            throw TableError("constraint '" + con.name +
                             "' covers every variable; use the target directly");
        const Schema sub = schema.subset(axes);
        const Schema& tgt = con.target.schema();
        bool ok = tgt.variable_count() == sub.variable_count();
        for (std::size_t a = 0; ok && a < sub.variable_count(); ++a)
            ok = tgt.variable(a).name == sub.variable(a).name &&
                 tgt.variable(a).levels == sub.variable(a).levels;
        if (!ok)
            throw TableError("constraint '" + con.name +
                             "' target does not match the marginal schema (variables in "
                             "table order with identical level lists)");
        if (con.target.kind() != TableKind::distribution)
            throw TableError("constraint '" + con.name + "' target must be a distribution");
        CompiledConstraint cc;
        cc.name = con.name;
        cc.map = subset_cellmap(schema, axes);
        cc.target.assign(con.target.weights().begin(), con.target.weights().end());
        out.push_back(std::move(cc));
    }
    return out;
}

// A target that demands mass on a marginal cell the start table cannot reach
// is infeasible no matter how long IPF runs; report it before iterating.
inline void check_target_support(const Schema& schema, std::span<const double> start,
                                 std::span<const CompiledConstraint> cons,
                                 std::span<const MarginalConstraint> constraints) {
    for (std::size_t k = 0; k < cons.size(); ++k) {
        std::vector<double> m(cons[k].target.size(), 0.0);
        for (std::size_t c = 0; c < start.size(); ++c) m[cons[k].map[c]] += start[c];
        for (std::size_t j = 0; j < m.size(); ++j) {
            if (cons[k].target[j] > 0.0 && m[j] == 0.0) {
                const auto labels = constraints[k].target.schema().cell_labels(j);
                std::string cell;
                for (const auto& l : labels) cell += (cell.empty() ? "" : ", ") + l;
                throw InfeasibleError("constraint '" + cons[k].name + "' requires mass " +
                                          std::to_string(cons[k].target[j]) + " on (" + cell +
                                          ") but the base table has none there",
                                      cons[k].name, cons[k].target[j]);
            }
        }
        (void)schema;
    }
}

}  // namespace detail

// I-projection of f onto the constraint set, starting IPF from f itself.
inline ProjectionResult ipf_fit(const JointTable& f, const ProjectionSpec& spec) {
    if (f.kind() != TableKind::distribution)
        throw TableError("ipf_fit expects a distribution; call normalize first");
    const auto cons = detail::compile_constraints(f.schema(), spec.constraints);
    detail::check_target_support(f.schema(), f.weights(), cons, spec.constraints);
    auto run = detail::ipf_run(std::vector<double>(f.weights().begin(), f.weights().end()),
                               cons, spec.tolerance, spec.max_iterations);
    ProjectionResult out;
    out.divergence = detail::divergence_allow_inf(run.q, f.weights());
    out.q = JointTable(f.schema(), std::move(run.q), TableKind::distribution);
    out.iterations = run.iterations;
    out.residuals = std::move(run.residuals);
    out.converged = run.converged;
    for (const auto& c : spec.constraints) out.constraint_names.push_back(c.name);
    return out;
}

namespace detail {

inline std::vector<std::string> var_names(const Schema& s, std::span<const std::size_t> axes) {
    std::vector<std::string> out;
    for (std::size_t a : axes) out.push_back(s.variable(a).name);
    return out;
}

// Product target f_A (x) f_B over the union of two axis groups, laid out on
// the union's canonical sub-schema.
inline MarginalConstraint product_constraint(std::string name, const JointTable& f,
                                             std::span<const std::size_t> axes_a,
                                             std::span<const std::size_t> axes_b) {
    std::vector<std::size_t> axes(axes_a.begin(), axes_a.end());
    axes.insert(axes.end(), axes_b.begin(), axes_b.end());
    std::sort(axes.begin(), axes.end());
    const Schema sub = f.schema().subset(axes);

    const JointTable fa = detail::marginal_over_axes(f, axes_a);
    const JointTable fb = detail::marginal_over_axes(f, axes_b);

    // Positions of each group's variables inside the union sub-schema.
    std::vector<std::size_t> pos_a, pos_b;
    for (std::size_t i = 0; i < axes.size(); ++i) {
        if (std::find(axes_a.begin(), axes_a.end(), axes[i]) != axes_a.end())
            pos_a.push_back(i);
        else
            pos_b.push_back(i);
    }
    const auto map_a = detail::subset_cellmap(sub, pos_a);
    const auto map_b = detail::subset_cellmap(sub, pos_b);

    std::vector<double> w(sub.cell_count());
    for (std::size_t m = 0; m < w.size(); ++m)
        w[m] = fa.weight(map_a[m]) * fb.weight(map_b[m]);
    return MarginalConstraint{std::move(name), var_names(f.schema(), axes),
                              JointTable(sub, std::move(w), TableKind::distribution)};
}

inline MarginalConstraint marginal_constraint(std::string name, const JointTable& f,
                                              std::span<const std::size_t> axes) {
    std::vector<std::size_t> sorted(axes.begin(), axes.end());
    std::sort(sorted.begin(), sorted.end());
    return MarginalConstraint{std::move(name), var_names(f.schema(), sorted),
                              detail::marginal_over_axes(f, sorted)};
}

struct StudyAxes {
    std::vector<std::size_t> y, x, s;
};

inline StudyAxes study_axes(const JointTable& f) {
    f.schema().require_study_roles();
    if (f.kind() != TableKind::distribution)
        throw TableError("projection expects a distribution; call normalize first");
    return {f.schema().axes_with_role(Role::outcome),
            f.schema().axes_with_role(Role::independent),
            f.schema().axes_with_role(Role::confounder)};
}

}  // namespace detail

// Parity + realism: group assignment independent of confounders, with the
// joint outcome/confounder distribution held at its observed value.
inline ProjectionResult pr_projection(const JointTable& f, double tolerance = 1e-10,
                                      int max_iterations = 10000) {
    const auto ax = detail::study_axes(f);
    ProjectionSpec spec;
    spec.constraints.push_back(
        detail::product_constraint("structural-parity", f, ax.x, ax.s));
    std::vector<std::size_t> ys(ax.y);
    ys.insert(ys.end(), ax.s.begin(), ax.s.end());
    spec.constraints.push_back(detail::marginal_constraint("confounder-realism", f, ys));
    spec.tolerance = tolerance;
    spec.max_iterations = max_iterations;
    return ipf_fit(f, spec);
}

// Parity + overall outcome prevalence only; the confounder/outcome joint is
// free to drift.
inline ProjectionResult parity_only_projection(const JointTable& f, double tolerance = 1e-10,
                                               int max_iterations = 10000) {
    const auto ax = detail::study_axes(f);
    ProjectionSpec spec;
    spec.constraints.push_back(
        detail::product_constraint("structural-parity", f, ax.x, ax.s));
    spec.constraints.push_back(
        detail::marginal_constraint("outcome-prevalence", f, ax.y));
    spec.tolerance = tolerance;
    spec.max_iterations = max_iterations;
    return ipf_fit(f, spec);
}

// Maximum-entropy table with all three pairwise marginals of f: IPF from a
// uniform start. divergence is still measured against f and is +inf when
// the fit puts mass on cells f assigns zero.
inline ProjectionResult logit_projection(const JointTable& f, double tolerance = 1e-10,
                                         int max_iterations = 10000) {
    const auto ax = detail::study_axes(f);
    std::vector<std::size_t> xs(ax.x), yx(ax.y), ys(ax.y);
    xs.insert(xs.end(), ax.s.begin(), ax.s.end());
    yx.insert(yx.end(), ax.x.begin(), ax.x.end());
    ys.insert(ys.end(), ax.s.begin(), ax.s.end());

    std::vector<MarginalConstraint> constraints;
    constraints.push_back(detail::marginal_constraint("pairwise-group-confounder", f, xs));
    constraints.push_back(detail::marginal_constraint("pairwise-outcome-group", f, yx));
    constraints.push_back(detail::marginal_constraint("pairwise-outcome-confounder", f, ys));

    const auto cons = detail::compile_constraints(f.schema(), constraints);
    std::vector<double> uniform(f.schema().cell_count(),
                                1.0 / static_cast<double>(f.schema().cell_count()));
    auto run = detail::ipf_run(std::move(uniform), cons, tolerance, max_iterations);

    ProjectionResult out;
    out.divergence = detail::divergence_allow_inf(run.q, f.weights());
    out.q = JointTable(f.schema(), std::move(run.q), TableKind::distribution);
    out.iterations = run.iterations;
    out.residuals = std::move(run.residuals);
    out.converged = run.converged;
    for (const auto& c : constraints) out.constraint_names.push_back(c.name);
    return out;
}

// Outcome distribution per intervention group under the projected table.
inline ConditionalTable hypothetical_conditional(const ProjectionResult& result) {
    const Schema& s = result.q.schema();
    const auto y = s.axes_with_role(Role::outcome);
    const auto x = s.axes_with_role(Role::independent);
    if (y.empty() || x.empty())
        throw SchemaError("hypothetical_conditional needs outcome and independent variables");
    std::vector<std::string> yv, xv;
    for (auto a : y) yv.push_back(s.variable(a).name);
    for (auto a : x) xv.push_back(s.variable(a).name);
    return conditional(result.q, std::span<const std::string>(yv),
                       std::span<const std::string>(xv));
}

}  // namespace deconf
