// Acceptance gate: one pass/fail line per criterion, exit code counts the
// failures. Heavier than the unit suite; meant to run under ctest or by hand.
// DECONF_REPLICATES raises the resampling volume (default 100000).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "deconf/csv.hpp"
#include "deconf/datasets.hpp"
#include "deconf/effects.hpp"
#include "deconf/projection.hpp"
#include "deconf/simulate.hpp"
#include "deconf/table.hpp"

using namespace deconf;

namespace {

struct Criterion {
    std::vector<std::string> notes;
    bool ok() const { return notes.empty(); }

    void expect(bool cond, const std::string& what) {
        if (!cond) notes.push_back(what);
    }
    void near(double got, double want, double margin, const std::string& what) {
        if (!(std::fabs(got - want) <= margin)) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s: got %.9g, want %.9g (margin %.2g)",
                          what.c_str(), got, want, margin);
            notes.push_back(buf);
        }
    }
    void near_rel(double got, double want, double rel, const std::string& what) {
        if (!(std::fabs(got / want - 1.0) <= rel)) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s: got %.9g, want %.9g (rel %.2g)",
                          what.c_str(), got, want, rel);
            notes.push_back(buf);
        }
    }
};

// Published adjusted columns for the packaged studies, six decimals each.
constexpr double kTubPr[8] = {0.027413, 0.944682, 0.000735, 0.025297,
                              0.000134, 0.001695, 0.000002, 0.000041};
constexpr double kTubLogit[8] = {0.018638, 0.953473, 0.009511, 0.016506,
                                 0.000100, 0.001714, 0.000037, 0.000022};
constexpr double kStrepPr[24] = {0, 0,        0.036335, 0.038431, 0.045886, 0.019534,
                                 0.044951, 0.076544, 0.140798, 0.083501, 0, 0.065421,
                                 0, 0,        0.036335, 0.038431, 0.050943, 0.014478,
                                 0.026269, 0.067189, 0.104463, 0.026378, 0, 0.084112};
constexpr double kKidneyPr[16] = {0.029433, 0.128444, 0.003634, 0.171484,
                                  0.032787, 0.078401, 0.010006, 0.113324,
                                  0.052872, 0.115594, 0.026192, 0.160672,
                                  0.005721, 0.030861, 0.006868, 0.033708};

std::uint64_t replicate_count() {
    if (const char* env = std::getenv("DECONF_REPLICATES")) {
        const unsigned long long v = std::strtoull(env, nullptr, 10);
        if (v >= 1) return v;
    }
    return 100000;
}

// 1. Golden projections: both adjusted tuberculosis columns cell by cell.
void c1_golden_projections(Criterion& c) {
    const JointTable f = normalize(builtin("tuberculosis1910"));
    const ProjectionResult pr = pr_projection(f);
    const ProjectionResult lg = logit_projection(f);
    c.expect(pr.converged, "pr projection did not converge");
    c.expect(lg.converged, "logit projection did not converge");
    for (std::size_t i = 0; i < 8; ++i) {
        c.near(pr.q.weight(i), kTubPr[i], 2e-6, "pr cell " + std::to_string(i));
        c.near(lg.q.weight(i), kTubLogit[i], 2e-6, "logit cell " + std::to_string(i));
    }
}

// 2. Odds-ratio chain on the tuberculosis study.
void c2_odds_ratio_chain(Criterion& c) {
    const JointTable counts = builtin("tuberculosis1910");
    const JointTable f = normalize(counts);
    const Profile new_york{{"place", "New York"}};
    const Profile richmond{{"place", "Richmond"}};

    const auto emp = intervention_or(counts, "died", new_york);
    c.near(emp[1].value.value(), 1.2, 0.05, "empirical OR");

    const ProjectionResult pr = pr_projection(f, 1e-12);
    const auto adj = intervention_or(pr.q, "died", new_york);
    c.near(adj[1].value.value(), 0.882, 0.001, "pr OR");

    const ProjectionResult po = parity_only_projection(f, 1e-12);
    const auto pos = intervention_or(po.q, "died", new_york);
    c.near(pos[1].value.value(), 0.879, 0.001, "parity-only OR");

    const double want_strat[2] = {0.59, 0.90};
    const char* eth[2] = {"African American", "White"};
    for (int i = 0; i < 2; ++i) {
        const Profile stratum{{"ethnicity", eth[i]}};
        const auto of = stratified_or(counts, "died", richmond, new_york, stratum);
        const auto oq = stratified_or(pr.q, "died", richmond, new_york, stratum);
        if (!of || !oq) {
            c.expect(false, std::string("stratified OR undefined in ") + eth[i]);
            continue;
        }
        c.near(*of, want_strat[i], 0.01, std::string("stratified OR ") + eth[i]);
        c.expect(std::fabs(*oq / *of - 1.0) <= 1e-8,
                 std::string("stratified OR not preserved in ") + eth[i]);
    }

    const auto oa = odds(counts, "died", {{"ethnicity", "African American"}});
    const auto ow = odds(counts, "died", {{"ethnicity", "White"}});
    c.near(oa.value() / ow.value(), 2.71, 0.01, "ethnicity-mortality OR");

    const ProjectionResult lg = logit_projection(f, 1e-12);
    const auto la = stratified_or(lg.q, "died", richmond, new_york,
                                  {{"ethnicity", "African American"}});
    const auto lw = stratified_or(lg.q, "died", richmond, new_york, {{"ethnicity", "White"}});
    c.near(la.value(), 0.726, 0.001, "logit stratified OR (African American)");
    c.near(lw.value(), 0.726, 0.001, "logit stratified OR (White)");
    const auto lm = intervention_or(lg.q, "died", new_york);
    c.near(lm[1].value.value(), 1.20, 0.005, "logit marginal OR");

    const auto strata = strata_2x2(counts, "died", richmond, new_york);
    c.near(mantel_haenszel_or(strata), 0.73, 0.01, "MH pooled OR");
}

// 3. Streptomycin: adjusted cells, OR shift, parity counts, prevalences,
//    sparse stratified OR pattern, risk-reduction grid.
void c3_streptomycin(Criterion& c) {
    const JointTable counts = builtin("streptomycin1948");
    const JointTable f = normalize(counts);
    const Profile control{{"treatment", "control"}};
    const Profile strep{{"treatment", "streptomycin"}};

    const ProjectionResult pr = pr_projection(f, 1e-12);
    for (std::size_t i = 0; i < 24; ++i)
        c.near(pr.q.weight(i), kStrepPr[i], 2e-6, "pr cell " + std::to_string(i));

    c.near(intervention_or(counts, "yes", control)[1].value.value(), 4.60, 0.01,
           "empirical OR");
    c.near(intervention_or(pr.q, "yes", control)[1].value.value(), 6.12, 0.01, "pr OR");

    // Parity counts N * q(s | x) per confounder profile, identical per arm.
    const double want_counts[6] = {8, 20, 31, 8, 17, 23};
    const ConditionalTable mix = conditional(pr.q, {"gender", "baseline"}, {"treatment"});
    for (std::size_t g = 0; g < 2; ++g) {
        if (!mix.defined(g)) {
            c.expect(false, "confounder mix undefined in arm " + std::to_string(g));
            continue;
        }
        for (std::size_t s = 0; s < 6; ++s)
            c.near(107.0 * mix.probability(g, s), want_counts[s], 1e-6,
                   "parity count arm " + std::to_string(g) + " cell " + std::to_string(s));
    }

    // Group and outcome prevalences: 52 vs 55 on both margins.
    const JointTable qx = marginal(pr.q, {"treatment"});
    c.near(107.0 * qx.at({"control"}), 52.0, 1e-6, "control prevalence");
    c.near(107.0 * qx.at({"streptomycin"}), 55.0, 1e-6, "streptomycin prevalence");
    const JointTable qy = marginal(pr.q, {"improved"});
    c.near(107.0 * qy.at({"no"}), 52.0, 1e-6, "unimproved prevalence");
    c.near(107.0 * qy.at({"yes"}), 55.0, 1e-6, "improved prevalence");

    // Stratified ORs of control against streptomycin: two gaps, two zeros,
    // 1/4 and 1/9, reproduced exactly on both the data and the projection.
    const struct {
        const char* gender;
        const char* baseline;
        bool defined;
        double value;
    } strat[6] = {
        {"female", "good", false, 0.0}, {"female", "fair", true, 0.25},
        {"female", "poor", true, 0.0},  {"male", "good", false, 0.0},
        {"male", "fair", true, 1.0 / 9.0}, {"male", "poor", true, 0.0},
    };
    for (const auto& e : strat) {
        const Profile stratum{{"gender", e.gender}, {"baseline", e.baseline}};
        for (const JointTable* t : {&counts, &pr.q}) {
            const auto v = stratified_or(*t, "yes", control, strep, stratum);
            const std::string tag =
                std::string(e.gender) + "/" + e.baseline + (t == &counts ? " (data)" : " (pr)");
            if (v.has_value() != e.defined) {
                c.expect(false, "stratified OR definedness wrong at " + tag);
            } else if (e.defined) {
                c.near(*v, e.value, t == &counts ? 1e-12 : 1e-8, "stratified OR " + tag);
            }
        }
    }

    // Published risk-reduction grid, in rounded percentage points.
    const struct {
        const char* gender;
        const char* baseline;
        double f_pct, q_pct;
    } grid[6] = {
        {"female", "good", 0, 0},  {"female", "fair", 30, 30}, {"female", "poor", 41, 44},
        {"male", "good", 0, 0},    {"male", "fair", 46, 48},   {"male", "poor", 69, 76},
    };
    for (const auto& e : grid) {
        const Profile stratum{{"gender", e.gender}, {"baseline", e.baseline}};
        c.near(100.0 * arr(counts, "no", strep, control, &stratum), e.f_pct, 1.0,
               std::string("arr (data) ") + e.gender + "/" + e.baseline);
        c.near(100.0 * arr(pr.q, "no", strep, control, &stratum), e.q_pct, 1.0,
               std::string("arr (pr) ") + e.gender + "/" + e.baseline);
    }
}

// 4. Kidney stones: adjusted cells, OR panels, composition ratios, the exact
//    stone-size margin, and the pooled baseline.
void c4_kidney(Criterion& c) {
    const JointTable counts = builtin("kidney1986");
    const JointTable f = normalize(counts);
    const Profile pn{{"treatment", "percutaneous nephrolithotomy"}};

    const ProjectionResult pr = pr_projection(f, 1e-12);
    for (std::size_t i = 0; i < 16; ++i)
        c.near(pr.q.weight(i), kKidneyPr[i], 2e-6, "pr cell " + std::to_string(i));

    const double emp_or[4] = {2.35, 0.54, 1.0, 1.13};
    const double adj_or[4] = {2.60, 1.28, 1.0, 1.47};
    const auto fors = intervention_or(counts, "successful=yes", pn);
    const auto qors = intervention_or(pr.q, "successful=yes", pn);
    for (int g = 0; g < 4; ++g) {
        if (g == 2) continue;  // reference
        c.near(fors[g].value.value(), emp_or[g], 0.01, "empirical OR group " + std::to_string(g));
        c.near(qors[g].value.value(), adj_or[g], 0.01, "pr OR group " + std::to_string(g));
    }

    // Large-to-small mix per treatment arm.
    const ConditionalTable mix = conditional(counts, {"stone_size"}, {"treatment"});
    const char* groups[4] = {"ESWL", "nephrolithotomy/pyelolithotomy",
                             "percutaneous nephrolithotomy", "pyelolithotomy"};
    const double het[4] = {0.61, 16.77, 0.30, 1.45};
    for (int g = 0; g < 4; ++g) {
        const auto large = mix.at({groups[g]}, {"large"});
        const auto small = mix.at({groups[g]}, {"small"});
        if (!large || !small || *small == 0.0) {
            c.expect(false, std::string("composition undefined for ") + groups[g]);
            continue;
        }
        c.near(*large / *small, het[g], 0.01, std::string("heterogeneity ") + groups[g]);
    }

    const JointTable qs = marginal(pr.q, {"stone_size"});
    c.expect(std::fabs(qs.at({"large"}) / qs.at({"small"}) - 467.0 / 518.0) <= 1e-9,
             "stone-size ratio 467/518 not preserved");

    const double mh[4] = {3.37, 1.14, 1.0, 1.54};
    for (int g = 0; g < 4; ++g) {
        if (g == 2) continue;
        const auto strata = strata_2x2(counts, "yes", {{"treatment", groups[g]}}, pn);
        c.near(mantel_haenszel_or(strata), mh[g], 0.01,
               std::string("MH OR ") + groups[g]);
    }
}

// 5. Significance of the collapsed comparisons.
void c5_significance(Criterion& c) {
    const StratumTable2x2 tub{155 + 131, 46578 + 80764, 513 + 8365, 91196 + 4666809, {}};
    c.near_rel(fisher_exact_2x2(tub), 0.0025, 0.15, "tuberculosis Fisher p");

    const StratumTable2x2 strep{38, 17, 17, 35, {}};
    c.near_rel(fisher_exact_2x2(strep), 0.0002, 0.15, "streptomycin Fisher p");

    const auto chi = chi_square_independence(builtin("kidney1986"), {"stone_size"},
                                             {"successful"});
    c.expect(chi.p_value < 1e-11, "kidney stone-size chi-square p not under 1e-11");
}

// 6. Distribution-free properties on random feasible studies.
void c6_properties(Criterion& c) {
    std::mt19937_64 rng(813020);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::uniform_int_distribution<int> ny(2, 4), nx(2, 3), ns(2, 3);

    auto levels = [](int n, const char* stem) {
        std::vector<std::string> out;
        for (int i = 0; i < n; ++i) out.push_back(std::string(stem) + std::to_string(i));
        return out;
    };
    auto random_table = [&](const Schema& schema) {
        std::vector<double> w(schema.cell_count());
        double sum = 0.0;
        for (double& x : w) sum += (x = u(rng));
        for (double& x : w) x /= sum;
        return JointTable(schema, std::move(w), TableKind::distribution);
    };

    for (int trial = 0; trial < 200 && c.ok(); ++trial) {
        const Schema schema({{"y", Role::outcome, levels(ny(rng), "y")},
                             {"x", Role::independent, levels(nx(rng), "x")},
                             {"s", Role::confounder, levels(ns(rng), "s")}});
        const JointTable f = random_table(schema);
        const ProjectionResult r = pr_projection(f);
        c.expect(r.converged, "trial " + std::to_string(trial) + " did not converge");
        for (double res : r.residuals)
            c.expect(res <= 1e-10, "trial " + std::to_string(trial) + " residual above 1e-10");
        for (std::size_t i = 0; i < f.size(); ++i)
            c.expect(r.q.weight(i) > 0.0,
                     "trial " + std::to_string(trial) + " support not preserved");

        const std::size_t NY = schema.level_count(0), NX = schema.level_count(1),
                          NS = schema.level_count(2);
        auto cell = [&](std::size_t y, std::size_t x, std::size_t s) {
            return (y * NX + x) * NS + s;
        };
        for (std::size_t s = 0; s < NS; ++s)
            for (std::size_t y = 1; y < NY; ++y)
                for (std::size_t x = 1; x < NX; ++x) {
                    const double cf = f.weight(cell(0, 0, s)) * f.weight(cell(y, x, s)) /
                                      (f.weight(cell(0, x, s)) * f.weight(cell(y, 0, s)));
                    const double cq =
                        r.q.weight(cell(0, 0, s)) * r.q.weight(cell(y, x, s)) /
                        (r.q.weight(cell(0, x, s)) * r.q.weight(cell(y, 0, s)));
                    c.expect(std::fabs(cq / cf - 1.0) <= 1e-8,
                             "trial " + std::to_string(trial) + " cross-ratio drifted");
                }
    }

    // Pythagorean identity around the streptomycin projection.
    {
        const JointTable f = normalize(builtin("streptomycin1948"));
        const ProjectionResult proj = pr_projection(f, 1e-13);
        const auto ax = detail::study_axes(f);
        ProjectionSpec spec;
        spec.constraints.push_back(
            detail::product_constraint("structural-parity", f, ax.x, ax.s));
        std::vector<std::size_t> ys(ax.y);
        ys.insert(ys.end(), ax.s.begin(), ax.s.end());
        spec.constraints.push_back(detail::marginal_constraint("confounder-realism", f, ys));
        spec.tolerance = 1e-13;

        std::uniform_real_distribution<double> mul(0.2, 2.0);
        std::vector<double> w(f.weights().begin(), f.weights().end());
        double sum = 0.0;
        for (double& x : w) sum += (x *= mul(rng));
        for (double& x : w) x /= sum;
        const ProjectionResult member =
            ipf_fit(JointTable(f.schema(), std::move(w), TableKind::distribution), spec);
        const double lhs = kl_divergence(member.q, f);
        const double rhs =
            kl_divergence(member.q, proj.q) + kl_divergence(proj.q, f);
        c.expect(std::fabs(lhs - rhs) <= 1e-8, "Pythagorean identity violated");
    }

    // Idempotence on the packaged studies.
    for (const char* name : {"tuberculosis1910", "streptomycin1948", "kidney1986"}) {
        const ProjectionResult first = pr_projection(normalize(builtin(name)));
        const ProjectionResult again = pr_projection(first.q);
        for (std::size_t i = 0; i < first.q.size(); ++i)
            c.expect(std::fabs(again.q.weight(i) - first.q.weight(i)) <= 1e-10,
                     std::string("projection of ") + name + " is not idempotent");
    }

    // Grid-search oracle on random two-level studies: each confounder slice
    // has one free parameter, pinned by ternary search on the divergence.
    const Schema two({{"y", Role::outcome, {"y0", "y1"}},
                      {"x", Role::independent, {"x0", "x1"}},
                      {"s", Role::confounder, {"s0", "s1"}}});
    for (int trial = 0; trial < 200 && c.ok(); ++trial) {
        const JointTable f = random_table(two);
        const ProjectionResult r = pr_projection(f, 1e-13);
        const JointTable fx = marginal(f, {"x"});
        const JointTable fs = marginal(f, {"s"});
        const JointTable fys = marginal(f, {"y", "s"});
        auto cell = [](std::size_t y, std::size_t x, std::size_t s) {
            return y * 4 + x * 2 + s;
        };
        for (std::size_t s = 0; s < 2; ++s) {
            const double b0 = fys.weight(s), b1 = fys.weight(2 + s);
            const double a0 = fx.weight(0) * fs.weight(s);
            const auto divergence = [&](double t) {
                const double p[4] = {t, b0 - t, a0 - t, b1 - (a0 - t)};
                const double fr[4] = {f.weight(cell(0, 0, s)), f.weight(cell(0, 1, s)),
                                      f.weight(cell(1, 0, s)), f.weight(cell(1, 1, s))};
                double d = 0.0;
                for (int k = 0; k < 4; ++k)
                    if (p[k] > 0.0) d += p[k] * std::log(p[k] / fr[k]);
                return d;
            };
            double lo = std::max(0.0, a0 - b1), hi = std::min(a0, b0);
            for (int it = 0; it < 200; ++it) {
                const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
                if (divergence(m1) < divergence(m2))
                    hi = m2;
                else
                    lo = m1;
            }
            const double t = 0.5 * (lo + hi);
            const double oracle[4] = {t, b0 - t, a0 - t, b1 - (a0 - t)};
            const std::size_t cells[4] = {cell(0, 0, s), cell(0, 1, s), cell(1, 0, s),
                                          cell(1, 1, s)};
            for (int k = 0; k < 4; ++k)
                c.expect(std::fabs(r.q.weight(cells[k]) - oracle[k]) <= 1e-6,
                         "trial " + std::to_string(trial) + " differs from the grid oracle");
        }
    }
}

// 7. Resampling: parity recovered in expectation, bit-stable reruns, and
//    odds-ratio spread shrinking with study size.
void c7_resampling(Criterion& c) {
    const JointTable q = pr_projection(normalize(builtin("streptomycin1948"))).q;
    const std::uint64_t R = replicate_count();

    ReplicateConfig cfg;
    cfg.n_subjects = 107;
    cfg.n_replicates = R;
    cfg.seed = 0;
    cfg.metrics = parity_metrics(q.schema());

    const JointTable f_s =
        detail::marginal_over_axes(q, q.schema().axes_with_role(Role::confounder));

    const FluctuationSummary run1 = replicate_metrics(q, cfg);
    for (std::size_t m = 0; m < run1.metrics.size(); ++m) {
        const MetricSummary& s = run1.metrics[m];
        if (s.empty()) {
            c.expect(false, s.name + " never defined");
            continue;
        }
        const double se = s.sd / std::sqrt(double(s.defined_count));
        c.expect(std::fabs(s.mean - f_s.weight(m / 2)) <= 4.0 * se,
                 s.name + " mean outside 4 MC SE of the confounder law");
    }

    const FluctuationSummary run2 = replicate_metrics(q, cfg);
    bool identical = run1.metrics.size() == run2.metrics.size();
    for (std::size_t m = 0; identical && m < run1.metrics.size(); ++m) {
        const MetricSummary &a = run1.metrics[m], &b = run2.metrics[m];
        identical = a.defined_count == b.defined_count && a.min == b.min && a.q1 == b.q1 &&
                    a.median == b.median && a.q3 == b.q3 && a.max == b.max &&
                    a.mean == b.mean && a.sd == b.sd;
    }
    c.expect(identical, "summaries differ between fixed-seed reruns");

    const JointTable s1 = sample_study(q, 107, 42);
    const JointTable s2 = sample_study(q, 107, 42);
    for (std::size_t i = 0; i < s1.size(); ++i)
        c.expect(s1.weight(i) == s2.weight(i), "sampled studies differ at a fixed seed");

    auto or_sd = [&](std::uint64_t n) {
        ReplicateConfig oc;
        oc.n_subjects = n;
        oc.n_replicates = R;
        oc.seed = 0;
        oc.metrics = or_metrics(q.schema(), "yes", Profile{{"treatment", "control"}});
        return replicate_metrics(q, oc).metrics[0].sd;
    };
    const double sd1 = or_sd(107), sd10 = or_sd(1070), sd100 = or_sd(10700);
    c.expect(sd1 > sd10 && sd10 > sd100, "odds-ratio spread not shrinking with study size");
}

// 8. A seven-country, nine-band synthetic table through the generic loader:
//    parity residuals vanish and the pooled confounder law leans toward the
//    dominant country.
void c8_synthetic_ingest(Criterion& c) {
    const int countries = 7, bands = 9;
    const double population[7] = {500000, 3000, 5000, 8000, 12000, 20000, 30000};

    std::string csv = "country,age_band,outcome,count\n";
    auto add = [&](int k, int a, const char* outcome, double count) {
        csv += "c" + std::to_string(k) + ",a" + std::to_string(a) + "," + outcome + "," +
               std::to_string(std::max<long long>(1, (long long)std::llround(count))) + "\n";
    };
    for (int k = 0; k < countries; ++k) {
        // Dominant country skews old; the rest skew young in varied ways.
        std::vector<double> w(bands);
        double sum = 0.0;
        for (int a = 0; a < bands; ++a)
            sum += (w[a] = k == 0 ? double((a + 1) * (a + 1))
                                  : double(bands - a) + 0.5 * ((a * (k + 2)) % 5));
        for (int a = 0; a < bands; ++a) {
            const double subjects = population[k] * w[a] / sum;
            const double rate = 0.001 * std::pow(1.9, a);  // mortality climbs with age
            add(k, a, "died", subjects * rate);
            add(k, a, "survived", subjects * (1.0 - rate));
        }
    }
    const std::string path = "/tmp/deconf_acceptance_synthetic.csv";
    {
        std::ofstream out(path);
        out << csv;
    }

    TableFileSpec spec;
    spec.path = path;
    spec.outcome = "outcome";
    spec.independents = {"country"};
    spec.confounders = {"age_band"};
    const JointTable f = load_csv(spec);
    std::remove(path.c_str());

    c.expect(f.schema().variable_count() == 3, "loader produced the wrong shape");
    c.expect(f.schema().level_count(0) == 7 && f.schema().level_count(1) == 9 &&
                 f.schema().level_count(2) == 2,
             "loader produced the wrong level counts");

    const ProjectionResult r = pr_projection(normalize(f));
    c.expect(r.converged, "projection did not converge");
    for (std::size_t i = 0; i < r.residuals.size(); ++i)
        c.expect(r.residuals[i] <= 1e-10,
                 r.constraint_names[i] + " residual above 1e-10");

    // Parity: every country sees the pooled age law...
    const JointTable f_s = normalize(marginal(f, {"age_band"}));
    const ConditionalTable q_mix = conditional(r.q, {"age_band"}, {"country"});
    for (int k = 0; k < countries; ++k)
        for (int a = 0; a < bands; ++a)
            c.expect(std::fabs(q_mix.probability(k, a) - f_s.weight(a)) <= 1e-9,
                     "parity mix off for country " + std::to_string(k));

    // ...and that law sits closest to the dominant country's own profile.
    const ConditionalTable f_mix = conditional(f, {"age_band"}, {"country"});
    auto l1_to_pool = [&](int k) {
        double d = 0.0;
        for (int a = 0; a < bands; ++a) d += std::fabs(f_mix.probability(k, a) - f_s.weight(a));
        return d;
    };
    const double dominant = l1_to_pool(0);
    for (int k = 1; k < countries; ++k)
        c.expect(dominant < l1_to_pool(k),
                 "pooled age law not dominated by the largest country");
}

struct Entry {
    int number;
    const char* title;
    std::function<void(Criterion&)> fn;
    double budget_seconds;  // 0 = no budget
};

}  // namespace

int main() {
    const std::vector<Entry> entries = {
        {1, "tuberculosis golden projections", c1_golden_projections, 1.0},
        {2, "tuberculosis odds-ratio chain", c2_odds_ratio_chain, 0.0},
        {3, "streptomycin adjustments", c3_streptomycin, 0.0},
        {4, "kidney stone adjustments", c4_kidney, 0.0},
        {5, "collapsed-table significance", c5_significance, 0.0},
        {6, "projection property suite", c6_properties, 60.0},
        {7, "resampling harness", c7_resampling, 120.0},
        {8, "synthetic country-age ingest", c8_synthetic_ingest, 0.0},
    };

    int failed = 0;
    for (const auto& e : entries) {
        Criterion c;
        const auto start = std::chrono::steady_clock::now();
        try {
            e.fn(c);
        } catch (const std::exception& ex) {
            c.expect(false, std::string("exception: ") + ex.what());
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (e.budget_seconds > 0.0 && elapsed > e.budget_seconds) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "runtime %.1f s exceeds budget %.0f s", elapsed,
                          e.budget_seconds);
            c.expect(false, buf);
        }
        std::printf("%d. %-34s %s  [%.2f s]\n", e.number, e.title,
                    c.ok() ? "PASS" : "FAIL", elapsed);
        if (!c.ok()) {
            ++failed;
            const std::size_t show = c.notes.size() < 8 ? c.notes.size() : 8;
            for (std::size_t i = 0; i < show; ++i)
                std::printf("   - %s\n", c.notes[i].c_str());
            if (c.notes.size() > show)
                std::printf("   - (%zu more)\n", c.notes.size() - show);
        }
    }
    return failed;
}
