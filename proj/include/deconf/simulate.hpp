#pragma once

/***
 * Multinomial study resampling.
 *
 * Replicate studies are drawn from a fitted distribution q with mult(n; q)
 * and summarized per metric. The random stream is SplitMix64; replicate r
 * runs on an independent substream derived from (seed, r), so results do not
 * depend on evaluation order. Bit-identical output for identical inputs is
 * guaranteed within this implementation, not across implementations.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "deconf/effects.hpp"
#include "deconf/errors.hpp"
#include "deconf/table.hpp"

namespace deconf {

// SplitMix64: 64-bit counter-based generator (Steele, Lea, Flood 2014).
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t next() noexcept {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Independent stream for replicate `index` of a run keyed by `seed`.
    static SplitMix64 substream(std::uint64_t seed, std::uint64_t index) noexcept {
        return SplitMix64(mix(seed + 0x9E3779B97F4A7C15ull) ^
                          mix(index * 0xBF58476D1CE4E5B9ull + 0x94D049BB133111EBull));
    }

  private:
    std::uint64_t state_;
};

namespace detail {

// Exact binomial draw by inversion from the mode: one uniform per draw, then
// a zig-zag walk outward from the mode accumulating pmf terms through ratio
// recurrences. Expected O(sqrt(n p (1-p))) steps. Degenerate cases consume
// no randomness.
inline std::uint64_t binomial_draw(std::uint64_t n, double p, SplitMix64& rng) {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    const double u = rng.uniform01();
    const double nd = static_cast<double>(n);
    const double q = 1.0 - p;
    const double mode_d = std::floor((nd + 1.0) * p);
    const std::uint64_t mode = static_cast<std::uint64_t>(std::min(mode_d, nd));

    const double md = static_cast<double>(mode);
    double log_pm = std::lgamma(nd + 1.0) - std::lgamma(md + 1.0) -
                    std::lgamma(nd - md + 1.0) + md * std::log(p) + (nd - md) * std::log(q);
    const double pm = std::exp(log_pm);

    double cum = pm;
    if (u < cum) return mode;

    const double up_ratio = p / q;
    double lo = md, hi = md;       // current walk edges
    double pmf_lo = pm, pmf_hi = pm;
    std::uint64_t last = mode;
    bool can_up = mode < n, can_down = mode > 0;
    bool go_up = true;
    while (can_up || can_down) {
        if (go_up && !can_up) go_up = false;
        if (!go_up && !can_down) go_up = true;
        if (go_up) {
            pmf_hi *= (nd - hi) / (hi + 1.0) * up_ratio;
            hi += 1.0;
            cum += pmf_hi;
            last = static_cast<std::uint64_t>(hi);
            can_up = hi < nd;
        } else {
            pmf_lo *= lo / (nd - lo + 1.0) / up_ratio;
            lo -= 1.0;
            cum += pmf_lo;
            last = static_cast<std::uint64_t>(lo);
            can_down = lo > 0.0;
        }
        if (u < cum) return last;
        go_up = !go_up;
    }
    return last;  // u landed in the float-rounding sliver past the total mass
}

// Sequential conditional-binomial multinomial over cells in index order.
// Zero-probability cells consume no randomness; the last positive cell takes
// the remainder, so counts always sum exactly to n.
inline void multinomial_draw(std::span<const double> probs, std::uint64_t n, SplitMix64& rng,
                             std::span<double> out) {
    std::size_t last = probs.size();
    for (std::size_t i = 0; i < probs.size(); ++i)
        if (probs[i] > 0.0) last = i;
    if (last == probs.size()) throw TableError("multinomial_draw: no positive cell");

    std::fill(out.begin(), out.end(), 0.0);
    double rem_p = 1.0;
    std::uint64_t rem_n = n;
    for (std::size_t i = 0; i <= last; ++i) {
        if (probs[i] <= 0.0) continue;
        if (i == last) {
            out[i] = static_cast<double>(rem_n);
            return;
        }
        const double pc = std::clamp(probs[i] / rem_p, 0.0, 1.0);
        const std::uint64_t k = binomial_draw(rem_n, pc, rng);
        out[i] = static_cast<double>(k);
        rem_n -= k;
        rem_p -= probs[i];
    }
}

}  // namespace detail

// One study of n subjects drawn from q. Equals replicate 0 of a
// replicate_metrics run with the same seed.
inline JointTable sample_study(const JointTable& q, std::uint64_t n, std::uint64_t seed) {
    if (q.kind() != TableKind::distribution)
        throw TableError("sample_study expects a distribution");
    if (n < 1) throw TableError("sample_study needs n >= 1");
    SplitMix64 rng = SplitMix64::substream(seed, 0);
    std::vector<double> counts(q.size(), 0.0);
    detail::multinomial_draw(q.weights(), n, rng, counts);
    return JointTable(q.schema(), std::move(counts), TableKind::counts);
}

// A named statistic of one sampled study; nullopt marks it undefined for
// that replicate (zero cells at small n).
struct Metric {
    std::string name;
    std::function<std::optional<double>(const JointTable& counts)> eval;
};

struct ReplicateConfig {
    std::uint64_t n_subjects = 0;
    std::uint64_t n_replicates = 0;
    std::uint64_t seed = 0;
    std::vector<Metric> metrics;
};

struct MetricSummary {
    std::string name;
    std::uint64_t defined_count = 0;
    std::uint64_t undefined_count = 0;
    // Five-number summary plus mean/sd over the defined values; quartiles by
    // linear interpolation; fences at 1.5 IQR. Meaningless when empty().
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    double mean = 0, sd = 0;
    double fence_low = 0, fence_high = 0;
    bool empty() const { return defined_count == 0; }
};

struct FluctuationSummary {
    std::uint64_t n_subjects = 0;
    std::uint64_t n_replicates = 0;
    std::uint64_t seed = 0;
    std::vector<MetricSummary> metrics;
};

namespace detail {

inline double quantile_sorted(std::span<const double> v, double prob) {
    const double h = (static_cast<double>(v.size()) - 1.0) * prob;
    const std::size_t i = static_cast<std::size_t>(h);
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (h - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

inline MetricSummary summarize(std::string name, std::vector<double>& values,
                               std::uint64_t undefined) {
    MetricSummary s;
    s.name = std::move(name);
    s.defined_count = values.size();
    s.undefined_count = undefined;
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    s.q1 = quantile_sorted(values, 0.25);
    s.median = quantile_sorted(values, 0.5);
    s.q3 = quantile_sorted(values, 0.75);
    const double iqr = s.q3 - s.q1;
    s.fence_low = s.q1 - 1.5 * iqr;
    s.fence_high = s.q3 + 1.5 * iqr;
    double sum = 0.0;
    for (double x : values) sum += x;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double x : values) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

inline void validate_replicate_config(const JointTable& q, const ReplicateConfig& cfg) {
    if (q.kind() != TableKind::distribution)
        throw TableError("replication expects a distribution");
    if (cfg.n_subjects < 1) throw TableError("n_subjects must be at least 1");
    if (cfg.n_replicates < 1) throw TableError("n_replicates must be at least 1");
}

}  // namespace detail

// Draw cfg.n_replicates studies of cfg.n_subjects subjects each and
// summarize every metric's fluctuation across them.
inline FluctuationSummary replicate_metrics(const JointTable& q, const ReplicateConfig& cfg) {
    detail::validate_replicate_config(q, cfg);
    if (cfg.metrics.empty()) throw TableError("replicate_metrics needs at least one metric");

    std::vector<std::vector<double>> values(cfg.metrics.size());
    std::vector<std::uint64_t> undefined(cfg.metrics.size(), 0);
    for (auto& v : values) v.reserve(cfg.n_replicates);

    std::vector<double> counts(q.size(), 0.0);
    for (std::uint64_t r = 0; r < cfg.n_replicates; ++r) {
        SplitMix64 rng = SplitMix64::substream(cfg.seed, r);
        detail::multinomial_draw(q.weights(), cfg.n_subjects, rng, counts);
        JointTable study(q.schema(), counts, TableKind::counts);
        for (std::size_t m = 0; m < cfg.metrics.size(); ++m) {
            const auto v = cfg.metrics[m].eval(study);
            if (v)
                values[m].push_back(*v);
            else
                ++undefined[m];
        }
    }

    FluctuationSummary out;
    out.n_subjects = cfg.n_subjects;
    out.n_replicates = cfg.n_replicates;
    out.seed = cfg.seed;
    for (std::size_t m = 0; m < cfg.metrics.size(); ++m)
        out.metrics.push_back(detail::summarize(cfg.metrics[m].name, values[m], undefined[m]));
    return out;
}

struct ExpectationCheck {
    std::vector<double> mean_frequency;  // per cell, across replicates
    std::vector<double> z;               // (mean - q) / SE, SE = sqrt(q(1-q)/(nR))
    double max_abs_z = 0.0;
    double fraction_abs_z_below_3 = 0.0;
};

// Law-of-large-numbers check: per-cell z-scores of the empirical mean
// frequencies against q. Cells with q in {0, 1} are exact by construction
// and get z = 0.
inline ExpectationCheck expectation_check(const JointTable& q, const ReplicateConfig& cfg) {
    detail::validate_replicate_config(q, cfg);
    const std::size_t cells = q.size();
    std::vector<double> sum(cells, 0.0), counts(cells, 0.0);
    for (std::uint64_t r = 0; r < cfg.n_replicates; ++r) {
        SplitMix64 rng = SplitMix64::substream(cfg.seed, r);
        detail::multinomial_draw(q.weights(), cfg.n_subjects, rng, counts);
        for (std::size_t c = 0; c < cells; ++c) sum[c] += counts[c];
    }

    ExpectationCheck out;
    out.mean_frequency.resize(cells);
    out.z.resize(cells);
    const double n = static_cast<double>(cfg.n_subjects);
    const double big_r = static_cast<double>(cfg.n_replicates);
    std::size_t below = 0;
    for (std::size_t c = 0; c < cells; ++c) {
        const double mean = sum[c] / (big_r * n);
        out.mean_frequency[c] = mean;
        const double qc = q.weight(c);
        const double var = qc * (1.0 - qc) / (n * big_r);
        double z = 0.0;
        if (var > 0.0)
            z = (mean - qc) / std::sqrt(var);
        else if (mean != qc)
            z = std::numeric_limits<double>::infinity();
        out.z[c] = z;
        out.max_abs_z = std::max(out.max_abs_z, std::fabs(z));
        if (std::fabs(z) < 3.0) ++below;
    }
    out.fraction_abs_z_below_3 = static_cast<double>(below) / static_cast<double>(cells);
    return out;
}

// Ready-made metric sets for the standard fluctuation report. Each metric
// closes over precomputed cell-index maps, so evaluation is one pass over
// the sampled counts.

// p-hat(s | x) for every (confounder profile, group) pair: the sampled
// analogue of structural parity against f_S.
inline std::vector<Metric> parity_metrics(const Schema& schema) {
    const auto x_axes = schema.axes_with_role(Role::independent);
    const auto s_axes = schema.axes_with_role(Role::confounder);
    if (x_axes.empty() || s_axes.empty())
        throw SchemaError("parity metrics need independent and confounder variables");
    const Schema xs = schema.subset(x_axes);
    const Schema ss = schema.subset(s_axes);
    const auto x_map = detail::subset_cellmap(schema, x_axes);
    const auto s_map = detail::subset_cellmap(schema, s_axes);

    std::vector<Metric> out;
    for (std::size_t s = 0; s < ss.cell_count(); ++s) {
        for (std::size_t x = 0; x < xs.cell_count(); ++x) {
            std::string name = "parity[" + detail::join_labels(ss.cell_labels(s)) + "|" +
                               detail::join_labels(xs.cell_labels(x)) + "]";
            out.push_back(Metric{
                std::move(name),
                [s, x, x_map, s_map](const JointTable& t) -> std::optional<double> {
                    double grp = 0.0, both = 0.0;
                    const auto w = t.weights();
                    for (std::size_t c = 0; c < w.size(); ++c) {
                        if (x_map[c] != x) continue;
                        grp += w[c];
                        if (s_map[c] == s) both += w[c];
                    }
                    if (grp <= 0.0) return std::nullopt;
                    return both / grp;
                }});
        }
    }
    return out;
}

// p-hat(y, s) for every (outcome, confounder profile) pair: the sampled
// analogue of confounder realism against f_{Y,S}.
inline std::vector<Metric> realism_metrics(const Schema& schema) {
    const auto y_axes = schema.axes_with_role(Role::outcome);
    const auto s_axes = schema.axes_with_role(Role::confounder);
    if (y_axes.empty() || s_axes.empty())
        throw SchemaError("realism metrics need outcome and confounder variables");
    std::vector<std::size_t> ys(y_axes);
    ys.insert(ys.end(), s_axes.begin(), s_axes.end());
    const Schema sub = schema.subset(ys);
    const auto map = detail::subset_cellmap(schema, ys);

    std::vector<Metric> out;
    for (std::size_t m = 0; m < sub.cell_count(); ++m) {
        std::string name = "realism[" + detail::join_labels(sub.cell_labels(m)) + "]";
        out.push_back(Metric{
            std::move(name), [m, map](const JointTable& t) -> std::optional<double> {
                double mass = 0.0;
                const auto w = t.weights();
                for (std::size_t c = 0; c < w.size(); ++c)
                    if (map[c] == m) mass += w[c];
                if (t.total() <= 0.0) return std::nullopt;
                return mass / t.total();
            }});
    }
    return out;
}

// Sampled intervention odds ratio of each non-reference group against the
// reference: (a/b)/(c/d) on the collapsed 2x2; undefined whenever a needed
// denominator is zero in that replicate.
inline std::vector<Metric> or_metrics(const Schema& schema, std::string_view event_level,
                                      std::span<const std::size_t> reference_levels) {
    const auto y_axes = schema.axes_with_role(Role::outcome);
    const auto x_axes = schema.axes_with_role(Role::independent);
    if (y_axes.size() != 1 || x_axes.empty())
        throw SchemaError("or metrics need one outcome and independent variables");
    const std::size_t y_axis = y_axes[0];
    const std::size_t ev = schema.level_index(y_axis, event_level);
    const Schema xs = schema.subset(x_axes);
    if (reference_levels.size() != x_axes.size())
        throw SchemaError("reference needs one level per independent variable");
    const std::size_t ref = xs.pack(reference_levels);

    const auto x_map = detail::subset_cellmap(schema, x_axes);
    const std::vector<std::size_t> y_axis_span{y_axis};
    const auto y_map = detail::subset_cellmap(schema, y_axis_span);

    std::vector<Metric> out;
    for (std::size_t g = 0; g < xs.cell_count(); ++g) {
        if (g == ref) continue;
        std::string name = "intervention_or[" + detail::join_labels(xs.cell_labels(g)) +
                           " vs " + detail::join_labels(xs.cell_labels(ref)) + "]";
        out.push_back(Metric{
            std::move(name),
            [g, ref, ev, x_map, y_map](const JointTable& t) -> std::optional<double> {
                double a = 0, b = 0, c = 0, d = 0;
                const auto w = t.weights();
                for (std::size_t cell = 0; cell < w.size(); ++cell) {
                    const bool is_event = y_map[cell] == ev;
                    if (x_map[cell] == g) {
                        (is_event ? a : b) += w[cell];
                    } else if (x_map[cell] == ref) {
                        (is_event ? c : d) += w[cell];
                    }
                }
                if (b <= 0.0 || c <= 0.0 || d <= 0.0) return std::nullopt;
                return (a * d) / (b * c);
            }});
    }
    return out;
}

inline std::vector<Metric> or_metrics(const Schema& schema, std::string_view event_spec,
                                      const Profile& reference) {
    const auto ev = resolve_event(schema, event_spec);
    const auto slice = detail::resolve_profile(schema, reference);
    detail::require_covers_role(schema, slice, Role::independent, "reference group");
    const auto x_axes = schema.axes_with_role(Role::independent);
    std::vector<std::size_t> ref_levels(x_axes.size(), 0);
    for (const auto& f : slice.fixed)
        for (std::size_t i = 0; i < x_axes.size(); ++i)
            if (x_axes[i] == f.first) ref_levels[i] = f.second;
    return or_metrics(schema, schema.variable(ev.axis).levels[ev.level], ref_levels);
}

}  // namespace deconf
