// deconf: remove observed-confounder bias from categorical study data.
//
// Subcommands compose library calls and write canonical JSON reports; all
// numeric work lives in the headers. Exit codes: 0 success, 1 domain error
// (infeasible constraints, degenerate reference, bad data), 2 usage error.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deconf/deconf.hpp"

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InputOpts {
    std::string builtin_name;
    std::string input_path;
    std::string outcome;
    std::vector<std::string> independents;
    std::vector<std::string> confounders;
    std::string count_column = "count";
    bool merge_duplicates = false;
    bool microdata = false;
};

struct RunOpts {
    InputOpts input;
    std::string kind = "pr";
    std::string event;
    std::string reference;
    std::string output;
    double tolerance = 1e-10;
    int max_iterations = 10000;
    std::uint64_t subjects = 0;  // 0: use the dataset's own N
    std::uint64_t replicates = 100000;
    std::uint64_t seed = 0;
};

void add_input_flags(CLI::App* cmd, InputOpts& in) {
    auto* b = cmd->add_option("--builtin", in.builtin_name,
                              "Built-in dataset (see the datasets subcommand)");
    auto* p = cmd->add_option("--input", in.input_path, "Cell-list CSV file");
    b->excludes(p);
    p->excludes(b);
    cmd->add_option("--outcome", in.outcome, "Outcome column (with --input)");
    cmd->add_option("--independent", in.independents,
                    "Independent (group) column; repeatable (with --input)");
    cmd->add_option("--confounder", in.confounders,
                    "Confounder column; repeatable (with --input)");
    cmd->add_option("--count-column", in.count_column, "Count column name")
        ->capture_default_str();
    cmd->add_flag("--merge-duplicates", in.merge_duplicates,
                  "Sum repeated cells instead of rejecting them");
    cmd->add_flag("--microdata", in.microdata,
                  "Rows are single subjects; no count column");
}

deconf::JointTable load_input(const InputOpts& in) {
    if (!in.builtin_name.empty()) return deconf::builtin(in.builtin_name);
    if (in.input_path.empty())
        throw UsageError("exactly one input source needed: --builtin or --input");
    deconf::TableFileSpec spec;
    spec.path = in.input_path;
    spec.outcome = in.outcome;
    spec.independents = in.independents;
    spec.confounders = in.confounders;
    spec.count_column = in.count_column;
    spec.merge_duplicates = in.merge_duplicates;
    spec.microdata = in.microdata;
    return deconf::load_csv(spec);
}

deconf::ProjectionResult project_kind(const deconf::JointTable& f, const RunOpts& opts) {
    if (opts.kind == "pr") return deconf::pr_projection(f, opts.tolerance, opts.max_iterations);
    if (opts.kind == "parity-only")
        return deconf::parity_only_projection(f, opts.tolerance, opts.max_iterations);
    if (opts.kind == "logit")
        return deconf::logit_projection(f, opts.tolerance, opts.max_iterations);
    throw UsageError("unknown projection kind '" + opts.kind +
                     "'; expected pr, parity-only, or logit");
}

std::uint64_t effective_subjects(const deconf::JointTable& counts, const RunOpts& opts) {
    if (opts.subjects > 0) return opts.subjects;
    const double n = counts.total();
    if (n < 1.0) throw UsageError("dataset is empty; pass --subjects");
    return static_cast<std::uint64_t>(std::llround(n));
}

deconf::FluctuationSummary run_fluctuation(const deconf::JointTable& q,
                                           std::uint64_t subjects, const RunOpts& opts) {
    deconf::ReplicateConfig cfg;
    cfg.n_subjects = subjects;
    cfg.n_replicates = opts.replicates;
    cfg.seed = opts.seed;
    cfg.metrics = deconf::parity_metrics(q.schema());
    for (auto& m : deconf::realism_metrics(q.schema())) cfg.metrics.push_back(std::move(m));
    if (!opts.event.empty())
        for (auto& m : deconf::or_metrics(q.schema(), opts.event,
                                          deconf::parse_profile(opts.reference)))
            cfg.metrics.push_back(std::move(m));
    return deconf::replicate_metrics(q, cfg);
}

int run_project(const RunOpts& opts) {
    const auto counts = load_input(opts.input);
    const auto f = deconf::normalize(counts);
    const auto result = project_kind(f, opts);

    deconf::ReportInputs rep;
    rep.counts = &counts;
    rep.source = opts.input.builtin_name.empty() ? opts.input.input_path
                                                 : opts.input.builtin_name;
    rep.projection = &result;
    rep.projection_kind = opts.kind;
    std::optional<deconf::EffectReport> projected;
    if (!opts.event.empty()) {
        if (opts.reference.empty()) throw UsageError("--event needs --reference");
        projected = deconf::build_effect_report(result.q, opts.event,
                                                deconf::parse_profile(opts.reference), false);
        rep.effects_projected = &*projected;
    }
    deconf::write_report(deconf::report_document(rep), opts.output);
    return 0;
}

int run_metrics(const RunOpts& opts) {
    const auto counts = load_input(opts.input);
    const auto effects = deconf::build_effect_report(
        counts, opts.event, deconf::parse_profile(opts.reference), true);

    deconf::ReportInputs rep;
    rep.counts = &counts;
    rep.source = opts.input.builtin_name.empty() ? opts.input.input_path
                                                 : opts.input.builtin_name;
    rep.effects_empirical = &effects;
    deconf::write_report(deconf::report_document(rep), opts.output);
    return 0;
}

int run_report(const RunOpts& opts, bool with_sample) {
    const auto counts = load_input(opts.input);
    const auto f = deconf::normalize(counts);
    const auto result = project_kind(f, opts);
    const auto reference = deconf::parse_profile(opts.reference);
    const auto empirical = deconf::build_effect_report(counts, opts.event, reference, true);
    const auto projected =
        deconf::build_effect_report(result.q, opts.event, reference, false);

    deconf::ReportInputs rep;
    rep.counts = &counts;
    rep.source = opts.input.builtin_name.empty() ? opts.input.input_path
                                                 : opts.input.builtin_name;
    rep.projection = &result;
    rep.projection_kind = opts.kind;
    rep.effects_empirical = &empirical;
    rep.effects_projected = &projected;
    std::optional<deconf::FluctuationSummary> fluct;
    if (with_sample) {
        fluct = run_fluctuation(result.q, effective_subjects(counts, opts), opts);
        rep.fluctuation = &*fluct;
    }
    deconf::write_report(deconf::report_document(rep), opts.output);
    return 0;
}

int run_sample(const RunOpts& opts) {
    const auto counts = load_input(opts.input);
    const auto f = deconf::normalize(counts);
    const auto result = project_kind(f, opts);
    if (opts.event.empty() != opts.reference.empty())
        throw UsageError("--event and --reference go together");
    const auto fluct = run_fluctuation(result.q, effective_subjects(counts, opts), opts);

    deconf::ReportInputs rep;
    rep.counts = &counts;
    rep.source = opts.input.builtin_name.empty() ? opts.input.input_path
                                                 : opts.input.builtin_name;
    rep.projection = &result;
    rep.projection_kind = opts.kind;
    rep.fluctuation = &fluct;
    deconf::write_report(deconf::report_document(rep), opts.output);
    return 0;
}

int run_datasets() {
    for (const auto& info : deconf::builtin_list()) {
        const auto t = deconf::builtin(info.name);
        std::cout << info.name << "  N=" << static_cast<long long>(t.total()) << "\n  "
                  << info.description << "\n";
        for (const auto& v : t.schema().variables()) {
            std::cout << "  " << v.name << " (" << deconf::role_name(v.role) << "): ";
            for (std::size_t i = 0; i < v.levels.size(); ++i)
                std::cout << (i ? ", " : "") << v.levels[i];
            std::cout << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deconf: confounder-bias removal for categorical study data"};
    app.require_subcommand(1);

    RunOpts opts;

    auto* project = app.add_subcommand(
        "project", "Fit a projection and report the adjusted distribution");
    add_input_flags(project, opts.input);
    project->add_option("--kind", opts.kind, "pr, parity-only, or logit")
        ->capture_default_str();
    project->add_option("--tolerance", opts.tolerance, "Marginal residual target")
        ->capture_default_str();
    project->add_option("--max-iterations", opts.max_iterations, "IPF cycle limit")
        ->capture_default_str();
    project->add_option("--event", opts.event, "Outcome event level");
    project->add_option("--reference", opts.reference,
                        "Reference group, e.g. \"place=New York\"");
    project->add_option("--output", opts.output, "Report path (default: stdout)");

    auto* metrics =
        app.add_subcommand("metrics", "Effect sizes and significance of the raw data");
    add_input_flags(metrics, opts.input);
    metrics->add_option("--event", opts.event, "Outcome event level")->required();
    metrics->add_option("--reference", opts.reference, "Reference group")->required();
    metrics->add_option("--output", opts.output, "Report path (default: stdout)");

    auto* report = app.add_subcommand(
        "report", "Digest, projection, and empirical vs projected effects");
    add_input_flags(report, opts.input);
    report->add_option("--kind", opts.kind, "pr, parity-only, or logit")
        ->capture_default_str();
    report->add_option("--tolerance", opts.tolerance, "Marginal residual target")
        ->capture_default_str();
    report->add_option("--max-iterations", opts.max_iterations, "IPF cycle limit")
        ->capture_default_str();
    report->add_option("--event", opts.event, "Outcome event level")->required();
    report->add_option("--reference", opts.reference, "Reference group")->required();
    bool report_sample = false;
    report->add_flag("--with-sample", report_sample,
                     "Append a fluctuation summary (uses --subjects/--replicates/--seed)");
    report->add_option("--subjects", opts.subjects, "Study size N (default: dataset N)");
    report->add_option("--replicates", opts.replicates, "Replicate count")
        ->capture_default_str();
    report->add_option("--seed", opts.seed, "Random seed")->capture_default_str();
    report->add_option("--output", opts.output, "Report path (default: stdout)");

    auto* sample = app.add_subcommand(
        "sample", "Resample replicate studies from a projection and summarize");
    add_input_flags(sample, opts.input);
    sample->add_option("--kind", opts.kind, "pr, parity-only, or logit")
        ->capture_default_str();
    sample->add_option("--tolerance", opts.tolerance, "Marginal residual target")
        ->capture_default_str();
    sample->add_option("--max-iterations", opts.max_iterations, "IPF cycle limit")
        ->capture_default_str();
    sample->add_option("--subjects", opts.subjects, "Study size N (default: dataset N)");
    sample->add_option("--replicates", opts.replicates, "Replicate count")
        ->capture_default_str();
    sample->add_option("--seed", opts.seed, "Random seed")->capture_default_str();
    sample->add_option("--event", opts.event, "Outcome event level (adds OR metrics)");
    sample->add_option("--reference", opts.reference, "Reference group for OR metrics");
    sample->add_option("--output", opts.output, "Report path (default: stdout)");

    auto* datasets = app.add_subcommand("datasets", "List built-in datasets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (project->parsed()) return run_project(opts);
        if (metrics->parsed()) return run_metrics(opts);
        if (report->parsed()) return run_report(opts, report_sample);
        if (sample->parsed()) return run_sample(opts);
        if (datasets->parsed()) return run_datasets();
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const deconf::UnknownDataset& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const deconf::SchemaError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const deconf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
