// Command-line front end: run, bench, synth, fit-scaling.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "lasr/bench.hpp"
#include "lasr/config.hpp"
#include "lasr/dataset.hpp"
#include "lasr/llm.hpp"
#include "lasr/orchestrator.hpp"
#include "lasr/scaling.hpp"

namespace {

using namespace lasr;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitInternal = 4;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Options shared by run and bench.
struct SearchFlags {
    std::string config_file;
    std::vector<std::string> overrides;
    std::optional<double> p;
    std::optional<std::size_t> iterations;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> hints;
    std::string hints_file;
    std::string llm;
    std::string replay;
    std::string out = "lasr_out";
    int verbose = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("-c,--config", config_file, "JSON config file");
        cmd->add_option("--set", overrides, "Override a config key (key=value); repeatable");
        cmd->add_option("--p", p, "Probability of using an LLM operator per event");
        cmd->add_option("--iterations", iterations, "Iteration cap");
        cmd->add_option("--seed", seed, "Random seed");
        cmd->add_option("--hints", hints, "Initial concept hints");
        cmd->add_option("--hints-file", hints_file, "File with one hint per line");
        cmd->add_option("--llm", llm, "LLM backend")->check(CLI::IsMember({"off", "http", "replay"}));
        cmd->add_option("--replay", replay, "Replay store (jsonl) for --llm replay");
        cmd->add_option("-o,--out", out, "Output directory");
        cmd->add_flag("-v,--verbose", verbose, "Per-iteration progress on stderr");
    }

    AppConfig resolve() const {
        AppConfig cfg;
        if (!config_file.empty()) load_config_file(cfg, config_file);
        for (const std::string& o : overrides) apply_override(cfg, o);
        if (p) cfg.run.p = *p;
        if (iterations) cfg.run.iterations = *iterations;
        if (seed) cfg.run.seed = *seed;
        if (!llm.empty()) cfg.backend = llm;
        if (!replay.empty()) cfg.replay_file = replay;
        cfg.run.hints.insert(cfg.run.hints.end(), hints.begin(), hints.end());
        if (!hints_file.empty()) {
            std::ifstream in(hints_file);
            if (!in) throw IoError("cannot open hints file '" + hints_file + "'");
            for (std::string line; std::getline(in, line);)
                if (line.find_first_not_of(" \t\r") != std::string::npos) cfg.run.hints.push_back(line);
        }
        if (cfg.backend == "off") cfg.run.p = 0.0;
        resolve_prompts(cfg);
        cfg.run.validate();
        return cfg;
    }
};

struct Backends {
    std::unique_ptr<LlmBackend> inner;
    std::unique_ptr<LlmBackend> outer;
    LlmBackend& get() { return outer ? *outer : *inner; }
};

Backends make_backend(const AppConfig& cfg) {
    Backends b;
    if (cfg.backend == "off") {
        b.inner = std::make_unique<OfflineBackend>();
    } else if (cfg.backend == "replay") {
        if (cfg.replay_file.empty()) throw UsageError("--llm replay needs --replay FILE");
        b.inner = ReplayBackend::from_file(cfg.replay_file);
    } else {
        if (cfg.http.endpoint.empty() || cfg.http.model.empty())
            throw ConfigError("http backend needs http.endpoint and http.model");
        if (!cfg.http.api_key_env.empty() && !std::getenv(cfg.http.api_key_env.c_str()))
            throw ConfigError("environment variable " + cfg.http.api_key_env + " is not set");
        b.inner = std::make_unique<HttpBackend>(cfg.http);
        if (!cfg.record_file.empty()) b.outer = std::make_unique<RecordingBackend>(*b.inner, cfg.record_file);
    }
    return b;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text << '\n';
}

void attach_progress(AppConfig& cfg, int verbose, const std::string& label) {
    if (!verbose) return;
    cfg.run.on_iteration = [label](const IterationRecord& r) {
        std::cerr << label << "iteration " << r.iteration << ": best loss " << format_constant(r.best_loss)
                  << " (complexity " << r.best_complexity << "), llm calls " << r.llm_calls << ", fallbacks "
                  << r.llm_fallbacks << ", concepts +" << r.concepts_added << '\n';
    };
}

int cmd_run(const std::string& csv, const std::string& target, const SearchFlags& flags) {
    AppConfig cfg = flags.resolve();
    Dataset d = load_csv(csv, target);
    Backends backend = make_backend(cfg);
    attach_progress(cfg, flags.verbose, "");
    RunResult r = run(cfg.run, d, backend.get());
    write_artifacts(r, flags.out);
    write_text(std::filesystem::path(flags.out) / "config.json", config_to_json(cfg));
    std::cout << "best: " << format(r.best.expr, d.variable_names()) << '\n'
              << "loss: " << format_constant(r.best.loss) << "  complexity: " << r.best.complexity
              << "  solved: " << (r.solved ? "yes" : "no") << "  iterations: " << r.iterations_used << '\n'
              << "artifacts: " << flags.out << '\n';
    return kExitOk;
}

int cmd_bench(const std::string& suite, std::size_t workers, const SearchFlags& flags) {
    AppConfig cfg = flags.resolve();
    std::vector<Problem> problems = load_suite(suite);
    if (problems.empty()) throw DataError("empty suite");
    Backends backend = make_backend(cfg);
    Report report = run_benchmark(problems, cfg.run, backend.get(), workers);
    std::filesystem::create_directories(flags.out);
    write_report_csv(report, std::filesystem::path(flags.out) / "report.csv");
    write_text(std::filesystem::path(flags.out) / "config.json", config_to_json(cfg));
    for (const ProblemResult& row : report.rows) {
        std::cout << row.name << ": ";
        if (!row.ok) {
            std::cout << "error: " << row.error << '\n';
            continue;
        }
        std::cout << (row.exact_solve ? "exact" : row.mse_solved ? "mse-solved" : "unsolved") << "  loss "
                  << format_constant(row.loss) << "  " << row.expression << '\n';
    }
    std::cout << "exact solves: " << report.exact_solves << "/" << report.rows.size()
              << "  mse solves: " << report.mse_solves << "/" << report.rows.size()
              << "  failures: " << report.failures << '\n';
    return kExitOk;
}

int cmd_synth(std::size_t count, std::uint64_t seed, const std::string& out, SyntheticSpec spec) {
    if (count < 1) throw UsageError("--count must be >= 1");
    spec.seed = seed;
    spec.validate();
    std::filesystem::create_directories(out);
    Rng rng(seed);
    json suite = {{"problems", json::array()}};
    std::ofstream truths(std::filesystem::path(out) / "ground_truth.txt");
    if (!truths) throw IoError("cannot write into '" + out + "'");
    for (std::size_t i = 0; i < count; ++i) {
        SyntheticProblem p = generate_synthetic(spec, rng);
        char name[32];
        std::snprintf(name, sizeof name, "synth_%03zu", i + 1);
        std::string file = std::string(name) + ".csv";
        write_csv(p.data, std::filesystem::path(out) / file);
        std::string truth = format(p.ground_truth, p.data.variable_names());
        truths << name << '\t' << truth << '\n';
        suite["problems"].push_back({{"name", name}, {"ground_truth", truth}, {"csv", file}, {"target", p.data.target_name()}});
    }
    write_text(std::filesystem::path(out) / "suite.json", suite.dump(2));
    std::cout << "wrote " << count << " problems to " << out << '\n';
    return kExitOk;
}

struct ScalingFlags {
    std::string csv;
    std::string skeleton = "all";
    std::string target = "score";
    double split = 0.8;
    std::uint64_t seed = 0;
    std::size_t restarts = 8;
    std::size_t bootstrap = 0;
    std::string group_by;
    std::string custom;
    std::vector<std::string> params;
};

int cmd_fit_scaling(const ScalingFlags& f) {
    if (!(f.split > 0.0 && f.split < 1.0)) throw UsageError("--split must be in (0, 1)");
    Dataset d = load_csv(f.csv, f.target);
    Rng rng(f.seed);
    auto [train, val] = split(d, f.split, rng);

    std::vector<Skeleton> skeletons;
    if (f.skeleton == "custom") {
        if (f.custom.empty() || f.params.empty()) throw UsageError("--skeleton custom needs --form and --params");
        std::vector<std::string> vars;
        for (const std::string& n : d.variable_names())
            if (std::find(f.params.begin(), f.params.end(), n) == f.params.end()) vars.push_back(n);
        skeletons.push_back(custom_skeleton(f.custom, f.params, vars,
                                            std::find(vars.begin(), vars.end(), "train_steps") != vars.end() ? "train_steps" : ""));
    } else if (f.skeleton == "all") {
        for (const std::string& id : builtin_skeleton_ids()) skeletons.push_back(builtin_skeleton(id));
    } else {
        try {
            skeletons.push_back(builtin_skeleton(f.skeleton));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }

    FitOptions opts;
    opts.seed = f.seed;
    opts.restarts = f.restarts;
    opts.bootstrap = f.bootstrap;
    opts.group_by = f.group_by;

    std::printf("train rows: %zu  validation rows: %zu\n\n", train.rows(), val.rows());
    std::printf("%-22s %-24s %s\n", "Scaling Law Skeleton", "MSE Loss", "Free Parameters");
    std::vector<std::string> details;
    for (const Skeleton& s : skeletons) {
        std::string mse = "diverged";
        try {
            SkeletonFit fit = fit_skeleton(s, train, val, opts);
            mse = format_constant(fit.val_mse);
            if (fit.val_mse_se) mse += " +/- " + format_constant(*fit.val_mse_se);
            std::string line = s.id + ": " + s.text() + "\n   ";
            for (std::size_t k = 0; k < fit.params.size(); ++k)
                line += " " + fit.param_names[k] + "=" + format_constant(fit.params[k]);
            line += "\n    train MSE " + format_constant(fit.train_mse);
            details.push_back(line);
        } catch (const FitDiverged& e) {
            details.push_back(s.id + ": " + e.what());
        }
        std::printf("%-22s %-24s %zu\n", s.id.c_str(), mse.c_str(), s.free_parameters());
    }
    std::printf("\n");
    for (const std::string& line : details) std::printf("%s\n", line.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Symbolic regression with an evolving concept library"};
    app.require_subcommand(1);

    SearchFlags run_flags;
    std::string run_csv, run_target = "y";
    auto* run_cmd = app.add_subcommand("run", "Search for an expression fitting a CSV dataset");
    run_cmd->add_option("dataset", run_csv, "CSV file with a header row")->required();
    run_cmd->add_option("-t,--target", run_target, "Target column");
    run_flags.attach(run_cmd);

    SearchFlags bench_flags;
    std::string suite;
    std::size_t bench_workers = 1;
    auto* bench_cmd = app.add_subcommand("bench", "Run every problem in a suite file");
    bench_cmd->add_option("suite", suite, "Suite JSON file")->required();
    bench_cmd->add_option("--workers", bench_workers, "Problems run concurrently");
    bench_flags.attach(bench_cmd);

    std::size_t synth_count = 41;
    std::uint64_t synth_seed = 0;
    std::string synth_out = "synthetic";
    SyntheticSpec synth_spec;
    auto* synth_cmd = app.add_subcommand("synth", "Generate random synthetic problems");
    synth_cmd->add_option("--count", synth_count, "Number of problems");
    synth_cmd->add_option("--seed", synth_seed, "Random seed");
    synth_cmd->add_option("-o,--out", synth_out, "Output directory");
    synth_cmd->add_option("--n-vars", synth_spec.n_vars, "Variables per problem");
    synth_cmd->add_option("--samples", synth_spec.n_samples, "Rows per problem");
    synth_cmd->add_option("--max-complexity", synth_spec.max_complexity, "Largest ground-truth size");

    ScalingFlags scaling;
    auto* fit_cmd = app.add_subcommand("fit-scaling", "Fit scaling-law skeletons and compare validation MSE");
    fit_cmd->add_option("data", scaling.csv, "CSV with train_steps, shots, batch_size, total_params and the target")
        ->required();
    fit_cmd->add_option("--skeleton", scaling.skeleton,
                        "lasr_law, chinchilla, modified_chinchilla, residual_only, custom or all");
    fit_cmd->add_option("--target", scaling.target, "Target column");
    fit_cmd->add_option("--split", scaling.split, "Training fraction");
    fit_cmd->add_option("--seed", scaling.seed, "Random seed for the split and restarts");
    fit_cmd->add_option("--restarts", scaling.restarts, "Optimizer restarts");
    fit_cmd->add_option("--bootstrap", scaling.bootstrap, "Bootstrap resamples for the MSE error bar");
    fit_cmd->add_option("--group-by", scaling.group_by, "Fit parameters per value of this column");
    fit_cmd->add_option("--form", scaling.custom, "Custom skeleton expression");
    fit_cmd->add_option("--params", scaling.params, "Free parameter names of the custom skeleton");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run_cmd) return cmd_run(run_csv, run_target, run_flags);
        if (*bench_cmd) return cmd_bench(suite, bench_workers, bench_flags);
        if (*synth_cmd) return cmd_synth(synth_count, synth_seed, synth_out, synth_spec);
        if (*fit_cmd) return cmd_fit_scaling(scaling);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitIo;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitUsage;
}
