#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lasr/dataset.hpp"
#include "lasr/expr.hpp"
#include "lasr/llm.hpp"
#include "lasr/orchestrator.hpp"

namespace lasr {

struct ExactMatchOptions {
    double rel_tol = 1e-3;
    double abs_floor = 1e-9;  // the epsilon in rel_tol * (|truth| + eps)
    std::size_t n_points = 1000;
    std::uint64_t seed = 12345;
};

/// Numeric stand-in for symbolic equivalence. Both expressions are simplified
/// and compared at points drawn uniformly from the bounding box of `d`;
/// `pred` may not use any variable that `truth` does not.
bool exact_match(const Expr& pred, const Expr& truth, const Dataset& d, const ExactMatchOptions& opts = {});

/// 1 - SSE/SST. A constant target gives 1 for a perfect fit and -inf otherwise.
double r_squared(const Expr& pred, const Dataset& d);
double r_squared(const std::vector<double>& pred, const std::vector<double>& y);

enum class SolveCategory { unlabeled, exact_solve, almost_solve, close, not_close };
std::string to_string(SolveCategory c);

struct Problem {
    std::string name;
    std::optional<std::string> ground_truth;
    // Generated data: variable names with sampling ranges.
    std::vector<std::string> variables;
    std::vector<std::pair<double, double>> ranges;
    std::size_t n_samples = 1000;
    // File data instead of generation.
    std::optional<std::filesystem::path> csv;
    std::string target = "y";
    double noise = 0.0;  // fraction of RMS(y)
    std::size_t distractors = 0;
    std::vector<std::string> hints;
    std::optional<std::uint64_t> seed;
};

/// Reads {"problems": [...]} with keys name, ground_truth, variables,
/// ranges (list of [lo, hi]) or range ([lo, hi] for all), n_samples, csv,
/// target, noise, distractors, hints, seed. csv paths are relative to the
/// suite file.
std::vector<Problem> load_suite(const std::filesystem::path& path);

struct PreparedProblem {
    Dataset data;
    std::optional<Expr> truth;
};

/// Loads or samples the data, then adds noise and distractor columns.
PreparedProblem prepare_problem(const Problem& p, const OperatorSet& grammar, std::uint64_t seed);

struct ProblemResult {
    std::string name;
    bool ok = false;
    std::string error;
    bool exact_solve = false;
    bool mse_solved = false;
    double r2 = 0.0;
    double loss = 0.0;
    std::size_t complexity = 0;
    std::string expression;
    SolveCategory category = SolveCategory::unlabeled;
    std::size_t iterations_used = 0;
    double seconds = 0.0;
};

struct Report {
    std::vector<ProblemResult> rows;
    std::size_t exact_solves = 0;
    std::size_t mse_solves = 0;
    std::size_t failures = 0;
};

/// Runs every problem with its own orchestrator; a failing problem becomes a
/// row with ok = false. `workers` problems run at a time.
Report run_benchmark(const std::vector<Problem>& problems, const RunConfig& cfg, LlmBackend& backend,
                     std::size_t workers = 1, const ExactMatchOptions& match = {});

/// name, exact_solve, mse_solved, r2, loss, complexity, expression, category, seconds
void write_report_csv(const Report& r, const std::filesystem::path& path);

}  // namespace lasr
