#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lasr/concepts.hpp"
#include "lasr/dataset.hpp"
#include "lasr/evolve.hpp"
#include "lasr/library.hpp"
#include "lasr/llm.hpp"
#include "lasr/population.hpp"

namespace lasr {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BestMode { min_loss, min_score };

struct IterationRecord;

struct RunConfig {
    std::size_t iterations = 40;
    std::size_t n_populations = 4;
    std::size_t evolution_steps = 1;  // M: concept-evolution calls per iteration
    double p = 0.0;                   // probability of a guided operator per event
    std::vector<std::string> hints;
    std::uint64_t seed = 0;
    // Operators for the search; variable names come from the dataset.
    std::vector<BinaryOp> binary_ops{BinaryOp::add, BinaryOp::sub, BinaryOp::mul, BinaryOp::div};
    std::vector<UnaryOp> unary_ops{UnaryOp::sin, UnaryOp::cos, UnaryOp::exp, UnaryOp::log, UnaryOp::sqrt};
    bool allow_constants = true;
    EvolveConfig evolve;
    LlmConfig llm;
    std::size_t recency_window = 20;
    std::size_t n_worst = 5;
    double early_stop_mse = 1e-11;
    double wall_clock_seconds = 0.0;  // 0 = no limit
    std::size_t workers = 1;          // threads used for population cycles
    BestMode best_mode = BestMode::min_score;
    // Called after every iteration's record is complete; not part of the config snapshot.
    std::function<void(const IterationRecord&)> on_iteration;

    void validate() const;
    OperatorSet operator_set(const std::vector<std::string>& variable_names) const;
};

struct IterationRecord {
    std::size_t iteration = 0;
    double best_loss = 0.0;
    std::size_t best_complexity = 0;
    std::uint64_t llm_calls = 0;  // cumulative
    std::uint64_t llm_failures = 0;
    std::uint64_t llm_fallbacks = 0;
    std::size_t concepts_added = 0;  // this iteration
};

struct RunResult {
    Hypothesis best;
    ParetoFront frontier;
    ConceptLibrary library;
    std::vector<IterationRecord> history;
    bool solved = false;
    std::size_t iterations_used = 0;
    CycleStats stats;
    std::vector<std::string> variable_names;
    double seconds = 0.0;  // wall time; not part of the serialized result
};

/// Front member with the lowest loss (ties to lower complexity) or the lowest
/// posterior score under `parsimony`.
Hypothesis best_expression(const ParetoFront& f, BestMode mode, double parsimony);

/// Runs the alternating search: population cycles against a frozen concept
/// library, then frontier extraction, concept abstraction and evolution, and
/// migration, until the iteration cap, early stop or the wall-clock budget.
RunResult run(const RunConfig& cfg, const Dataset& d, LlmBackend& backend);

/// Deterministic JSON for a result (wall time excluded).
std::string to_json(const RunResult& r);

/// summary.json, frontier.csv, concepts.jsonl and history.csv in `dir`.
void write_artifacts(const RunResult& r, const std::filesystem::path& dir);

}  // namespace lasr
