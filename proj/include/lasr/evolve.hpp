#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <utility>

#include "lasr/dataset.hpp"
#include "lasr/expr.hpp"

namespace lasr {

/// Floor added to the loss before taking the log so exact fits stay finite.
inline constexpr double kLossFloor = 1e-30;

struct Hypothesis {
    Expr expr;
    double loss = 0.0;  // MSE; +inf when any row is non-finite
    std::size_t complexity = 0;
    double score = 0.0;  // negative log-posterior, lower is better
};

/// Mean squared error against d.y(); +inf if any prediction is non-finite.
double mse_loss(const Expr& e, const Dataset& d);
double mse_loss(const std::vector<double>& prediction, const std::vector<double>& y);

/// ln(loss + floor) + parsimony * complexity.
double posterior_score(double loss, std::size_t complexity, double parsimony);

Hypothesis make_hypothesis(Expr e, const Dataset& d, double parsimony);

enum class MutationKind : std::size_t {
    mutate_constant,
    mutate_operator,
    add_node_append,
    add_node_prepend,
    add_node_insert,
    delete_subtree,
    simplify,
    init_new_tree,
    do_nothing,
};
inline constexpr std::size_t kMutationKinds = 9;
std::string_view to_string(MutationKind kind);

struct MutationWeights {
    std::array<double, kMutationKinds> weights{1, 1, 1, 1, 1, 1, 1, 1, 1};

    double& operator[](MutationKind k) { return weights[static_cast<std::size_t>(k)]; }
    double operator[](MutationKind k) const { return weights[static_cast<std::size_t>(k)]; }
    void validate() const;
};

/// Shape limits applied to every expression the search produces.
struct TreeLimits {
    std::size_t max_complexity = 30;
    std::size_t max_depth = 10;

    bool admits(const Expr& e) const { return e.size() <= max_complexity && e.depth() <= max_depth; }
};

struct EvolveConfig {
    std::size_t population_size = 40;
    std::size_t cycles_per_iteration = 150;
    double parsimony = 0.01;
    MutationWeights mutation_weights;
    std::size_t tournament_size = 10;
    double initial_temperature = 1.0;
    double anneal_decay = 0.99;
    double migrate_fraction = 0.05;
    double crossover_probability = 0.1;
    TreeLimits limits;
    std::size_t init_max_depth = 4;
    std::size_t constant_budget = 100;
    std::size_t constant_restarts = 2;
    bool elitism = true;

    void validate() const;
};

MutationKind sample_mutation_kind(const MutationWeights& w, Rng& rng);

/// Applies one mutation of the given kind. Kinds that have nothing to act on
/// (no constants, no operators) leave the tree unchanged.
Expr apply_mutation(MutationKind kind, const Expr& e, const OperatorSet& ops, std::size_t init_max_depth, Rng& rng);

/// Samples a category in proportion to the weights and applies it, retrying a
/// bounded number of times when the result breaks the limits. Returns the
/// input unchanged if no admissible mutant is found.
Expr mutate(const Expr& e, const MutationWeights& w, const OperatorSet& ops, const TreeLimits& limits,
            std::size_t init_max_depth, Rng& rng);

/// Swaps a uniformly chosen subtree of `a` with one of `b`.
std::pair<Expr, Expr> crossover(const Expr& a, const Expr& b, Rng& rng);

struct ConstantFitOptions {
    std::size_t budget = 100;  // objective evaluations per restart
    std::size_t restarts = 2;
};

/// Refits the constants of `e` by simplex search from their current values,
/// keeping the result only if the loss improves. Structure is unchanged.
Expr optimize_constants(const Expr& e, const Dataset& d, const ConstantFitOptions& options = {});

}  // namespace lasr
