#include "lasr/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lasr/optimize.hpp"

namespace lasr {

double mse_loss(const std::vector<double>& prediction, const std::vector<double>& y) {
    if (prediction.size() != y.size()) throw DimensionMismatch("prediction length differs from target length");
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double r = prediction[i] - y[i];
        if (!std::isfinite(r)) return std::numeric_limits<double>::infinity();
        sum += r * r;
    }
    double mse = sum / static_cast<double>(y.size());
    return std::isfinite(mse) ? mse : std::numeric_limits<double>::infinity();
}

double mse_loss(const Expr& e, const Dataset& d) { return mse_loss(evaluate(e, d), d.y()); }

double posterior_score(double loss, std::size_t complexity, double parsimony) {
    if (parsimony < 0) throw std::invalid_argument("parsimony must be non-negative");
    return std::log(loss + kLossFloor) + parsimony * static_cast<double>(complexity);
}

Hypothesis make_hypothesis(Expr e, const Dataset& d, double parsimony) {
    double loss = mse_loss(e, d);
    std::size_t c = e.size();
    return Hypothesis{std::move(e), loss, c, posterior_score(loss, c, parsimony)};
}

std::string_view to_string(MutationKind kind) {
    switch (kind) {
        case MutationKind::mutate_constant: return "mutate_constant";
        case MutationKind::mutate_operator: return "mutate_operator";
        case MutationKind::add_node_append: return "add_node_append";
        case MutationKind::add_node_prepend: return "add_node_prepend";
        case MutationKind::add_node_insert: return "add_node_insert";
        case MutationKind::delete_subtree: return "delete_subtree";
        case MutationKind::simplify: return "simplify";
        case MutationKind::init_new_tree: return "init_new_tree";
        case MutationKind::do_nothing: return "do_nothing";
    }
    return "?";
}

void MutationWeights::validate() const {
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0) || !std::isfinite(w)) throw std::invalid_argument("mutation weights must be finite and >= 0");
        sum += w;
    }
    if (!(sum > 0)) throw std::invalid_argument("mutation weights must not all be zero");
}

void EvolveConfig::validate() const {
    if (population_size < 2) throw std::invalid_argument("population_size must be >= 2");
    if (tournament_size < 1) throw std::invalid_argument("tournament_size must be >= 1");
    if (parsimony < 0) throw std::invalid_argument("parsimony must be >= 0");
    if (!(anneal_decay > 0 && anneal_decay <= 1)) throw std::invalid_argument("anneal_decay must be in (0, 1]");
    if (!(initial_temperature >= 0)) throw std::invalid_argument("initial_temperature must be >= 0");
    if (!(migrate_fraction >= 0 && migrate_fraction <= 1)) throw std::invalid_argument("migrate_fraction must be in [0, 1]");
    if (!(crossover_probability >= 0 && crossover_probability <= 1))
        throw std::invalid_argument("crossover_probability must be in [0, 1]");
    if (limits.max_complexity < 1 || limits.max_depth < 1) throw std::invalid_argument("tree limits must be >= 1");
    if (init_max_depth < 1) throw std::invalid_argument("init_max_depth must be >= 1");
    if (constant_budget < 1) throw std::invalid_argument("constant_budget must be >= 1");
    mutation_weights.validate();
}

MutationKind sample_mutation_kind(const MutationWeights& w, Rng& rng) {
    std::discrete_distribution<std::size_t> pick(w.weights.begin(), w.weights.end());
    return static_cast<MutationKind>(pick(rng));
}

namespace {

template <typename Pred>
std::vector<std::size_t> positions(const Expr& e, Pred pred) {
    std::vector<std::size_t> out;
    std::vector<Expr> all = subtrees(e);
    for (std::size_t i = 0; i < all.size(); ++i)
        if (pred(all[i])) out.push_back(i);
    return out;
}

std::size_t pick_index(std::size_t n, Rng& rng) {
    std::uniform_int_distribution<std::size_t> d(0, n - 1);
    return d(rng);
}

// Wraps `inner` in a random operator; the new sibling, if any, is a random leaf.
Expr wrap(const Expr& inner, const OperatorSet& ops, Rng& rng) {
    std::size_t n_ops = ops.binary_ops.size() + ops.unary_ops.size();
    std::size_t k = pick_index(n_ops, rng);
    if (k >= ops.binary_ops.size()) return Expr::unary(ops.unary_ops[k - ops.binary_ops.size()], inner);
    Expr leaf = random_leaf(ops, rng);
    BinaryOp op = ops.binary_ops[k];
    if (std::bernoulli_distribution(0.5)(rng)) return Expr::binary(op, inner, leaf);
    return Expr::binary(op, leaf, inner);
}

Expr mutate_constant(const Expr& e, Rng& rng) {
    auto idx = positions(e, [](const Expr& s) { return s.kind() == Expr::Kind::constant; });
    if (idx.empty()) return e;
    std::size_t at = idx[pick_index(idx.size(), rng)];
    double c = subtrees(e)[at].value();
    std::normal_distribution<double> normal(0.0, 1.0);
    double next = c == 0.0 ? normal(rng) : c * std::exp(0.5 * normal(rng));
    if (std::bernoulli_distribution(0.1)(rng)) next = -next;
    if (!std::isfinite(next)) return e;
    return replace_subtree(e, at, Expr::constant(next));
}

Expr mutate_operator(const Expr& e, const OperatorSet& ops, Rng& rng) {
    auto idx = positions(e, [](const Expr& s) { return !s.is_leaf(); });
    if (idx.empty()) return e;
    std::size_t at = idx[pick_index(idx.size(), rng)];
    Expr node = subtrees(e)[at];
    if (node.kind() == Expr::Kind::unary) {
        if (ops.unary_ops.empty()) return e;
        return replace_subtree(e, at, Expr::unary(ops.unary_ops[pick_index(ops.unary_ops.size(), rng)], node.child(0)));
    }
    return replace_subtree(
        e, at, Expr::binary(ops.binary_ops[pick_index(ops.binary_ops.size(), rng)], node.child(0), node.child(1)));
}

}  // namespace

Expr apply_mutation(MutationKind kind, const Expr& e, const OperatorSet& ops, std::size_t init_max_depth, Rng& rng) {
    switch (kind) {
        case MutationKind::mutate_constant: return mutate_constant(e, rng);
        case MutationKind::mutate_operator: return mutate_operator(e, ops, rng);
        case MutationKind::add_node_append: {
            auto leaves = positions(e, [](const Expr& s) { return s.is_leaf(); });
            std::size_t at = leaves[pick_index(leaves.size(), rng)];
            return replace_subtree(e, at, wrap(subtrees(e)[at], ops, rng));
        }
        case MutationKind::add_node_prepend: return wrap(e, ops, rng);
        case MutationKind::add_node_insert: {
            std::size_t at = pick_index(e.size(), rng);
            return replace_subtree(e, at, wrap(subtrees(e)[at], ops, rng));
        }
        case MutationKind::delete_subtree: {
            std::size_t at = pick_index(e.size(), rng);
            return replace_subtree(e, at, random_leaf(ops, rng));
        }
        case MutationKind::simplify: return simplify(e);
        case MutationKind::init_new_tree: return random_expr(ops, init_max_depth, rng);
        case MutationKind::do_nothing: return e;
    }
    return e;
}

Expr mutate(const Expr& e, const MutationWeights& w, const OperatorSet& ops, const TreeLimits& limits,
            std::size_t init_max_depth, Rng& rng) {
    constexpr int kAttempts = 10;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        MutationKind kind = sample_mutation_kind(w, rng);
        Expr out = apply_mutation(kind, e, ops, init_max_depth, rng);
        if (limits.admits(out)) return out;
    }
    return e;
}

std::pair<Expr, Expr> crossover(const Expr& a, const Expr& b, Rng& rng) {
    std::size_t ia = pick_index(a.size(), rng);
    std::size_t ib = pick_index(b.size(), rng);
    Expr sa = subtrees(a)[ia];
    Expr sb = subtrees(b)[ib];
    return {replace_subtree(a, ia, sb), replace_subtree(b, ib, sa)};
}

Expr optimize_constants(const Expr& e, const Dataset& d, const ConstantFitOptions& options) {
    if (options.budget < 1) throw std::invalid_argument("constant budget must be >= 1");
    CompiledExpr program(e);
    if (program.n_constants() == 0) return e;

    std::vector<double> prediction;
    auto objective = [&](std::span<const double> c) {
        program.eval(d.columns(), d.rows(), c, prediction);
        return mse_loss(prediction, d.y());
    };

    std::vector<double> best = constants(e);
    const double initial = objective(best);
    double best_loss = initial;

    NelderMeadOptions nm;
    nm.max_evaluations = std::max<std::size_t>(options.budget / (options.restarts + 1), 2 * best.size() + 2);
    for (std::size_t run = 0; run <= options.restarts; ++run) {
        Minimum m = nelder_mead(objective, best, nm);
        if (m.value < best_loss) {
            best_loss = m.value;
            best = std::move(m.x);
        } else if (run > 0) {
            break;  // a restart from the same point made no progress
        }
    }
    if (!(best_loss < initial)) return e;
    for (double c : best)
        if (!std::isfinite(c)) return e;
    return with_constants(e, best);
}

}  // namespace lasr
