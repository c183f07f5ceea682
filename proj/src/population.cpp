#include "lasr/population.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lasr {

std::size_t Population::best_index() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < members.size(); ++i)
        if (members[i].score < members[best].score) best = i;
    return best;
}

std::size_t Population::best_loss_index() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < members.size(); ++i)
        if (members[i].loss < members[best].loss ||
            (members[i].loss == members[best].loss && members[i].complexity < members[best].complexity))
            best = i;
    return best;
}

void Population::insert(Hypothesis h, std::size_t slot) {
    members.at(slot) = std::move(h);
    if (birth.size() != members.size()) birth.resize(members.size(), 0);
    birth[slot] = ++clock;
}

Hypothesis finalize(const Expr& e, const SearchContext& ctx) {
    Expr s = simplify(e);
    if (s.size() > 1 || s.kind() == Expr::Kind::constant) {
        s = optimize_constants(s, ctx.data, ConstantFitOptions{ctx.evolve.constant_budget, ctx.evolve.constant_restarts});
    }
    return make_hypothesis(std::move(s), ctx.data, ctx.evolve.parsimony);
}

Population init_population(const SearchContext& ctx, Rng rng) {
    ctx.evolve.validate();
    Population pop;
    pop.rng = std::move(rng);
    pop.temperature = ctx.evolve.initial_temperature;
    const std::size_t n = ctx.evolve.population_size;

    std::size_t n_guided = 0;
    if (ctx.p > 0) {
        std::bernoulli_distribution gate(ctx.p);
        for (std::size_t i = 0; i < n; ++i)
            if (gate(pop.rng)) ++n_guided;
    }
    std::vector<Expr> exprs;
    if (n_guided > 0) exprs = llm_init(ctx.guided(), n_guided, pop.rng);
    while (exprs.size() < n) exprs.push_back(random_expr(ctx.ops, ctx.evolve.init_max_depth, pop.rng));

    pop.members.reserve(n);
    for (const Expr& e : exprs) {
        pop.members.push_back(finalize(e, ctx));
        pop.birth.push_back(++pop.clock);
    }
    return pop;
}

namespace {

std::size_t tournament(const Population& pop, std::size_t size, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
    std::size_t best = pick(rng);
    for (std::size_t k = 1; k < size; ++k) {
        std::size_t c = pick(rng);
        if (pop.members[c].score < pop.members[best].score) best = c;
    }
    return best;
}

// Oldest member that is not protected by elitism.
std::size_t replacement_slot(const Population& pop, bool elitism) {
    std::size_t keep_a = elitism ? pop.best_index() : pop.size();
    std::size_t keep_b = elitism ? pop.best_loss_index() : pop.size();
    std::size_t slot = pop.size();
    for (std::size_t i = 0; i < pop.size(); ++i) {
        if (i == keep_a || i == keep_b) continue;
        if (slot == pop.size() || pop.birth[i] < pop.birth[slot]) slot = i;
    }
    return slot;
}

bool accept(double child_score, double parent_score, double temperature, Rng& rng) {
    if (child_score <= parent_score) return true;
    if (!(temperature > 0) || !std::isfinite(child_score)) return false;
    double delta = child_score - parent_score;
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < std::exp(-delta / temperature);
}

}  // namespace

void sr_cycle(Population& pop, const SearchContext& ctx) {
    if (!(ctx.p >= 0.0 && ctx.p <= 1.0)) throw std::invalid_argument("mixture probability must be in [0, 1]");
    if (pop.size() < 2) throw std::invalid_argument("population needs at least two members");
    if (pop.birth.size() != pop.size()) pop.birth.resize(pop.size(), 0);
    const EvolveConfig& cfg = ctx.evolve;
    Rng& rng = pop.rng;
    std::bernoulli_distribution do_crossover(cfg.crossover_probability);
    std::bernoulli_distribution guided(ctx.p);
    const GuidedContext gctx = ctx.guided();

    for (std::size_t step = 0; step < cfg.cycles_per_iteration; ++step) {
        std::vector<std::pair<Expr, std::size_t>> offspring;  // (child, parent slot)
        if (do_crossover(rng)) {
            ++pop.stats.crossovers;
            std::size_t i = tournament(pop, cfg.tournament_size, rng);
            std::size_t j = tournament(pop, cfg.tournament_size, rng);
            if (guided(rng)) {
                ++pop.stats.llm_events;
                offspring.emplace_back(llm_crossover(pop.members[i].expr, pop.members[j].expr, gctx, rng), i);
            } else {
                auto [a, b] = crossover(pop.members[i].expr, pop.members[j].expr, rng);
                if (cfg.limits.admits(a)) offspring.emplace_back(std::move(a), i);
                if (cfg.limits.admits(b)) offspring.emplace_back(std::move(b), j);
            }
        } else {
            ++pop.stats.mutations;
            std::size_t i = tournament(pop, cfg.tournament_size, rng);
            if (guided(rng)) {
                ++pop.stats.llm_events;
                offspring.emplace_back(llm_mutate(pop.members[i].expr, gctx, rng), i);
            } else {
                offspring.emplace_back(mutate(pop.members[i].expr, cfg.mutation_weights, ctx.ops, cfg.limits,
                                              cfg.init_max_depth, rng),
                                       i);
            }
        }

        for (auto& [child, parent] : offspring) {
            Hypothesis h = finalize(child, ctx);
            if (!accept(h.score, pop.members[parent].score, pop.temperature, rng)) continue;
            std::size_t slot = replacement_slot(pop, cfg.elitism);
            if (slot == pop.size()) continue;
            pop.insert(std::move(h), slot);
            ++pop.stats.accepted;
        }
    }
    pop.temperature *= cfg.anneal_decay;
}

void migrate(std::span<Population> pops, double fraction, Rng& rng) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("migration fraction must be in [0, 1]");
    if (pops.size() < 2 || fraction == 0.0) return;

    auto ranked = [](const Population& p) {
        std::vector<std::size_t> idx(p.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return p.members[a].score < p.members[b].score; });
        return idx;
    };

    std::vector<Hypothesis> pool;
    for (const Population& p : pops) {
        auto idx = ranked(p);
        auto top = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(p.size())));
        for (std::size_t k = 0; k < top && k < idx.size(); ++k) pool.push_back(p.members[idx[k]]);
    }
    if (pool.empty()) return;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);

    for (Population& p : pops) {
        auto idx = ranked(p);
        auto n_replace = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(p.size())));
        n_replace = std::min(n_replace, p.size());
        for (std::size_t k = 0; k < n_replace; ++k) p.insert(pool[pick(rng)], idx[p.size() - 1 - k]);
    }
}

}  // namespace lasr
