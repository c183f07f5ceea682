#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lasr/dataset.hpp"
#include "lasr/evolve.hpp"
#include "lasr/library.hpp"
#include "lasr/llm.hpp"

namespace lasr {

/// Per-population event counts, accumulated across cycles.
struct CycleStats {
    std::uint64_t mutations = 0;
    std::uint64_t crossovers = 0;
    std::uint64_t llm_events = 0;  // events routed to a guided operator
    std::uint64_t accepted = 0;

    CycleStats& operator+=(const CycleStats& o) {
        mutations += o.mutations;
        crossovers += o.crossovers;
        llm_events += o.llm_events;
        accepted += o.accepted;
        return *this;
    }
};

/// A fixed-size pool of hypotheses with its own generator and temperature.
struct Population {
    std::vector<Hypothesis> members;
    std::vector<std::uint64_t> birth;  // insertion stamp per member; oldest is replaced first
    Rng rng;
    double temperature = 1.0;
    std::uint64_t clock = 0;
    CycleStats stats;

    std::size_t size() const { return members.size(); }
    std::size_t best_index() const;        // lowest score
    std::size_t best_loss_index() const;   // lowest loss
    void insert(Hypothesis h, std::size_t slot);
};

/// Read-only state shared by every population during one iteration.
struct SearchContext {
    const Dataset& data;
    const OperatorSet& ops;
    const EvolveConfig& evolve;
    const LlmConfig& llm;
    const ConceptLibrary& library;  // snapshot taken at iteration start
    LlmBackend& backend;
    double p = 0.0;  // probability of routing an event to the guided operator

    GuidedContext guided() const { return GuidedContext{library, ops, backend, llm, evolve, &data}; }
};

/// Simplify, refit constants and score a freshly produced expression.
Hypothesis finalize(const Expr& e, const SearchContext& ctx);

/// Builds a population of evolve.population_size members; each slot is
/// routed to the guided initializer with probability p.
Population init_population(const SearchContext& ctx, Rng rng);

/// One evolve-simplify-optimize pass: cycles_per_iteration tournament
/// steps, each a mutation or crossover (guided with probability p), with
/// annealed acceptance and elitism. Temperature decays once per call.
void sr_cycle(Population& pop, const SearchContext& ctx);

/// Replaces ceil(fraction * n) worst members of every population with copies
/// drawn from the union of all populations' top 10%.
void migrate(std::span<Population> pops, double fraction, Rng& rng);

}  // namespace lasr
