#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lasr/evolve.hpp"
#include "lasr/library.hpp"
#include "lasr/llm.hpp"
#include "lasr/population.hpp"

namespace lasr {

/// Positive and negative exemplars for concept abstraction.
struct ParetoFront {
    std::vector<Hypothesis> best;   // non-dominated, complexity strictly up, loss strictly down
    std::vector<Hypothesis> worst;  // highest loss first; finite only unless nothing is finite
};

/// Canonical text used to deduplicate hypotheses (generic variable names).
std::string expr_key(const Expr& e);

/// Dominance filter over (complexity, loss). Members with non-finite loss
/// only enter the front when nothing finite exists. Duplicate expressions are
/// counted once; between distinct expressions with identical (complexity,
/// loss) the one with the smaller key is kept.
ParetoFront extract_pareto(std::span<const Hypothesis> members, std::size_t n_worst);
ParetoFront extract_pareto(std::span<const Population> pops, std::size_t n_worst);

/// score_i = -(ln loss_i - ln loss_{i-1}) / (c_i - c_{i-1}); score_0 = 0.
std::vector<double> frontier_scores(const ParetoFront& f);

/// Shared prompt inputs for the concept phase.
struct ConceptContext {
    const OperatorSet& ops;
    LlmBackend& backend;
    const LlmConfig& llm;
};

/// Asks the backend to summarize what separates good from bad exemplars and
/// appends the answer to the library. Returns nothing (and leaves the library
/// alone) if the backend fails or answers with blank text.
std::optional<Concept> abstract_concept(const ParetoFront& f, ConceptLibrary& lib, const ConceptContext& ctx,
                                        std::size_t iteration, Rng& rng);

/// Rewrites concepts older than the recency window into new ones; every
/// non-blank response line becomes a concept. Returns the number appended.
std::size_t evolve_concepts(ConceptLibrary& lib, const ConceptContext& ctx, std::size_t iteration, Rng& rng);

/// Splits a reply into concept sentences: strips list markers, drops blanks.
std::vector<std::string> parse_concept_lines(const std::string& reply);

}  // namespace lasr
