#include "lasr/concepts.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

namespace lasr {

std::string expr_key(const Expr& e) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < variable_extent(e); ++i) names.push_back("v" + std::to_string(i));
    return format(e, names);
}

namespace {

struct Keyed {
    const Hypothesis* h;
    std::string key;
};

std::vector<Keyed> distinct(std::span<const Hypothesis> members) {
    std::vector<Keyed> out;
    std::set<std::string> seen;
    for (const Hypothesis& h : members) {
        std::string key = expr_key(h.expr);
        if (seen.insert(key).second) out.push_back({&h, std::move(key)});
    }
    return out;
}

}  // namespace

ParetoFront extract_pareto(std::span<const Hypothesis> members, std::size_t n_worst) {
    if (members.empty()) throw std::invalid_argument("extract_pareto: no hypotheses");
    std::vector<Keyed> all = distinct(members);

    std::vector<Keyed> eligible;
    for (const Keyed& k : all)
        if (std::isfinite(k.h->loss)) eligible.push_back(k);
    bool any_finite = !eligible.empty();
    if (!any_finite) eligible = all;

    std::sort(eligible.begin(), eligible.end(), [](const Keyed& a, const Keyed& b) {
        if (a.h->complexity != b.h->complexity) return a.h->complexity < b.h->complexity;
        if (a.h->loss != b.h->loss) return a.h->loss < b.h->loss;
        return a.key < b.key;
    });

    ParetoFront f;
    if (!any_finite) {
        f.best.push_back(*eligible.front().h);
    } else {
        for (const Keyed& k : eligible) {
            if (!f.best.empty() && (k.h->complexity == f.best.back().complexity || !(k.h->loss < f.best.back().loss)))
                continue;
            f.best.push_back(*k.h);
        }
    }

    std::vector<Keyed> pool;
    for (const Keyed& k : all)
        if (!any_finite || std::isfinite(k.h->loss)) pool.push_back(k);
    std::stable_sort(pool.begin(), pool.end(), [](const Keyed& a, const Keyed& b) {
        if (a.h->loss != b.h->loss) return a.h->loss > b.h->loss;
        return a.key < b.key;
    });
    for (std::size_t i = 0; i < pool.size() && i < n_worst; ++i) f.worst.push_back(*pool[i].h);
    return f;
}

ParetoFront extract_pareto(std::span<const Population> pops, std::size_t n_worst) {
    std::vector<Hypothesis> members;
    for (const Population& p : pops) members.insert(members.end(), p.members.begin(), p.members.end());
    return extract_pareto(std::span<const Hypothesis>(members), n_worst);
}

std::vector<double> frontier_scores(const ParetoFront& f) {
    std::vector<double> scores;
    for (std::size_t i = 0; i < f.best.size(); ++i) {
        if (i == 0) {
            scores.push_back(0.0);
            continue;
        }
        const Hypothesis& a = f.best[i - 1];
        const Hypothesis& b = f.best[i];
        double dc = static_cast<double>(b.complexity) - static_cast<double>(a.complexity);
        double dl = std::log(b.loss + kLossFloor) - std::log(a.loss + kLossFloor);
        scores.push_back(dl == 0.0 ? 0.0 : -dl / dc);
    }
    return scores;
}

std::vector<std::string> parse_concept_lines(const std::string& reply) {
    static const std::regex marker(R"(^\s*(\(?\d+[.):]|[-*•])\s+)");
    std::vector<std::string> out;
    std::istringstream in(reply);
    std::string line;
    while (std::getline(in, line)) {
        line = std::regex_replace(line, marker, "", std::regex_constants::format_first_only);
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        out.push_back(line.substr(b, e - b + 1));
    }
    return out;
}

std::optional<Concept> abstract_concept(const ParetoFront& f, ConceptLibrary& lib, const ConceptContext& ctx,
                                        std::size_t iteration, Rng& rng) {
    if (f.best.empty()) throw std::invalid_argument("abstract_concept: empty frontier");
    std::string block = "Good expressions:";
    for (const Hypothesis& h : f.best) block += "\n" + format(h.expr, ctx.ops.variable_names);
    block += "\n\nBad expressions:";
    if (f.worst.empty()) block += "\n(none)";
    for (const Hypothesis& h : f.worst) block += "\n" + format(h.expr, ctx.ops.variable_names);

    PromptBindings b;
    b.concepts = sample_concepts(lib, ctx.llm.concepts_per_prompt, rng);
    b.variables = variables_text(ctx.ops);
    b.operators = operators_text(ctx.ops);
    b.expressions = {block};

    std::string reply;
    try {
        reply = ctx.backend.complete(render_prompt(ctx.llm.templates.abstraction, b));
    } catch (const LlmError&) {
        return std::nullopt;
    }
    auto lines = parse_concept_lines(reply);
    if (lines.empty()) return std::nullopt;
    std::string text = lines.front();
    for (std::size_t i = 1; i < lines.size(); ++i) text += " " + lines[i];
    return lib.add(std::move(text), iteration);
}

std::size_t evolve_concepts(ConceptLibrary& lib, const ConceptContext& ctx, std::size_t iteration, Rng& rng) {
    auto older = lib.older();
    if (older.empty()) return 0;

    PromptBindings b;
    b.concepts = sample_texts(older, ctx.llm.concepts_per_prompt, rng);
    b.variables = variables_text(ctx.ops);
    b.operators = operators_text(ctx.ops);

    std::string reply;
    try {
        reply = ctx.backend.complete(render_prompt(ctx.llm.templates.evolution, b));
    } catch (const LlmError&) {
        return 0;
    }
    std::size_t added = 0;
    for (std::string& line : parse_concept_lines(reply)) {
        lib.add(std::move(line), iteration);
        ++added;
    }
    return added;
}

}  // namespace lasr
