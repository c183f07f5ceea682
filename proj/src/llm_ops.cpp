#include <fstream>
#include <regex>
#include <sstream>

#include "default_prompts.hpp"
#include "lasr/llm.hpp"

namespace lasr {

std::string render_prompt(const std::string& template_text, const PromptBindings& b) {
    std::string out;
    out.reserve(template_text.size() + 256);
    std::size_t pos = 0;
    while (true) {
        std::size_t open = template_text.find("{{", pos);
        if (open == std::string::npos) {
            out.append(template_text, pos, std::string::npos);
            return out;
        }
        std::size_t close = template_text.find("}}", open + 2);
        if (close == std::string::npos) {
            out.append(template_text, pos, std::string::npos);
            return out;
        }
        out.append(template_text, pos, open - pos);
        std::string key = template_text.substr(open + 2, close - open - 2);
        if (key == "concepts") {
            if (b.concepts.empty()) out += "(none yet)";
            for (std::size_t i = 0; i < b.concepts.size(); ++i) {
                if (i) out += '\n';
                out += std::to_string(i + 1) + ". " + b.concepts[i];
            }
        } else if (key == "variables") {
            if (b.variables.empty()) throw MissingPlaceholderValue(key);
            out += b.variables;
        } else if (key == "operators") {
            if (b.operators.empty()) throw MissingPlaceholderValue(key);
            out += b.operators;
        } else if (key == "expressions") {
            if (b.expressions.empty()) throw MissingPlaceholderValue(key);
            for (std::size_t i = 0; i < b.expressions.size(); ++i) {
                if (i) out += '\n';
                out += b.expressions[i];
            }
        } else if (key == "data") {
            if (!b.data) throw MissingPlaceholderValue(key);
            out += *b.data;
        } else {
            throw MissingPlaceholderValue(key);
        }
        pos = close + 2;
    }
}

PromptTemplates PromptTemplates::defaults() {
    return PromptTemplates{detail::kInitPrompt, detail::kMutatePrompt, detail::kCrossoverPrompt,
                           detail::kAbstractionPrompt, detail::kEvolutionPrompt};
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
    PromptTemplates t = defaults();
    auto read = [&](const char* file, std::string& slot) {
        std::filesystem::path p = dir / file;
        if (!std::filesystem::exists(p)) return;
        std::ifstream in(p);
        if (!in) throw IoError("cannot read prompt template '" + p.string() + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        slot = ss.str();
    };
    read("init.txt", t.init);
    read("mutate.txt", t.mutate);
    read("crossover.txt", t.crossover);
    read("abstraction.txt", t.abstraction);
    read("evolution.txt", t.evolution);
    return t;
}

std::string dataset_digest(const Dataset& d, std::size_t max_rows) {
    std::string out;
    std::size_t n = std::min(max_rows, d.rows());
    for (std::size_t r = 0; r < n; ++r) {
        if (r) out += '\n';
        for (std::size_t c = 0; c < d.cols(); ++c) {
            if (c) out += ", ";
            out += d.variable_names()[c] + "=" + format_constant(d.column(c)[r]);
        }
        out += " → " + d.target_name() + "=" + format_constant(d.y()[r]);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string clean_line(std::string line) {
    static const std::regex numbering(R"(^\s*(\(?\d+[.):]|[-*•])\s+)");
    static const std::regex lhs(R"(^\s*[A-Za-z_][A-Za-z0-9_]*(\([^)]*\))?\s*=(?!=)\s*)");
    line.erase(std::remove(line.begin(), line.end(), '`'), line.end());
    line.erase(std::remove(line.begin(), line.end(), '$'), line.end());
    line = std::regex_replace(line, numbering, "", std::regex_constants::format_first_only);
    if (auto colon = line.rfind(':'); colon != std::string::npos) line = line.substr(colon + 1);
    line = std::regex_replace(line, lhs, "", std::regex_constants::format_first_only);
    line = trim(line);
    while (!line.empty() && (line.back() == '.' || line.back() == ',' || line.back() == ';')) line.pop_back();
    return trim(line);
}

}  // namespace

std::vector<Expr> parse_candidates(const std::string& text, const OperatorSet& ops, std::size_t max_n) {
    std::vector<Expr> out;
    std::istringstream in(text);
    std::string line;
    while (out.size() < max_n && std::getline(in, line)) {
        std::string candidate = clean_line(line);
        if (candidate.empty()) continue;
        try {
            out.push_back(parse(candidate, ops));
        } catch (const ParseError&) {
        } catch (const std::invalid_argument&) {
        }
    }
    return out;
}

PromptBindings make_bindings(const GuidedContext& ctx, std::vector<std::string> concepts,
                             std::vector<std::string> expressions) {
    PromptBindings b;
    b.concepts = std::move(concepts);
    b.variables = variables_text(ctx.ops);
    b.operators = operators_text(ctx.ops);
    b.expressions = std::move(expressions);
    if (ctx.llm.include_data && ctx.data) b.data = dataset_digest(*ctx.data);
    return b;
}

namespace {

std::vector<Expr> ask(const GuidedContext& ctx, const std::string& template_text, std::vector<std::string> expressions,
                      std::size_t max_n, Rng& rng) {
    auto concepts = sample_concepts(ctx.library, ctx.llm.concepts_per_prompt, rng);
    std::string prompt = render_prompt(template_text, make_bindings(ctx, std::move(concepts), std::move(expressions)));
    std::string reply = ctx.backend.complete(prompt);
    std::vector<Expr> admissible;
    for (Expr& e : parse_candidates(reply, ctx.ops, ctx.llm.max_candidates)) {
        if (admissible.size() >= max_n) break;
        if (ctx.evolve.limits.admits(e)) admissible.push_back(std::move(e));
    }
    return admissible;
}

}  // namespace

std::vector<Expr> llm_init(const GuidedContext& ctx, std::size_t n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("llm_init: n must be >= 1");
    std::vector<Expr> out;
    try {
        out = ask(ctx, ctx.llm.templates.init, {}, n, rng);
    } catch (const LlmError&) {
    } catch (const MissingPlaceholderValue&) {
    }
    if (out.size() < n) ctx.backend.note_fallback();
    while (out.size() < n) out.push_back(random_expr(ctx.ops, ctx.evolve.init_max_depth, rng));
    return out;
}

Expr llm_mutate(const Expr& e, const GuidedContext& ctx, Rng& rng) {
    const Rng entry_state = rng;
    try {
        auto found = ask(ctx, ctx.llm.templates.mutate, {format(e, ctx.ops.variable_names)}, 1, rng);
        if (!found.empty()) return found.front();
    } catch (const LlmError&) {
    } catch (const MissingPlaceholderValue&) {
    }
    ctx.backend.note_fallback();
    rng = entry_state;
    return mutate(e, ctx.evolve.mutation_weights, ctx.ops, ctx.evolve.limits, ctx.evolve.init_max_depth, rng);
}

Expr llm_crossover(const Expr& a, const Expr& b, const GuidedContext& ctx, Rng& rng) {
    const Rng entry_state = rng;
    try {
        auto found = ask(ctx, ctx.llm.templates.crossover,
                         {format(a, ctx.ops.variable_names), format(b, ctx.ops.variable_names)}, 1, rng);
        if (!found.empty()) return found.front();
    } catch (const LlmError&) {
    } catch (const MissingPlaceholderValue&) {
    }
    ctx.backend.note_fallback();
    rng = entry_state;
    Expr child = crossover(a, b, rng).first;
    return ctx.evolve.limits.admits(child) ? child : a;
}

}  // namespace lasr
