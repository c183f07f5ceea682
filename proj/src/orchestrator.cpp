#include "lasr/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace lasr {

using json = nlohmann::json;

void RunConfig::validate() const {
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (n_populations < 1) throw ConfigError("n_populations must be >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p must be in [0, 1]");
    if (recency_window < 1) throw ConfigError("recency_window must be >= 1");
    if (!(early_stop_mse >= 0.0)) throw ConfigError("early_stop_mse must be >= 0");
    if (!(wall_clock_seconds >= 0.0)) throw ConfigError("wall_clock_seconds must be >= 0");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (llm.concepts_per_prompt < 1) throw ConfigError("llm.concepts_per_prompt must be >= 1");
    if (llm.max_candidates < 1) throw ConfigError("llm.max_candidates must be >= 1");
    try {
        evolve.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

OperatorSet RunConfig::operator_set(const std::vector<std::string>& variable_names) const {
    OperatorSet ops{binary_ops, unary_ops, allow_constants, variable_names};
    try {
        ops.normalize();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return ops;
}

Hypothesis best_expression(const ParetoFront& f, BestMode mode, double parsimony) {
    if (f.best.empty()) throw std::invalid_argument("best_expression: empty frontier");
    const Hypothesis* best = &f.best.front();
    for (const Hypothesis& h : f.best) {
        if (mode == BestMode::min_loss) {
            if (h.loss < best->loss || (h.loss == best->loss && h.complexity < best->complexity)) best = &h;
        } else if (posterior_score(h.loss, h.complexity, parsimony) <
                   posterior_score(best->loss, best->complexity, parsimony)) {
            best = &h;
        }
    }
    return *best;
}

namespace {

template <typename Fn>
void for_each_population(std::vector<Population>& pops, std::size_t workers, Fn fn) {
    workers = std::min(workers, pops.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < pops.size(); ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < pops.size(); i = next++) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

Rng stream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

}  // namespace

RunResult run(const RunConfig& cfg, const Dataset& d, LlmBackend& backend) {
    cfg.validate();
    if (d.rows() == 0) throw DataError("dataset has no rows");
    const auto start = std::chrono::steady_clock::now();
    const OperatorSet ops = cfg.operator_set(d.variable_names());

    ConceptLibrary lib = init_library(cfg.hints, cfg.recency_window);
    std::vector<IterationRecord> history;
    bool solved = false;
    std::size_t iterations_used = 0;
    // Stream 0 drives the concept phase and migration; population i uses stream i + 1.
    Rng master = stream(cfg.seed, 0);

    // The library is only written between cycles, so the populations always
    // read the state from the start of the iteration.
    const SearchContext ctx{d, ops, cfg.evolve, cfg.llm, lib, backend, cfg.p};
    std::vector<Population> pops(cfg.n_populations);
    for_each_population(pops, cfg.workers, [&](std::size_t i) { pops[i] = init_population(ctx, stream(cfg.seed, i + 1)); });

    std::vector<Hypothesis> hall_of_fame;
    ParetoFront front;
    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        for_each_population(pops, cfg.workers, [&](std::size_t i) { sr_cycle(pops[i], ctx); });

        std::vector<Hypothesis> members = hall_of_fame;
        for (const Population& p : pops) members.insert(members.end(), p.members.begin(), p.members.end());
        front = extract_pareto(std::span<const Hypothesis>(members), cfg.n_worst);
        hall_of_fame = front.best;

        const Hypothesis& lowest = best_expression(front, BestMode::min_loss, 0.0);
        IterationRecord rec{it, lowest.loss, lowest.complexity, 0, 0, 0, 0};
        iterations_used = it;
        bool stop = lowest.loss < cfg.early_stop_mse;

        // With p = 0 nothing ever reads the library, so the concept phase is
        // skipped and the run is the plain multi-population search.
        if (!stop && cfg.p > 0.0) {
            ConceptContext cctx{ops, backend, cfg.llm};
            if (abstract_concept(front, lib, cctx, it, master)) ++rec.concepts_added;
            for (std::size_t m = 0; m < cfg.evolution_steps; ++m) rec.concepts_added += evolve_concepts(lib, cctx, it, master);
        }
        rec.llm_calls = backend.calls();
        rec.llm_failures = backend.failures();
        rec.llm_fallbacks = backend.fallbacks();
        history.push_back(rec);
        if (cfg.on_iteration) cfg.on_iteration(rec);
        if (stop) {
            solved = true;
            break;
        }
        migrate(pops, cfg.evolve.migrate_fraction, master);

        double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (cfg.wall_clock_seconds > 0 && elapsed >= cfg.wall_clock_seconds) break;
    }

    CycleStats stats;
    for (const Population& p : pops) stats += p.stats;
    Hypothesis best = best_expression(front, cfg.best_mode, cfg.evolve.parsimony);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return RunResult{std::move(best), std::move(front), std::move(lib), std::move(history), solved,
                     iterations_used, stats, d.variable_names(), seconds};
}

namespace {

json number(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

json hypothesis_json(const Hypothesis& h, const std::vector<std::string>& names) {
    return {{"expression", format(h.expr, names)},
            {"loss", number(h.loss)},
            {"complexity", h.complexity},
            {"score", number(h.score)}};
}

}  // namespace

std::string to_json(const RunResult& r) {
    json j;
    j["best"] = hypothesis_json(r.best, r.variable_names);
    j["solved"] = r.solved;
    j["iterations_used"] = r.iterations_used;
    j["variables"] = r.variable_names;
    json best = json::array(), worst = json::array();
    for (const auto& h : r.frontier.best) best.push_back(hypothesis_json(h, r.variable_names));
    for (const auto& h : r.frontier.worst) worst.push_back(hypothesis_json(h, r.variable_names));
    j["frontier"] = {{"best", best}, {"worst", worst}};
    json history = json::array();
    for (const auto& h : r.history)
        history.push_back({{"iteration", h.iteration},
                           {"best_loss", number(h.best_loss)},
                           {"best_complexity", h.best_complexity},
                           {"llm_calls", h.llm_calls},
                           {"llm_failures", h.llm_failures},
                           {"llm_fallbacks", h.llm_fallbacks},
                           {"concepts_added", h.concepts_added}});
    j["history"] = history;
    json concepts = json::array();
    for (const auto& c : r.library.concepts())
        concepts.push_back({{"id", c.id}, {"iteration", c.created_iteration}, {"text", c.text}});
    j["concepts"] = concepts;
    j["events"] = {{"mutations", r.stats.mutations},
                   {"crossovers", r.stats.crossovers},
                   {"llm_events", r.stats.llm_events},
                   {"accepted", r.stats.accepted}};
    return j.dump(2);
}

void write_artifacts(const RunResult& r, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    auto open = [&](const char* name) {
        std::ofstream out(dir / name);
        if (!out) throw IoError("cannot write '" + (dir / name).string() + "'");
        return out;
    };
    {
        auto out = open("summary.json");
        out << to_json(r) << '\n';
    }
    {
        auto out = open("frontier.csv");
        out << "complexity,loss,score,expression\n";
        auto scores = frontier_scores(r.frontier);
        for (std::size_t i = 0; i < r.frontier.best.size(); ++i) {
            const Hypothesis& h = r.frontier.best[i];
            out << h.complexity << ',' << format_constant(h.loss) << ',' << format_constant(scores[i]) << ",\""
                << format(h.expr, r.variable_names) << "\"\n";
        }
    }
    {
        auto out = open("history.csv");
        out << "iteration,best_loss,best_complexity,llm_calls,llm_failures,llm_fallbacks,concepts_added\n";
        for (const auto& h : r.history)
            out << h.iteration << ',' << format_constant(h.best_loss) << ',' << h.best_complexity << ',' << h.llm_calls
                << ',' << h.llm_failures << ',' << h.llm_fallbacks << ',' << h.concepts_added << '\n';
    }
    write_concept_log(r.library, dir / "concepts.jsonl");
}

}  // namespace lasr
