#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "helpers.hpp"
#include "lasr/orchestrator.hpp"

using namespace lasr;

namespace {

ParetoFront two_point_front() {
    ParetoFront f;
    f.best = {Hypothesis{Expr::variable(0), 1e-3, 3, 0.0}, Hypothesis{Expr::variable(1), 1e-12, 15, 0.0}};
    return f;
}

RunConfig small_config() {
    RunConfig cfg;
    cfg.iterations = 3;
    cfg.n_populations = 2;
    cfg.evolve.population_size = 12;
    cfg.evolve.cycles_per_iteration = 20;
    cfg.seed = 5;
    return cfg;
}

// Always answers with a usable expression; concept prompts get the same text.
ScriptedBackend::Responder echo_product() {
    return [](const std::string&) { return std::string("x1 * x2"); };
}

}  // namespace

TEST_SUITE("orchestrator") {
    TEST_CASE("best expression selection") {
        ParetoFront f = two_point_front();
        CHECK(best_expression(f, BestMode::min_loss, 0.01).complexity == 15);
        CHECK(best_expression(f, BestMode::min_score, 0.01).complexity == 15);
        CHECK(best_expression(f, BestMode::min_score, 2.0).complexity == 3);
        double flip = std::log(1e9) / 12.0;
        CHECK(best_expression(f, BestMode::min_score, flip * 0.99).complexity == 15);
        CHECK(best_expression(f, BestMode::min_score, flip * 1.01).complexity == 3);
        CHECK_THROWS(best_expression(ParetoFront{}, BestMode::min_loss, 0.01));
    }

    TEST_CASE("config validation") {
        RunConfig cfg;
        CHECK_NOTHROW(cfg.validate());
        cfg.p = 1.5;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg = RunConfig{};
        cfg.n_populations = 0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg = RunConfig{};
        cfg.iterations = 0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }

    TEST_CASE("one guided iteration adds exactly one concept") {
        Dataset d = lasr::test::formula_data("x1 * x2 + sin(x1)", {"x1", "x2"}, 100, 2);
        RunConfig cfg = small_config();
        cfg.iterations = 1;
        cfg.evolution_steps = 0;
        cfg.p = 0.5;
        ScriptedBackend backend(echo_product());
        RunResult r = run(cfg, d, backend);
        CHECK(r.iterations_used == 1);
        CHECK(r.library.size() == 1);
        CHECK(r.history.at(0).concepts_added == 1);
        CHECK(backend.calls() > 0);
    }

    TEST_CASE("p = 0 never calls the backend") {
        Dataset d = lasr::test::formula_data("x1 * x2 + sin(x1)", {"x1", "x2"}, 100, 2);
        RunConfig cfg = small_config();
        cfg.evolution_steps = 0;
        ScriptedBackend backend(echo_product());
        RunResult r = run(cfg, d, backend);
        CHECK(backend.calls() == 0);
        CHECK(r.library.empty());
        CHECK(r.stats.llm_events == 0);
    }

    TEST_CASE("runs are deterministic and the history is monotone") {
        Dataset d = lasr::test::formula_data("x1 * x2 + sin(x1)", {"x1", "x2"}, 100, 2);
        RunConfig cfg = small_config();
        cfg.iterations = 4;
        cfg.p = 0.2;
        cfg.hints = {"products of inputs"};
        ScriptedBackend a(echo_product()), b(echo_product());
        RunResult ra = run(cfg, d, a);
        RunResult rb = run(cfg, d, b);
        CHECK(to_json(ra) == to_json(rb));
        CHECK(a.prompts() == b.prompts());

        for (std::size_t i = 1; i < ra.history.size(); ++i) CHECK(ra.history[i].best_loss <= ra.history[i - 1].best_loss);
        for (const auto& c : ra.library.concepts()) CHECK(c.created_iteration <= ra.iterations_used);
        CHECK(ra.library.concepts().front().text == "products of inputs");

        cfg.seed = 6;
        ScriptedBackend c(echo_product());
        CHECK(to_json(run(cfg, d, c)) != to_json(ra));
    }

    TEST_CASE("worker threads do not change the result") {
        Dataset d = lasr::test::formula_data("x1 * x2 + sin(x1)", {"x1", "x2"}, 100, 2);
        RunConfig cfg = small_config();
        ScriptedBackend a(echo_product()), b(echo_product());
        RunResult serial = run(cfg, d, a);
        cfg.workers = 3;
        RunResult threaded = run(cfg, d, b);
        CHECK(to_json(serial) == to_json(threaded));
    }

    TEST_CASE("early stop and callbacks") {
        Dataset d = lasr::test::formula_data("x1 * x2", {"x1", "x2"}, 100, 2);
        RunConfig cfg = small_config();
        cfg.iterations = 30;
        std::size_t seen = 0;
        cfg.on_iteration = [&](const IterationRecord&) { ++seen; };
        OfflineBackend off;
        RunResult r = run(cfg, d, off);
        CHECK(r.solved);
        CHECK(r.iterations_used < 30);
        CHECK(seen == r.iterations_used);
        CHECK(r.history.size() == r.iterations_used);
    }

    TEST_CASE("artifacts") {
        Dataset d = lasr::test::formula_data("x1 * x2", {"x1", "x2"}, 50, 2);
        RunConfig cfg = small_config();
        cfg.hints = {"a hint"};
        OfflineBackend off;
        RunResult r = run(cfg, d, off);
        auto dir = std::filesystem::temp_directory_path() / "lasr_tests" / "artifacts";
        std::filesystem::remove_all(dir);
        write_artifacts(r, dir);
        for (const char* f : {"summary.json", "frontier.csv", "history.csv", "concepts.jsonl"})
            CHECK(std::filesystem::exists(dir / f));
        CHECK(read_concept_log(dir / "concepts.jsonl") == r.library);
    }
}
