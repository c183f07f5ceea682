#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "helpers.hpp"
#include "lasr/concepts.hpp"

using namespace lasr;

namespace {

Hypothesis hyp(std::size_t var, std::size_t complexity, double loss) {
    return Hypothesis{Expr::variable(var), loss, complexity, posterior_score(loss, complexity, 0.01)};
}

std::set<std::pair<std::size_t, double>> pairs(const std::vector<Hypothesis>& hs) {
    std::set<std::pair<std::size_t, double>> out;
    for (const auto& h : hs) out.insert({h.complexity, h.loss});
    return out;
}

// Plain O(n^2) non-dominated filter over unique expressions.
std::set<std::pair<std::size_t, double>> brute_front(const std::vector<Hypothesis>& hs) {
    std::map<std::string, Hypothesis> unique;
    for (const auto& h : hs)
        if (std::isfinite(h.loss)) unique.emplace(expr_key(h.expr), h);
    std::set<std::pair<std::size_t, double>> out;
    for (const auto& [k, a] : unique) {
        bool dominated = false;
        for (const auto& [k2, b] : unique) {
            bool le = b.complexity <= a.complexity && b.loss <= a.loss;
            bool lt = b.complexity < a.complexity || b.loss < a.loss;
            dominated = dominated || (le && lt);
        }
        if (!dominated) out.insert({a.complexity, a.loss});
    }
    return out;
}

ConceptLibrary numbered_library(std::size_t n) {
    ConceptLibrary lib;
    for (std::size_t i = 0; i < n; ++i) lib.add("concept " + std::to_string(i), 0);
    return lib;
}

}  // namespace

TEST_SUITE("concepts") {
    TEST_CASE("library seeding and windows") {
        CHECK_THROWS(init_library({"  "}));
        ConceptLibrary lib = init_library({"inverse square law"});
        REQUIRE(lib.size() == 1);
        CHECK(lib.concepts()[0].text == "inverse square law");
        CHECK(lib.concepts()[0].created_iteration == 0);
        CHECK(init_library({}).empty());
        CHECK_THROWS(lib.add("", 1));

        ConceptLibrary big = numbered_library(25);
        CHECK(big.recent().size() == 20);
        CHECK(big.older().size() == 5);
        CHECK(big.recent().front().text == "concept 5");
    }

    TEST_CASE("sampling draws uniformly from the recency window") {
        ConceptLibrary lib = numbered_library(30);
        Rng rng(17);
        const int trials = 100000;
        std::map<std::string, int> counts;
        for (int t = 0; t < trials; ++t) {
            auto s = sample_concepts(lib, 3, rng);
            REQUIRE(s.size() == 3);
            REQUIRE(std::set<std::string>(s.begin(), s.end()).size() == 3);
            for (const auto& c : s) ++counts[c];
        }
        for (std::size_t i = 0; i < 10; ++i) CHECK(counts.count("concept " + std::to_string(i)) == 0);
        for (std::size_t i = 10; i < 30; ++i) {
            double freq = counts["concept " + std::to_string(i)] / static_cast<double>(trials);
            CHECK(freq == doctest::Approx(3.0 / 20.0).epsilon(0.02));
        }

        ConceptLibrary small = numbered_library(3);
        auto all = sample_concepts(small, 5, rng);
        CHECK(std::set<std::string>(all.begin(), all.end()) ==
              std::set<std::string>{"concept 0", "concept 1", "concept 2"});
        CHECK(sample_concepts(ConceptLibrary{}, 3, rng).empty());
    }

    TEST_CASE("concept log round-trip") {
        ConceptLibrary lib = numbered_library(4);
        lib.add("line with \"quotes\"", 3);
        auto path = std::filesystem::temp_directory_path() / "lasr_tests" / "concepts.jsonl";
        std::filesystem::create_directories(path.parent_path());
        write_concept_log(lib, path);
        CHECK(read_concept_log(path) == lib);
    }

    TEST_CASE("pareto front of a small population") {
        std::vector<Hypothesis> hs{hyp(0, 3, 1.0), hyp(1, 5, 0.5), hyp(2, 4, 2.0)};
        ParetoFront f = extract_pareto(hs, 5);
        REQUIRE(f.best.size() == 2);
        CHECK(f.best[0].complexity == 3);
        CHECK(f.best[1].complexity == 5);
        REQUIRE(f.worst.size() == 3);
        CHECK(f.worst[0].loss == 2.0);

        std::vector<Hypothesis> one{hyp(0, 7, 0.1)};
        CHECK(extract_pareto(one, 2).best.size() == 1);

        std::vector<Hypothesis> bad{hyp(0, 4, INFINITY), hyp(1, 2, INFINITY)};
        ParetoFront fb = extract_pareto(bad, 2);
        REQUIRE(fb.best.size() == 1);
        CHECK(fb.best[0].complexity == 2);
        // with nothing finite, the non-finite members serve as the bad examples
        CHECK(fb.worst.size() == 2);
    }

    TEST_CASE("pareto front agrees with a brute-force filter") {
        std::vector<std::string> names{"x1", "x2"};
        OperatorSet ops = OperatorSet::standard(names);
        Dataset d = lasr::test::formula_data("x1 * x2 + x1", names, 40, 3);
        Rng rng(31);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<Hypothesis> hs;
            for (int i = 0; i < 40; ++i) hs.push_back(make_hypothesis(random_expr(ops, 4, rng), d, 0.01));
            ParetoFront f = extract_pareto(hs, 5);
            CHECK(pairs(f.best) == brute_front(hs));
            for (std::size_t i = 1; i < f.best.size(); ++i) {
                CHECK(f.best[i].complexity > f.best[i - 1].complexity);
                CHECK(f.best[i].loss < f.best[i - 1].loss);
            }
            for (std::size_t i = 1; i < f.worst.size(); ++i) CHECK(f.worst[i].loss <= f.worst[i - 1].loss);
        }
    }

    TEST_CASE("frontier scores") {
        ParetoFront f;
        f.best = {hyp(0, 1, 1.0), hyp(1, 2, std::exp(-1.0))};
        auto s = frontier_scores(f);
        REQUIRE(s.size() == 2);
        CHECK(s[0] == 0.0);
        CHECK(s[1] == doctest::Approx(1.0));
        CHECK(frontier_scores(ParetoFront{}).empty());
    }

    TEST_CASE("reply parsing") {
        auto lines = parse_concept_lines("1. Inverse squares appear.\n\n- Products of charges.\n* Trig terms help\n");
        CHECK(lines == std::vector<std::string>{"Inverse squares appear.", "Products of charges.", "Trig terms help"});
        CHECK(parse_concept_lines("   \n").empty());
    }

    TEST_CASE("abstraction adds one concept on success") {
        std::vector<std::string> names{"x1", "x2"};
        OperatorSet ops = OperatorSet::standard(names);
        LlmConfig llm;
        std::vector<Hypothesis> hs{Hypothesis{parse("x1 * x2", ops), 0.1, 3, 0.0},
                                   Hypothesis{parse("sin(x1)", ops), 5.0, 2, 0.0}};
        ParetoFront f = extract_pareto(hs, 5);
        ConceptLibrary lib = init_library({"hint"});
        Rng rng(1);

        ScriptedBackend good(std::vector<std::string>{"Good expressions multiply the inputs."});
        auto c = abstract_concept(f, lib, ConceptContext{ops, good, llm}, 4, rng);
        REQUIRE(c.has_value());
        CHECK(lib.size() == 2);
        CHECK(lib.concepts().back().text == "Good expressions multiply the inputs.");
        CHECK(lib.concepts().back().created_iteration == 4);
        std::string prompt = good.prompts().at(0);
        CHECK(prompt.find("(x1 * x2)") != std::string::npos);
        CHECK(prompt.find("hint") != std::string::npos);

        OfflineBackend off;
        CHECK_FALSE(abstract_concept(f, lib, ConceptContext{ops, off, llm}, 5, rng).has_value());
        ScriptedBackend blank(std::vector<std::string>{"  \n"});
        CHECK_FALSE(abstract_concept(f, lib, ConceptContext{ops, blank, llm}, 5, rng).has_value());
        CHECK(lib.size() == 2);
    }

    TEST_CASE("concept evolution") {
        OperatorSet ops = OperatorSet::standard({"x1"});
        LlmConfig llm;
        Rng rng(2);

        ConceptLibrary small = numbered_library(20);
        ScriptedBackend unused(std::vector<std::string>{"never"});
        CHECK(evolve_concepts(small, ConceptContext{ops, unused, llm}, 1, rng) == 0);
        CHECK(unused.calls() == 0);
        CHECK(small.size() == 20);

        ConceptLibrary big = numbered_library(25);
        ScriptedBackend three(std::vector<std::string>{"1. alpha\n2. beta\n3. gamma"});
        CHECK(evolve_concepts(big, ConceptContext{ops, three, llm}, 2, rng) == 3);
        CHECK(big.size() == 28);
        CHECK(big.concepts().back().text == "gamma");
        // the prompt only shows concepts that have left the window
        std::string prompt = three.prompts().at(0);
        CHECK(prompt.find("concept 24") == std::string::npos);
    }
}
