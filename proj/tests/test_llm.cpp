#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include <json.hpp>

#include "helpers.hpp"
#include "lasr/llm.hpp"
#include "lasr/population.hpp"

using namespace lasr;

namespace {

// Serves POST /v1/chat/completions from a handler on a random local port.
class StubServer {
public:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    explicit StubServer(Handler h) {
        server_.Post("/v1/chat/completions", [this, h](const httplib::Request& req, httplib::Response& res) {
            ++requests;
            last_auth = req.get_header_value("Authorization");
            last_body = req.body;
            h(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

    std::atomic<int> requests{0};
    std::string last_auth;
    std::string last_body;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

std::string completion(const std::string& text) {
    return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump();
}

HttpSettings fast_settings(const std::string& endpoint) {
    HttpSettings s;
    s.endpoint = endpoint;
    s.api_key_env = "LASR_TEST_API_KEY";
    s.timeout_seconds = 5;
    s.backoff_seconds = 0.01;
    s.max_retries = 2;
    return s;
}

struct GuidedFixture {
    std::vector<std::string> names{"x1", "x2", "r"};
    OperatorSet ops = OperatorSet::standard(names);
    ConceptLibrary library;
    LlmConfig llm;
    EvolveConfig evolve;

    GuidedContext context(LlmBackend& backend) { return GuidedContext{library, ops, backend, llm, evolve, nullptr}; }
};

}  // namespace

TEST_SUITE("llm") {
    TEST_CASE("prompt rendering") {
        PromptBindings b;
        b.variables = "x1";
        b.operators = "+";
        CHECK(render_prompt("Use {{variables}}", b) == "Use x1");
        CHECK_THROWS_AS(render_prompt("Mutate {{expressions}}", b), MissingPlaceholderValue);
        CHECK_THROWS_AS(render_prompt("{{data}}", b), MissingPlaceholderValue);
        CHECK_THROWS_AS(render_prompt("{{nonsense}}", b), MissingPlaceholderValue);
        b.concepts = {"first idea", "second idea"};
        b.expressions = {"(x1 + 1.0)"};
        std::string t = "C:\n{{concepts}}\nE:\n{{expressions}}\nV: {{variables}} O: {{operators}}";
        std::string once = render_prompt(t, b);
        CHECK(once == "C:\n1. first idea\n2. second idea\nE:\n(x1 + 1.0)\nV: x1 O: +");
        CHECK(render_prompt(t, b) == once);
        b.data = "x1=1.0 → y=2.0";
        CHECK(render_prompt("{{data}}", b) == "x1=1.0 → y=2.0");
    }

    TEST_CASE("default templates only use known placeholders") {
        PromptTemplates t = PromptTemplates::defaults();
        PromptBindings b;
        b.variables = "x1";
        b.operators = "+";
        b.expressions = {"x1"};
        for (const std::string* s : {&t.init, &t.mutate, &t.crossover, &t.abstraction, &t.evolution}) {
            CHECK_FALSE(s->empty());
            CHECK_NOTHROW(render_prompt(*s, b));
        }
    }

    TEST_CASE("scripted and replay backends") {
        ScriptedBackend scripted(std::vector<std::string>{"x1 * x2"});
        CHECK(scripted.complete("anything") == "x1 * x2");
        CHECK_THROWS_AS(scripted.complete("again"), LlmUnavailable);
        CHECK(scripted.calls() == 2);
        CHECK(scripted.failures() == 1);

        ReplayBackend replay;
        replay.add_prompt("hello", "world");
        CHECK(replay.complete("hello") == "world");
        try {
            replay.complete("other");
            FAIL("expected ReplayMiss");
        } catch (const ReplayMiss& e) {
            CHECK(e.digest() == prompt_digest("other"));
        }
        CHECK(prompt_digest("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

        OfflineBackend off;
        CHECK_THROWS_AS(off.complete("x"), LlmUnavailable);
    }

    TEST_CASE("recording backend writes a store the replay backend reads") {
        auto path = std::filesystem::temp_directory_path() / "lasr_tests" / "store.jsonl";
        std::filesystem::create_directories(path.parent_path());
        std::filesystem::remove(path);
        ScriptedBackend inner(std::vector<std::string>{"one", "two\nlines"});
        RecordingBackend rec(inner, path);
        CHECK(rec.complete("p1") == "one");
        CHECK(rec.complete("p2") == "two\nlines");
        auto replay = ReplayBackend::from_file(path);
        CHECK(replay->size() == 2);
        CHECK(replay->complete("p2") == "two\nlines");
    }

    TEST_CASE("http backend against a stub server") {
        StubServer server([](const httplib::Request&, httplib::Response& res) {
            res.set_content(completion("x1 + x2"), "application/json");
        });
        setenv("LASR_TEST_API_KEY", "sk-test", 1);
        HttpBackend http(fast_settings(server.endpoint()));
        CHECK(http.complete("propose something") == "x1 + x2");
        CHECK(server.requests == 1);
        CHECK(server.last_auth == "Bearer sk-test");
        auto body = nlohmann::json::parse(server.last_body);
        CHECK(body["model"] == "llama3-8b");
        CHECK(body["messages"][0]["content"] == "propose something");
        unsetenv("LASR_TEST_API_KEY");
    }

    TEST_CASE("http backend retries transient failures only") {
        std::atomic<int> seen{0};
        StubServer flaky([&](const httplib::Request&, httplib::Response& res) {
            if (seen++ == 0) {
                res.status = 503;
                return;
            }
            res.set_content(completion("ok"), "application/json");
        });
        HttpBackend http(fast_settings(flaky.endpoint()));
        CHECK(http.complete("p") == "ok");
        CHECK(flaky.requests == 2);

        StubServer rejecting([](const httplib::Request&, httplib::Response& res) { res.status = 400; });
        HttpBackend bad(fast_settings(rejecting.endpoint()));
        CHECK_THROWS_AS(bad.complete("p"), LlmUnavailable);
        CHECK(rejecting.requests == 1);

        StubServer down([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
        HttpBackend always(fast_settings(down.endpoint()));
        CHECK_THROWS_AS(always.complete("p"), LlmUnavailable);
        CHECK(down.requests == 3);

        CHECK_THROWS_AS(HttpBackend::parse_response("{\"choices\": []}"), LlmUnavailable);
    }

    TEST_CASE("candidate extraction") {
        OperatorSet ops = OperatorSet::standard({"x1", "x2"});
        auto c = parse_candidates("1. (x1 + x2)\n2. sin(x1)", ops, 10);
        REQUIRE(c.size() == 2);
        CHECK(c[0] == parse("x1 + x2", ops));
        CHECK(c[1] == parse("sin(x1)", ops));
        CHECK(parse_candidates("I cannot help with that.", ops, 10).empty());
        auto d = parse_candidates("- y = x1 * x2\n`x2 / x1`.\nExpression 3: cos(x2)\nnot an expression", ops, 10);
        CHECK(d.size() == 3);
        CHECK(parse_candidates("x1\nx2\nx1 + x2", ops, 2).size() == 2);
        for (const Expr& e : d) CHECK(parse(format(e, ops.variable_names), ops) == e);
    }

    TEST_CASE("guided init fills the shortfall with random trees") {
        GuidedFixture f;
        ScriptedBackend three(std::vector<std::string>{"x1\nx2 * r\nsin(r)"});
        Rng rng(1);
        auto out = llm_init(f.context(three), 5, rng);
        REQUIRE(out.size() == 5);
        CHECK(out[0] == parse("x1", f.ops));
        CHECK(out[1] == parse("x2 * r", f.ops));
        CHECK(out[2] == parse("sin(r)", f.ops));
        CHECK(three.fallbacks() == 1);

        OfflineBackend off;
        auto random = llm_init(f.context(off), 4, rng);
        CHECK(random.size() == 4);
        CHECK(off.calls() == 1);
        CHECK_THROWS(llm_init(f.context(off), 0, rng));
    }

    TEST_CASE("guided mutation") {
        GuidedFixture f;
        Expr e = parse("x1 + r", f.ops);
        ScriptedBackend good(std::vector<std::string>{"x1 * x2"});
        Rng rng(2);
        CHECK(llm_mutate(e, f.context(good), rng) == parse("x1 * x2", f.ops));

        ScriptedBackend garbage(std::vector<std::string>{"no idea, sorry"});
        Rng a(3), b(3);
        Expr guided = llm_mutate(e, f.context(garbage), a);
        Expr symbolic = mutate(e, f.evolve.mutation_weights, f.ops, f.evolve.limits, f.evolve.init_max_depth, b);
        CHECK(guided == symbolic);
        CHECK(a == b);

        f.evolve.limits.max_complexity = 5;
        ScriptedBackend oversize(std::vector<std::string>{"x1 * x2 * r * x1 * x2 * r"});
        for (int i = 0; i < 5; ++i) oversize.push("x1 * x2 * r * x1 * x2 * r");
        for (int i = 0; i < 5; ++i) CHECK(llm_mutate(e, f.context(oversize), rng).size() <= 5);
    }

    TEST_CASE("guided crossover") {
        GuidedFixture f;
        Expr a = parse("x1 * x2", f.ops);
        Expr b = parse("sin(r)", f.ops);
        ScriptedBackend good(std::vector<std::string>{"x1 * sin(r)"});
        Rng rng(4);
        CHECK(llm_crossover(a, b, f.context(good), rng) == parse("x1 * sin(r)", f.ops));
        auto prompt = good.prompts().at(0);
        CHECK(prompt.find(format(a, f.ops.variable_names)) != std::string::npos);
        CHECK(prompt.find(format(b, f.ops.variable_names)) != std::string::npos);

        OfflineBackend off;
        Rng r1(9), r2(9);
        Expr child = llm_crossover(a, b, f.context(off), r1);
        CHECK(child == crossover(a, b, r2).first);
    }

    TEST_CASE("a seeded hint reaches the first guided prompt") {
        std::vector<std::string> vars{"q1", "q2", "r"};
        Dataset d = lasr::test::formula_data("q1 * q2 / (r * r)", vars, 100, 1);
        OperatorSet ops = OperatorSet::standard(vars);
        ConceptLibrary lib = init_library({"inverse square law"});
        LlmConfig llm;
        EvolveConfig evolve;
        evolve.population_size = 10;
        ReplayBackend replay;
        GuidedContext g{lib, ops, replay, llm, evolve, nullptr};
        std::string prompt = render_prompt(llm.templates.init, make_bindings(g, {"inverse square law"}, {}));
        replay.add_prompt(prompt, "1. 1/(r*r)\n2. q1/(r*r)");

        SearchContext ctx{d, ops, evolve, llm, lib, replay, 1.0};
        Population pop = init_population(ctx, Rng(2));
        CHECK(replay.failures() == 0);
        bool found = false;
        for (const Hypothesis& h : pop.members) found = found || format(h.expr, vars).find("/ (r * r))") != std::string::npos;
        CHECK(found);
    }
}
