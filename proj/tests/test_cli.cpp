#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "lasr/bench.hpp"
#include "lasr/dataset.hpp"

using namespace lasr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string output;  // stdout and stderr together
};

fs::path work_dir() {
    fs::path dir = fs::temp_directory_path() / "lasr_tests" / "cli";
    fs::create_directories(dir);
    return dir;
}

Outcome lasr_cli(const std::string& args) {
    fs::path log = work_dir() / "last_output.txt";
    std::string cmd = std::string("\"") + LASR_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    o.output = ss.str();
    return o;
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("usage errors") {
        CHECK(lasr_cli("").code == 2);
        CHECK(lasr_cli("frobnicate").code == 2);
        CHECK(lasr_cli("run").code == 2);
        CHECK(lasr_cli("--help").code == 0);
    }

    TEST_CASE("run on a csv writes artifacts") {
        fs::path dir = work_dir();
        Dataset d = lasr::test::formula_data("x1 * x2 + x3", {"x1", "x2", "x3"}, 200, 1);
        write_csv(d, dir / "easy.csv");
        fs::path out = dir / "run_out";
        fs::remove_all(out);
        Outcome o = lasr_cli("run \"" + (dir / "easy.csv").string() + "\" --iterations 5 --seed 2 -o \"" + out.string() +
                             "\" --hints \"sums of products\"");
        INFO(o.output);
        REQUIRE(o.code == 0);
        CHECK(contains(o.output, "best: "));
        auto summary = nlohmann::json::parse(std::ifstream(out / "summary.json"));
        CHECK(summary.contains("best"));
        CHECK(fs::exists(out / "concepts.jsonl"));

        CHECK(lasr_cli("run \"" + (dir / "easy.csv").string() + "\" -t nope").code == 3);
        CHECK(lasr_cli("run \"" + (dir / "easy.csv").string() + "\" --set no_such_key=1").code == 3);
        CHECK(lasr_cli("run \"" + (dir / "missing.csv").string() + "\"").code == 3);
        CHECK(lasr_cli("run \"" + (dir / "easy.csv").string() + "\" --llm replay").code != 0);
    }

    TEST_CASE("synth writes a loadable suite") {
        fs::path out = work_dir() / "synth";
        fs::remove_all(out);
        Outcome o = lasr_cli("synth --count 41 --seed 3 --samples 50 -o \"" + out.string() + "\"");
        INFO(o.output);
        REQUIRE(o.code == 0);
        auto problems = load_suite(out / "suite.json");
        CHECK(problems.size() == 41);
        CHECK(fs::exists(out / "ground_truth.txt"));
        std::size_t csvs = 0;
        for (const auto& entry : fs::directory_iterator(out)) csvs += entry.path().extension() == ".csv" ? 1 : 0;
        CHECK(csvs == 41);
    }

    TEST_CASE("bench on an empty suite fails cleanly") {
        fs::path suite = work_dir() / "empty.json";
        std::ofstream(suite) << R"({"problems": []})";
        Outcome o = lasr_cli("bench \"" + suite.string() + "\"");
        CHECK(o.code != 0);
        CHECK(contains(o.output, "empty suite"));
    }

    TEST_CASE("bench runs a small suite") {
        fs::path suite = work_dir() / "one.json";
        std::ofstream(suite) << R"({"problems": [
            {"name": "product", "ground_truth": "x1 * x2", "variables": ["x1", "x2"], "range": [1, 3], "n_samples": 100}
        ]})";
        Outcome o = lasr_cli("bench \"" + suite.string() + "\" --iterations 5 --seed 1 -o \"" + (work_dir() / "bench_out").string() + "\"");
        INFO(o.output);
        CHECK(o.code == 0);
        CHECK(contains(o.output, "exact solves: 1/1"));
    }

    TEST_CASE("fit-scaling reports free parameters") {
        fs::path dir = work_dir();
        {
            std::ofstream csv(dir / "scaling.csv");
            csv << "train_steps,shots,batch_size,total_params,score\n";
            Rng rng(4);
            std::uniform_real_distribution<double> logt(std::log(1e4), std::log(1e6));
            for (int i = 0; i < 200; ++i) {
                double t = std::exp(logt(rng));
                int s = 1 + i % 5;
                csv << t << ',' << s << ",256,1.5e9," << 0.8 - 0.3 / std::pow(t / 1e4, s) << '\n';
            }
        }
        Outcome o = lasr_cli("fit-scaling \"" + (dir / "scaling.csv").string() + "\" --skeleton residual_only");
        INFO(o.output);
        REQUIRE(o.code == 0);
        CHECK(contains(o.output, "Free Parameters"));
        std::istringstream lines(o.output);
        std::string line;
        bool found = false;
        while (std::getline(lines, line)) {
            if (line.rfind("residual_only ", 0) == 0) {
                found = true;
                CHECK(line.substr(line.find_last_not_of(' ')) == "1");
            }
        }
        CHECK(found);

        Outcome all = lasr_cli("fit-scaling \"" + (dir / "scaling.csv").string() + "\"");
        CHECK(all.code == 0);
        for (const char* id : {"lasr_law", "chinchilla", "modified_chinchilla", "residual_only"}) CHECK(contains(all.output, id));
        CHECK(lasr_cli("fit-scaling \"" + (dir / "scaling.csv").string() + "\" --skeleton bogus").code == 2);
    }
}
