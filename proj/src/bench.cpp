#include "lasr/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

namespace lasr {

using json = nlohmann::json;

bool exact_match(const Expr& pred, const Expr& truth, const Dataset& d, const ExactMatchOptions& opts) {
    const Expr p = simplify(pred);
    const Expr t = simplify(truth);
    const std::size_t n_vars = std::max({d.cols(), variable_extent(p), variable_extent(t)});
    if (variable_extent(p) > d.cols() || variable_extent(t) > d.cols()) return false;

    auto used_p = variables_used(p, n_vars);
    auto used_t = variables_used(t, n_vars);
    for (std::size_t i = 0; i < n_vars; ++i)
        if (used_p[i] && !used_t[i]) return false;

    std::vector<std::pair<double, double>> box;
    for (std::size_t c = 0; c < d.cols(); ++c) {
        auto [lo, hi] = std::minmax_element(d.column(c).begin(), d.column(c).end());
        box.emplace_back(*lo, *hi);
    }

    Rng rng(opts.seed);
    std::vector<double> point(d.cols());
    std::size_t checked = 0;
    const std::size_t max_draws = 20 * opts.n_points;
    for (std::size_t draw = 0; draw < max_draws && checked < opts.n_points; ++draw) {
        for (std::size_t c = 0; c < d.cols(); ++c)
            point[c] = std::uniform_real_distribution<double>(box[c].first, box[c].second)(rng);
        double tv = evaluate_point(t, point);
        if (!std::isfinite(tv)) continue;
        double pv = evaluate_point(p, point);
        if (!std::isfinite(pv)) return false;
        if (std::abs(pv - tv) > opts.rel_tol * (std::abs(tv) + opts.abs_floor)) return false;
        ++checked;
    }
    return checked > 0;
}

double r_squared(const std::vector<double>& pred, const std::vector<double>& y) {
    if (pred.size() != y.size() || y.empty()) throw DimensionMismatch("r_squared: size mismatch");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sse += (y[i] - pred[i]) * (y[i] - pred[i]);
        sst += (y[i] - mean) * (y[i] - mean);
    }
    if (std::isnan(sse)) return -std::numeric_limits<double>::infinity();
    if (sst == 0.0) return sse == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    return 1.0 - sse / sst;
}

double r_squared(const Expr& pred, const Dataset& d) { return r_squared(evaluate(pred, d), d.y()); }

std::string to_string(SolveCategory c) {
    switch (c) {
        case SolveCategory::exact_solve: return "Exact Solve";
        case SolveCategory::almost_solve: return "Almost Solve";
        case SolveCategory::close: return "Close";
        case SolveCategory::not_close: return "Not Close";
        case SolveCategory::unlabeled: break;
    }
    return "";
}

std::vector<Problem> load_suite(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open suite '" + path.string() + "'");
    std::vector<Problem> out;
    try {
        json j = json::parse(in);
        for (const json& r : j.at("problems")) {
            Problem p;
            p.name = r.at("name").get<std::string>();
            if (r.contains("ground_truth")) p.ground_truth = r["ground_truth"].get<std::string>();
            p.variables = r.value("variables", std::vector<std::string>{});
            if (r.contains("ranges")) {
                for (const json& lh : r["ranges"]) p.ranges.emplace_back(lh.at(0).get<double>(), lh.at(1).get<double>());
            } else if (r.contains("range")) {
                std::pair<double, double> lh{r["range"].at(0).get<double>(), r["range"].at(1).get<double>()};
                p.ranges.assign(p.variables.size(), lh);
            } else {
                p.ranges.assign(p.variables.size(), {1.0, 5.0});
            }
            p.n_samples = r.value("n_samples", p.n_samples);
            if (r.contains("csv")) {
                std::filesystem::path csv = r["csv"].get<std::string>();
                p.csv = csv.is_absolute() ? csv : path.parent_path() / csv;
            }
            p.target = r.value("target", p.target);
            p.noise = r.value("noise", p.noise);
            p.distractors = r.value("distractors", p.distractors);
            p.hints = r.value("hints", std::vector<std::string>{});
            if (r.contains("seed")) p.seed = r["seed"].get<std::uint64_t>();
            out.push_back(std::move(p));
        }
    } catch (const json::exception& e) {
        throw DataError("suite '" + path.string() + "': " + e.what());
    }
    return out;
}

PreparedProblem prepare_problem(const Problem& p, const OperatorSet& grammar, std::uint64_t seed) {
    Rng rng(seed);
    std::optional<Dataset> data;
    std::optional<Expr> truth;
    auto parse_truth = [&](const std::vector<std::string>& names) {
        if (!p.ground_truth) return;
        OperatorSet ops = grammar;
        ops.variable_names = names;
        truth = parse(*p.ground_truth, ops);
    };
    if (p.csv) {
        data = load_csv(*p.csv, p.target);
        parse_truth(data->variable_names());
    } else {
        if (!p.ground_truth) throw DataError("problem '" + p.name + "' has neither csv nor ground_truth");
        if (p.variables.empty()) throw DataError("problem '" + p.name + "' lists no variables");
        if (p.ranges.size() != p.variables.size()) throw DataError("problem '" + p.name + "': one range per variable");
        parse_truth(p.variables);
        data = sample_formula(*truth, p.variables, p.ranges, p.n_samples, rng);
    }
    if (p.noise > 0) data = add_target_noise(*data, p.noise, rng);
    if (p.distractors > 0) {
        std::vector<std::string> pool;
        for (const std::string& n : default_distractor_names(p.distractors + data->cols()))
            if (std::find(data->variable_names().begin(), data->variable_names().end(), n) == data->variable_names().end())
                pool.push_back(n);
        data = add_distractors(*data, p.distractors, pool, rng);
    }
    return PreparedProblem{std::move(*data), std::move(truth)};
}

namespace {

ProblemResult run_one(const Problem& p, const RunConfig& base, LlmBackend& backend, const ExactMatchOptions& match) {
    ProblemResult row;
    row.name = p.name;
    auto start = std::chrono::steady_clock::now();
    try {
        RunConfig cfg = base;
        if (p.seed) cfg.seed = *p.seed;
        cfg.hints.insert(cfg.hints.end(), p.hints.begin(), p.hints.end());
        OperatorSet grammar{cfg.binary_ops, cfg.unary_ops, cfg.allow_constants, {}};
        PreparedProblem prepared = prepare_problem(p, grammar, cfg.seed);
        RunResult r = run(cfg, prepared.data, backend);
        row.ok = true;
        row.loss = r.best.loss;
        row.complexity = r.best.complexity;
        row.expression = format(r.best.expr, prepared.data.variable_names());
        row.iterations_used = r.iterations_used;
        row.mse_solved = r.best.loss < cfg.early_stop_mse;
        row.r2 = r_squared(r.best.expr, prepared.data);
        if (prepared.truth) row.exact_solve = exact_match(r.best.expr, *prepared.truth, prepared.data, match);
        if (row.exact_solve) row.category = SolveCategory::exact_solve;
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

}  // namespace

Report run_benchmark(const std::vector<Problem>& problems, const RunConfig& cfg, LlmBackend& backend,
                     std::size_t workers, const ExactMatchOptions& match) {
    Report report;
    report.rows.resize(problems.size());
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, problems.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < problems.size(); i = next++) report.rows[i] = run_one(problems[i], cfg, backend, match);
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
        for (auto& t : threads) t.join();
    }
    for (const ProblemResult& r : report.rows) {
        report.exact_solves += r.exact_solve ? 1 : 0;
        report.mse_solves += r.mse_solved ? 1 : 0;
        report.failures += r.ok ? 0 : 1;
    }
    return report;
}

void write_report_csv(const Report& r, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report '" + path.string() + "'");
    auto quote = [](std::string s) {
        std::string q = "\"";
        for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    };
    out << "name,exact_solve,mse_solved,r2,loss,complexity,expression,category,seconds\n";
    for (const ProblemResult& row : r.rows) {
        out << quote(row.name) << ',' << (row.exact_solve ? 1 : 0) << ',' << (row.mse_solved ? 1 : 0) << ',';
        if (row.ok) {
            out << format_constant(row.r2) << ',' << format_constant(row.loss) << ',' << row.complexity << ','
                << quote(row.expression);
        } else {
            out << ",,," << quote("error: " + row.error);
        }
        out << ',' << quote(to_string(row.category)) << ',' << format_constant(row.seconds) << '\n';
    }
}

}  // namespace lasr
