#include "lasr/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

namespace lasr {

NonNumericCell::NonNumericCell(std::size_t row, std::size_t col, const std::string& cell)
    : DataError("non-numeric cell '" + cell + "' at row " + std::to_string(row) + ", column " + std::to_string(col)),
      row_(row),
      col_(col) {}

Dataset::Dataset(std::vector<std::string> variable_names, std::vector<std::vector<double>> columns,
                 std::vector<double> y, std::string target_name)
    : names_(std::move(variable_names)), columns_(std::move(columns)), y_(std::move(y)), target_(std::move(target_name)) {
    if (names_.size() != columns_.size()) throw DataError("variable name count does not match column count");
    if (y_.empty()) throw DataError("dataset needs at least one row");
    std::set<std::string> seen;
    for (const auto& n : names_)
        if (!seen.insert(n).second) throw NameCollision(n);
    for (const auto& c : columns_) {
        if (c.size() != y_.size()) throw DataError("column length does not match target length");
        for (double v : c)
            if (!std::isfinite(v)) throw DataError("dataset values must be finite");
    }
    for (double v : y_)
        if (!std::isfinite(v)) throw DataError("dataset values must be finite");
}

std::size_t Dataset::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return i;
    throw DataError("no column named '" + name + "'");
}

Dataset Dataset::select_rows(const std::vector<std::size_t>& rows) const {
    std::vector<std::vector<double>> cols(columns_.size());
    std::vector<double> y;
    y.reserve(rows.size());
    for (auto& c : cols) c.reserve(rows.size());
    for (std::size_t r : rows) {
        for (std::size_t c = 0; c < columns_.size(); ++c) cols[c].push_back(columns_[c].at(r));
        y.push_back(y_.at(r));
    }
    return Dataset(names_, std::move(cols), std::move(y), target_);
}

Dataset Dataset::with_target(std::vector<double> y) const { return Dataset(names_, columns_, std::move(y), target_); }

std::vector<double> evaluate(const Expr& e, const Dataset& d) { return evaluate(e, d.columns(), d.rows()); }

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::string& target_name) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError("'" + path.string() + "' is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_line(line);
    for (auto& h : header) h = trim(h);
    auto target_it = std::find(header.begin(), header.end(), target_name);
    if (target_it == header.end()) throw MissingTarget(target_name);
    std::size_t target_col = static_cast<std::size_t>(target_it - header.begin());

    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != target_col) names.push_back(header[c]);
    std::vector<std::vector<double>> columns(names.size());
    std::vector<double> y;

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw DataError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
        std::size_t feature = 0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            std::string cell = trim(cells[c]);
            double v = 0.0;
            if (!parse_double(cell, v)) throw NonNumericCell(row, c, cell);
            if (c == target_col)
                y.push_back(v);
            else
                columns[feature++].push_back(v);
        }
        ++row;
    }
    if (y.empty()) throw DataError("'" + path.string() + "' has no data rows");
    return Dataset(std::move(names), std::move(columns), std::move(y), target_name);
}

void write_csv(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    auto number = [](double v) {
        std::array<char, 64> buf{};
        auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
        return std::string(buf.data(), ptr);
    };
    for (const auto& n : d.variable_names()) out << n << ',';
    out << d.target_name() << '\n';
    for (std::size_t r = 0; r < d.rows(); ++r) {
        for (std::size_t c = 0; c < d.cols(); ++c) out << number(d.column(c)[r]) << ',';
        out << number(d.y()[r]) << '\n';
    }
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Noise and distractors

double rms(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

Dataset add_target_noise(const Dataset& d, double level, Rng& rng) {
    if (level < 0) throw std::invalid_argument("noise level must be non-negative");
    double scale = level * rms(d.y());
    if (scale == 0.0) return d;
    std::normal_distribution<double> noise(0.0, scale);
    std::vector<double> y = d.y();
    for (double& v : y) v += noise(rng);
    return d.with_target(std::move(y));
}

std::vector<std::string> default_distractor_names(std::size_t count) {
    static const char* const base[] = {"zeta", "kappa", "omega", "nu", "rho", "tau", "psi", "chi", "iota", "lam"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < count; ++i) {
        std::string n = base[i % std::size(base)];
        if (i >= std::size(base)) n += std::to_string(i / std::size(base));
        out.push_back(n);
    }
    return out;
}

Dataset add_distractors(const Dataset& d, std::size_t k, const std::vector<std::string>& name_pool, Rng& rng) {
    if (k == 0) return d;
    std::vector<std::string> pool;
    for (const auto& n : name_pool) {
        if (std::find(d.variable_names().begin(), d.variable_names().end(), n) != d.variable_names().end())
            throw NameCollision(n);
        if (std::find(pool.begin(), pool.end(), n) == pool.end()) pool.push_back(n);
    }
    if (pool.size() < k) throw DataError("name pool too small for requested distractor count");
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::string> names = d.variable_names();
    std::vector<std::vector<double>> columns = d.columns();
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < k; ++i) {
        names.push_back(pool[i]);
        std::vector<double> col(d.rows());
        for (double& v : col) v = normal(rng);
        columns.push_back(std::move(col));
    }
    return Dataset(std::move(names), std::move(columns), d.y(), d.target_name());
}

std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction, Rng& rng) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train fraction must be in (0, 1)");
    std::size_t n = d.rows();
    double raw = train_fraction * static_cast<double>(n);
    auto n_train = static_cast<std::size_t>(std::floor(raw));
    if (std::abs(raw - std::round(raw)) < 1e-9) n_train = static_cast<std::size_t>(std::round(raw));
    if (n_train == 0 || n_train == n) throw std::invalid_argument("split would leave one side empty");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> rest(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::sort(train.begin(), train.end());
    std::sort(rest.begin(), rest.end());
    return {d.select_rows(train), d.select_rows(rest)};
}

// ---------------------------------------------------------------------------
// Synthetic problems

Dataset sample_formula(const Expr& formula, const std::vector<std::string>& names,
                       const std::vector<std::pair<double, double>>& ranges, std::size_t n, Rng& rng,
                       std::size_t max_attempts_per_row) {
    if (ranges.size() != names.size()) throw std::invalid_argument("one range per variable required");
    if (variable_extent(formula) > names.size()) throw DimensionMismatch("formula references an unknown column");
    std::vector<std::vector<double>> columns(names.size(), std::vector<double>(n));
    std::vector<double> y(n);
    std::vector<double> point(names.size());
    for (std::size_t r = 0; r < n; ++r) {
        bool ok = false;
        for (std::size_t attempt = 0; attempt < max_attempts_per_row && !ok; ++attempt) {
            for (std::size_t c = 0; c < names.size(); ++c) {
                std::uniform_real_distribution<double> u(ranges[c].first, ranges[c].second);
                point[c] = u(rng);
            }
            double v = evaluate_point(formula, point);
            if (std::isfinite(v)) {
                for (std::size_t c = 0; c < names.size(); ++c) columns[c][r] = point[c];
                y[r] = v;
                ok = true;
            }
        }
        if (!ok) throw GenerationExhausted("could not sample a finite target value");
    }
    // Column-wise evaluation must agree with the pointwise values used above.
    std::vector<double> check = evaluate(formula, columns, n);
    for (std::size_t r = 0; r < n; ++r) y[r] = check[r];
    return Dataset(names, std::move(columns), std::move(y));
}

void SyntheticSpec::validate() const {
    if (n_vars < 1) throw std::invalid_argument("synthetic spec: n_vars must be >= 1");
    if (max_complexity >= 20) throw std::invalid_argument("synthetic spec: max_complexity must be < 20");
    if (max_complexity < 2 * n_vars) throw std::invalid_argument("synthetic spec: max_complexity too small for n_vars");
    if (n_samples < 1) throw std::invalid_argument("synthetic spec: n_samples must be >= 1");
    if (!(range_low < range_high)) throw std::invalid_argument("synthetic spec: empty variable range");
    bool any_binary = false;
    for (const auto& [op, w] : operator_weights) {
        if (w < 0) throw std::invalid_argument("synthetic spec: negative operator weight");
        if (w > 0 && (op == "+" || op == "-" || op == "*" || op == "/" || op == "^")) any_binary = true;
    }
    if (!any_binary) throw std::invalid_argument("synthetic spec: needs a binary operator");
}

OperatorSet SyntheticSpec::operator_set() const {
    OperatorSet ops;
    for (const auto& [op, w] : operator_weights) {
        if (w <= 0) continue;
        bool known = false;
        for (BinaryOp b : kAllBinaryOps)
            if (symbol(b) == op) {
                ops.binary_ops.push_back(b);
                known = true;
            }
        for (UnaryOp u : kAllUnaryOps)
            if (name(u) == op) {
                ops.unary_ops.push_back(u);
                known = true;
            }
        if (!known) throw std::invalid_argument("synthetic spec: unknown operator '" + op + "'");
    }
    for (std::size_t i = 1; i <= n_vars; ++i) ops.variable_names.push_back("x" + std::to_string(i));
    ops.normalize();
    return ops;
}

namespace {

struct WeightedOps {
    std::vector<BinaryOp> binary;
    std::vector<double> binary_w;
    std::vector<UnaryOp> unary;
    std::vector<double> unary_w;
};

WeightedOps weighted_ops(const SyntheticSpec& spec) {
    WeightedOps w;
    for (const auto& [op, weight] : spec.operator_weights) {
        if (weight <= 0) continue;
        for (BinaryOp b : kAllBinaryOps)
            if (symbol(b) == op) {
                w.binary.push_back(b);
                w.binary_w.push_back(weight);
            }
        for (UnaryOp u : kAllUnaryOps)
            if (name(u) == op) {
                w.unary.push_back(u);
                w.unary_w.push_back(weight);
            }
    }
    return w;
}

double arbitrary_constant(Rng& rng) {
    std::uniform_real_distribution<double> u(0.1, 1.0);
    return std::round(u(rng) * 1000.0) / 1000.0;
}

// Random tree within a node budget; unary chains are favoured so that nested
// compositions such as exp(cos(x)) appear regularly.
Expr synth_tree(const WeightedOps& w, std::size_t n_vars, std::size_t budget, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto leaf = [&] {
        if (u(rng) < 0.2) return Expr::constant(arbitrary_constant(rng));
        std::uniform_int_distribution<std::size_t> pick(0, n_vars - 1);
        return Expr::variable(pick(rng));
    };
    if (budget <= 1 || u(rng) < 0.15) return leaf();
    if (!w.unary.empty() && (budget == 2 || u(rng) < 0.35)) {
        std::discrete_distribution<std::size_t> pick(w.unary_w.begin(), w.unary_w.end());
        return Expr::unary(w.unary[pick(rng)], synth_tree(w, n_vars, budget - 1, rng));
    }
    if (budget < 3) return leaf();
    std::discrete_distribution<std::size_t> pick(w.binary_w.begin(), w.binary_w.end());
    BinaryOp op = w.binary[pick(rng)];
    std::size_t rest = budget - 1;
    std::uniform_int_distribution<std::size_t> share(1, rest - 1);
    std::size_t left = share(rng);
    Expr lhs = synth_tree(w, n_vars, left, rng);
    Expr rhs = synth_tree(w, n_vars, rest - left, rng);
    if (op == BinaryOp::mul && u(rng) < 0.3) lhs = Expr::constant(arbitrary_constant(rng));
    return Expr::binary(op, std::move(lhs), std::move(rhs));
}

}  // namespace

SyntheticProblem generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
    spec.validate();
    OperatorSet ops = spec.operator_set();
    WeightedOps w = weighted_ops(spec);
    std::vector<std::pair<double, double>> ranges(spec.n_vars, {spec.range_low, spec.range_high});
    std::uniform_int_distribution<std::size_t> budget_dist(std::min<std::size_t>(2 * spec.n_vars + 1, spec.max_complexity - 1),
                                                           spec.max_complexity - 1);

    constexpr std::size_t kProbe = 400;
    for (std::size_t attempt = 0; attempt < spec.max_candidates; ++attempt) {
        Expr candidate = synth_tree(w, spec.n_vars, budget_dist(rng), rng);
        if (candidate.size() >= spec.max_complexity) continue;
        auto used = variables_used(candidate, spec.n_vars);
        if (std::find(used.begin(), used.end(), false) != used.end()) continue;
        if (simplify(candidate).size() < candidate.size()) continue;

        // Domain probe: finite on at least 99% of the sampling box.
        std::vector<std::vector<double>> probe(spec.n_vars, std::vector<double>(kProbe));
        std::uniform_real_distribution<double> u(spec.range_low, spec.range_high);
        for (auto& col : probe)
            for (double& v : col) v = u(rng);
        std::vector<double> values = evaluate(candidate, probe, kProbe);
        std::size_t finite = 0;
        for (double v : values)
            if (std::isfinite(v)) ++finite;
        if (static_cast<double>(finite) < 0.99 * kProbe) continue;

        std::optional<Dataset> sampled;
        try {
            sampled = sample_formula(candidate, ops.variable_names, ranges, spec.n_samples, rng, 200);
        } catch (const GenerationExhausted&) {
            continue;
        }
        Dataset& data = *sampled;

        double mean = std::accumulate(data.y().begin(), data.y().end(), 0.0) / static_cast<double>(data.rows());
        double var = 0.0;
        for (double v : data.y()) var += (v - mean) * (v - mean);
        var /= static_cast<double>(data.rows());
        if (!(var >= 1e-12) || !std::isfinite(var)) continue;
        return SyntheticProblem{candidate, std::move(data)};
    }
    throw GenerationExhausted("no acceptable synthetic expression after " + std::to_string(spec.max_candidates) +
                              " candidates");
}

}  // namespace lasr
