#include "lasr/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "lasr/optimize.hpp"

namespace lasr {

namespace {

std::vector<std::string> all_names(const Skeleton& s) {
    std::vector<std::string> names = s.data_vars;
    names.insert(names.end(), s.params.begin(), s.params.end());
    return names;
}

OperatorSet skeleton_grammar(const std::vector<std::string>& names) {
    OperatorSet ops = OperatorSet::standard(names);
    ops.binary_ops.push_back(BinaryOp::pow);
    ops.unary_ops.push_back(UnaryOp::neg);
    ops.normalize();
    return ops;
}

// Column views of the skeleton's data variables in dataset `d`.
std::vector<std::vector<double>> data_columns(const Skeleton& s, const Dataset& d) {
    std::vector<std::vector<double>> cols;
    for (const std::string& v : s.data_vars) cols.push_back(d.column(d.index_of(v)));
    return cols;
}

// Evaluates a skeleton over prepared data columns with the parameter values
// broadcast as extra columns.
class Evaluator {
public:
    Evaluator(const Skeleton& s, std::vector<std::vector<double>> data, std::size_t rows)
        : program_(s.form), columns_(std::move(data)), rows_(rows) {
        columns_.resize(s.data_vars.size() + s.params.size(), std::vector<double>(rows));
        first_param_ = s.data_vars.size();
    }

    const std::vector<double>& operator()(std::span<const double> params) {
        for (std::size_t k = 0; k < params.size(); ++k)
            std::fill(columns_[first_param_ + k].begin(), columns_[first_param_ + k].end(), params[k]);
        program_.eval(columns_, rows_, out_);
        return out_;
    }

private:
    CompiledExpr program_;
    std::vector<std::vector<double>> columns_;
    std::size_t rows_;
    std::size_t first_param_ = 0;
    std::vector<double> out_;
};

// Grid copies of up to `probe_rows` rows with the monotone column swept over
// its observed range. Row block r occupies [r * grid, (r + 1) * grid).
struct Probe {
    std::vector<std::vector<double>> columns;
    std::size_t rows = 0;
    std::size_t grid = 0;
};

std::optional<Probe> make_probe(const Skeleton& s, const Dataset& d, std::size_t probe_rows, std::size_t grid) {
    if (s.monotone_in.empty()) return std::nullopt;
    auto it = std::find(s.data_vars.begin(), s.data_vars.end(), s.monotone_in);
    if (it == s.data_vars.end()) throw std::invalid_argument("monotone column is not a skeleton variable");
    const std::size_t mono = static_cast<std::size_t>(it - s.data_vars.begin());
    auto cols = data_columns(s, d);
    auto [lo, hi] = std::minmax_element(cols[mono].begin(), cols[mono].end());
    grid = std::max<std::size_t>(grid, 2);
    std::size_t n = std::min(probe_rows, d.rows());

    Probe p;
    p.grid = grid;
    p.rows = n * grid;
    p.columns.assign(cols.size(), std::vector<double>(p.rows));
    for (std::size_t r = 0; r < n; ++r) {
        std::size_t src = r * d.rows() / n;
        for (std::size_t g = 0; g < grid; ++g) {
            std::size_t row = r * grid + g;
            for (std::size_t c = 0; c < cols.size(); ++c) p.columns[c][row] = cols[c][src];
            double t = static_cast<double>(g) / static_cast<double>(grid - 1);
            p.columns[mono][row] = *lo + t * (*hi - *lo);
        }
    }
    return p;
}

bool probe_ok(const std::vector<double>& pred, std::size_t grid) {
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!std::isfinite(pred[i])) return false;
        if (i % grid == 0) continue;
        if (pred[i] < pred[i - 1] - 1e-12 * (std::abs(pred[i - 1]) + 1.0)) return false;
    }
    return true;
}

double mse(const std::vector<double>& pred, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double r = pred[i] - y[i];
        s += r * r;
    }
    s /= static_cast<double>(y.size());
    return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
}

double draw(const ParamInit& init, Rng& rng) {
    if (init.log_uniform) {
        double v = std::uniform_real_distribution<double>(std::log(init.lo), std::log(init.hi))(rng);
        return std::exp(v);
    }
    return std::uniform_real_distribution<double>(init.lo, init.hi)(rng);
}

std::vector<double> fit_params(const Skeleton& s, const Dataset& train, const FitOptions& opts, Rng& rng) {
    Evaluator model(s, data_columns(s, train), train.rows());
    auto probe = make_probe(s, train, opts.monotone_probe_rows, opts.monotone_grid);
    std::optional<Evaluator> probe_model;
    if (probe) probe_model.emplace(s, probe->columns, probe->rows);

    Objective objective = [&](std::span<const double> theta) {
        double loss = mse(model(theta), train.y());
        if (!std::isfinite(loss)) return loss;
        if (probe_model && !probe_ok((*probe_model)(theta), probe->grid)) return std::numeric_limits<double>::infinity();
        return loss;
    };

    NelderMeadOptions nm;
    nm.max_evaluations = std::max<std::size_t>(opts.evaluations_per_restart / 3, 10);
    std::optional<Minimum> best;
    for (std::size_t r = 0; r < std::max<std::size_t>(opts.restarts, 1); ++r) {
        std::vector<double> start;
        for (const ParamInit& init : s.inits) start.push_back(draw(init, rng));
        // A few chained runs let the simplex re-expand after it collapses early.
        Minimum m = nelder_mead(objective, start, nm);
        for (int polish = 0; polish < 2; ++polish) {
            Minimum next = nelder_mead(objective, m.x, nm);
            if (next.value <= m.value) m = std::move(next);
        }
        if (!best || m.value < best->value) best = std::move(m);
    }
    if (!best || !std::isfinite(best->value))
        throw FitDiverged("fit of skeleton '" + s.id + "' did not reach a finite loss");
    return best->x;
}

}  // namespace

std::string Skeleton::text() const { return format(form, all_names(*this)); }

std::vector<std::string> builtin_skeleton_ids() { return {"lasr_law", "chinchilla", "modified_chinchilla", "residual_only"}; }

Skeleton builtin_skeleton(const std::string& id) {
    const ParamInit coef{-1.0, 1.0, false};
    const ParamInit offset{0.0, 1.0, false};
    const ParamInit exponent{0.05, 1.0, false};
    const ParamInit steps_scale{1e3, 1e7, true};
    auto make = [&](const char* text, std::vector<std::string> params, std::vector<std::string> vars,
                    std::vector<ParamInit> inits) {
        Skeleton s = custom_skeleton(text, params, vars, "train_steps");
        s.id = id;
        s.inits = std::move(inits);
        return s;
    };
    if (id == "lasr_law")
        return make("A / ((train_steps / B) ^ shots) + E", {"A", "B", "E"}, {"train_steps", "shots"},
                    {coef, steps_scale, offset});
    if (id == "chinchilla")
        return make("A / ((train_steps * batch_size) ^ alpha) + B / (total_params ^ beta) + E",
                    {"A", "B", "E", "alpha", "beta"}, {"train_steps", "batch_size", "total_params"},
                    {coef, coef, offset, exponent, exponent});
    if (id == "modified_chinchilla")
        return make("A / ((train_steps * batch_size) ^ (alpha * shots)) + B / (total_params ^ beta) + E",
                    {"A", "B", "E", "alpha", "beta"}, {"train_steps", "batch_size", "total_params", "shots"},
                    {coef, coef, offset, exponent, exponent});
    if (id == "residual_only") {
        Skeleton s = custom_skeleton("E", {"E"}, {}, "");
        s.id = id;
        s.inits = {offset};
        return s;
    }
    throw std::invalid_argument("unknown skeleton '" + id + "'");
}

Skeleton custom_skeleton(const std::string& text, const std::vector<std::string>& params,
                         const std::vector<std::string>& data_vars, const std::string& monotone_in) {
    Skeleton s;
    s.id = "custom";
    s.data_vars = data_vars;
    s.params = params;
    s.inits.assign(params.size(), ParamInit{});
    s.monotone_in = monotone_in;
    s.form = parse(text, skeleton_grammar(all_names(s)));
    return s;
}

std::vector<double> predict(const Skeleton& s, const std::vector<double>& params, const Dataset& d) {
    if (params.size() != s.params.size()) throw DimensionMismatch("predict: wrong parameter count");
    Evaluator model(s, data_columns(s, d), d.rows());
    return model(params);
}

bool respects_monotonicity(const Skeleton& s, const std::vector<double>& params, const Dataset& d,
                           std::size_t probe_rows, std::size_t grid) {
    auto probe = make_probe(s, d, probe_rows, grid);
    if (!probe) return true;
    Evaluator model(s, probe->columns, probe->rows);
    return probe_ok(model(params), probe->grid);
}

SkeletonFit fit_skeleton(const Skeleton& s, const Dataset& train, const Dataset& val, const FitOptions& opts) {
    if (s.inits.size() != s.params.size()) throw std::invalid_argument("skeleton needs one init range per parameter");
    Rng rng(opts.seed);
    SkeletonFit fit;
    fit.skeleton = s.id;
    fit.param_names = s.params;
    fit.params = fit_params(s, train, opts, rng);

    std::vector<double> train_pred = predict(s, fit.params, train);
    std::vector<double> val_pred = predict(s, fit.params, val);

    if (!opts.group_by.empty()) {
        const std::vector<double>& tg = train.column(train.index_of(opts.group_by));
        const std::vector<double>& vg = val.column(val.index_of(opts.group_by));
        std::set<double> groups(tg.begin(), tg.end());
        for (double g : groups) {
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < tg.size(); ++i)
                if (tg[i] == g) rows.push_back(i);
            Dataset sub = train.select_rows(rows);
            std::vector<double> theta;
            try {
                theta = fit_params(s, sub, opts, rng);
            } catch (const FitDiverged&) {
                theta = fit.params;
            }
            fit.group_params[g] = theta;
            auto sub_pred = predict(s, theta, sub);
            for (std::size_t k = 0; k < rows.size(); ++k) train_pred[rows[k]] = sub_pred[k];
        }
        std::vector<std::size_t> val_rows;
        for (auto& [g, theta] : fit.group_params) {
            val_rows.clear();
            for (std::size_t i = 0; i < vg.size(); ++i)
                if (vg[i] == g) val_rows.push_back(i);
            if (val_rows.empty()) continue;
            auto sub_pred = predict(s, theta, val.select_rows(val_rows));
            for (std::size_t k = 0; k < val_rows.size(); ++k) val_pred[val_rows[k]] = sub_pred[k];
        }
    }

    fit.train_mse = mse(train_pred, train.y());
    fit.val_mse = mse(val_pred, val.y());

    if (opts.bootstrap > 0) {
        std::vector<double> sq(val.rows());
        for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = (val_pred[i] - val.y()[i]) * (val_pred[i] - val.y()[i]);
        std::uniform_int_distribution<std::size_t> pick(0, sq.size() - 1);
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t b = 0; b < opts.bootstrap; ++b) {
            double m = 0.0;
            for (std::size_t i = 0; i < sq.size(); ++i) m += sq[pick(rng)];
            m /= static_cast<double>(sq.size());
            sum += m;
            sum2 += m * m;
        }
        double n = static_cast<double>(opts.bootstrap);
        double var = std::max(0.0, sum2 / n - (sum / n) * (sum / n));
        fit.val_mse_se = std::sqrt(var * n / std::max(1.0, n - 1.0));
    }
    return fit;
}

}  // namespace lasr
