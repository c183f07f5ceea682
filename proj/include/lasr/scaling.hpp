#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lasr/dataset.hpp"
#include "lasr/expr.hpp"

namespace lasr {

class FitDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Range used to draw a parameter's starting value for each restart.
struct ParamInit {
    double lo = -1.0;
    double hi = 1.0;
    bool log_uniform = false;
};

/// A fixed functional form over data columns and free parameters.
/// Variables 0..data_vars-1 are data columns; the rest are parameters.
struct Skeleton {
    std::string id;
    std::vector<std::string> data_vars;
    std::vector<std::string> params;
    std::vector<ParamInit> inits;
    Expr form = Expr::constant(0.0);
    std::string monotone_in;  // data column the prediction may not decrease along; empty for none

    std::size_t free_parameters() const { return params.size(); }
    std::string text() const;
};

/// lasr_law, chinchilla, modified_chinchilla, residual_only. Expected
/// columns: train_steps, shots, batch_size, total_params.
Skeleton builtin_skeleton(const std::string& id);
std::vector<std::string> builtin_skeleton_ids();

/// A user form such as "A * x ^ alpha + E" with the listed parameter names;
/// every other identifier is a data column.
Skeleton custom_skeleton(const std::string& text, const std::vector<std::string>& params,
                         const std::vector<std::string>& data_vars, const std::string& monotone_in = "");

struct FitOptions {
    std::size_t restarts = 8;
    std::size_t evaluations_per_restart = 3000;
    std::uint64_t seed = 0;
    std::size_t bootstrap = 0;  // resamples for the val-MSE standard error; 0 = off
    std::string group_by;       // fit separate parameters per value of this column
    std::size_t monotone_probe_rows = 64;
    std::size_t monotone_grid = 16;
};

struct SkeletonFit {
    std::string skeleton;
    std::vector<std::string> param_names;
    std::vector<double> params;  // global fit
    std::map<double, std::vector<double>> group_params;  // per group when group_by is set
    double train_mse = 0.0;
    double val_mse = 0.0;
    std::optional<double> val_mse_se;
};

/// Prediction of a skeleton with fixed parameters on a dataset.
std::vector<double> predict(const Skeleton& s, const std::vector<double>& params, const Dataset& d);

/// True if predictions never decrease along s.monotone_in on a grid over its
/// range in `d` (sampled at up to probe_rows rows).
bool respects_monotonicity(const Skeleton& s, const std::vector<double>& params, const Dataset& d,
                           std::size_t probe_rows = 64, std::size_t grid = 16);

/// Minimizes training MSE by restarted simplex search; parameter vectors that
/// break the monotonicity constraint are rejected. Throws FitDiverged when no
/// restart reaches a finite objective.
SkeletonFit fit_skeleton(const Skeleton& s, const Dataset& train, const Dataset& val, const FitOptions& opts = {});

}  // namespace lasr
