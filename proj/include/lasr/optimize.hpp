#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace lasr {

struct NelderMeadOptions {
    std::size_t max_evaluations = 100;
    /// Initial simplex edge, relative to |x_i|; `absolute_step` is used for
    /// coordinates near zero.
    double relative_step = 0.1;
    double absolute_step = 0.1;
    /// Stop once the simplex collapses below this relative diameter.
    double x_tolerance = 1e-13;
};

struct Minimum {
    std::vector<double> x;
    double value = 0.0;
    std::size_t evaluations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

/// Downhill simplex minimization. NaN objective values are treated as +inf.
/// An empty starting point is evaluated once and returned.
Minimum nelder_mead(const Objective& f, std::vector<double> start, const NelderMeadOptions& options = {});

}  // namespace lasr
