#include "lasr/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lasr {

Minimum nelder_mead(const Objective& f, std::vector<double> start, const NelderMeadOptions& options) {
    const std::size_t n = start.size();
    std::size_t evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        double v = f(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };

    if (n == 0) {
        double v = eval(start);
        return {std::move(start), v, evals};
    }

    std::vector<std::vector<double>> simplex(n + 1, start);
    std::vector<double> values(n + 1);
    values[0] = eval(start);
    for (std::size_t i = 0; i < n; ++i) {
        double step = std::abs(start[i]) > 1e-8 ? options.relative_step * std::abs(start[i]) : options.absolute_step;
        simplex[i + 1][i] += step;
        values[i + 1] = eval(simplex[i + 1]);
    }

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    auto point_along = [&](double t, std::vector<double>& out, const std::vector<double>& worst) {
        for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + t * (worst[j] - centroid[j]);
    };

    while (evals < options.max_evaluations) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[n - 1];

        double diameter = 0.0;
        double scale = 0.0;
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                diameter = std::max(diameter, std::abs(simplex[i][j] - simplex[best][j]));
                scale = std::max(scale, std::abs(simplex[best][j]));
            }
        if (diameter <= options.x_tolerance * std::max(1.0, scale)) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
        }

        point_along(-1.0, trial, simplex[worst]);
        double reflected = eval(trial);
        if (reflected < values[best]) {
            point_along(-2.0, trial2, simplex[worst]);
            double expanded = evals < options.max_evaluations ? eval(trial2) : std::numeric_limits<double>::infinity();
            if (expanded < reflected) {
                simplex[worst] = trial2;
                values[worst] = expanded;
            } else {
                simplex[worst] = trial;
                values[worst] = reflected;
            }
            continue;
        }
        if (reflected < values[second]) {
            simplex[worst] = trial;
            values[worst] = reflected;
            continue;
        }
        // Contraction: outside if the reflection beat the worst point, else inside.
        bool outside = reflected < values[worst];
        point_along(outside ? -0.5 : 0.5, trial2, simplex[worst]);
        double contracted = eval(trial2);
        if (contracted < (outside ? reflected : values[worst])) {
            simplex[worst] = trial2;
            values[worst] = contracted;
            continue;
        }
        for (std::size_t i = 0; i <= n && evals < options.max_evaluations; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < n; ++j) simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
            values[i] = eval(simplex[i]);
        }
    }

    auto it = std::min_element(values.begin(), values.end());
    auto idx = static_cast<std::size_t>(it - values.begin());
    return {simplex[idx], *it, evals};
}

}  // namespace lasr
