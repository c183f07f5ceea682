#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lasr/dataset.hpp"
#include "lasr/expr.hpp"

namespace lasr::test {

inline OperatorSet full_ops(std::vector<std::string> vars) {
    OperatorSet ops = OperatorSet::standard(std::move(vars));
    ops.binary_ops.push_back(BinaryOp::pow);
    ops.unary_ops.push_back(UnaryOp::neg);
    ops.normalize();
    return ops;
}

// Samples `formula` uniformly over [lo, hi] for every variable.
inline Dataset formula_data(const std::string& formula, const std::vector<std::string>& vars, std::size_t n,
                            std::uint64_t seed, double lo = 1.0, double hi = 5.0) {
    Rng rng(seed);
    Expr e = parse(formula, full_ops(vars));
    std::vector<std::pair<double, double>> ranges(vars.size(), {lo, hi});
    return sample_formula(e, vars, ranges, n, rng);
}

inline std::vector<std::vector<double>> random_columns(std::size_t cols, std::size_t rows, Rng& rng, double lo = -3,
                                                       double hi = 3) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<std::vector<double>> out(cols, std::vector<double>(rows));
    for (auto& c : out)
        for (double& v : c) v = u(rng);
    return out;
}

inline bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(b)); }

}  // namespace lasr::test
