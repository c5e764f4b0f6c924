#pragma once

#include <cstddef>
#include <vector>

#include "attriq/linalg.hpp"

namespace attriq {

// Result of a weighted L1-regularized least-squares fit. Coefficients are on
// the original feature scale even though the solve runs on standardized
// features.
struct SurrogateFit {
    std::vector<double> coefficients;
    double intercept = 0.0;
    double regularization = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
};

struct LassoOptions {
    double lambda = 0.01;       // L1 penalty on standardized features
    double tol = 1e-6;          // max coefficient change per sweep
    std::size_t max_iter = 10000;
};

// Minimizes (1 / (2 sum_w)) * sum_i w_i (y_i - b0 - x_i . b)^2 + lambda * |b|_1
// by cyclic coordinate descent on weighted-standardized features. Features
// with zero weighted variance get coefficient 0. lambda == 0 solves the
// weighted least-squares problem directly via the normal equations instead,
// which is exact where coordinate descent would merely approach the optimum.
SurrogateFit fit_weighted_lasso(const Matrix& features, const std::vector<double>& targets,
                                const std::vector<double>& weights, const LassoOptions& options = {});

}  // namespace attriq
