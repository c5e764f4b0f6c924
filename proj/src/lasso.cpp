#include "attriq/lasso.hpp"

#include <cmath>

#include "attriq/error.hpp"

namespace attriq {
namespace {

double soft_threshold(double value, double threshold) {
    if (value > threshold) return value - threshold;
    if (value < -threshold) return value + threshold;
    return 0.0;
}

// Weighted OLS with intercept via normal equations. A ridge of eps is added
// on retry when the Gram matrix is singular (collinear or repeated masks).
SurrogateFit solve_weighted_ols(const Matrix& x, const std::vector<double>& y, const std::vector<double>& w) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    const std::size_t m = p + 1;  // intercept last

    std::vector<double> gram(m * m, 0.0);
    std::vector<double> rhs(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row(i);
        const double wi = w[i];
        for (std::size_t a = 0; a < p; ++a) {
            const double wxa = wi * xi[a];
            for (std::size_t b = a; b < p; ++b) gram[a * m + b] += wxa * xi[b];
            gram[a * m + p] += wxa;
            rhs[a] += wxa * y[i];
        }
        gram[p * m + p] += wi;
        rhs[p] += wi * y[i];
    }
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < a; ++b) gram[a * m + b] = gram[b * m + a];

    double trace = 0.0;
    for (std::size_t a = 0; a < m; ++a) trace += gram[a * m + a];
    const double base_jitter = trace / static_cast<double>(m);

    std::vector<double> solution;
    bool solved = false;
    for (double eps : {0.0, 1e-10, 1e-6}) {
        std::vector<double> a = gram;
        for (std::size_t d = 0; d < m; ++d) a[d * m + d] += eps * base_jitter;
        try {
            solution = cholesky_solve(std::move(a), rhs, m);
            solved = true;
            break;
        } catch (const Error&) {
        }
    }
    if (!solved) raise(ErrorCode::internal, "weighted least squares: singular system");

    SurrogateFit fit;
    fit.coefficients.assign(solution.begin(), solution.begin() + static_cast<std::ptrdiff_t>(p));
    fit.intercept = solution[p];
    fit.regularization = 0.0;
    return fit;
}

}  // namespace

SurrogateFit fit_weighted_lasso(const Matrix& features, const std::vector<double>& targets,
                                const std::vector<double>& weights, const LassoOptions& options) {
    const std::size_t n = features.rows();
    const std::size_t p = features.cols();
    if (targets.size() != n || weights.size() != n)
        raise(ErrorCode::validation, "lasso: rows, targets and weights must align");
    if (n == 0) raise(ErrorCode::validation, "lasso: no observations");
    if (options.lambda < 0.0) raise(ErrorCode::config, "lasso: lambda must be >= 0");

    double weight_sum = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) raise(ErrorCode::validation, "lasso: weights must be finite and >= 0");
        weight_sum += w;
    }
    if (weight_sum <= 0.0) raise(ErrorCode::validation, "lasso: weights sum to zero");

    if (options.lambda == 0.0) return solve_weighted_ols(features, targets, weights);

    const double inv_w = 1.0 / weight_sum;

    // Weighted standardization; zero-variance columns are frozen at 0.
    std::vector<double> mean(p, 0.0);
    std::vector<double> scale(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += weights[i] * features.at(i, j);
        mu *= inv_w;
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = features.at(i, j) - mu;
            var += weights[i] * d * d;
        }
        mean[j] = mu;
        scale[j] = var > 0.0 ? std::sqrt(var * inv_w) : 0.0;
    }

    double y_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) y_mean += weights[i] * targets[i];
    y_mean *= inv_w;

    // Residuals start at the centered targets (all coefficients zero).
    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) residual[i] = targets[i] - y_mean;

    std::vector<double> beta(p, 0.0);  // on the standardized scale
    SurrogateFit fit;
    fit.regularization = options.lambda;
    fit.converged = false;

    for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
        double max_delta = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (scale[j] == 0.0) continue;
            const double inv_scale = 1.0 / scale[j];
            double rho = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double z = (features.at(i, j) - mean[j]) * inv_scale;
                rho += weights[i] * z * (residual[i] + z * beta[j]);
            }
            rho *= inv_w;
            const double updated = soft_threshold(rho, options.lambda);
            const double delta = updated - beta[j];
            if (delta != 0.0) {
                for (std::size_t i = 0; i < n; ++i)
                    residual[i] -= delta * (features.at(i, j) - mean[j]) * inv_scale;
                beta[j] = updated;
            }
            max_delta = std::max(max_delta, std::abs(delta));
        }
        fit.iterations = iter + 1;
        if (max_delta < options.tol) {
            fit.converged = true;
            break;
        }
    }

    fit.coefficients.assign(p, 0.0);
    double offset = y_mean;
    for (std::size_t j = 0; j < p; ++j) {
        if (scale[j] == 0.0) continue;
        fit.coefficients[j] = beta[j] / scale[j];
        offset -= fit.coefficients[j] * mean[j];
    }
    fit.intercept = offset;
    return fit;
}

}  // namespace attriq
