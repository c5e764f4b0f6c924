#include "attriq/whitebox.hpp"

#include <cmath>

#include "attriq/error.hpp"

namespace attriq {
namespace {

std::vector<double> collapse_dims(const Matrix& grad, DimAggregation dim_agg) {
    std::vector<double> scores(grad.rows(), 0.0);
    for (std::size_t t = 0; t < grad.rows(); ++t) {
        double s = 0.0;
        for (std::size_t k = 0; k < grad.cols(); ++k)
            s += dim_agg == DimAggregation::abs_sum ? std::abs(grad.at(t, k)) : grad.at(t, k);
        scores[t] = s;
    }
    return scores;
}

std::vector<Token> context_tokens(const GradientModel& model, const std::string& context) {
    std::vector<Token> tokens = model.tokenize(context);
    if (tokens.empty()) raise(ErrorCode::interpreter, "context tokenizes to zero tokens");
    return tokens;
}

const char* dim_agg_name(DimAggregation d) { return d == DimAggregation::abs_sum ? "abs_sum" : "sum"; }

}  // namespace

TokenAttribution saliency(const GradientModel& model, const std::string& question, const std::string& context,
                          DimAggregation dim_agg) {
    TokenAttribution out;
    out.tokens = context_tokens(model, context);
    const Matrix embeddings = model.embed(out.tokens);
    out.scores = collapse_dims(model.gradient(question, embeddings), dim_agg);
    out.method_tag = "saliency";
    out.params = {{"dim_aggregation", dim_agg_name(dim_agg)}};
    return out;
}

TokenAttribution smoothgrad(const GradientModel& model, const std::string& question, const std::string& context,
                            std::size_t n_samples, double sigma, Rng& rng, DimAggregation dim_agg) {
    if (n_samples < 1) raise(ErrorCode::config, "smoothgrad: n_samples must be >= 1");
    if (sigma < 0.0) raise(ErrorCode::config, "smoothgrad: sigma must be >= 0");

    if (sigma == 0.0) {
        TokenAttribution out = saliency(model, question, context, dim_agg);
        out.method_tag = "smoothgrad";
        out.params["n_samples"] = std::to_string(n_samples);
        out.params["sigma"] = "0";
        return out;
    }

    TokenAttribution out;
    out.tokens = context_tokens(model, context);
    const Matrix embeddings = model.embed(out.tokens);

    // Average of the per-sample attributions (each one a dimension-collapsed
    // gradient), not the collapse of the averaged gradient; the two differ
    // under the absolute-value aggregation.
    std::vector<double> accumulated(embeddings.rows(), 0.0);
    Matrix noisy = embeddings;
    for (std::size_t s = 0; s < n_samples; ++s) {
        for (std::size_t i = 0; i < noisy.data().size(); ++i)
            noisy.data()[i] = embeddings.data()[i] + sigma * standard_normal(rng);
        const std::vector<double> scores = collapse_dims(model.gradient(question, noisy), dim_agg);
        for (std::size_t t = 0; t < accumulated.size(); ++t) accumulated[t] += scores[t];
    }
    const double inv = 1.0 / static_cast<double>(n_samples);
    for (double& v : accumulated) v *= inv;

    out.scores = std::move(accumulated);
    out.method_tag = "smoothgrad";
    out.params = {{"dim_aggregation", dim_agg_name(dim_agg)},
                  {"n_samples", std::to_string(n_samples)},
                  {"sigma", std::to_string(sigma)}};
    return out;
}

double sigma_from_embedding_range(const Matrix& embeddings, double fraction) {
    if (embeddings.empty()) return 0.0;
    double lo = embeddings.data()[0];
    double hi = embeddings.data()[0];
    for (double v : embeddings.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return fraction * (hi - lo);
}

TokenAttribution integrated_gradients(const GradientModel& model, const std::string& question,
                                      const std::string& context, std::size_t n_steps, const Matrix* baseline,
                                      DimAggregation dim_agg) {
    if (n_steps < 2) raise(ErrorCode::config, "integrated_gradients: n_steps must be >= 2");

    TokenAttribution out;
    out.tokens = context_tokens(model, context);
    const Matrix input = model.embed(out.tokens);
    Matrix base(input.rows(), input.cols(), 0.0);
    if (baseline) {
        if (!baseline->same_shape(input))
            raise(ErrorCode::config, "integrated_gradients: baseline shape does not match embeddings");
        base = *baseline;
    }

    Matrix avg_grad(input.rows(), input.cols(), 0.0);
    Matrix point(input.rows(), input.cols(), 0.0);
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double alpha = (static_cast<double>(k) + 0.5) / static_cast<double>(n_steps);
        for (std::size_t i = 0; i < point.data().size(); ++i)
            point.data()[i] = base.data()[i] + alpha * (input.data()[i] - base.data()[i]);
        const Matrix grad = model.gradient(question, point);
        for (std::size_t i = 0; i < avg_grad.data().size(); ++i) avg_grad.data()[i] += grad.data()[i];
    }
    const double inv = 1.0 / static_cast<double>(n_steps);
    Matrix attribution(input.rows(), input.cols(), 0.0);
    for (std::size_t i = 0; i < attribution.data().size(); ++i)
        attribution.data()[i] = (input.data()[i] - base.data()[i]) * avg_grad.data()[i] * inv;

    out.scores = collapse_dims(attribution, dim_agg);
    out.method_tag = "integrated_gradients";
    out.params = {{"dim_aggregation", dim_agg_name(dim_agg)},
                  {"n_steps", std::to_string(n_steps)},
                  {"baseline", baseline ? "custom" : "zero"}};
    return out;
}

}  // namespace attriq
