#pragma once

#include <map>
#include <string>
#include <vector>

#include "attriq/linalg.hpp"
#include "attriq/model.hpp"
#include "attriq/rng.hpp"

namespace attriq {

// Per-token importance scores over the context tokens only.
struct TokenAttribution {
    std::vector<Token> tokens;
    std::vector<double> scores;
    std::string method_tag;
    std::map<std::string, std::string> params;
};

// How per-dimension gradients collapse into one token score. Plain sum is
// the default; the absolute variant exists for ablations.
enum class DimAggregation { sum, abs_sum };

// Token score = dimension-aggregated gradient of the answerable-class
// probability at the input embeddings.
TokenAttribution saliency(const GradientModel& model, const std::string& question, const std::string& context,
                          DimAggregation dim_agg = DimAggregation::sum);

// Average of saliency over n_samples noisy copies of the embeddings, noise
// i.i.d. Gaussian(0, sigma^2) per coordinate. sigma = 0 reproduces saliency
// exactly (noise sampling is skipped entirely).
TokenAttribution smoothgrad(const GradientModel& model, const std::string& question, const std::string& context,
                            std::size_t n_samples, double sigma, Rng& rng,
                            DimAggregation dim_agg = DimAggregation::sum);

// sigma expressed as a fraction of the embedding value range (max - min).
double sigma_from_embedding_range(const Matrix& embeddings, double fraction);

// Riemann midpoint approximation of the gradient path integral from the
// baseline to the input, multiplied by (input - baseline) per coordinate.
// Null baseline means the all-zero embedding matrix.
TokenAttribution integrated_gradients(const GradientModel& model, const std::string& question,
                                      const std::string& context, std::size_t n_steps,
                                      const Matrix* baseline = nullptr,
                                      DimAggregation dim_agg = DimAggregation::sum);

}  // namespace attriq
