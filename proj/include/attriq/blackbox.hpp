#pragma once

#include <span>
#include <string>
#include <vector>

#include "attriq/lasso.hpp"
#include "attriq/linalg.hpp"
#include "attriq/model.hpp"
#include "attriq/rng.hpp"
#include "attriq/whitebox.hpp"

namespace attriq {

// Perturbation masks with the model's responses and regression weights.
// Row 0 is always the all-ones (unperturbed) mask.
struct PerturbationSet {
    Matrix masks;  // n_perturbations x n_tokens, entries 0/1
    std::vector<double> responses;
    std::vector<double> weights;
};

// Binary keep/drop masks. Row 0 is all ones; every other row keeps a count
// drawn uniformly from {1..n_tokens} at uniformly chosen positions.
Matrix perturb(std::size_t n_tokens, std::size_t n_perturbations, Rng& rng);

// All 2^n_tokens masks in ascending binary order (bit t = token t kept).
Matrix enumerate_masks(std::size_t n_tokens);

// Deletes masked-out tokens and joins the survivors with single spaces.
// Punctuation rides along with its token, so sentence boundaries of the
// surviving text remain recoverable.
std::string apply_mask(const std::string& context, const std::vector<Token>& tokens,
                       std::span<const double> mask);

struct LimeOptions {
    std::size_t n_perturbations = 100;
    double kernel_width = 0.25;
    double lambda = 0.01;
};

// Exponential kernel over the cosine distance between a mask keeping z of
// m tokens and the all-ones mask: exp(-(1 - sqrt(z/m))^2 / width^2).
// The unperturbed mask (z == m) weighs exactly 1.
double lime_kernel_weight(std::size_t m, std::size_t z, double kernel_width);

// Local surrogate: weighted LASSO over keep/drop masks, exponential kernel
// over cosine distance from the unperturbed mask. Coefficients become the
// token scores.
TokenAttribution lime_explain(const AnswerabilityModel& model, const std::string& question,
                              const std::string& context, const LimeOptions& options, Rng& rng);

struct KernelShapOptions {
    std::size_t n_perturbations = 100;
    double lambda = 0.01;
    // Surrogate weight standing in for the infinite weight of the all-kept
    // and all-dropped coalitions.
    double clamp_weight = 1e6;
};

// Same pipeline as lime_explain with the Shapley kernel
// (M-1) / (C(M,z) * z * (M-z)) for a mask keeping z of M tokens. When
// 2^M <= n_perturbations the full coalition set is enumerated instead of
// sampled; an all-dropped row is always included.
TokenAttribution kernel_shap_explain(const AnswerabilityModel& model, const std::string& question,
                                     const std::string& context, const KernelShapOptions& options, Rng& rng);

// Sentence-level perturbation variants: whole sentences are kept or
// dropped instead of tokens, and the fitted coefficients score sentences
// directly (no aggregation step). Off the default path; selectable as the
// lime_sentence / kernel_shap_sentence interpreters.
std::vector<double> lime_explain_sentences(const AnswerabilityModel& model, const std::string& question,
                                           const std::string& context,
                                           const std::vector<SentenceSpan>& sentences,
                                           const LimeOptions& options, Rng& rng);
std::vector<double> kernel_shap_explain_sentences(const AnswerabilityModel& model,
                                                  const std::string& question, const std::string& context,
                                                  const std::vector<SentenceSpan>& sentences,
                                                  const KernelShapOptions& options, Rng& rng);

// Shapley kernel weight for a coalition keeping z of m tokens (0 < z < m).
double shapley_kernel_weight(std::size_t m, std::size_t z);

// A uniformly random permutation of {0, 1, ..., n_sentences-1} used as
// sentence scores: random ranking with evenly spaced values.
std::vector<double> random_baseline(std::size_t n_sentences, Rng& rng);

}  // namespace attriq
