#include "attriq/blackbox.hpp"

#include <cmath>

#include "attriq/error.hpp"

namespace attriq {
namespace {

enum class SurrogateKernel { cosine, shapley };

// Evaluates the model on every masked context, dropping rows where the
// model fails. Row 0 must be the all-ones mask and must survive; fewer
// than 2 surviving rows is an interpreter error. Weights are left empty.
struct Collected {
    PerturbationSet set;
    std::size_t dropped = 0;
};

Collected collect_responses(const AnswerabilityModel& model, const std::string& question,
                            const std::string& context, const std::vector<Token>& units,
                            const Matrix& masks) {
    Collected out;
    std::vector<std::size_t> kept_rows;
    out.set.responses.reserve(masks.rows());
    for (std::size_t i = 0; i < masks.rows(); ++i) {
        const std::string masked = apply_mask(context, units, {masks.row(i), masks.cols()});
        try {
            out.set.responses.push_back(model.predict_proba(question, masked));
            kept_rows.push_back(i);
        } catch (const std::exception&) {
            if (i == 0)
                raise(ErrorCode::interpreter, "surrogate fit: model failed on the unperturbed context");
            ++out.dropped;
        }
    }
    if (kept_rows.size() < 2)
        raise(ErrorCode::interpreter, "surrogate fit: fewer than 2 usable perturbations survived");
    out.set.masks = Matrix(kept_rows.size(), masks.cols());
    for (std::size_t r = 0; r < kept_rows.size(); ++r)
        for (std::size_t c = 0; c < masks.cols(); ++c) out.set.masks.at(r, c) = masks.at(kept_rows[r], c);
    return out;
}

std::size_t kept_count(const Matrix& masks, std::size_t row) {
    std::size_t z = 0;
    for (std::size_t c = 0; c < masks.cols(); ++c)
        if (masks.at(row, c) != 0.0) ++z;
    return z;
}

struct SurrogateRun {
    std::vector<double> scores;
    std::size_t dropped = 0;
    bool exhaustive = false;
};

// Shared LIME / Kernel-SHAP pipeline over arbitrary keep/drop units
// (tokens or sentences): perturb, collect responses, weight, fit.
SurrogateRun fit_surrogate(const AnswerabilityModel& model, const std::string& question,
                           const std::string& context, const std::vector<Token>& units,
                           SurrogateKernel kernel, std::size_t n_perturbations, double kernel_width,
                           double lambda, double clamp_weight, Rng& rng) {
    if (units.empty()) raise(ErrorCode::interpreter, "surrogate fit: nothing to perturb");
    const std::size_t m = units.size();

    Matrix masks;
    bool exhaustive = false;
    if (kernel == SurrogateKernel::shapley) {
        exhaustive = m <= 20 && (std::size_t{1} << m) <= n_perturbations;
        if (exhaustive) {
            // All 2^m coalitions with the unperturbed one moved to row 0.
            const Matrix all = enumerate_masks(m);
            masks = Matrix(all.rows(), m, 0.0);
            for (std::size_t c = 0; c < m; ++c) masks.at(0, c) = 1.0;
            for (std::size_t r = 0; r + 1 < all.rows(); ++r)
                for (std::size_t c = 0; c < m; ++c) masks.at(r + 1, c) = all.at(r, c);
        } else {
            // Sampled mode: unperturbed row first, then the all-dropped
            // coalition, then random masks.
            const Matrix sampled = perturb(m, n_perturbations, rng);
            masks = Matrix(sampled.rows() + 1, m, 0.0);
            for (std::size_t c = 0; c < m; ++c) masks.at(0, c) = 1.0;
            for (std::size_t r = 1; r < sampled.rows(); ++r)
                for (std::size_t c = 0; c < m; ++c) masks.at(r + 1, c) = sampled.at(r, c);
        }
    } else {
        masks = perturb(m, n_perturbations, rng);
    }

    Collected collected = collect_responses(model, question, context, units, masks);
    PerturbationSet& set = collected.set;

    set.weights.resize(set.masks.rows());
    std::vector<std::size_t> clamped_rows;
    double kernel_mass = 0.0;
    double max_kernel_weight = 0.0;
    for (std::size_t r = 0; r < set.masks.rows(); ++r) {
        const std::size_t z = kept_count(set.masks, r);
        if (kernel == SurrogateKernel::shapley && (z == 0 || z == m)) {
            set.weights[r] = clamp_weight;
            clamped_rows.push_back(r);
            continue;
        }
        set.weights[r] = kernel == SurrogateKernel::shapley ? shapley_kernel_weight(m, z)
                                                            : lime_kernel_weight(m, z, kernel_width);
        kernel_mass += set.weights[r];
        max_kernel_weight = std::max(max_kernel_weight, set.weights[r]);
    }

    LassoOptions lasso;
    lasso.lambda = lambda;
    if (lambda > 0.0 && !clamped_rows.empty() && max_kernel_weight > 0.0) {
        // Coordinate descent cannot equilibrate rows weighted 1e6 against
        // kernel rows weighted O(1): the first column sweep absorbs the
        // clamped rows' shared signal and the remaining gradients fall
        // below the convergence tolerance. On the regularized path the
        // clamp is therefore moderated to a dominant-but-solvable level,
        // and the penalty is calibrated against the kernel mass. The
        // lambda == 0 path keeps the full clamp and solves directly.
        const double moderated = std::min(clamp_weight, 100.0 * max_kernel_weight);
        double total_mass = kernel_mass;
        for (std::size_t r : clamped_rows) {
            set.weights[r] = moderated;
            total_mass += moderated;
        }
        lasso.lambda = lambda * kernel_mass / total_mass;
    }
    const SurrogateFit fit = fit_weighted_lasso(set.masks, set.responses, set.weights, lasso);

    SurrogateRun run;
    run.scores = fit.coefficients;
    run.dropped = collected.dropped;
    run.exhaustive = exhaustive;
    return run;
}

std::vector<Token> sentence_units(const std::string& context, const std::vector<SentenceSpan>& sentences) {
    std::vector<Token> units;
    units.reserve(sentences.size());
    for (const SentenceSpan& s : sentences) {
        if (s.start >= s.end || s.end > context.size())
            raise(ErrorCode::validation, "sentence span outside the context");
        units.push_back({context.substr(s.start, s.end - s.start), s.start, s.end});
    }
    return units;
}

}  // namespace

Matrix perturb(std::size_t n_tokens, std::size_t n_perturbations, Rng& rng) {
    if (n_tokens == 0) raise(ErrorCode::interpreter, "perturb: zero tokens");
    if (n_perturbations < 1) raise(ErrorCode::config, "perturb: n_perturbations must be >= 1");

    Matrix masks(n_perturbations, n_tokens, 0.0);
    for (std::size_t c = 0; c < n_tokens; ++c) masks.at(0, c) = 1.0;
    for (std::size_t r = 1; r < n_perturbations; ++r) {
        const std::size_t keep = 1 + static_cast<std::size_t>(uniform_index(rng, n_tokens));
        for (std::size_t idx : sample_without_replacement(rng, n_tokens, keep)) masks.at(r, idx) = 1.0;
    }
    return masks;
}

Matrix enumerate_masks(std::size_t n_tokens) {
    if (n_tokens == 0) raise(ErrorCode::interpreter, "enumerate_masks: zero tokens");
    if (n_tokens > 20) raise(ErrorCode::config, "enumerate_masks: too many tokens to enumerate");
    const std::size_t count = std::size_t{1} << n_tokens;
    Matrix masks(count, n_tokens, 0.0);
    for (std::size_t v = 0; v < count; ++v)
        for (std::size_t t = 0; t < n_tokens; ++t)
            if (v & (std::size_t{1} << t)) masks.at(v, t) = 1.0;
    return masks;
}

std::string apply_mask(const std::string& context, const std::vector<Token>& tokens,
                       std::span<const double> mask) {
    if (mask.size() != tokens.size())
        raise(ErrorCode::validation, "apply_mask: mask length does not match token count");
    std::string out;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (mask[t] == 0.0) continue;
        if (tokens[t].end > context.size() || tokens[t].start >= tokens[t].end)
            raise(ErrorCode::validation, "apply_mask: token span outside the context");
        if (!out.empty()) out.push_back(' ');
        out.append(context, tokens[t].start, tokens[t].end - tokens[t].start);
    }
    return out;
}

double shapley_kernel_weight(std::size_t m, std::size_t z) {
    if (z == 0 || z >= m) raise(ErrorCode::validation, "shapley kernel: z must satisfy 0 < z < m");
    // (m-1) / (C(m,z) * z * (m-z)), computed in log space to dodge overflow.
    const double log_choose = std::lgamma(static_cast<double>(m) + 1.0) -
                              std::lgamma(static_cast<double>(z) + 1.0) -
                              std::lgamma(static_cast<double>(m - z) + 1.0);
    const double log_w = std::log(static_cast<double>(m - 1)) - log_choose -
                         std::log(static_cast<double>(z)) - std::log(static_cast<double>(m - z));
    return std::exp(log_w);
}

double lime_kernel_weight(std::size_t m, std::size_t z, double kernel_width) {
    const double dist = 1.0 - std::sqrt(static_cast<double>(z) / static_cast<double>(m));
    return std::exp(-(dist * dist) / (kernel_width * kernel_width));
}

TokenAttribution lime_explain(const AnswerabilityModel& model, const std::string& question,
                              const std::string& context, const LimeOptions& options, Rng& rng) {
    if (options.n_perturbations < 2) raise(ErrorCode::config, "lime: n_perturbations must be >= 2");
    if (options.kernel_width <= 0.0) raise(ErrorCode::config, "lime: kernel_width must be > 0");

    TokenAttribution out;
    out.tokens = model.tokenize(context);
    if (out.tokens.empty()) raise(ErrorCode::interpreter, "lime: context tokenizes to zero tokens");

    const SurrogateRun run = fit_surrogate(model, question, context, out.tokens, SurrogateKernel::cosine,
                                           options.n_perturbations, options.kernel_width, options.lambda,
                                           0.0, rng);
    out.scores = run.scores;
    out.method_tag = "lime";
    out.params = {{"n_perturbations", std::to_string(options.n_perturbations)},
                  {"kernel_width", std::to_string(options.kernel_width)},
                  {"lambda", std::to_string(options.lambda)},
                  {"dropped_rows", std::to_string(run.dropped)}};
    return out;
}

TokenAttribution kernel_shap_explain(const AnswerabilityModel& model, const std::string& question,
                                     const std::string& context, const KernelShapOptions& options, Rng& rng) {
    if (options.n_perturbations < 2) raise(ErrorCode::config, "kernel_shap: n_perturbations must be >= 2");

    TokenAttribution out;
    out.tokens = model.tokenize(context);
    if (out.tokens.empty()) raise(ErrorCode::interpreter, "kernel_shap: context tokenizes to zero tokens");

    const SurrogateRun run = fit_surrogate(model, question, context, out.tokens, SurrogateKernel::shapley,
                                           options.n_perturbations, 0.0, options.lambda,
                                           options.clamp_weight, rng);
    out.scores = run.scores;
    out.method_tag = "kernel_shap";
    out.params = {{"n_perturbations", std::to_string(options.n_perturbations)},
                  {"lambda", std::to_string(options.lambda)},
                  {"exhaustive", run.exhaustive ? "true" : "false"},
                  {"dropped_rows", std::to_string(run.dropped)}};
    return out;
}

std::vector<double> lime_explain_sentences(const AnswerabilityModel& model, const std::string& question,
                                           const std::string& context,
                                           const std::vector<SentenceSpan>& sentences,
                                           const LimeOptions& options, Rng& rng) {
    if (options.n_perturbations < 2) raise(ErrorCode::config, "lime: n_perturbations must be >= 2");
    if (options.kernel_width <= 0.0) raise(ErrorCode::config, "lime: kernel_width must be > 0");
    return fit_surrogate(model, question, context, sentence_units(context, sentences),
                         SurrogateKernel::cosine, options.n_perturbations, options.kernel_width,
                         options.lambda, 0.0, rng)
        .scores;
}

std::vector<double> kernel_shap_explain_sentences(const AnswerabilityModel& model,
                                                  const std::string& question, const std::string& context,
                                                  const std::vector<SentenceSpan>& sentences,
                                                  const KernelShapOptions& options, Rng& rng) {
    if (options.n_perturbations < 2) raise(ErrorCode::config, "kernel_shap: n_perturbations must be >= 2");
    return fit_surrogate(model, question, context, sentence_units(context, sentences),
                         SurrogateKernel::shapley, options.n_perturbations, 0.0, options.lambda,
                         options.clamp_weight, rng)
        .scores;
}

std::vector<double> random_baseline(std::size_t n_sentences, Rng& rng) {
    if (n_sentences < 1) raise(ErrorCode::config, "random_baseline: n_sentences must be >= 1");
    const std::vector<std::size_t> perm = random_permutation(rng, n_sentences);
    std::vector<double> scores(n_sentences);
    for (std::size_t i = 0; i < n_sentences; ++i) scores[i] = static_cast<double>(perm[i]);
    return scores;
}

}  // namespace attriq
