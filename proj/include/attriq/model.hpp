#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "attriq/dataset.hpp"
#include "attriq/linalg.hpp"

namespace attriq {

// One context token with its byte span.
struct Token {
    std::string text;
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const Token&) const = default;
};

// Maximal non-whitespace runs, punctuation attached.
std::vector<Token> tokenize_whitespace(const std::string& text);

// A classifier for "does the answer to the (fixed) question appear in this
// context". Implementations must be deterministic for fixed inputs.
class AnswerabilityModel {
public:
    virtual ~AnswerabilityModel() = default;

    virtual double predict_proba(const std::string& question, const std::string& context) const = 0;
    virtual std::size_t token_length(const std::string& question, const std::string& context) const {
        return whitespace_token_length(question, context);
    }
    virtual std::vector<Token> tokenize(const std::string& context) const {
        return tokenize_whitespace(context);
    }
    // True when predict_proba may be called concurrently from several threads.
    virtual bool thread_safe() const { return false; }
};

// Adds embedding access for gradient-based interpreters. Gradients are taken
// of the answerable-class probability with respect to context-token
// embeddings; the question is held fixed.
class GradientModel : public AnswerabilityModel {
public:
    virtual std::size_t embedding_dim() const = 0;
    virtual Matrix embed(const std::vector<Token>& tokens) const = 0;
    virtual double proba_from_embeddings(const std::string& question, const Matrix& embeddings) const = 0;
    virtual Matrix gradient(const std::string& question, const Matrix& embeddings) const = 0;
};

// Start/end token distributions of an extractive QA head, with a mask
// marking which positions belong to the context (vs question or control
// tokens). Each distribution must sum to 1 within 1e-6.
struct SpanDistributions {
    std::vector<double> p_start;
    std::vector<double> p_end;
    std::vector<bool> context_mask;
};

// P(answerable) = sum of p_start[i] * p_end[j] over pairs i <= j with both
// positions inside the context. Empty context mask yields 0.
double answerability_from_spans(const SpanDistributions& d);

// Deterministic fixture: answers 1.0 iff every keyword registered for the
// question occurs in the context (case-insensitive whole-word match).
class KeywordOracleModel : public AnswerabilityModel {
public:
    using KeywordMap = std::map<std::string, std::set<std::string>>;

    explicit KeywordOracleModel(KeywordMap keyword_map);

    double predict_proba(const std::string& question, const std::string& context) const override;
    bool thread_safe() const override { return true; }

    const KeywordMap& keyword_map() const { return keywords_; }

private:
    KeywordMap keywords_;
};

// Differentiable fixture: probability = logistic(weights . mean(embeddings) + bias)
// over mean-pooled token embeddings. Out-of-vocabulary tokens embed to zero.
class BagEmbeddingModel : public GradientModel {
public:
    using Vocab = std::map<std::string, std::vector<double>>;

    BagEmbeddingModel(Vocab vocab, std::vector<double> weights, double bias);

    double predict_proba(const std::string& question, const std::string& context) const override;
    bool thread_safe() const override { return true; }

    std::size_t embedding_dim() const override { return weights_.size(); }
    Matrix embed(const std::vector<Token>& tokens) const override;
    double proba_from_embeddings(const std::string& question, const Matrix& embeddings) const override;
    Matrix gradient(const std::string& question, const Matrix& embeddings) const override;

private:
    Vocab vocab_;
    std::vector<double> weights_;
    double bias_;
};

struct BatchPrediction {
    bool positive = false;
    bool usable = false;      // false when the model failed on this sample
    double proba = 0.0;
    std::string error;        // failure description when !usable
};

// Applies the model to every sample with threshold semantics proba >= threshold.
// Model failures are isolated per sample; the batch always completes.
std::vector<BatchPrediction> predict_batch(const AnswerabilityModel& model,
                                           const std::vector<Sample>& samples, double threshold = 0.5);

}  // namespace attriq
