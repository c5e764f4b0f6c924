#pragma once

// Shared test fixtures and independent oracles. Everything here must stay
// independent of the implementation paths it checks: oracles recompute
// expectations from definitions (enumeration, finite differences).

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "attriq/linalg.hpp"
#include "attriq/model.hpp"

namespace attriq::testing {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("attriq-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Fixed-probability model, optionally failing on a marked question.
class ConstModel : public AnswerabilityModel {
public:
    explicit ConstModel(double proba, std::string failing_question = "")
        : proba_(proba), failing_question_(std::move(failing_question)) {}
    double predict_proba(const std::string& question, const std::string&) const override {
        if (!failing_question_.empty() && question == failing_question_)
            throw std::runtime_error("rigged failure");
        return proba_;
    }
    bool thread_safe() const override { return true; }

private:
    double proba_;
    std::string failing_question_;
};

// Per-question probabilities; used to rig predictions in pipeline tests.
class RiggedModel : public AnswerabilityModel {
public:
    explicit RiggedModel(std::map<std::string, double> by_question, double fallback = 0.0)
        : by_question_(std::move(by_question)), fallback_(fallback) {}
    double predict_proba(const std::string& question, const std::string&) const override {
        const auto it = by_question_.find(question);
        return it == by_question_.end() ? fallback_ : it->second;
    }
    bool thread_safe() const override { return true; }

private:
    std::map<std::string, double> by_question_;
    double fallback_;
};

// Exactly linear "probability": value = bias + weights . mean(embeddings).
// Gradient is constant in the embeddings, which several closed-form checks
// rely on. Output is not clamped; tests only compare attribution values.
class LinearEmbeddingModel : public GradientModel {
public:
    LinearEmbeddingModel(std::map<std::string, std::vector<double>> vocab, std::vector<double> weights,
                         double bias)
        : vocab_(std::move(vocab)), weights_(std::move(weights)), bias_(bias) {}

    double predict_proba(const std::string& q, const std::string& c) const override {
        return proba_from_embeddings(q, embed(tokenize(c)));
    }
    bool thread_safe() const override { return true; }
    std::size_t embedding_dim() const override { return weights_.size(); }

    Matrix embed(const std::vector<Token>& tokens) const override {
        Matrix m(tokens.size(), weights_.size(), 0.0);
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            const auto it = vocab_.find(tokens[t].text);
            if (it == vocab_.end()) continue;
            for (std::size_t k = 0; k < weights_.size(); ++k) m.at(t, k) = it->second[k];
        }
        return m;
    }

    double proba_from_embeddings(const std::string&, const Matrix& e) const override {
        if (e.rows() == 0) return bias_;
        double z = bias_;
        for (std::size_t k = 0; k < weights_.size(); ++k) {
            double mean = 0.0;
            for (std::size_t t = 0; t < e.rows(); ++t) mean += e.at(t, k);
            z += weights_[k] * mean / static_cast<double>(e.rows());
        }
        return z;
    }

    Matrix gradient(const std::string&, const Matrix& e) const override {
        Matrix g(e.rows(), weights_.size(), 0.0);
        if (e.rows() == 0) return g;
        for (std::size_t t = 0; t < e.rows(); ++t)
            for (std::size_t k = 0; k < weights_.size(); ++k)
                g.at(t, k) = weights_[k] / static_cast<double>(e.rows());
        return g;
    }

private:
    std::map<std::string, std::vector<double>> vocab_;
    std::vector<double> weights_;
    double bias_;
};

// A model whose output is a pure function of WHICH of the original tokens
// survive in the presented context. The original context must consist of
// distinct whitespace tokens.
class MaskFunctionModel : public AnswerabilityModel {
public:
    using MaskFn = std::function<double(const std::vector<bool>& kept)>;

    MaskFunctionModel(const std::string& original_context, MaskFn fn) : fn_(std::move(fn)) {
        for (const Token& t : tokenize_whitespace(original_context)) {
            if (index_.count(t.text))
                throw std::runtime_error("MaskFunctionModel requires distinct tokens");
            index_[t.text] = index_.size();
        }
    }

    double predict_proba(const std::string&, const std::string& context) const override {
        std::vector<bool> kept(index_.size(), false);
        for (const Token& t : tokenize_whitespace(context)) {
            const auto it = index_.find(t.text);
            if (it != index_.end()) kept[it->second] = true;
        }
        return fn_(kept);
    }
    bool thread_safe() const override { return true; }

    std::size_t n_tokens() const { return index_.size(); }

    double value_of_mask(const std::vector<bool>& kept) const { return fn_(kept); }

private:
    MaskFn fn_;
    std::map<std::string, std::size_t> index_;
};

// Brute-force Shapley values by full coalition enumeration.
inline std::vector<double> shapley_brute_force(std::size_t m,
                                               const std::function<double(const std::vector<bool>&)>& f) {
    std::vector<double> factorial(m + 1, 1.0);
    for (std::size_t i = 1; i <= m; ++i) factorial[i] = factorial[i - 1] * static_cast<double>(i);

    std::vector<double> phi(m, 0.0);
    const std::size_t count = std::size_t{1} << m;
    for (std::size_t subset = 0; subset < count; ++subset) {
        std::vector<bool> kept(m, false);
        std::size_t size = 0;
        for (std::size_t t = 0; t < m; ++t)
            if (subset & (std::size_t{1} << t)) {
                kept[t] = true;
                ++size;
            }
        const double base = f(kept);
        for (std::size_t j = 0; j < m; ++j) {
            if (kept[j]) continue;
            std::vector<bool> with = kept;
            with[j] = true;
            const double weight =
                factorial[size] * factorial[m - size - 1] / factorial[m];
            phi[j] += weight * (f(with) - base);
        }
    }
    return phi;
}

// Central finite differences of proba_from_embeddings, collapsed per token
// by summing over embedding dimensions.
inline std::vector<double> finite_difference_token_scores(const GradientModel& model, const std::string& q,
                                                          const Matrix& embeddings, double h) {
    std::vector<double> scores(embeddings.rows(), 0.0);
    Matrix work = embeddings;
    for (std::size_t t = 0; t < embeddings.rows(); ++t) {
        double sum = 0.0;
        for (std::size_t k = 0; k < embeddings.cols(); ++k) {
            const double original = work.at(t, k);
            work.at(t, k) = original + h;
            const double up = model.proba_from_embeddings(q, work);
            work.at(t, k) = original - h;
            const double down = model.proba_from_embeddings(q, work);
            work.at(t, k) = original;
            sum += (up - down) / (2.0 * h);
        }
        scores[t] = sum;
    }
    return scores;
}

// Minimal SQuAD v2 JSON with one paragraph.
inline std::string small_squad_json() {
    return R"({
  "version": "v2.0",
  "data": [
    {
      "title": "tiny",
      "paragraphs": [
        {
          "context": "Paris is the capital of France. The Seine flows through it.",
          "qas": [
            {
              "id": "q1",
              "question": "What is the capital of France?",
              "is_impossible": false,
              "answers": [{"text": "Paris", "answer_start": 0}]
            },
            {
              "id": "q2",
              "question": "What is the capital of Spain?",
              "is_impossible": true,
              "answers": []
            }
          ]
        }
      ]
    }
  ]
})";
}

}  // namespace attriq::testing
