#include "attriq/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "attriq/error.hpp"

namespace attriq {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string lower_copy(const std::string& s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return lower(static_cast<char>(c)); });
    return out;
}

// Case-insensitive whole-word containment.
bool contains_word(const std::string& haystack_lower, const std::string& needle_lower) {
    if (needle_lower.empty()) return false;
    std::size_t pos = 0;
    while ((pos = haystack_lower.find(needle_lower, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || !is_word_char(haystack_lower[pos - 1]);
        const std::size_t end = pos + needle_lower.size();
        const bool right_ok = end == haystack_lower.size() || !is_word_char(haystack_lower[end]);
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Vocab lookup key: lowercase with surrounding punctuation stripped, so the
// trailing period of a sentence-final word does not miss the table.
std::string vocab_key(const std::string& token) {
    std::size_t b = 0;
    std::size_t e = token.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(token[b]))) ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(token[e - 1]))) --e;
    return lower_copy(token.substr(b, e - b));
}

}  // namespace

std::vector<Token> tokenize_whitespace(const std::string& text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        if (i >= text.size()) break;
        const std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        tokens.push_back({text.substr(start, i - start), start, i});
    }
    return tokens;
}

double answerability_from_spans(const SpanDistributions& d) {
    const std::size_t n = d.p_start.size();
    if (d.p_end.size() != n || d.context_mask.size() != n)
        raise(ErrorCode::validation, "answerability_from_spans: vector lengths differ");
    const auto check = [n](const std::vector<double>& p, const char* name) {
        double sum = 0.0;
        for (double v : p) {
            if (v < 0.0) raise(ErrorCode::validation, std::string(name) + ": negative probability");
            sum += v;
        }
        if (n > 0 && std::abs(sum - 1.0) > 1e-6)
            raise(ErrorCode::validation, std::string(name) + ": probabilities do not sum to 1");
    };
    check(d.p_start, "p_start");
    check(d.p_end, "p_end");

    // Suffix sums of masked end-probabilities make the pair sum linear.
    double suffix = 0.0;
    std::vector<double> end_suffix(n + 1, 0.0);
    for (std::size_t i = n; i > 0; --i) {
        if (d.context_mask[i - 1]) suffix += d.p_end[i - 1];
        end_suffix[i - 1] = suffix;
    }
    double p = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (d.context_mask[i]) p += d.p_start[i] * end_suffix[i];
    return std::min(1.0, std::max(0.0, p));
}

KeywordOracleModel::KeywordOracleModel(KeywordMap keyword_map) : keywords_(std::move(keyword_map)) {
    for (const auto& [question, kws] : keywords_)
        if (kws.empty())
            raise(ErrorCode::config, "keyword oracle: empty keyword set for question: " + question);
}

double KeywordOracleModel::predict_proba(const std::string& question, const std::string& context) const {
    const auto it = keywords_.find(question);
    if (it == keywords_.end())
        raise(ErrorCode::model, "keyword oracle: unknown question: " + question);
    const std::string haystack = lower_copy(context);
    for (const std::string& kw : it->second)
        if (!contains_word(haystack, lower_copy(kw))) return 0.0;
    return 1.0;
}

BagEmbeddingModel::BagEmbeddingModel(Vocab vocab, std::vector<double> weights, double bias)
    : vocab_(std::move(vocab)), weights_(std::move(weights)), bias_(bias) {
    for (const auto& [token, vec] : vocab_)
        if (vec.size() != weights_.size())
            raise(ErrorCode::config, "bag embedding model: vector dimension mismatch for token: " + token);
}

Matrix BagEmbeddingModel::embed(const std::vector<Token>& tokens) const {
    Matrix m(tokens.size(), weights_.size(), 0.0);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const auto it = vocab_.find(vocab_key(tokens[t].text));
        if (it == vocab_.end()) continue;  // OOV embeds to zero
        for (std::size_t k = 0; k < weights_.size(); ++k) m.at(t, k) = it->second[k];
    }
    return m;
}

double BagEmbeddingModel::proba_from_embeddings(const std::string&, const Matrix& embeddings) const {
    if (embeddings.rows() == 0) return logistic(bias_);
    double z = bias_;
    const double inv_n = 1.0 / static_cast<double>(embeddings.rows());
    for (std::size_t k = 0; k < weights_.size(); ++k) {
        double mean_k = 0.0;
        for (std::size_t t = 0; t < embeddings.rows(); ++t) mean_k += embeddings.at(t, k);
        z += weights_[k] * mean_k * inv_n;
    }
    return logistic(z);
}

Matrix BagEmbeddingModel::gradient(const std::string& question, const Matrix& embeddings) const {
    // d p / d e_{t,k} = p (1 - p) w_k / n, identical for every token row.
    const double p = proba_from_embeddings(question, embeddings);
    Matrix g(embeddings.rows(), weights_.size(), 0.0);
    if (embeddings.rows() == 0) return g;
    const double scale = p * (1.0 - p) / static_cast<double>(embeddings.rows());
    for (std::size_t t = 0; t < embeddings.rows(); ++t)
        for (std::size_t k = 0; k < weights_.size(); ++k) g.at(t, k) = scale * weights_[k];
    return g;
}

double BagEmbeddingModel::predict_proba(const std::string& question, const std::string& context) const {
    return proba_from_embeddings(question, embed(tokenize(context)));
}

std::vector<BatchPrediction> predict_batch(const AnswerabilityModel& model,
                                           const std::vector<Sample>& samples, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        raise(ErrorCode::config, "predict_batch: threshold must lie in (0,1)");
    std::vector<BatchPrediction> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) {
        BatchPrediction p;
        try {
            p.proba = model.predict_proba(s.record.question, s.record.context);
            p.positive = p.proba >= threshold;
            p.usable = true;
        } catch (const std::exception& e) {
            p.usable = false;
            p.error = e.what();
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace attriq
