#include <doctest.h>

#include <cmath>

#include "attriq/error.hpp"
#include "attriq/model.hpp"
#include "attriq/rng.hpp"
#include "attriq/whitebox.hpp"
#include "support.hpp"

using namespace attriq;
using attriq::testing::LinearEmbeddingModel;

namespace {

// Random bag model over a small vocabulary, used for gradient checks.
BagEmbeddingModel random_bag_model(Rng& rng, std::size_t dim) {
    BagEmbeddingModel::Vocab vocab;
    for (const char* word : {"ada", "bix", "cor", "dun", "eld", "fir"}) {
        std::vector<double> v(dim);
        for (double& x : v) x = 4.0 * uniform01(rng) - 2.0;
        vocab[word] = v;
    }
    std::vector<double> weights(dim);
    for (double& x : weights) x = 4.0 * uniform01(rng) - 2.0;
    return BagEmbeddingModel(std::move(vocab), std::move(weights), 2.0 * uniform01(rng) - 1.0);
}

const char* kContext = "ada bix cor dun eld fir ada";

}  // namespace

TEST_CASE("saliency on zero weights is identically zero") {
    const BagEmbeddingModel model({{"a", {1.0}}, {"b", {2.0}}}, {0.0}, 0.3);
    const TokenAttribution attr = saliency(model, "q", "a b a");
    REQUIRE(attr.scores.size() == 3);
    for (double s : attr.scores) CHECK(s == 0.0);
}

TEST_CASE("saliency equals the closed-form gradient of the pooled model") {
    // Mean pooling makes the embedding gradient identical for every token:
    // p(1-p) * sum(w) / n. The fixture cannot separate tokens by gradient
    // alone; input-times-gradient methods do that instead.
    const BagEmbeddingModel model({{"key", {8.0}}, {"pad", {0.5}}}, {1.0}, -3.0);
    const std::string context = "pad key pad pad";
    const double p = model.predict_proba("q", context);
    const double expected = p * (1.0 - p) * 1.0 / 4.0;
    const TokenAttribution attr = saliency(model, "q", context);
    REQUIRE(attr.scores.size() == 4);
    for (double s : attr.scores) CHECK(s == doctest::Approx(expected).epsilon(1e-12));
    CHECK(attr.method_tag == "saliency");
}

TEST_CASE("saliency matches central finite differences") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const BagEmbeddingModel model = random_bag_model(rng, 3);
        const TokenAttribution attr = saliency(model, "q", kContext);
        const Matrix e = model.embed(model.tokenize(kContext));
        const auto fd = attriq::testing::finite_difference_token_scores(model, "q", e, 1e-4);
        REQUIRE(fd.size() == attr.scores.size());
        for (std::size_t t = 0; t < fd.size(); ++t) {
            const double scale = std::max(std::abs(fd[t]), 1e-9);
            CHECK(std::abs(attr.scores[t] - fd[t]) / scale < 1e-4);
        }
    }
}

TEST_CASE("saliency score vector covers exactly the context tokens") {
    const BagEmbeddingModel model({{"a", {1.0}}}, {1.0}, 0.0);
    const TokenAttribution attr = saliency(model, "a very long question ignored entirely", "a a a");
    CHECK(attr.tokens.size() == 3);
    CHECK(attr.scores.size() == 3);
}

TEST_CASE("absolute dimension aggregation is exposed as a variant") {
    const BagEmbeddingModel model({{"a", {2.0, -3.0}}}, {1.0, 1.0}, 0.0);
    const TokenAttribution plain = saliency(model, "q", "a");
    const TokenAttribution abs = saliency(model, "q", "a", DimAggregation::abs_sum);
    const double p = model.predict_proba("q", "a");
    CHECK(plain.scores[0] == doctest::Approx(p * (1 - p) * 2.0));  // w1 + w2 = 2
    CHECK(abs.scores[0] == doctest::Approx(p * (1 - p) * 2.0));    // |w1| + |w2| = 2
    const BagEmbeddingModel mixed({{"a", {2.0, -3.0}}}, {1.0, -1.0}, 0.0);
    const double q = mixed.predict_proba("q", "a");
    CHECK(saliency(mixed, "q", "a").scores[0] == doctest::Approx(0.0));
    CHECK(saliency(mixed, "q", "a", DimAggregation::abs_sum).scores[0] ==
          doctest::Approx(q * (1 - q) * 2.0));
}

TEST_CASE("smoothgrad with zero sigma reproduces saliency bit-exactly") {
    Rng model_rng(123);
    const BagEmbeddingModel model = random_bag_model(model_rng, 4);
    const TokenAttribution base = saliency(model, "q", kContext);
    Rng rng(9);
    const TokenAttribution smooth = smoothgrad(model, "q", kContext, 7, 0.0, rng);
    REQUIRE(smooth.scores.size() == base.scores.size());
    for (std::size_t t = 0; t < base.scores.size(); ++t) CHECK(smooth.scores[t] == base.scores[t]);
}

TEST_CASE("smoothgrad with one sample equals saliency at the noisy point") {
    Rng model_rng(321);
    const BagEmbeddingModel model = random_bag_model(model_rng, 2);
    const double sigma = 0.25;
    const std::uint64_t seed = 424242;

    Rng rng(seed);
    const TokenAttribution got = smoothgrad(model, "q", kContext, 1, sigma, rng);

    // Reproduce the single noisy point with an identical draw sequence.
    Rng replay(seed);
    const Matrix e = model.embed(model.tokenize(kContext));
    Matrix noisy = e;
    for (std::size_t i = 0; i < noisy.data().size(); ++i)
        noisy.data()[i] = e.data()[i] + sigma * standard_normal(replay);
    const Matrix grad = model.gradient("q", noisy);
    for (std::size_t t = 0; t < got.scores.size(); ++t) {
        double expected = 0.0;
        for (std::size_t k = 0; k < grad.cols(); ++k) expected += grad.at(t, k);
        CHECK(got.scores[t] == doctest::Approx(expected).epsilon(1e-15));
    }
}

TEST_CASE("smoothgrad is deterministic for a fixed seed") {
    Rng model_rng(55);
    const BagEmbeddingModel model = random_bag_model(model_rng, 3);
    Rng r1(1001), r2(1001), r3(1002);
    const TokenAttribution a = smoothgrad(model, "q", kContext, 6, 0.3, r1);
    const TokenAttribution b = smoothgrad(model, "q", kContext, 6, 0.3, r2);
    const TokenAttribution c = smoothgrad(model, "q", kContext, 6, 0.3, r3);
    REQUIRE(a.scores.size() == b.scores.size());
    bool any_diff = false;
    for (std::size_t t = 0; t < a.scores.size(); ++t) {
        CHECK(a.scores[t] == b.scores[t]);
        any_diff = any_diff || a.scores[t] != c.scores[t];
    }
    CHECK(any_diff);
}

TEST_CASE("smoothgrad equals saliency on a constant-gradient model for any sigma") {
    const LinearEmbeddingModel model({{"u", {1.0, 2.0}}, {"v", {-1.0, 0.5}}}, {0.4, -0.7}, 0.2);
    const TokenAttribution base = saliency(model, "q", "u v u v");
    for (double sigma : {0.01, 0.5, 3.0}) {
        Rng rng(31);
        const TokenAttribution smooth = smoothgrad(model, "q", "u v u v", 9, sigma, rng);
        for (std::size_t t = 0; t < base.scores.size(); ++t)
            CHECK(std::abs(smooth.scores[t] - base.scores[t]) < 1e-6);
    }
}

TEST_CASE("smoothgrad averages per-sample attributions, not gradients") {
    // Gradient equals the (noisy) embeddings, and the input embeds to zero:
    // each sample's absolute attribution is |noise|, whose average is
    // sigma * sqrt(2/pi) > 0. Collapsing the averaged gradient instead
    // would give |mean(noise)|, which vanishes.
    struct IdentityGradientModel : GradientModel {
        double predict_proba(const std::string& q, const std::string& c) const override {
            return proba_from_embeddings(q, embed(tokenize(c)));
        }
        std::size_t embedding_dim() const override { return 1; }
        Matrix embed(const std::vector<Token>& tokens) const override {
            return Matrix(tokens.size(), 1, 0.0);
        }
        double proba_from_embeddings(const std::string&, const Matrix& e) const override {
            double s = 0.5;
            for (double v : e.data()) s += 0.5 * v * v;
            return s;
        }
        Matrix gradient(const std::string&, const Matrix& e) const override { return e; }
    } model;

    Rng rng(606);
    const TokenAttribution attr = smoothgrad(model, "q", "one two three", 400, 1.0, rng,
                                             DimAggregation::abs_sum);
    const double expected = std::sqrt(2.0 / 3.14159265358979323846);  // E|N(0,1)|
    for (double s : attr.scores) CHECK(std::abs(s - expected) < 0.15);
}

TEST_CASE("sigma_from_embedding_range scales with the value spread") {
    Matrix e(2, 2, 0.0);
    e.at(0, 0) = -1.0;
    e.at(1, 1) = 3.0;
    CHECK(sigma_from_embedding_range(e, 0.25) == doctest::Approx(1.0));
    CHECK(sigma_from_embedding_range(Matrix(), 0.25) == 0.0);
}

TEST_CASE("integrated gradients vanish when the input equals the baseline") {
    Rng model_rng(8);
    const BagEmbeddingModel model = random_bag_model(model_rng, 3);
    const Matrix e = model.embed(model.tokenize(kContext));
    const TokenAttribution attr = integrated_gradients(model, "q", kContext, 16, &e);
    for (double s : attr.scores) CHECK(s == doctest::Approx(0.0));
}

TEST_CASE("integrated gradients are exact on a linear model at any step count") {
    const LinearEmbeddingModel model({{"u", {1.5, -2.0}}, {"v", {0.5, 1.0}}, {"w", {2.0, 2.0}}},
                                     {0.8, -0.3}, 0.1);
    const std::string context = "u v w v";
    const Matrix e = model.embed(model.tokenize(context));
    const Matrix g = model.gradient("q", e);
    for (std::size_t steps : {2u, 7u, 50u}) {
        const TokenAttribution attr = integrated_gradients(model, "q", context, steps);
        for (std::size_t t = 0; t < attr.scores.size(); ++t) {
            double expected = 0.0;  // (x - 0) . gradient row
            for (std::size_t k = 0; k < e.cols(); ++k) expected += e.at(t, k) * g.at(t, k);
            CHECK(std::abs(attr.scores[t] - expected) < 1e-9);
        }
    }
}

TEST_CASE("integrated gradients satisfy completeness on the logistic fixture") {
    Rng rng(2024);
    for (int trial = 0; trial < 25; ++trial) {
        const BagEmbeddingModel model = random_bag_model(rng, 3);
        const TokenAttribution attr = integrated_gradients(model, "q", kContext, 128);
        double total = 0.0;
        for (double s : attr.scores) total += s;
        const Matrix e = model.embed(model.tokenize(kContext));
        const double fx = model.proba_from_embeddings("q", e);
        const double f0 = model.proba_from_embeddings("q", Matrix(e.rows(), e.cols(), 0.0));
        const double target = fx - f0;
        CHECK(std::abs(total - target) <= 0.01 * std::max(std::abs(target), 1e-9));
    }
}

TEST_CASE("integrated gradients separate the planted keyword by input scaling") {
    // The pooled gradient is uniform across tokens; multiplication by the
    // inputs is what singles out the keyword's large embedding.
    const BagEmbeddingModel model({{"key", {8.0}}, {"pad", {0.5}}}, {1.0}, -3.0);
    const TokenAttribution attr = integrated_gradients(model, "q", "pad key pad pad", 64);
    REQUIRE(attr.scores.size() == 4);
    for (std::size_t t = 0; t < 4; ++t) {
        if (t == 1) continue;
        CHECK(attr.scores[1] > attr.scores[t]);
    }
}

TEST_CASE("whitebox parameter validation") {
    const BagEmbeddingModel model({{"a", {1.0}}}, {1.0}, 0.0);
    Rng rng(1);
    CHECK_THROWS_AS(smoothgrad(model, "q", "a", 0, 0.1, rng), Error);
    CHECK_THROWS_AS(smoothgrad(model, "q", "a", 3, -0.1, rng), Error);
    CHECK_THROWS_AS(integrated_gradients(model, "q", "a", 1), Error);
    CHECK_THROWS_AS(saliency(model, "q", "   "), Error);
    Matrix wrong(5, 9, 0.0);
    CHECK_THROWS_AS(integrated_gradients(model, "q", "a", 4, &wrong), Error);
}
