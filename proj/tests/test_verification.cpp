#include <doctest.h>

#include <algorithm>

#include "attriq/error.hpp"
#include "attriq/fixture.hpp"
#include "attriq/verification.hpp"
#include "support.hpp"

using namespace attriq;

TEST_CASE("remove_sentence") {
    const std::string context = "A. B. C.";
    const auto sentences = segment_sentences(context);
    REQUIRE(sentences.size() == 3);

    CHECK(remove_sentence(context, sentences, 1) == "A. C.");
    CHECK(remove_sentence(context, sentences, 0) == "B. C.");
    CHECK(remove_sentence(context, sentences, 2) == "A. B.");

    const std::string single = "Only one sentence.";
    CHECK_THROWS_AS(remove_sentence(single, segment_sentences(single), 0), Error);
    CHECK_THROWS_AS(remove_sentence(context, sentences, 3), Error);
}

TEST_CASE("keep_only_sentence") {
    const std::string context = "A. B. C.";
    const auto sentences = segment_sentences(context);
    CHECK(keep_only_sentence(context, sentences, 1) == "B.");

    const std::string single = "Only one sentence.";
    CHECK(keep_only_sentence(single, segment_sentences(single), 0) == single);
}

TEST_CASE("removal then segmentation yields exactly the other sentences") {
    const std::string context =
        "Alpha beta gamma. Delta epsilon! Zeta eta theta? Iota kappa lambda. Mu nu.";
    const auto sentences = segment_sentences(context);
    REQUIRE(sentences.size() == 5);
    for (std::size_t drop = 0; drop < sentences.size(); ++drop) {
        const std::string reduced = remove_sentence(context, sentences, drop);
        const auto re_spans = segment_sentences(reduced);
        REQUIRE(re_spans.size() == sentences.size() - 1);
        std::size_t expected = 0;
        for (const auto& span : re_spans) {
            if (expected == drop) ++expected;
            const std::string got = reduced.substr(span.start, span.end - span.start);
            const std::string want =
                context.substr(sentences[expected].start, sentences[expected].end - sentences[expected].start);
            CHECK(got == want);
            ++expected;
        }
    }
}

TEST_CASE("removed and kept parts partition the non-whitespace characters") {
    const std::string context = "One two three. Four five. Six seven eight. Nine.";
    const auto sentences = segment_sentences(context);
    const auto non_ws = [](const std::string& s) {
        std::string out;
        for (char c : s)
            if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
        return out;
    };
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        std::string combined =
            non_ws(remove_sentence(context, sentences, i)) + non_ws(keep_only_sentence(context, sentences, i));
        std::string original = non_ws(context);
        std::sort(combined.begin(), combined.end());
        std::sort(original.begin(), original.end());
        CHECK(combined == original);
    }
}

TEST_CASE("verification on the keyword-oracle fixture is exact") {
    FixtureSpec spec;
    spec.n_samples = 24;
    spec.fraction_unanswerable = 0.25;
    spec.seed = 90;
    const Fixture fixture = generate_fixture(spec);
    const KeywordOracleModel model(fixture.keyword_map);

    std::vector<Sample> positives;
    for (const Sample& s : build_samples(fixture.records))
        if (s.gt_sentence) positives.push_back(s);
    REQUIRE(positives.size() == 18);

    const VerificationSummary summary = verify_ground_truth(model, positives);
    CHECK(summary.n_evaluated == 18);
    CHECK(summary.n_errors == 0);
    CHECK(summary.mean_p_full == doctest::Approx(1.0));
    CHECK(summary.mean_delta_comprehensiveness == doctest::Approx(-1.0));
    CHECK(summary.mean_delta_sufficiency == doctest::Approx(0.0));
    for (const VerificationRecord& r : summary.records) {
        CHECK(r.delta_comprehensiveness == -1.0);
        CHECK(r.delta_sufficiency == 0.0);
    }
}

TEST_CASE("single-sentence samples are skipped and counted") {
    RawQaRecord rec;
    rec.id = "solo";
    rec.question = "q";
    rec.context = "Only sentence here.";
    rec.answers.push_back({"Only", 0});
    const Sample sample = derive_ground_truth(rec, segment_sentences(rec.context));
    REQUIRE(sample.n_sentences() == 1);

    const attriq::testing::ConstModel model(0.8);
    const VerificationSummary summary = verify_ground_truth(model, {sample});
    CHECK(summary.n_evaluated == 0);
    CHECK(summary.n_skipped_single_sentence == 1);
}

TEST_CASE("model failures are counted and the run continues") {
    RawQaRecord rec;
    rec.id = "ok";
    rec.question = "fine";
    rec.context = "First sentence here. Second sentence there.";
    rec.answers.push_back({"First", 0});
    const Sample good = derive_ground_truth(rec, segment_sentences(rec.context));
    Sample bad = good;
    bad.record.question = "explode";

    const attriq::testing::ConstModel model(0.9, "explode");
    const VerificationSummary summary = verify_ground_truth(model, {good, bad});
    CHECK(summary.n_evaluated == 1);
    CHECK(summary.n_errors == 1);
}

TEST_CASE("verification requires ground truth") {
    RawQaRecord rec;
    rec.id = "neg";
    rec.context = "One. Two.";
    rec.is_impossible = true;
    const Sample sample = derive_ground_truth(rec, segment_sentences(rec.context));
    const attriq::testing::ConstModel model(0.5);
    CHECK_THROWS_AS(verify_ground_truth(model, {sample}), Error);
}
