#include "attriq/fixture.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "attriq/error.hpp"
#include "attriq/rng.hpp"

namespace attriq {
namespace {

using nlohmann::json;

// Pronounceable pseudo-word from consonant-vowel syllables. Filler words
// never start with 'z'; keywords always do, so the two vocabularies are
// disjoint by construction.
std::string pseudo_word(std::size_t index, bool keyword) {
    static const char consonants[] = {'b', 'd', 'f', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't'};
    static const char vowels[] = {'a', 'e', 'i', 'o', 'u'};
    const std::size_t nc = sizeof(consonants);
    const std::size_t nv = sizeof(vowels);
    std::string w;
    if (keyword) w.push_back('z');
    std::size_t v = index;
    for (int s = 0; s < 3; ++s) {
        w.push_back(consonants[v % nc]);
        v /= nc;
        w.push_back(vowels[v % nv]);
        v /= nv;
    }
    return w;
}

}  // namespace

Fixture generate_fixture(const FixtureSpec& spec) {
    if (spec.n_samples == 0) raise(ErrorCode::config, "fixture: n_samples must be >= 1");
    if (spec.min_sentences < 2) raise(ErrorCode::config, "fixture: min_sentences must be >= 2");
    if (spec.max_sentences < spec.min_sentences)
        raise(ErrorCode::config, "fixture: max_sentences must be >= min_sentences");
    if (spec.fraction_unanswerable < 0.0 || spec.fraction_unanswerable >= 1.0)
        raise(ErrorCode::config, "fixture: fraction_unanswerable must lie in [0, 1)");

    // Half the vocabulary budget is reserved for keywords; every sample
    // consumes a fresh pair so questions never collide.
    const std::size_t reserved = spec.vocab_size / 2;
    const std::size_t filler_count = spec.vocab_size - reserved;
    if (2 * spec.n_samples > reserved)
        raise(ErrorCode::config,
              "fixture: vocabulary too small to give every sample fresh keywords (need " +
                  std::to_string(2 * spec.n_samples) + " reserved words, have " + std::to_string(reserved) + ")");
    if (filler_count < 8) raise(ErrorCode::config, "fixture: vocabulary too small for filler text");

    Rng rng(splitmix64(spec.seed));

    const std::size_t n_negative = static_cast<std::size_t>(
        std::lround(spec.fraction_unanswerable * static_cast<double>(spec.n_samples)));
    std::vector<bool> answerable(spec.n_samples, true);
    for (std::size_t i = 0; i < n_negative && i < spec.n_samples; ++i) answerable[i] = false;
    const std::vector<std::size_t> order = random_permutation(rng, spec.n_samples);

    Fixture fixture;
    std::size_t next_keyword = 0;
    for (std::size_t i = 0; i < spec.n_samples; ++i) {
        const bool positive = answerable[order[i]];
        RawQaRecord rec;
        {
            char id[32];
            std::snprintf(id, sizeof(id), "fx-%05zu", i);
            rec.id = id;
        }

        const std::string kw_a = pseudo_word(next_keyword++, true);
        const std::string kw_b = pseudo_word(next_keyword++, true);
        rec.question = "Where do " + kw_a + " and " + kw_b + " appear?";
        fixture.keyword_map[rec.question] = {kw_a, kw_b};

        const std::size_t n_sent =
            spec.min_sentences + static_cast<std::size_t>(uniform_index(rng, spec.max_sentences - spec.min_sentences + 1));
        const std::size_t gt = static_cast<std::size_t>(uniform_index(rng, n_sent));

        std::string context;
        std::size_t answer_start = 0;
        std::string answer_text = kw_a + " " + kw_b;
        for (std::size_t s = 0; s < n_sent; ++s) {
            std::vector<std::string> words;
            const std::size_t n_words = 5 + static_cast<std::size_t>(uniform_index(rng, 4));
            for (std::size_t w = 0; w < n_words; ++w)
                words.push_back(pseudo_word(static_cast<std::size_t>(uniform_index(rng, filler_count)), false));
            if (positive && s == gt) {
                // Keywords sit adjacently after at least one filler word so
                // sentence capitalization never touches the answer text.
                const std::size_t at = 1 + static_cast<std::size_t>(uniform_index(rng, words.size() - 1));
                words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), {kw_a, kw_b});
            }
            words[0][0] = static_cast<char>(std::toupper(static_cast<unsigned char>(words[0][0])));

            if (!context.empty()) context.push_back(' ');
            std::string sentence;
            for (std::size_t w = 0; w < words.size(); ++w) {
                if (w > 0) sentence.push_back(' ');
                if (positive && s == gt && words[w] == kw_a && sentence.size() > 0)
                    answer_start = context.size() + sentence.size();
                sentence += words[w];
            }
            sentence.push_back('.');
            context += sentence;
        }

        rec.context = context;
        rec.is_impossible = !positive;
        if (positive) {
            if (rec.context.compare(answer_start, answer_text.size(), answer_text) != 0)
                raise(ErrorCode::internal, "fixture: answer offset bookkeeping failed for " + rec.id);
            rec.answers.push_back({answer_text, answer_start});
            fixture.planted_sentence[rec.id] = gt;
        }
        fixture.records.push_back(std::move(rec));
    }
    return fixture;
}

void write_fixture(const Fixture& fixture, const std::string& dataset_path, const std::string& sidecar_path) {
    json paragraphs = json::array();
    for (const RawQaRecord& rec : fixture.records) {
        json answers = json::array();
        for (const Answer& a : rec.answers) answers.push_back({{"text", a.text}, {"answer_start", a.answer_start}});
        json qa = {{"id", rec.id},
                   {"question", rec.question},
                   {"is_impossible", rec.is_impossible},
                   {"answers", std::move(answers)}};
        paragraphs.push_back({{"context", rec.context}, {"qas", json::array({std::move(qa)})}});
    }
    json doc = {{"version", "v2.0"},
                {"data", json::array({json{{"title", "synthetic"}, {"paragraphs", std::move(paragraphs)}}})}};

    std::ofstream out(dataset_path);
    if (!out) raise(ErrorCode::io, "cannot write fixture dataset: " + dataset_path);
    out << doc.dump(2) << '\n';

    json keywords = json::object();
    for (const auto& [question, kws] : fixture.keyword_map) {
        json list = json::array();
        for (const std::string& k : kws) list.push_back(k);
        keywords[question] = std::move(list);
    }
    json planted = json::object();
    for (const auto& [id, index] : fixture.planted_sentence) planted[id] = index;
    json sidecar = {{"keywords", std::move(keywords)}, {"planted", std::move(planted)}};

    std::ofstream side(sidecar_path);
    if (!side) raise(ErrorCode::io, "cannot write fixture side-car: " + sidecar_path);
    side << sidecar.dump(2) << '\n';
}

KeywordOracleModel::KeywordMap read_keyword_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::io, "cannot open keyword map: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        raise(ErrorCode::parse, "malformed keyword map " + path + ": " + e.what());
    }
    const json& map = doc.contains("keywords") ? doc["keywords"] : doc;
    if (!map.is_object()) raise(ErrorCode::parse, path + ": expected an object of question -> keywords");
    KeywordOracleModel::KeywordMap out;
    for (const auto& [question, kws] : map.items()) {
        std::set<std::string> set;
        for (const auto& k : kws) set.insert(k.get<std::string>());
        out[question] = std::move(set);
    }
    return out;
}

}  // namespace attriq
