#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "attriq/dataset.hpp"
#include "attriq/model.hpp"

namespace attriq {

// Parameters of the synthetic planted-rationale dataset. Answerable samples
// carry all keywords of their question in exactly one sentence; the rest of
// the text never mentions them, so the keyword-oracle model classifies
// perfectly and the informative sentence is known by construction.
struct FixtureSpec {
    std::size_t n_samples = 100;
    std::size_t min_sentences = 3;  // >= 2 keeps the SNR definable
    std::size_t max_sentences = 7;
    std::size_t vocab_size = 1000;
    double fraction_unanswerable = 0.2;
    std::uint64_t seed = 1;
};

struct Fixture {
    std::vector<RawQaRecord> records;
    KeywordOracleModel::KeywordMap keyword_map;           // question -> keywords
    std::map<std::string, std::size_t> planted_sentence;  // record id -> sentence index (positives)
};

Fixture generate_fixture(const FixtureSpec& spec);

// Writes the records in SQuAD v2 JSON so the standard loader consumes them,
// plus a side-car JSON with the keyword map and planted sentence indices.
void write_fixture(const Fixture& fixture, const std::string& dataset_path,
                   const std::string& sidecar_path);

// Reads the side-car's keyword map ({"keywords": {question: [...]}} or a
// bare question->keywords object).
KeywordOracleModel::KeywordMap read_keyword_map(const std::string& path);

}  // namespace attriq
