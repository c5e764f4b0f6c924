#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "attriq/segmenter.hpp"

namespace attriq {

struct Answer {
    std::string text;
    std::size_t answer_start = 0;  // byte offset into the context
};

// One question-context pair as loaded from disk. is_impossible is true
// exactly when the answers list is empty.
struct RawQaRecord {
    std::string id;
    std::string question;
    std::string context;
    bool is_impossible = false;
    std::vector<Answer> answers;
};

// Sample flags set during ground-truth derivation.
struct SampleFlags {
    bool boundary_crossing = false;  // answer span crosses a sentence boundary
    bool gt_snapped = false;         // answer_start fell outside every span and was snapped

    bool any() const { return boundary_crossing || gt_snapped; }
};

struct Sample {
    RawQaRecord record;
    std::vector<SentenceSpan> sentences;
    std::optional<std::size_t> gt_sentence;
    SampleFlags flags;

    std::size_t n_sentences() const { return sentences.size(); }
};

struct DatasetStats {
    std::size_t n_samples_used = 0;
    double avg_sentences = 0.0;
    double accuracy = 0.0;
    std::optional<double> recall;  // absent when there are no answerable samples
};

// Loads a SQuAD v2 style JSON file (data -> paragraphs -> qas). Missing
// is_impossible defaults to false. Answer offsets are validated against the
// context and normalized to byte offsets (files produced with codepoint
// offsets are converted). Duplicate answers per question are preserved.
std::vector<RawQaRecord> load_squad_json(const std::string& path, const std::string& split_name);

// Segments the record's context and derives the ground-truth sentence from
// the first answer's offset. Unanswerable records get no gt_sentence.
Sample derive_ground_truth(const RawQaRecord& record, std::vector<SentenceSpan> sentences);

// Convenience: segment + derive for every record.
std::vector<Sample> build_samples(const std::vector<RawQaRecord>& records,
                                  const SentenceSegmenter& segmenter = default_segmenter());

using LengthFn = std::function<std::size_t(const std::string& question, const std::string& context)>;

// Whitespace word count over question + context; the fallback when a model
// exposes no tokenizer.
std::size_t whitespace_token_length(const std::string& question, const std::string& context);

// Keeps samples whose length_fn(question, context) <= max_tokens, preserving order.
std::vector<Sample> filter_by_length(const std::vector<Sample>& samples, const LengthFn& length_fn,
                                     std::size_t max_tokens);

// predictions[i] = model said "answerable" for samples[i].
DatasetStats compute_stats(const std::vector<Sample>& samples, const std::vector<bool>& predictions);

// Line-delimited JSON cache: one sample per line with fields
// id, question, context, sentence_spans, gt_sentence, flags.
void write_sample_cache(const std::string& path, const std::vector<Sample>& samples);
std::vector<Sample> read_sample_cache(const std::string& path);

}  // namespace attriq
