#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace attriq {

// Half-open character span [start, end) of one sentence inside a context.
struct SentenceSpan {
    std::size_t index = 0;
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const SentenceSpan&) const = default;
};

// Sentence boundary detection behind an interface so callers can substitute
// their own tokenizer. Implementations must return sorted, non-overlapping
// spans that cover every non-whitespace character of the context.
class SentenceSegmenter {
public:
    virtual ~SentenceSegmenter() = default;
    virtual std::vector<SentenceSpan> segment(std::string_view context) const = 0;
};

// Rule-based segmenter: a sentence ends at '.', '!' or '?' (optionally
// followed by closing quotes/brackets) when whitespace and an uppercase
// letter or digit follow, unless the period terminates a known abbreviation.
class RuleBasedSegmenter : public SentenceSegmenter {
public:
    RuleBasedSegmenter();
    explicit RuleBasedSegmenter(const std::vector<std::string>& extra_abbreviations);

    std::vector<SentenceSpan> segment(std::string_view context) const override;

private:
    bool is_abbreviation(std::string_view word) const;
    std::vector<std::string> abbreviations_;
};

// Library-wide default segmenter.
const SentenceSegmenter& default_segmenter();

// Segments with the default segmenter. Whole context becomes one span when
// no boundary is found; empty/all-whitespace context yields no spans.
std::vector<SentenceSpan> segment_sentences(std::string_view context);

}  // namespace attriq
