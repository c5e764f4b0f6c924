#include "attriq/segmenter.hpp"

#include <algorithm>
#include <cctype>

namespace attriq {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_upper_or_digit(char c) {
    const unsigned char u = static_cast<unsigned char>(c);
    return (u >= 'A' && u <= 'Z') || (u >= '0' && u <= '9');
}
bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Words whose trailing period does not end a sentence. Multi-dot entries are
// matched against the text between the previous whitespace and the period.
const char* const kAbbreviations[] = {
    "mr",  "mrs",  "ms",   "dr",   "prof", "sr",   "jr",   "st",   "mt",  "etc",
    "vs",  "e.g",  "i.e",  "cf",   "fig",  "figs", "eq",   "al",   "inc", "ltd",
    "co",  "corp", "dept", "univ", "assn", "approx", "no",  "nos",  "vol", "vols",
    "gen", "col",  "sgt",  "capt", "lt",   "maj",  "ave",  "blvd", "rd",  "hwy",
    "jan", "feb",  "mar",  "apr",  "jun",  "jul",  "aug",  "sep",  "sept", "oct",
    "nov", "dec",
};

}  // namespace

RuleBasedSegmenter::RuleBasedSegmenter() {
    for (const char* a : kAbbreviations) abbreviations_.emplace_back(a);
}

RuleBasedSegmenter::RuleBasedSegmenter(const std::vector<std::string>& extra_abbreviations)
    : RuleBasedSegmenter() {
    for (const auto& a : extra_abbreviations) abbreviations_.push_back(lower(a));
}

bool RuleBasedSegmenter::is_abbreviation(std::string_view word) const {
    // Strip leading punctuation such as '(' before the lookup.
    std::size_t i = 0;
    while (i < word.size() && !std::isalnum(static_cast<unsigned char>(word[i]))) ++i;
    const std::string key = lower(word.substr(i));
    return std::find(abbreviations_.begin(), abbreviations_.end(), key) != abbreviations_.end();
}

std::vector<SentenceSpan> RuleBasedSegmenter::segment(std::string_view context) const {
    std::vector<SentenceSpan> spans;
    const std::size_t n = context.size();

    std::size_t pos = 0;
    while (pos < n && is_space(context[pos])) ++pos;
    if (pos == n) return spans;

    std::size_t start = pos;
    while (pos < n) {
        const char c = context[pos];
        if (!is_terminator(c)) {
            ++pos;
            continue;
        }
        std::size_t end = pos + 1;
        while (end < n && is_closer(context[end])) ++end;

        // A boundary needs trailing whitespace and an uppercase/digit start.
        std::size_t next = end;
        while (next < n && is_space(context[next])) ++next;
        const bool has_gap = next > end;
        const bool next_starts_sentence = next < n && is_upper_or_digit(context[next]);

        bool boundary = has_gap && next_starts_sentence;
        if (boundary && c == '.') {
            std::size_t wstart = pos;
            while (wstart > start && !is_space(context[wstart - 1])) --wstart;
            if (is_abbreviation(context.substr(wstart, pos - wstart))) boundary = false;
        }

        if (boundary) {
            spans.push_back({spans.size(), start, end});
            start = next;
            pos = next;
        } else {
            pos = end;
        }
    }

    // Close the final sentence at the last non-whitespace character.
    std::size_t last = n;
    while (last > start && is_space(context[last - 1])) --last;
    if (last > start) spans.push_back({spans.size(), start, last});
    return spans;
}

const SentenceSegmenter& default_segmenter() {
    static const RuleBasedSegmenter segmenter;
    return segmenter;
}

std::vector<SentenceSpan> segment_sentences(std::string_view context) {
    return default_segmenter().segment(context);
}

}  // namespace attriq
