#include "attriq/verification.hpp"

#include <cctype>

#include "attriq/error.hpp"

namespace attriq {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string remove_sentence(const std::string& context, const std::vector<SentenceSpan>& sentences,
                            std::size_t index) {
    if (index >= sentences.size()) raise(ErrorCode::validation, "remove_sentence: index out of range");
    if (sentences.size() < 2)
        raise(ErrorCode::validation, "remove_sentence: single-sentence context leaves no residual text");

    const SentenceSpan& span = sentences[index];
    std::string prefix = context.substr(0, span.start);
    while (!prefix.empty() && is_space(prefix.back())) prefix.pop_back();
    std::string suffix = context.substr(span.end);
    std::size_t skip = 0;
    while (skip < suffix.size() && is_space(suffix[skip])) ++skip;
    suffix.erase(0, skip);

    if (prefix.empty()) return suffix;
    if (suffix.empty()) return prefix;
    return prefix + " " + suffix;
}

std::string keep_only_sentence(const std::string& context, const std::vector<SentenceSpan>& sentences,
                               std::size_t index) {
    if (index >= sentences.size()) raise(ErrorCode::validation, "keep_only_sentence: index out of range");
    const SentenceSpan& span = sentences[index];
    if (span.end > context.size() || span.start >= span.end)
        raise(ErrorCode::validation, "keep_only_sentence: span outside the context");
    return context.substr(span.start, span.end - span.start);
}

VerificationSummary verify_ground_truth(const AnswerabilityModel& model, const std::vector<Sample>& samples) {
    VerificationSummary summary;
    double comp_sum = 0.0;
    double suff_sum = 0.0;
    double full_sum = 0.0;

    for (const Sample& s : samples) {
        if (!s.gt_sentence)
            raise(ErrorCode::validation, "verify_ground_truth: sample " + s.record.id + " has no ground truth");
        if (s.n_sentences() < 2) {
            ++summary.n_skipped_single_sentence;
            continue;
        }
        const std::size_t gt = *s.gt_sentence;
        VerificationRecord rec;
        rec.sample_id = s.record.id;
        try {
            const std::string& q = s.record.question;
            rec.p_full = model.predict_proba(q, s.record.context);
            rec.p_without_gt = model.predict_proba(q, remove_sentence(s.record.context, s.sentences, gt));
            rec.p_only_gt = model.predict_proba(q, keep_only_sentence(s.record.context, s.sentences, gt));
        } catch (const std::exception&) {
            ++summary.n_errors;
            continue;
        }
        rec.delta_comprehensiveness = rec.p_without_gt - rec.p_full;
        rec.delta_sufficiency = rec.p_only_gt - rec.p_full;
        comp_sum += rec.delta_comprehensiveness;
        suff_sum += rec.delta_sufficiency;
        full_sum += rec.p_full;
        summary.records.push_back(rec);
    }

    summary.n_evaluated = summary.records.size();
    if (summary.n_evaluated > 0) {
        const double inv = 1.0 / static_cast<double>(summary.n_evaluated);
        summary.mean_delta_comprehensiveness = comp_sum * inv;
        summary.mean_delta_sufficiency = suff_sum * inv;
        summary.mean_p_full = full_sum * inv;
    }
    return summary;
}

}  // namespace attriq
