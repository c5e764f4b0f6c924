#pragma once

#include <string>
#include <vector>

#include "attriq/dataset.hpp"
#include "attriq/model.hpp"

namespace attriq {

// Probability outputs for one sample under the three context variants.
// Deltas follow p(modified) - p(original), so removing a load-bearing
// sentence shows up as a negative delta.
struct VerificationRecord {
    std::string sample_id;
    double p_full = 0.0;
    double p_without_gt = 0.0;
    double p_only_gt = 0.0;
    double delta_comprehensiveness = 0.0;  // p_without_gt - p_full
    double delta_sufficiency = 0.0;        // p_only_gt - p_full
};

// Context with the indexed sentence excised; the surrounding whitespace
// collapses to a single separator. Single-sentence contexts are an error.
std::string remove_sentence(const std::string& context, const std::vector<SentenceSpan>& sentences,
                            std::size_t index);

// Exactly the indexed sentence's text.
std::string keep_only_sentence(const std::string& context, const std::vector<SentenceSpan>& sentences,
                               std::size_t index);

struct VerificationSummary {
    double mean_delta_comprehensiveness = 0.0;
    double mean_delta_sufficiency = 0.0;
    double mean_p_full = 0.0;
    std::size_t n_evaluated = 0;
    std::size_t n_skipped_single_sentence = 0;
    std::size_t n_errors = 0;
    std::vector<VerificationRecord> records;
};

// Runs the remove-ground-truth and keep-only-ground-truth probes over the
// supplied true positives. Samples must carry a ground-truth sentence;
// single-sentence contexts are skipped and counted, model failures are
// counted and the run continues.
VerificationSummary verify_ground_truth(const AnswerabilityModel& model, const std::vector<Sample>& samples);

}  // namespace attriq
