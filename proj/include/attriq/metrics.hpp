#pragma once

#include <optional>
#include <string>
#include <vector>

#include "attriq/segmenter.hpp"
#include "attriq/whitebox.hpp"

namespace attriq {

enum class Aggregation { sum, max, native };

// How ties in sentence scores affect the rank of the ground-truth sentence.
// pessimistic: ground truth loses every tie (the default, so constant
// attributions cannot score well); optimistic: ground truth wins ties;
// positional: earlier sentence wins.
enum class TieRule { pessimistic, optimistic, positional };

const char* aggregation_name(Aggregation a);
const char* tie_rule_name(TieRule t);
Aggregation aggregation_from_name(const std::string& name);
TieRule tie_rule_from_name(const std::string& name);

struct SentenceAttribution {
    std::vector<double> scores;  // one per sentence
    Aggregation aggregation = Aggregation::native;
    std::string source;          // method tag of the producing interpreter
};

struct SelectionVector {
    std::vector<bool> selected;  // at least one entry set
};

struct GroundTruthVector {
    std::vector<bool> gt;  // exactly one entry set
};

struct MetricRecord {
    std::string sample_id;
    double iou = 0.0;
    double hpd = 0.0;
    std::optional<double> snr;   // absent when the noise is not estimable
    std::size_t rank_of_gt = 0;  // hpd == 1 / rank_of_gt
};

GroundTruthVector ground_truth_vector(std::size_t n_sentences, std::size_t gt_index);

// Argmax selection: the single earliest highest-scoring sentence.
SelectionVector argmax_selection(const SentenceAttribution& scores);

// Sums or maxes member-token scores per sentence. Tokens are assigned by
// their start offset; a token outside every span is an error. Sentences
// with no tokens score 0 under sum, and under max one less than the
// smallest finite score so they rank last.
SentenceAttribution aggregate_to_sentences(const TokenAttribution& attribution,
                                           const std::vector<SentenceSpan>& sentences, Aggregation mode);

// Intersection over union of the selected sentences and the ground truth.
double iou(const SelectionVector& selection, const GroundTruthVector& gt);

// Rank of the ground-truth sentence when sentences are ordered by
// decreasing score, ties resolved by the tie rule.
std::size_t gt_rank(const std::vector<double>& scores, std::size_t gt_index, TieRule tie_rule);

// Highest precision for detection: 1 / rank of the ground-truth sentence.
double hpd(const SentenceAttribution& scores, const GroundTruthVector& gt,
           TieRule tie_rule = TieRule::pessimistic);

// (s_gt - mean(rest))^2 / var(rest) with the population variance. Absent
// when there are fewer than 2 non-ground-truth sentences or their scores
// have zero spread.
std::optional<double> snr(const SentenceAttribution& scores, const GroundTruthVector& gt);

struct MeanMetrics {
    double iou_mean = 0.0;
    double hpd_mean = 0.0;
    std::optional<double> snr_mean;  // over records with a defined SNR
    std::size_t n_records = 0;
    std::size_t n_snr_excluded = 0;
};

MeanMetrics aggregate_mean(const std::vector<MetricRecord>& records);

}  // namespace attriq
