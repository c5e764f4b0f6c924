#include "attriq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "attriq/error.hpp"

namespace attriq {
namespace {

std::size_t gt_index_of(const GroundTruthVector& gt) {
    std::size_t index = gt.gt.size();
    std::size_t count = 0;
    for (std::size_t i = 0; i < gt.gt.size(); ++i) {
        if (gt.gt[i]) {
            index = i;
            ++count;
        }
    }
    if (count != 1) raise(ErrorCode::validation, "ground-truth vector must have exactly one set entry");
    return index;
}

}  // namespace

const char* aggregation_name(Aggregation a) {
    switch (a) {
        case Aggregation::sum: return "sum";
        case Aggregation::max: return "max";
        case Aggregation::native: return "native";
    }
    return "sum";
}

const char* tie_rule_name(TieRule t) {
    switch (t) {
        case TieRule::pessimistic: return "pessimistic";
        case TieRule::optimistic: return "optimistic";
        case TieRule::positional: return "positional";
    }
    return "pessimistic";
}

Aggregation aggregation_from_name(const std::string& name) {
    if (name == "sum") return Aggregation::sum;
    if (name == "max") return Aggregation::max;
    if (name == "native") return Aggregation::native;
    raise(ErrorCode::config, "unknown aggregation: " + name);
}

TieRule tie_rule_from_name(const std::string& name) {
    if (name == "pessimistic") return TieRule::pessimistic;
    if (name == "optimistic") return TieRule::optimistic;
    if (name == "positional") return TieRule::positional;
    raise(ErrorCode::config, "unknown tie rule: " + name);
}

GroundTruthVector ground_truth_vector(std::size_t n_sentences, std::size_t gt_index) {
    if (gt_index >= n_sentences) raise(ErrorCode::validation, "ground-truth index out of range");
    GroundTruthVector v;
    v.gt.assign(n_sentences, false);
    v.gt[gt_index] = true;
    return v;
}

SelectionVector argmax_selection(const SentenceAttribution& scores) {
    if (scores.scores.empty()) raise(ErrorCode::validation, "argmax_selection: empty score vector");
    const auto it = std::max_element(scores.scores.begin(), scores.scores.end());
    SelectionVector s;
    s.selected.assign(scores.scores.size(), false);
    s.selected[static_cast<std::size_t>(it - scores.scores.begin())] = true;
    return s;
}

SentenceAttribution aggregate_to_sentences(const TokenAttribution& attribution,
                                           const std::vector<SentenceSpan>& sentences, Aggregation mode) {
    if (mode == Aggregation::native)
        raise(ErrorCode::config, "aggregate_to_sentences: mode must be sum or max");
    if (attribution.tokens.size() != attribution.scores.size())
        raise(ErrorCode::validation, "token attribution: tokens and scores differ in length");
    if (sentences.empty()) raise(ErrorCode::validation, "aggregate_to_sentences: no sentences");

    const double neg_inf = -std::numeric_limits<double>::infinity();
    SentenceAttribution out;
    out.aggregation = mode;
    out.source = attribution.method_tag;
    out.scores.assign(sentences.size(), mode == Aggregation::sum ? 0.0 : neg_inf);

    for (std::size_t t = 0; t < attribution.tokens.size(); ++t) {
        const std::size_t pos = attribution.tokens[t].start;
        // Tokens straddling a boundary are assigned by start offset.
        std::size_t s = sentences.size();
        for (const SentenceSpan& span : sentences) {
            if (pos >= span.start && pos < span.end) {
                s = span.index;
                break;
            }
        }
        if (s == sentences.size())
            raise(ErrorCode::validation,
                  "token '" + attribution.tokens[t].text + "' lies outside every sentence span");
        if (mode == Aggregation::sum)
            out.scores[s] += attribution.scores[t];
        else
            out.scores[s] = std::max(out.scores[s], attribution.scores[t]);
    }

    if (mode == Aggregation::max) {
        // Sentences with no tokens rank below every scored sentence.
        double min_finite = std::numeric_limits<double>::infinity();
        for (double v : out.scores)
            if (v != neg_inf) min_finite = std::min(min_finite, v);
        if (!std::isfinite(min_finite)) min_finite = 0.0;
        for (double& v : out.scores)
            if (v == neg_inf) v = min_finite - 1.0;
    }
    return out;
}

double iou(const SelectionVector& selection, const GroundTruthVector& gt) {
    if (selection.selected.size() != gt.gt.size())
        raise(ErrorCode::validation, "iou: selection and ground truth differ in length");
    std::size_t inter = 0;
    std::size_t uni = 0;
    bool any_selected = false;
    for (std::size_t i = 0; i < gt.gt.size(); ++i) {
        any_selected = any_selected || selection.selected[i];
        if (selection.selected[i] && gt.gt[i]) ++inter;
        if (selection.selected[i] || gt.gt[i]) ++uni;
    }
    gt_index_of(gt);
    if (!any_selected) raise(ErrorCode::validation, "iou: selection vector has no set entry");
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::size_t gt_rank(const std::vector<double>& scores, std::size_t gt_index, TieRule tie_rule) {
    if (gt_index >= scores.size()) raise(ErrorCode::validation, "gt_rank: index out of range");
    const double gt_score = scores[gt_index];
    std::size_t rank = 1;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (i == gt_index) continue;
        if (scores[i] > gt_score) {
            ++rank;
        } else if (scores[i] == gt_score) {
            if (tie_rule == TieRule::pessimistic) ++rank;
            if (tie_rule == TieRule::positional && i < gt_index) ++rank;
        }
    }
    return rank;
}

double hpd(const SentenceAttribution& scores, const GroundTruthVector& gt, TieRule tie_rule) {
    if (scores.scores.size() != gt.gt.size())
        raise(ErrorCode::validation, "hpd: scores and ground truth differ in length");
    const std::size_t index = gt_index_of(gt);
    return 1.0 / static_cast<double>(gt_rank(scores.scores, index, tie_rule));
}

std::optional<double> snr(const SentenceAttribution& scores, const GroundTruthVector& gt) {
    if (scores.scores.size() != gt.gt.size())
        raise(ErrorCode::validation, "snr: scores and ground truth differ in length");
    const std::size_t index = gt_index_of(gt);
    const std::size_t m = scores.scores.size() - 1;
    if (m < 2) return std::nullopt;

    // Zero spread is decided on the values themselves; the summed variance
    // of m identical doubles can round to a nonzero speck.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < scores.scores.size(); ++i) {
        if (i == index) continue;
        lo = std::min(lo, scores.scores[i]);
        hi = std::max(hi, scores.scores[i]);
    }
    if (lo == hi) return std::nullopt;

    double mean = 0.0;
    for (std::size_t i = 0; i < scores.scores.size(); ++i)
        if (i != index) mean += scores.scores[i];
    mean /= static_cast<double>(m);

    double var = 0.0;
    for (std::size_t i = 0; i < scores.scores.size(); ++i) {
        if (i == index) continue;
        const double d = scores.scores[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(m);  // population variance
    if (var == 0.0) return std::nullopt;

    const double signal = scores.scores[index] - mean;
    return (signal * signal) / var;
}

MeanMetrics aggregate_mean(const std::vector<MetricRecord>& records) {
    if (records.empty()) raise(ErrorCode::validation, "aggregate_mean: no records");
    MeanMetrics m;
    m.n_records = records.size();
    double snr_sum = 0.0;
    std::size_t snr_count = 0;
    for (const MetricRecord& r : records) {
        m.iou_mean += r.iou;
        m.hpd_mean += r.hpd;
        if (r.snr) {
            snr_sum += *r.snr;
            ++snr_count;
        } else {
            ++m.n_snr_excluded;
        }
    }
    m.iou_mean /= static_cast<double>(records.size());
    m.hpd_mean /= static_cast<double>(records.size());
    if (snr_count > 0) m.snr_mean = snr_sum / static_cast<double>(snr_count);
    return m;
}

}  // namespace attriq
