#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "attriq/blackbox.hpp"
#include "attriq/dataset.hpp"
#include "attriq/metrics.hpp"
#include "attriq/model.hpp"
#include "attriq/rng.hpp"
#include "attriq/verification.hpp"
#include "attriq/whitebox.hpp"

namespace attriq {

// One interpreter invocation in a run: a registered name, numeric
// parameters, and a seed (mandatory for stochastic interpreters).
struct InterpreterSpec {
    std::string name;
    std::map<std::string, double> params;
    std::optional<std::uint64_t> seed;

    double param(const std::string& key, double fallback) const {
        const auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

struct ModelSpec {
    std::string type;     // "keyword_oracle" | "bag_embedding" | "external"
    std::string path;     // keyword map / embedding-table file
    std::string command;  // external process command (or ATTRIQ_MODEL_CMD)
};

struct RunConfig {
    std::string dataset_path;
    std::string dataset_name = "dataset";
    ModelSpec model;
    std::vector<InterpreterSpec> interpreters;
    std::vector<Aggregation> aggregations = {Aggregation::sum, Aggregation::max};
    TieRule tie_rule = TieRule::pessimistic;
    std::size_t max_tokens = 512;
    double threshold = 0.5;
    bool include_flagged = false;  // keep boundary-crossing/snapped samples
    bool run_verification = true;
    std::size_t workers = 1;
    double max_interpreter_error_rate = 0.1;
    std::string output_dir;  // empty = no persistence
};

RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::json run_config_to_json(const RunConfig& config);

std::shared_ptr<AnswerabilityModel> create_model(const ModelSpec& spec);

// Interpreters plug in by name. Token-level interpreters return per-token
// scores that the harness aggregates to sentences; sentence-level
// interpreters score sentences directly (aggregation "native").
class InterpreterRegistry {
public:
    using TokenFn = std::function<TokenAttribution(const AnswerabilityModel&, const std::string& question,
                                                   const std::string& context, const InterpreterSpec&, Rng&)>;
    using SentenceFn = std::function<std::vector<double>(const AnswerabilityModel&, const std::string& question,
                                                         const std::string& context, std::size_t n_sentences,
                                                         const InterpreterSpec&, Rng&)>;

    static InterpreterRegistry& instance();

    void register_token(const std::string& name, TokenFn fn, bool needs_seed,
                        const std::string& budget_param = "");
    void register_sentence(const std::string& name, SentenceFn fn, bool needs_seed,
                           const std::string& budget_param = "");

    bool contains(const std::string& name) const;
    bool is_sentence_level(const std::string& name) const;
    bool needs_seed(const std::string& name) const;
    std::string budget_param(const std::string& name) const;
    std::vector<std::string> names() const;

    TokenAttribution run_token(const std::string& name, const AnswerabilityModel& model,
                               const std::string& question, const std::string& context,
                               const InterpreterSpec& spec, Rng& rng) const;
    std::vector<double> run_sentence(const std::string& name, const AnswerabilityModel& model,
                                     const std::string& question, const std::string& context,
                                     std::size_t n_sentences, const InterpreterSpec& spec, Rng& rng) const;

private:
    InterpreterRegistry();

    struct Entry {
        TokenFn token;
        SentenceFn sentence;
        bool needs_seed = false;
        std::string budget_param;
    };
    const Entry& entry(const std::string& name) const;

    mutable std::mutex mutex_;
    std::map<std::string, Entry> entries_;
};

// Keeps samples that are answerable and predicted answerable. Everything
// else carries no usable ground truth for its prediction.
std::vector<Sample> select_true_positives(const std::vector<Sample>& samples,
                                          const std::vector<bool>& predictions);

// Every loaded sample lands in exactly one bucket.
struct DispositionCounts {
    std::size_t loaded = 0;
    std::size_t used = 0;
    std::size_t filtered_length = 0;
    std::size_t filtered_flag = 0;
    std::size_t non_tp = 0;
    std::size_t errored = 0;
};

enum class Disposition { used, filtered_length, filtered_flag, non_tp, errored };

// Load, filter, predict and slice a dataset the way run_experiment does,
// without running any interpreter.
struct PreparedData {
    std::vector<Sample> samples;             // as loaded
    std::vector<Disposition> dispositions;   // aligned with samples
    std::vector<Sample> true_positives;
    DispositionCounts counts;
    DatasetStats stats;  // accuracy/recall over evaluated samples; size and
                         // sentence average over the true-positive set
};

PreparedData prepare_run(const RunConfig& config, const AnswerabilityModel& model);

struct CellResult {
    std::string interpreter;
    Aggregation aggregation = Aggregation::native;
    std::optional<double> budget;  // interpreter sample budget, when it has one
    MeanMetrics means;
    std::size_t n_errors = 0;
    double seconds = 0.0;
    bool aborted = false;
    std::string abort_reason;
    std::map<std::string, std::string> params;  // resolved interpreter parameters
    std::vector<MetricRecord> records;          // per-sample, persisted as LDJSON
};

struct ExperimentReport {
    nlohmann::json config;
    DatasetStats stats;
    DispositionCounts dispositions;
    std::vector<CellResult> cells;
    std::optional<VerificationSummary> verification;
    std::vector<std::string> warnings;

    bool any_aborted() const;
};

// Full pipeline: load -> filter -> predict -> select true positives ->
// interpret -> score -> verify. Deterministic given the config; when
// output_dir is set, writes report.json and records.ldjson there.
ExperimentReport run_experiment(const RunConfig& config,
                                std::shared_ptr<const AnswerabilityModel> model = nullptr);

nlohmann::json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& doc);

// format: "json" (canonical), "csv" (one row per cell) or "markdown".
std::string render_report(const ExperimentReport& report, const std::string& format);
void emit_report(const ExperimentReport& report, const std::string& format, const std::string& path);

// One line per (interpreter, aggregation, sample) metric record.
std::string render_metric_records(const ExperimentReport& report);

}  // namespace attriq
