#include "attriq/harness.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "attriq/error.hpp"
#include "attriq/external_model.hpp"
#include "attriq/fixture.hpp"

namespace attriq {
namespace {

using nlohmann::json;

double default_param(const std::string& key) {
    if (key == "n_perturbations") return 100;
    if (key == "n_samples") return 5;
    if (key == "n_steps") return 50;
    if (key == "kernel_width") return 0.25;
    if (key == "lambda") return 0.01;
    if (key == "clamp_weight") return 1e6;
    if (key == "sigma") return 0.1;
    return 0.0;
}

DimAggregation dim_agg_of(const InterpreterSpec& spec) {
    return spec.param("abs_sum", 0.0) != 0.0 ? DimAggregation::abs_sum : DimAggregation::sum;
}

const GradientModel* as_gradient_model(const AnswerabilityModel& model) {
    return dynamic_cast<const GradientModel*>(&model);
}

// Matches the token strings reported by an external model onto context
// spans. Requires tokens that appear verbatim and in order.
std::vector<Token> align_tokens_to_context(const std::string& context,
                                           const std::vector<std::string>& token_texts) {
    std::vector<Token> tokens;
    std::size_t pos = 0;
    for (const std::string& text : token_texts) {
        const std::size_t at = context.find(text, pos);
        if (at == std::string::npos)
            raise(ErrorCode::interpreter, "cannot align external token '" + text + "' to the context");
        tokens.push_back({text, at, at + text.size()});
        pos = at + text.size();
    }
    return tokens;
}

TokenAttribution saliency_dispatch(const AnswerabilityModel& model, const std::string& question,
                                   const std::string& context, const InterpreterSpec& spec) {
    if (const GradientModel* gm = as_gradient_model(model))
        return saliency(*gm, question, context, dim_agg_of(spec));
    if (const auto* ext = dynamic_cast<const ExternalProcessModel*>(&model)) {
        const TokenGradients tg = ext->token_gradients(question, context);
        TokenAttribution out;
        out.tokens = align_tokens_to_context(context, tg.tokens);
        out.scores.assign(tg.gradient.rows(), 0.0);
        const bool abs_sum = dim_agg_of(spec) == DimAggregation::abs_sum;
        for (std::size_t t = 0; t < tg.gradient.rows(); ++t) {
            double s = 0.0;
            for (std::size_t k = 0; k < tg.gradient.cols(); ++k)
                s += abs_sum ? std::abs(tg.gradient.at(t, k)) : tg.gradient.at(t, k);
            out.scores[t] = s;
        }
        out.method_tag = "saliency";
        out.params = {{"source", "external"}};
        return out;
    }
    raise(ErrorCode::interpreter, "saliency requires gradient access, which this model does not expose");
}

void run_parallel(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    const std::size_t n_threads = std::min(workers, n);
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t)
        threads.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
        });
    for (std::thread& t : threads) t.join();
}

MetricRecord make_record(const std::string& sample_id, const SentenceAttribution& scores,
                         std::size_t gt_index, TieRule tie_rule) {
    const GroundTruthVector gt = ground_truth_vector(scores.scores.size(), gt_index);
    MetricRecord record;
    record.sample_id = sample_id;
    record.iou = iou(argmax_selection(scores), gt);
    record.rank_of_gt = gt_rank(scores.scores, gt_index, tie_rule);
    record.hpd = 1.0 / static_cast<double>(record.rank_of_gt);
    record.snr = snr(scores, gt);
    return record;
}

void finalize_cell(CellResult& cell, std::size_t n_inputs, double max_error_rate) {
    if (!cell.records.empty()) cell.means = aggregate_mean(cell.records);
    if (n_inputs > 0) {
        const double rate = static_cast<double>(cell.n_errors) / static_cast<double>(n_inputs);
        if (rate > max_error_rate) {
            cell.aborted = true;
            cell.abort_reason = "interpreter error rate " + std::to_string(rate) +
                                " exceeds threshold " + std::to_string(max_error_rate);
        }
    }
}

}  // namespace

RunConfig run_config_from_json(const json& doc) {
    RunConfig config;
    try {
        const json& dataset = doc.at("dataset");
        config.dataset_path = dataset.at("path").get<std::string>();
        config.dataset_name = dataset.value("name", std::string("dataset"));

        const json& model = doc.at("model");
        config.model.type = model.at("type").get<std::string>();
        config.model.path = model.value("path", std::string());
        config.model.command = model.value("command", std::string());

        for (const json& item : doc.at("interpreters")) {
            InterpreterSpec spec;
            spec.name = item.at("name").get<std::string>();
            for (const auto& [key, value] : item.items()) {
                if (key == "name") continue;
                if (key == "seed") {
                    spec.seed = value.get<std::uint64_t>();
                    continue;
                }
                if (!value.is_number())
                    raise(ErrorCode::config, "interpreter '" + spec.name + "': parameter '" + key +
                                                 "' must be numeric");
                spec.params[key] = value.get<double>();
            }
            config.interpreters.push_back(std::move(spec));
        }

        if (doc.contains("aggregations")) {
            config.aggregations.clear();
            for (const json& a : doc["aggregations"])
                config.aggregations.push_back(aggregation_from_name(a.get<std::string>()));
        }
        if (doc.contains("tie_rule")) config.tie_rule = tie_rule_from_name(doc["tie_rule"].get<std::string>());
        config.max_tokens = doc.value("max_tokens", std::size_t{512});
        config.threshold = doc.value("threshold", 0.5);
        config.include_flagged = doc.value("include_flagged", false);
        config.run_verification = doc.value("verification", true);
        config.workers = doc.value("workers", std::size_t{1});
        config.max_interpreter_error_rate = doc.value("max_interpreter_error_rate", 0.1);
        config.output_dir = doc.value("output_dir", std::string());
    } catch (const json::exception& e) {
        raise(ErrorCode::config, std::string("invalid run config: ") + e.what());
    }
    if (config.dataset_path.empty()) raise(ErrorCode::config, "run config: dataset.path is required");
    if (config.max_tokens == 0) raise(ErrorCode::config, "run config: max_tokens must be positive");
    if (!(config.threshold > 0.0 && config.threshold < 1.0))
        raise(ErrorCode::config, "run config: threshold must lie in (0,1)");
    if (config.aggregations.empty()) raise(ErrorCode::config, "run config: aggregations must not be empty");
    if (config.workers == 0) config.workers = 1;
    return config;
}

json run_config_to_json(const RunConfig& config) {
    json interpreters = json::array();
    for (const InterpreterSpec& spec : config.interpreters) {
        json item;
        item["name"] = spec.name;
        if (spec.seed) item["seed"] = *spec.seed;
        for (const auto& [key, value] : spec.params) item[key] = value;
        interpreters.push_back(std::move(item));
    }
    json aggregations = json::array();
    for (Aggregation a : config.aggregations) aggregations.push_back(aggregation_name(a));
    json model = {{"type", config.model.type}};
    if (!config.model.path.empty()) model["path"] = config.model.path;
    if (!config.model.command.empty()) model["command"] = config.model.command;
    return json{{"dataset", {{"path", config.dataset_path}, {"name", config.dataset_name}}},
                {"model", std::move(model)},
                {"interpreters", std::move(interpreters)},
                {"aggregations", std::move(aggregations)},
                {"tie_rule", tie_rule_name(config.tie_rule)},
                {"max_tokens", config.max_tokens},
                {"threshold", config.threshold},
                {"include_flagged", config.include_flagged},
                {"verification", config.run_verification},
                {"workers", config.workers},
                {"max_interpreter_error_rate", config.max_interpreter_error_rate},
                {"output_dir", config.output_dir}};
}

std::shared_ptr<AnswerabilityModel> create_model(const ModelSpec& spec) {
    if (spec.type == "keyword_oracle") {
        if (spec.path.empty()) raise(ErrorCode::config, "keyword_oracle model requires 'path'");
        return std::make_shared<KeywordOracleModel>(read_keyword_map(spec.path));
    }
    if (spec.type == "bag_embedding") {
        if (spec.path.empty()) raise(ErrorCode::config, "bag_embedding model requires 'path'");
        std::ifstream in(spec.path);
        if (!in) raise(ErrorCode::io, "cannot open bag_embedding spec: " + spec.path);
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            raise(ErrorCode::parse, "malformed bag_embedding spec " + spec.path + ": " + e.what());
        }
        BagEmbeddingModel::Vocab vocab;
        for (const auto& [token, vec] : doc.at("vocab").items())
            vocab[token] = vec.get<std::vector<double>>();
        return std::make_shared<BagEmbeddingModel>(std::move(vocab),
                                                   doc.at("weights").get<std::vector<double>>(),
                                                   doc.at("bias").get<double>());
    }
    if (spec.type == "external") {
        std::string command = spec.command;
        if (command.empty()) {
            if (const char* env = std::getenv("ATTRIQ_MODEL_CMD")) command = env;
        }
        if (command.empty())
            raise(ErrorCode::config, "external model requires 'command' or the ATTRIQ_MODEL_CMD variable");
        return std::make_shared<ExternalProcessModel>(command);
    }
    raise(ErrorCode::config, "unknown model type: " + spec.type);
}

InterpreterRegistry& InterpreterRegistry::instance() {
    static InterpreterRegistry registry;
    return registry;
}

InterpreterRegistry::InterpreterRegistry() {
    register_token(
        "saliency",
        [](const AnswerabilityModel& model, const std::string& q, const std::string& c,
           const InterpreterSpec& spec, Rng&) { return saliency_dispatch(model, q, c, spec); },
        false);

    register_token(
        "smoothgrad",
        [](const AnswerabilityModel& model, const std::string& q, const std::string& c,
           const InterpreterSpec& spec, Rng& rng) {
            const GradientModel* gm = as_gradient_model(model);
            if (!gm) raise(ErrorCode::interpreter, "smoothgrad requires embedding gradients");
            const auto n = static_cast<std::size_t>(spec.param("n_samples", default_param("n_samples")));
            double sigma = spec.param("sigma", default_param("sigma"));
            if (spec.params.count("sigma_fraction"))
                sigma = sigma_from_embedding_range(gm->embed(gm->tokenize(c)),
                                                   spec.param("sigma_fraction", 0.0));
            return smoothgrad(*gm, q, c, n, sigma, rng, dim_agg_of(spec));
        },
        true, "n_samples");

    register_token(
        "integrated_gradients",
        [](const AnswerabilityModel& model, const std::string& q, const std::string& c,
           const InterpreterSpec& spec, Rng&) {
            const GradientModel* gm = as_gradient_model(model);
            if (!gm) raise(ErrorCode::interpreter, "integrated_gradients requires embedding gradients");
            const auto steps = static_cast<std::size_t>(spec.param("n_steps", default_param("n_steps")));
            return integrated_gradients(*gm, q, c, steps, nullptr, dim_agg_of(spec));
        },
        false, "n_steps");

    register_token(
        "lime",
        [](const AnswerabilityModel& model, const std::string& q, const std::string& c,
           const InterpreterSpec& spec, Rng& rng) {
            LimeOptions options;
            options.n_perturbations =
                static_cast<std::size_t>(spec.param("n_perturbations", default_param("n_perturbations")));
            options.kernel_width = spec.param("kernel_width", default_param("kernel_width"));
            options.lambda = spec.param("lambda", default_param("lambda"));
            return lime_explain(model, q, c, options, rng);
        },
        true, "n_perturbations");

    register_token(
        "kernel_shap",
        [](const AnswerabilityModel& model, const std::string& q, const std::string& c,
           const InterpreterSpec& spec, Rng& rng) {
            KernelShapOptions options;
            options.n_perturbations =
                static_cast<std::size_t>(spec.param("n_perturbations", default_param("n_perturbations")));
            options.lambda = spec.param("lambda", default_param("lambda"));
            options.clamp_weight = spec.param("clamp_weight", default_param("clamp_weight"));
            return kernel_shap_explain(model, q, c, options, rng);
        },
        true, "n_perturbations");

    register_sentence(
        "random",
        [](const AnswerabilityModel&, const std::string&, const std::string&, std::size_t n_sentences,
           const InterpreterSpec&, Rng& rng) { return random_baseline(n_sentences, rng); },
        true);

    // Sentence-granularity surrogate variants: whole sentences are dropped
    // instead of tokens and coefficients score sentences directly.
    register_sentence(
        "lime_sentence",
        [](const AnswerabilityModel& model, const std::string& q, const std::string& c,
           std::size_t n_sentences, const InterpreterSpec& spec, Rng& rng) {
            const std::vector<SentenceSpan> spans = segment_sentences(c);
            if (spans.size() != n_sentences)
                raise(ErrorCode::interpreter, "sentence segmentation does not match the sample");
            LimeOptions options;
            options.n_perturbations =
                static_cast<std::size_t>(spec.param("n_perturbations", default_param("n_perturbations")));
            options.kernel_width = spec.param("kernel_width", default_param("kernel_width"));
            options.lambda = spec.param("lambda", default_param("lambda"));
            return lime_explain_sentences(model, q, c, spans, options, rng);
        },
        true, "n_perturbations");

    register_sentence(
        "kernel_shap_sentence",
        [](const AnswerabilityModel& model, const std::string& q, const std::string& c,
           std::size_t n_sentences, const InterpreterSpec& spec, Rng& rng) {
            const std::vector<SentenceSpan> spans = segment_sentences(c);
            if (spans.size() != n_sentences)
                raise(ErrorCode::interpreter, "sentence segmentation does not match the sample");
            KernelShapOptions options;
            options.n_perturbations =
                static_cast<std::size_t>(spec.param("n_perturbations", default_param("n_perturbations")));
            options.lambda = spec.param("lambda", default_param("lambda"));
            options.clamp_weight = spec.param("clamp_weight", default_param("clamp_weight"));
            return kernel_shap_explain_sentences(model, q, c, spans, options, rng);
        },
        true, "n_perturbations");
}

void InterpreterRegistry::register_token(const std::string& name, TokenFn fn, bool needs_seed,
                                         const std::string& budget_param) {
    std::lock_guard<std::mutex> lock(mutex_);
    Entry entry;
    entry.token = std::move(fn);
    entry.needs_seed = needs_seed;
    entry.budget_param = budget_param;
    entries_[name] = std::move(entry);
}

void InterpreterRegistry::register_sentence(const std::string& name, SentenceFn fn, bool needs_seed,
                                            const std::string& budget_param) {
    std::lock_guard<std::mutex> lock(mutex_);
    Entry entry;
    entry.sentence = std::move(fn);
    entry.needs_seed = needs_seed;
    entry.budget_param = budget_param;
    entries_[name] = std::move(entry);
}

const InterpreterRegistry::Entry& InterpreterRegistry::entry(const std::string& name) const {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = entries_.find(name);
    if (it == entries_.end()) raise(ErrorCode::config, "interpreter not registered: " + name);
    return it->second;
}

bool InterpreterRegistry::contains(const std::string& name) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.count(name) > 0;
}

bool InterpreterRegistry::is_sentence_level(const std::string& name) const {
    return static_cast<bool>(entry(name).sentence);
}

bool InterpreterRegistry::needs_seed(const std::string& name) const { return entry(name).needs_seed; }

std::string InterpreterRegistry::budget_param(const std::string& name) const {
    return entry(name).budget_param;
}

std::vector<std::string> InterpreterRegistry::names() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [name, _] : entries_) out.push_back(name);
    return out;
}

TokenAttribution InterpreterRegistry::run_token(const std::string& name, const AnswerabilityModel& model,
                                                const std::string& question, const std::string& context,
                                                const InterpreterSpec& spec, Rng& rng) const {
    const Entry& e = entry(name);
    if (!e.token) raise(ErrorCode::config, "interpreter '" + name + "' is sentence-level");
    return e.token(model, question, context, spec, rng);
}

std::vector<double> InterpreterRegistry::run_sentence(const std::string& name,
                                                      const AnswerabilityModel& model,
                                                      const std::string& question, const std::string& context,
                                                      std::size_t n_sentences, const InterpreterSpec& spec,
                                                      Rng& rng) const {
    const Entry& e = entry(name);
    if (!e.sentence) raise(ErrorCode::config, "interpreter '" + name + "' is token-level");
    return e.sentence(model, question, context, n_sentences, spec, rng);
}

std::vector<Sample> select_true_positives(const std::vector<Sample>& samples,
                                          const std::vector<bool>& predictions) {
    if (samples.size() != predictions.size())
        raise(ErrorCode::validation, "select_true_positives: samples and predictions differ in length");
    std::vector<Sample> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (samples[i].gt_sentence && predictions[i]) out.push_back(samples[i]);
    return out;
}

PreparedData prepare_run(const RunConfig& config, const AnswerabilityModel& model) {
    PreparedData prepared;
    const std::vector<RawQaRecord> records = load_squad_json(config.dataset_path, config.dataset_name);
    prepared.samples = build_samples(records);
    prepared.dispositions.assign(prepared.samples.size(), Disposition::non_tp);
    prepared.counts.loaded = prepared.samples.size();

    std::vector<std::size_t> evaluated_index;
    std::vector<Sample> evaluated;
    for (std::size_t i = 0; i < prepared.samples.size(); ++i) {
        const Sample& s = prepared.samples[i];
        if (model.token_length(s.record.question, s.record.context) > config.max_tokens) {
            prepared.dispositions[i] = Disposition::filtered_length;
            ++prepared.counts.filtered_length;
            continue;
        }
        if (s.flags.any() && !config.include_flagged) {
            prepared.dispositions[i] = Disposition::filtered_flag;
            ++prepared.counts.filtered_flag;
            continue;
        }
        evaluated_index.push_back(i);
        evaluated.push_back(s);
    }

    const std::vector<BatchPrediction> predictions = predict_batch(model, evaluated, config.threshold);
    // Sporadic failures are isolated per sample, but a model that fails on
    // every sample is an unreachable endpoint: abort with its diagnostics.
    if (!predictions.empty()) {
        bool any_usable = false;
        for (const BatchPrediction& p : predictions) any_usable = any_usable || p.usable;
        if (!any_usable)
            raise(ErrorCode::model,
                  "model failed on every sample; first error: " + predictions.front().error);
    }
    std::vector<Sample> usable;
    std::vector<bool> usable_predictions;
    for (std::size_t j = 0; j < evaluated.size(); ++j) {
        const std::size_t i = evaluated_index[j];
        if (!predictions[j].usable) {
            prepared.dispositions[i] = Disposition::errored;
            ++prepared.counts.errored;
            continue;
        }
        usable.push_back(evaluated[j]);
        usable_predictions.push_back(predictions[j].positive);
        if (evaluated[j].gt_sentence && predictions[j].positive) {
            prepared.dispositions[i] = Disposition::used;
            ++prepared.counts.used;
            prepared.true_positives.push_back(evaluated[j]);
        } else {
            prepared.dispositions[i] = Disposition::non_tp;
            ++prepared.counts.non_tp;
        }
    }

    // Accuracy/recall are over every usable prediction; the size and
    // sentence average describe the set interpreters actually see.
    if (!usable.empty()) {
        const DatasetStats over_evaluated = compute_stats(usable, usable_predictions);
        prepared.stats.accuracy = over_evaluated.accuracy;
        prepared.stats.recall = over_evaluated.recall;
    }
    prepared.stats.n_samples_used = prepared.true_positives.size();
    double sentence_sum = 0.0;
    for (const Sample& s : prepared.true_positives) sentence_sum += static_cast<double>(s.n_sentences());
    prepared.stats.avg_sentences =
        prepared.true_positives.empty()
            ? 0.0
            : sentence_sum / static_cast<double>(prepared.true_positives.size());
    return prepared;
}

bool ExperimentReport::any_aborted() const {
    for (const CellResult& cell : cells)
        if (cell.aborted) return true;
    return false;
}

ExperimentReport run_experiment(const RunConfig& config, std::shared_ptr<const AnswerabilityModel> model) {
    InterpreterRegistry& registry = InterpreterRegistry::instance();
    for (const InterpreterSpec& spec : config.interpreters) {
        if (!registry.contains(spec.name))
            raise(ErrorCode::config, "interpreter not registered: " + spec.name);
        if (registry.needs_seed(spec.name) && !spec.seed)
            raise(ErrorCode::config, "stochastic interpreter '" + spec.name + "' requires a seed");
    }

    std::shared_ptr<const AnswerabilityModel> owned = std::move(model);
    if (!owned) owned = create_model(config.model);

    ExperimentReport report;
    report.config = run_config_to_json(config);

    const PreparedData prepared = prepare_run(config, *owned);
    report.stats = prepared.stats;
    report.dispositions = prepared.counts;

    const std::vector<Sample>& tps = prepared.true_positives;
    if (tps.empty())
        report.warnings.push_back("true-positive set is empty; all metric cells carry zero samples");

    const std::size_t workers = owned->thread_safe() ? config.workers : 1;

    for (const InterpreterSpec& spec : config.interpreters) {
        const auto started = std::chrono::steady_clock::now();
        std::optional<double> budget;
        if (const std::string bp = registry.budget_param(spec.name); !bp.empty())
            budget = spec.param(bp, default_param(bp));

        std::map<std::string, std::string> resolved_params;
        for (const auto& [key, value] : spec.params) {
            std::ostringstream v;
            v << value;
            resolved_params[key] = v.str();
        }

        std::vector<CellResult> cells;
        if (registry.is_sentence_level(spec.name)) {
            CellResult cell;
            cell.interpreter = spec.name;
            cell.aggregation = Aggregation::native;
            cell.budget = budget;
            cell.params = resolved_params;
            // A slot left empty means the interpreter failed on that sample.
            std::vector<std::optional<MetricRecord>> slots(tps.size());
            run_parallel(tps.size(), workers, [&](std::size_t i) {
                const Sample& s = tps[i];
                try {
                    Rng rng(derive_seed(spec.seed.value_or(0), spec.name + "|" + s.record.id));
                    std::vector<double> scores = registry.run_sentence(
                        spec.name, *owned, s.record.question, s.record.context, s.n_sentences(), spec, rng);
                    if (scores.size() != s.n_sentences())
                        raise(ErrorCode::interpreter,
                              "interpreter returned " + std::to_string(scores.size()) + " scores for " +
                                  std::to_string(s.n_sentences()) + " sentences");
                    SentenceAttribution sa;
                    sa.scores = std::move(scores);
                    sa.aggregation = Aggregation::native;
                    sa.source = spec.name;
                    slots[i] = make_record(s.record.id, sa, *s.gt_sentence, config.tie_rule);
                } catch (const std::exception&) {
                }
            });
            for (const std::optional<MetricRecord>& slot : slots) {
                if (slot)
                    cell.records.push_back(*slot);
                else
                    ++cell.n_errors;
            }
            finalize_cell(cell, tps.size(), config.max_interpreter_error_rate);
            cells.push_back(std::move(cell));
        } else {
            // One attribution per sample, shared by every aggregation mode.
            std::vector<std::optional<TokenAttribution>> attributions(tps.size());
            std::atomic<std::size_t> attribution_errors{0};
            run_parallel(tps.size(), workers, [&](std::size_t i) {
                const Sample& s = tps[i];
                try {
                    Rng rng(derive_seed(spec.seed.value_or(0), spec.name + "|" + s.record.id));
                    attributions[i] =
                        registry.run_token(spec.name, *owned, s.record.question, s.record.context, spec, rng);
                } catch (const std::exception&) {
                    attribution_errors.fetch_add(1);
                }
            });
            // Interpreters resolve their own defaults; surface the params of
            // an actual attribution so reports carry the effective values.
            for (const auto& attribution : attributions) {
                if (!attribution) continue;
                for (const auto& [key, value] : attribution->params) resolved_params.emplace(key, value);
                break;
            }
            for (Aggregation agg : config.aggregations) {
                CellResult cell;
                cell.interpreter = spec.name;
                cell.aggregation = agg;
                cell.budget = budget;
                cell.params = resolved_params;
                cell.n_errors = attribution_errors.load();
                for (std::size_t i = 0; i < tps.size(); ++i) {
                    if (!attributions[i]) continue;
                    const Sample& s = tps[i];
                    try {
                        const SentenceAttribution sa = aggregate_to_sentences(*attributions[i], s.sentences, agg);
                        cell.records.push_back(make_record(s.record.id, sa, *s.gt_sentence, config.tie_rule));
                    } catch (const std::exception&) {
                        ++cell.n_errors;
                    }
                }
                finalize_cell(cell, tps.size(), config.max_interpreter_error_rate);
                cells.push_back(std::move(cell));
            }
        }

        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        for (CellResult& cell : cells) {
            cell.seconds = seconds;
            report.cells.push_back(std::move(cell));
        }
    }

    if (config.run_verification && !tps.empty())
        report.verification = verify_ground_truth(*owned, tps);

    if (!config.output_dir.empty()) {
        std::filesystem::create_directories(config.output_dir);
        const std::filesystem::path dir(config.output_dir);
        emit_report(report, "json", (dir / "report.json").string());
        std::ofstream records_out(dir / "records.ldjson");
        if (!records_out) raise(ErrorCode::io, "cannot write records file in " + config.output_dir);
        records_out << render_metric_records(report);
        write_sample_cache((dir / "samples.ldjson").string(), prepared.samples);
    }
    return report;
}

}  // namespace attriq
