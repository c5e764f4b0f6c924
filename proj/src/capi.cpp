#include "attriq.h"

#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "attriq/dataset.hpp"
#include "attriq/error.hpp"
#include "attriq/fixture.hpp"
#include "attriq/harness.hpp"
#include "attriq/model.hpp"
#include "attriq/verification.hpp"

using nlohmann::json;

struct attriq_dataset {
    std::vector<attriq::Sample> samples;
};

struct attriq_model {
    std::shared_ptr<const attriq::AnswerabilityModel> model;
};

namespace {

thread_local std::string g_last_error;

attriq_status status_of(attriq::ErrorCode code) {
    switch (code) {
        case attriq::ErrorCode::io: return ATTRIQ_ERR_IO;
        case attriq::ErrorCode::parse: return ATTRIQ_ERR_PARSE;
        case attriq::ErrorCode::validation: return ATTRIQ_ERR_VALIDATION;
        case attriq::ErrorCode::config: return ATTRIQ_ERR_CONFIG;
        case attriq::ErrorCode::model: return ATTRIQ_ERR_MODEL;
        case attriq::ErrorCode::interpreter: return ATTRIQ_ERR_INTERPRETER;
        case attriq::ErrorCode::internal: return ATTRIQ_ERR_INTERNAL;
    }
    return ATTRIQ_ERR_INTERNAL;
}

// Runs fn, translating exceptions into status codes + the thread-local
// error message. Every C entry point funnels through here.
template <typename Fn>
attriq_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        fn();
        return ATTRIQ_OK;
    } catch (const attriq::Error& e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return ATTRIQ_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return ATTRIQ_ERR_INTERNAL;
    }
}

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

attriq_status require(bool ok, const char* message) {
    if (ok) return ATTRIQ_OK;
    g_last_error = message;
    return ATTRIQ_ERR_ARGUMENT;
}

json parse_json_arg(const char* text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        attriq::raise(attriq::ErrorCode::parse, std::string(what) + ": " + e.what());
    }
}

json sample_to_json(const attriq::Sample& s) {
    json spans = json::array();
    for (const attriq::SentenceSpan& sp : s.sentences) spans.push_back({sp.start, sp.end});
    json flags = json::array();
    if (s.flags.boundary_crossing) flags.push_back("boundary_crossing");
    if (s.flags.gt_snapped) flags.push_back("gt_snapped");
    json out;
    out["id"] = s.record.id;
    out["question"] = s.record.question;
    out["context"] = s.record.context;
    out["sentence_spans"] = std::move(spans);
    out["gt_sentence"] = s.gt_sentence ? json(*s.gt_sentence) : json(nullptr);
    out["flags"] = std::move(flags);
    return out;
}

attriq::ModelSpec model_spec_from_json(const json& doc) {
    attriq::ModelSpec spec;
    spec.type = doc.at("type").get<std::string>();
    spec.path = doc.value("path", std::string());
    spec.command = doc.value("command", std::string());
    return spec;
}

}  // namespace

extern "C" {

const char* attriq_version(void) { return "0.1.0"; }

const char* attriq_status_name(attriq_status status) {
    switch (status) {
        case ATTRIQ_OK: return "ok";
        case ATTRIQ_ERR_IO: return "io";
        case ATTRIQ_ERR_PARSE: return "parse";
        case ATTRIQ_ERR_VALIDATION: return "validation";
        case ATTRIQ_ERR_CONFIG: return "config";
        case ATTRIQ_ERR_MODEL: return "model";
        case ATTRIQ_ERR_INTERPRETER: return "interpreter";
        case ATTRIQ_ERR_INTERNAL: return "internal";
        case ATTRIQ_ERR_ARGUMENT: return "argument";
    }
    return "unknown";
}

const char* attriq_last_error(void) { return g_last_error.c_str(); }

void attriq_string_free(char* s) { std::free(s); }

attriq_status attriq_dataset_open_squad(const char* path, const char* split_name, attriq_dataset** out) {
    if (attriq_status s = require(path && out, "path and out must not be null")) return s;
    return guarded([&] {
        auto records = attriq::load_squad_json(path, split_name ? split_name : "dataset");
        auto dataset = std::make_unique<attriq_dataset>();
        dataset->samples = attriq::build_samples(records);
        *out = dataset.release();
    });
}

attriq_status attriq_dataset_size(const attriq_dataset* dataset, size_t* out) {
    if (attriq_status s = require(dataset && out, "dataset and out must not be null")) return s;
    *out = dataset->samples.size();
    return ATTRIQ_OK;
}

attriq_status attriq_dataset_sample_json(const attriq_dataset* dataset, size_t index, char** json_out) {
    if (attriq_status s = require(dataset && json_out, "dataset and json_out must not be null")) return s;
    return guarded([&] {
        if (index >= dataset->samples.size())
            attriq::raise(attriq::ErrorCode::validation, "sample index out of range");
        *json_out = copy_string(sample_to_json(dataset->samples[index]).dump());
    });
}

void attriq_dataset_free(attriq_dataset* dataset) { delete dataset; }

attriq_status attriq_model_open(const char* spec_json, attriq_model** out) {
    if (attriq_status s = require(spec_json && out, "spec_json and out must not be null")) return s;
    return guarded([&] {
        const json doc = parse_json_arg(spec_json, "model spec");
        auto handle = std::make_unique<attriq_model>();
        handle->model = attriq::create_model(model_spec_from_json(doc));
        *out = handle.release();
    });
}

attriq_status attriq_model_predict(const attriq_model* model, const char* question, const char* context,
                                   double* proba_out) {
    if (attriq_status s =
            require(model && question && context && proba_out, "model, question, context and proba_out required"))
        return s;
    return guarded([&] { *proba_out = model->model->predict_proba(question, context); });
}

void attriq_model_free(attriq_model* model) { delete model; }

attriq_status attriq_answerability_from_spans(const double* p_start, const double* p_end,
                                              const int* context_mask, size_t n, double* proba_out) {
    if (attriq_status s = require(p_start && p_end && context_mask && proba_out,
                                  "p_start, p_end, context_mask and proba_out required"))
        return s;
    return guarded([&] {
        attriq::SpanDistributions d;
        d.p_start.assign(p_start, p_start + n);
        d.p_end.assign(p_end, p_end + n);
        d.context_mask.resize(n);
        for (size_t i = 0; i < n; ++i) d.context_mask[i] = context_mask[i] != 0;
        *proba_out = attriq::answerability_from_spans(d);
    });
}

attriq_status attriq_interpreter_register(const char* name, attriq_interpreter_fn fn, void* user_data,
                                          int needs_seed) {
    if (attriq_status s = require(name && fn, "name and fn must not be null")) return s;
    return guarded([&] {
        const std::string interpreter_name = name;
        attriq::InterpreterRegistry::instance().register_sentence(
            interpreter_name,
            [fn, user_data, interpreter_name](const attriq::AnswerabilityModel& model, const std::string& q,
                                              const std::string& c, std::size_t n_sentences,
                                              const attriq::InterpreterSpec&, attriq::Rng&) {
                // Non-owning handle; valid only for this call.
                attriq_model handle;
                handle.model = std::shared_ptr<const attriq::AnswerabilityModel>(
                    std::shared_ptr<const attriq::AnswerabilityModel>(), &model);
                std::vector<double> scores(n_sentences, 0.0);
                const int rc = fn(&handle, q.c_str(), c.c_str(), n_sentences, scores.data(), user_data);
                if (rc != 0)
                    attriq::raise(attriq::ErrorCode::interpreter,
                                  "custom interpreter '" + interpreter_name + "' returned " + std::to_string(rc));
                return scores;
            },
            needs_seed != 0);
    });
}

attriq_status attriq_interpreter_names(char** json_out) {
    if (attriq_status s = require(json_out != nullptr, "json_out must not be null")) return s;
    return guarded([&] {
        json names = json::array();
        for (const std::string& n : attriq::InterpreterRegistry::instance().names()) names.push_back(n);
        *json_out = copy_string(names.dump());
    });
}

attriq_status attriq_fixture_generate(const char* spec_json, char** summary_json_out) {
    if (attriq_status s = require(spec_json != nullptr, "spec_json must not be null")) return s;
    return guarded([&] {
        const json doc = parse_json_arg(spec_json, "fixture spec");
        attriq::FixtureSpec spec;
        spec.n_samples = doc.value("n_samples", spec.n_samples);
        spec.min_sentences = doc.value("min_sentences", spec.min_sentences);
        spec.max_sentences = doc.value("max_sentences", spec.max_sentences);
        spec.vocab_size = doc.value("vocab_size", spec.vocab_size);
        spec.fraction_unanswerable = doc.value("fraction_unanswerable", spec.fraction_unanswerable);
        spec.seed = doc.value("seed", spec.seed);
        const std::string dataset_path = doc.at("dataset_path").get<std::string>();
        const std::string sidecar_path = doc.at("sidecar_path").get<std::string>();

        const attriq::Fixture fixture = attriq::generate_fixture(spec);
        attriq::write_fixture(fixture, dataset_path, sidecar_path);

        std::size_t answerable = 0;
        for (const auto& rec : fixture.records)
            if (!rec.is_impossible) ++answerable;
        json summary = {{"n_samples", fixture.records.size()},
                        {"n_answerable", answerable},
                        {"dataset_path", dataset_path},
                        {"sidecar_path", sidecar_path}};
        if (summary_json_out) *summary_json_out = copy_string(summary.dump());
    });
}

attriq_status attriq_run(const char* config_json, char** report_json_out) {
    if (attriq_status s = require(config_json != nullptr, "config_json must not be null")) return s;
    return guarded([&] {
        const attriq::RunConfig config =
            attriq::run_config_from_json(parse_json_arg(config_json, "run config"));
        const attriq::ExperimentReport report = attriq::run_experiment(config);
        if (report_json_out) *report_json_out = copy_string(attriq::report_to_json(report).dump(2));
    });
}

attriq_status attriq_verify(const char* config_json, char** result_json_out) {
    if (attriq_status s = require(config_json != nullptr, "config_json must not be null")) return s;
    return guarded([&] {
        const attriq::RunConfig config =
            attriq::run_config_from_json(parse_json_arg(config_json, "verify config"));
        const auto model = std::shared_ptr<const attriq::AnswerabilityModel>(attriq::create_model(config.model));
        const attriq::PreparedData prepared = attriq::prepare_run(config, *model);
        const attriq::VerificationSummary summary =
            attriq::verify_ground_truth(*model, prepared.true_positives);
        json out = {{"mean_delta_comprehensiveness", summary.mean_delta_comprehensiveness},
                    {"mean_delta_sufficiency", summary.mean_delta_sufficiency},
                    {"mean_p_full", summary.mean_p_full},
                    {"n_evaluated", summary.n_evaluated},
                    {"n_skipped_single_sentence", summary.n_skipped_single_sentence},
                    {"n_errors", summary.n_errors},
                    {"n_true_positives", prepared.true_positives.size()}};
        if (result_json_out) *result_json_out = copy_string(out.dump(2));
    });
}

attriq_status attriq_stats(const char* config_json, char** stats_json_out) {
    if (attriq_status s = require(config_json != nullptr, "config_json must not be null")) return s;
    return guarded([&] {
        const attriq::RunConfig config =
            attriq::run_config_from_json(parse_json_arg(config_json, "stats config"));
        const auto model = std::shared_ptr<const attriq::AnswerabilityModel>(attriq::create_model(config.model));
        const attriq::PreparedData prepared = attriq::prepare_run(config, *model);
        json out;
        out["dataset"] = config.dataset_name;
        out["stats"] = {{"n_samples_used", prepared.stats.n_samples_used},
                        {"avg_sentences", prepared.stats.avg_sentences},
                        {"accuracy", prepared.stats.accuracy},
                        {"recall", prepared.stats.recall ? json(*prepared.stats.recall) : json(nullptr)}};
        out["dispositions"] = {{"loaded", prepared.counts.loaded},
                               {"used", prepared.counts.used},
                               {"filtered_length", prepared.counts.filtered_length},
                               {"filtered_flag", prepared.counts.filtered_flag},
                               {"non_tp", prepared.counts.non_tp},
                               {"errored", prepared.counts.errored}};
        if (stats_json_out) *stats_json_out = copy_string(out.dump(2));
    });
}

attriq_status attriq_report_render(const char* report_json, const char* format, char** rendered_out) {
    if (attriq_status s =
            require(report_json && format && rendered_out, "report_json, format and rendered_out required"))
        return s;
    return guarded([&] {
        const attriq::ExperimentReport report =
            attriq::report_from_json(parse_json_arg(report_json, "report"));
        *rendered_out = copy_string(attriq::render_report(report, format));
    });
}

}  // extern "C"
