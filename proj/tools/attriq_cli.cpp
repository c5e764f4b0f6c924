// Command-line front end. Everything goes through the public C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "attriq.h"

namespace {

using nlohmann::json;

int fail(attriq_status status) {
    std::cerr << "error (" << attriq_status_name(status) << "): " << attriq_last_error() << "\n";
    return 1;
}

std::string take(char* s) {
    std::string out = s ? s : "";
    attriq_string_free(s);
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// "lime:n_perturbations=1000,seed=7" -> {"name":"lime","n_perturbations":1000,"seed":7}
json parse_interpreter_flag(const std::string& flag) {
    json spec;
    const std::size_t colon = flag.find(':');
    spec["name"] = flag.substr(0, colon);
    if (colon == std::string::npos) return spec;
    std::istringstream rest(flag.substr(colon + 1));
    std::string pair;
    while (std::getline(rest, pair, ',')) {
        const std::size_t eq = pair.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("interpreter parameter must be key=value: " + pair);
        const std::string key = pair.substr(0, eq);
        try {
            spec[key] = std::stod(pair.substr(eq + 1));
        } catch (const std::exception&) {
            throw CLI::ValidationError("interpreter parameter must be numeric: " + pair);
        }
    }
    return spec;
}

struct ModelFlags {
    std::string type;
    std::string path;
    std::string command;

    json to_json() const {
        json m = {{"type", type}};
        if (!path.empty()) m["path"] = path;
        if (!command.empty()) m["command"] = command;
        return m;
    }

    void add_options(CLI::App* app, bool required) {
        auto* opt = app->add_option("--model-type", type, "Model type: keyword_oracle, bag_embedding or external");
        if (required) opt->required();
        app->add_option("--model-path", path, "Model resource file (keyword map or embedding table)");
        app->add_option("--model-command", command, "Command for an external model process");
    }
};

bool report_has_aborted_cell(const std::string& report_json) {
    const json doc = json::parse(report_json);
    for (const json& cell : doc.at("cells"))
        if (cell.value("aborted", false)) return true;
    return false;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("attriq ") + attriq_version() +
                 " - sentence-attribution evaluation for answerability classification"};
    app.require_subcommand(1);

    // ---- fixture ----------------------------------------------------
    auto* fixture = app.add_subcommand("fixture", "Generate a synthetic planted-rationale dataset");
    std::string fx_out = "fixture.json";
    std::string fx_sidecar;
    std::size_t fx_n = 100, fx_min = 3, fx_max = 7, fx_vocab = 1000;
    double fx_unanswerable = 0.2;
    std::uint64_t fx_seed = 1;
    fixture->add_option("--out", fx_out, "Output dataset path")->capture_default_str();
    fixture->add_option("--sidecar", fx_sidecar, "Keyword side-car path (default: <out>.keywords.json)");
    fixture->add_option("--n", fx_n, "Number of samples")->capture_default_str();
    fixture->add_option("--min-sentences", fx_min, "Minimum sentences per context")->capture_default_str();
    fixture->add_option("--max-sentences", fx_max, "Maximum sentences per context")->capture_default_str();
    fixture->add_option("--vocab", fx_vocab, "Vocabulary size")->capture_default_str();
    fixture->add_option("--unanswerable", fx_unanswerable, "Fraction of unanswerable samples")
        ->capture_default_str();
    fixture->add_option("--seed", fx_seed, "Generator seed")->capture_default_str();

    // ---- run ---------------------------------------------------------
    auto* run = app.add_subcommand("run", "Run an experiment");
    std::string run_config_path;
    std::string run_dataset, run_dataset_name = "dataset";
    ModelFlags run_model;
    std::vector<std::string> run_interpreters;
    std::vector<std::string> run_aggregations = {"sum", "max"};
    std::string run_tie_rule = "pessimistic";
    std::size_t run_max_tokens = 512, run_workers = 1;
    double run_threshold = 0.5, run_max_error_rate = 0.1;
    bool run_include_flagged = false, run_no_verification = false;
    std::string run_output_dir, run_format = "markdown";
    run->add_option("--config", run_config_path, "Run config JSON file (overrides other flags)");
    run->add_option("--dataset", run_dataset, "Dataset path (SQuAD v2 JSON)");
    run->add_option("--dataset-name", run_dataset_name, "Dataset label for the report");
    run_model.add_options(run, false);
    run->add_option("--interpreter", run_interpreters,
                    "Interpreter spec, e.g. lime:n_perturbations=1000,seed=7 (repeatable)");
    run->add_option("--aggregation", run_aggregations, "Sentence aggregation modes (sum, max)")
        ->capture_default_str();
    run->add_option("--tie-rule", run_tie_rule, "pessimistic, optimistic or positional")
        ->capture_default_str();
    run->add_option("--max-tokens", run_max_tokens, "Length filter threshold")->capture_default_str();
    run->add_option("--threshold", run_threshold, "Classification threshold")->capture_default_str();
    run->add_option("--workers", run_workers, "Parallel workers over samples")->capture_default_str();
    run->add_option("--max-error-rate", run_max_error_rate, "Abort an interpreter above this error rate")
        ->capture_default_str();
    run->add_flag("--include-flagged", run_include_flagged, "Keep boundary-crossing samples");
    run->add_flag("--no-verification", run_no_verification, "Skip the verification pass");
    run->add_option("--output-dir", run_output_dir, "Directory for report.json and records.ldjson");
    run->add_option("--format", run_format, "Stdout rendering: markdown, csv or json")
        ->capture_default_str();

    // ---- verify / stats ----------------------------------------------
    auto* verify = app.add_subcommand("verify", "Ground-truth verification only");
    std::string verify_dataset;
    ModelFlags verify_model;
    std::size_t verify_max_tokens = 512;
    verify->add_option("--dataset", verify_dataset, "Dataset path")->required();
    verify_model.add_options(verify, true);
    verify->add_option("--max-tokens", verify_max_tokens, "Length filter threshold")->capture_default_str();

    auto* stats = app.add_subcommand("stats", "Dataset statistics under a model");
    std::string stats_dataset;
    ModelFlags stats_model;
    std::size_t stats_max_tokens = 512;
    stats->add_option("--dataset", stats_dataset, "Dataset path")->required();
    stats_model.add_options(stats, true);
    stats->add_option("--max-tokens", stats_max_tokens, "Length filter threshold")->capture_default_str();

    // ---- report -------------------------------------------------------
    auto* report = app.add_subcommand("report", "Re-render a persisted report");
    std::string report_in, report_format = "markdown", report_out;
    report->add_option("--in", report_in, "Path to report.json")->required();
    report->add_option("--format", report_format, "markdown, csv or json")->capture_default_str();
    report->add_option("--out", report_out, "Write to file instead of stdout");

    CLI11_PARSE(app, argc, argv);

    if (fixture->parsed()) {
        if (fx_sidecar.empty()) fx_sidecar = fx_out + ".keywords.json";
        json spec = {{"n_samples", fx_n},
                     {"min_sentences", fx_min},
                     {"max_sentences", fx_max},
                     {"vocab_size", fx_vocab},
                     {"fraction_unanswerable", fx_unanswerable},
                     {"seed", fx_seed},
                     {"dataset_path", fx_out},
                     {"sidecar_path", fx_sidecar}};
        char* summary = nullptr;
        if (attriq_status s = attriq_fixture_generate(spec.dump().c_str(), &summary)) return fail(s);
        std::cout << take(summary) << "\n";
        return 0;
    }

    if (run->parsed()) {
        std::string config_text;
        if (!run_config_path.empty()) {
            config_text = read_file(run_config_path);
        } else {
            if (run_dataset.empty() || run_model.type.empty()) {
                std::cerr << "run: either --config or both --dataset and --model-type are required\n";
                return 1;
            }
            json interpreters = json::array();
            for (const std::string& flag : run_interpreters) interpreters.push_back(parse_interpreter_flag(flag));
            json config = {{"dataset", {{"path", run_dataset}, {"name", run_dataset_name}}},
                           {"model", run_model.to_json()},
                           {"interpreters", std::move(interpreters)},
                           {"aggregations", run_aggregations},
                           {"tie_rule", run_tie_rule},
                           {"max_tokens", run_max_tokens},
                           {"threshold", run_threshold},
                           {"include_flagged", run_include_flagged},
                           {"verification", !run_no_verification},
                           {"workers", run_workers},
                           {"max_interpreter_error_rate", run_max_error_rate},
                           {"output_dir", run_output_dir}};
            config_text = config.dump();
        }

        char* report_json = nullptr;
        if (attriq_status s = attriq_run(config_text.c_str(), &report_json)) return fail(s);
        const std::string report_text = take(report_json);

        if (run_format == "json") {
            std::cout << report_text << "\n";
        } else {
            char* rendered = nullptr;
            if (attriq_status s = attriq_report_render(report_text.c_str(), run_format.c_str(), &rendered))
                return fail(s);
            std::cout << take(rendered);
        }
        return report_has_aborted_cell(report_text) ? 2 : 0;
    }

    if (verify->parsed()) {
        json config = {{"dataset", {{"path", verify_dataset}}},
                       {"model", verify_model.to_json()},
                       {"interpreters", json::array()},
                       {"max_tokens", verify_max_tokens}};
        char* result = nullptr;
        if (attriq_status s = attriq_verify(config.dump().c_str(), &result)) return fail(s);
        std::cout << take(result) << "\n";
        return 0;
    }

    if (stats->parsed()) {
        json config = {{"dataset", {{"path", stats_dataset}}},
                       {"model", stats_model.to_json()},
                       {"interpreters", json::array()},
                       {"max_tokens", stats_max_tokens}};
        char* result = nullptr;
        if (attriq_status s = attriq_stats(config.dump().c_str(), &result)) return fail(s);
        std::cout << take(result) << "\n";
        return 0;
    }

    if (report->parsed()) {
        const std::string report_text = read_file(report_in);
        char* rendered = nullptr;
        if (attriq_status s = attriq_report_render(report_text.c_str(), report_format.c_str(), &rendered))
            return fail(s);
        const std::string text = take(rendered);
        if (report_out.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(report_out);
            if (!out) {
                std::cerr << "cannot write " << report_out << "\n";
                return 1;
            }
            out << text;
        }
        return 0;
    }

    return 0;
}
