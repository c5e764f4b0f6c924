// Exercises the shared library through the C header only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "attriq.h"

using nlohmann::json;

namespace {

struct Scratch {
    std::filesystem::path dir;
    Scratch() {
        dir = std::filesystem::temp_directory_path() / ("attriq-capi-" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir);
    }
    ~Scratch() {
        std::error_code ec;
        std::filesystem::remove_all(dir, ec);
    }
    std::string file(const std::string& name) const { return (dir / name).string(); }
};

std::string take(char* s) {
    std::string out = s ? s : "";
    attriq_string_free(s);
    return out;
}

std::string make_fixture(const Scratch& scratch, int n_samples, int seed) {
    const json spec = {{"n_samples", n_samples},
                       {"seed", seed},
                       {"dataset_path", scratch.file("fx.json")},
                       {"sidecar_path", scratch.file("fx.keywords.json")}};
    char* summary = nullptr;
    REQUIRE(attriq_fixture_generate(spec.dump().c_str(), &summary) == ATTRIQ_OK);
    return take(summary);
}

json base_config(const Scratch& scratch) {
    return json{{"dataset", {{"path", scratch.file("fx.json")}, {"name", "fixture"}}},
                {"model", {{"type", "keyword_oracle"}, {"path", scratch.file("fx.keywords.json")}}},
                {"interpreters", json::array()}};
}

// Scores the first sentence of the context 1, everything else 0.
int first_sentence_interpreter(const attriq_model* model, const char* question, const char* context,
                               size_t n_sentences, double* scores_out, void* user_data) {
    (void)user_data;
    double proba = 0.0;
    if (attriq_model_predict(model, question, context, &proba) != ATTRIQ_OK) return 1;
    if (proba < 0.0 || proba > 1.0) return 2;
    for (size_t i = 0; i < n_sentences; ++i) scores_out[i] = i == 0 ? 1.0 : 0.0;
    return 0;
}

int failing_interpreter(const attriq_model*, const char*, const char*, size_t, double*, void*) {
    return 42;
}

}  // namespace

TEST_CASE("version and status names") {
    CHECK(std::strlen(attriq_version()) > 0);
    CHECK(std::string(attriq_status_name(ATTRIQ_OK)) == "ok");
    CHECK(std::string(attriq_status_name(ATTRIQ_ERR_CONFIG)) == "config");
}

TEST_CASE("null arguments are rejected with a message") {
    CHECK(attriq_run(nullptr, nullptr) == ATTRIQ_ERR_ARGUMENT);
    CHECK(std::strlen(attriq_last_error()) > 0);
    CHECK(attriq_dataset_open_squad(nullptr, "x", nullptr) == ATTRIQ_ERR_ARGUMENT);
}

TEST_CASE("fixture, dataset and model handles") {
    Scratch scratch;
    const std::string summary = make_fixture(scratch, 30, 5);
    const json parsed = json::parse(summary);
    CHECK(parsed["n_samples"] == 30);

    attriq_dataset* dataset = nullptr;
    REQUIRE(attriq_dataset_open_squad(scratch.file("fx.json").c_str(), "fixture", &dataset) == ATTRIQ_OK);
    size_t size = 0;
    REQUIRE(attriq_dataset_size(dataset, &size) == ATTRIQ_OK);
    CHECK(size == 30);

    char* sample_json = nullptr;
    REQUIRE(attriq_dataset_sample_json(dataset, 0, &sample_json) == ATTRIQ_OK);
    const json sample = json::parse(take(sample_json));
    CHECK(sample.contains("id"));
    CHECK(sample.contains("question"));
    CHECK(sample.contains("context"));
    CHECK(sample.contains("sentence_spans"));
    CHECK(sample.contains("gt_sentence"));
    CHECK(sample.contains("flags"));

    CHECK(attriq_dataset_sample_json(dataset, 999, &sample_json) == ATTRIQ_ERR_VALIDATION);
    CHECK(std::string(attriq_last_error()).find("out of range") != std::string::npos);

    const json model_spec = {{"type", "keyword_oracle"}, {"path", scratch.file("fx.keywords.json")}};
    attriq_model* model = nullptr;
    REQUIRE(attriq_model_open(model_spec.dump().c_str(), &model) == ATTRIQ_OK);
    const std::string question = sample["question"].get<std::string>();
    const std::string context = sample["context"].get<std::string>();
    double proba = -1.0;
    REQUIRE(attriq_model_predict(model, question.c_str(), context.c_str(), &proba) == ATTRIQ_OK);
    const bool answerable = !sample["gt_sentence"].is_null();
    CHECK(proba == (answerable ? 1.0 : 0.0));

    attriq_model_free(model);
    attriq_dataset_free(dataset);
}

TEST_CASE("run, verify, stats and render through the C surface") {
    Scratch scratch;
    make_fixture(scratch, 40, 9);

    json config = base_config(scratch);
    config["interpreters"] = json::array({json{{"name", "random"}, {"seed", 3}},
                                          json{{"name", "lime"}, {"n_perturbations", 120}, {"seed", 11}}});

    char* report_cstr = nullptr;
    REQUIRE(attriq_run(config.dump().c_str(), &report_cstr) == ATTRIQ_OK);
    const std::string report_text = take(report_cstr);
    const json report = json::parse(report_text);
    CHECK(report["cells"].size() == 3);  // random/native + lime/sum + lime/max
    CHECK(report["stats"]["accuracy"] == 1.0);
    CHECK(report["verification"]["mean_delta_comprehensiveness"] == -1.0);

    char* rendered = nullptr;
    REQUIRE(attriq_report_render(report_text.c_str(), "markdown", &rendered) == ATTRIQ_OK);
    const std::string md = take(rendered);
    CHECK(md.find("## IoU Results") != std::string::npos);

    REQUIRE(attriq_report_render(report_text.c_str(), "csv", &rendered) == ATTRIQ_OK);
    CHECK(take(rendered).find("interpreter,aggregation") == 0);

    CHECK(attriq_report_render(report_text.c_str(), "yaml", &rendered) == ATTRIQ_ERR_CONFIG);

    char* verify_cstr = nullptr;
    REQUIRE(attriq_verify(base_config(scratch).dump().c_str(), &verify_cstr) == ATTRIQ_OK);
    const json verification = json::parse(take(verify_cstr));
    CHECK(verification["mean_delta_comprehensiveness"] == -1.0);
    CHECK(verification["mean_delta_sufficiency"] == 0.0);

    char* stats_cstr = nullptr;
    REQUIRE(attriq_stats(base_config(scratch).dump().c_str(), &stats_cstr) == ATTRIQ_OK);
    const json stats = json::parse(take(stats_cstr));
    CHECK(stats["stats"]["accuracy"] == 1.0);
    CHECK(stats["dispositions"]["loaded"] == 40);
}

TEST_CASE("custom interpreters registered through C run in experiments") {
    Scratch scratch;
    make_fixture(scratch, 24, 13);

    REQUIRE(attriq_interpreter_register("first_sentence", first_sentence_interpreter, nullptr, 0) ==
            ATTRIQ_OK);
    REQUIRE(attriq_interpreter_register("always_fails", failing_interpreter, nullptr, 0) == ATTRIQ_OK);

    char* names_cstr = nullptr;
    REQUIRE(attriq_interpreter_names(&names_cstr) == ATTRIQ_OK);
    const json names = json::parse(take(names_cstr));
    CHECK(std::find(names.begin(), names.end(), json("first_sentence")) != names.end());

    json config = base_config(scratch);
    config["interpreters"] = json::array({json{{"name", "first_sentence"}}, json{{"name", "always_fails"}}});
    char* report_cstr = nullptr;
    REQUIRE(attriq_run(config.dump().c_str(), &report_cstr) == ATTRIQ_OK);
    const json report = json::parse(take(report_cstr));
    REQUIRE(report["cells"].size() == 2);

    const json& first = report["cells"][0];
    CHECK(first["interpreter"] == "first_sentence");
    CHECK(first["aggregation"] == "native");
    CHECK(first["n_samples"].get<int>() > 0);
    CHECK(first["aborted"] == false);

    const json& failing = report["cells"][1];
    CHECK(failing["interpreter"] == "always_fails");
    CHECK(failing["aborted"] == true);
    CHECK(failing["n_errors"].get<int>() > 0);
}

TEST_CASE("answerability from span distributions") {
    // Mass split between a control position and one context token: the
    // only valid pair is (1,1) -> 0.25.
    const double p_start[] = {0.5, 0.5};
    const double p_end[] = {0.5, 0.5};
    const int mask[] = {0, 1};
    double proba = -1.0;
    REQUIRE(attriq_answerability_from_spans(p_start, p_end, mask, 2, &proba) == ATTRIQ_OK);
    CHECK(proba == doctest::Approx(0.25));

    const double bad_start[] = {0.5, 0.4};
    CHECK(attriq_answerability_from_spans(bad_start, p_end, mask, 2, &proba) == ATTRIQ_ERR_VALIDATION);
    CHECK(attriq_answerability_from_spans(nullptr, p_end, mask, 2, &proba) == ATTRIQ_ERR_ARGUMENT);
}

TEST_CASE("config errors surface as status codes") {
    Scratch scratch;
    make_fixture(scratch, 10, 21);

    CHECK(attriq_run("{not json", nullptr) == ATTRIQ_ERR_PARSE);

    json config = base_config(scratch);
    config["interpreters"] = json::array({json{{"name", "lime"}}});  // missing seed
    CHECK(attriq_run(config.dump().c_str(), nullptr) == ATTRIQ_ERR_CONFIG);
    CHECK(std::string(attriq_last_error()).find("seed") != std::string::npos);

    const json bad_model = {{"type", "unknown_model"}};
    attriq_model* model = nullptr;
    CHECK(attriq_model_open(bad_model.dump().c_str(), &model) == ATTRIQ_ERR_CONFIG);
}
