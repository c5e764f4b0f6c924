#include <cstdio>
#include <fstream>
#include <sstream>

#include "attriq/error.hpp"
#include "attriq/harness.hpp"

namespace attriq {
namespace {

using nlohmann::json;

json stats_to_json(const DatasetStats& stats) {
    json out = {{"n_samples_used", stats.n_samples_used},
                {"avg_sentences", stats.avg_sentences},
                {"accuracy", stats.accuracy}};
    out["recall"] = stats.recall ? json(*stats.recall) : json(nullptr);
    return out;
}

DatasetStats stats_from_json(const json& doc) {
    DatasetStats stats;
    stats.n_samples_used = doc.at("n_samples_used").get<std::size_t>();
    stats.avg_sentences = doc.at("avg_sentences").get<double>();
    stats.accuracy = doc.at("accuracy").get<double>();
    if (!doc.at("recall").is_null()) stats.recall = doc["recall"].get<double>();
    return stats;
}

json dispositions_to_json(const DispositionCounts& d) {
    return json{{"loaded", d.loaded},       {"used", d.used},     {"filtered_length", d.filtered_length},
                {"filtered_flag", d.filtered_flag}, {"non_tp", d.non_tp}, {"errored", d.errored}};
}

DispositionCounts dispositions_from_json(const json& doc) {
    DispositionCounts d;
    d.loaded = doc.at("loaded").get<std::size_t>();
    d.used = doc.at("used").get<std::size_t>();
    d.filtered_length = doc.at("filtered_length").get<std::size_t>();
    d.filtered_flag = doc.at("filtered_flag").get<std::size_t>();
    d.non_tp = doc.at("non_tp").get<std::size_t>();
    d.errored = doc.at("errored").get<std::size_t>();
    return d;
}

json cell_to_json(const CellResult& cell) {
    json out;
    out["interpreter"] = cell.interpreter;
    out["aggregation"] = aggregation_name(cell.aggregation);
    out["n_perturbations"] = cell.budget ? json(*cell.budget) : json(nullptr);
    const bool has_data = cell.means.n_records > 0;
    out["iou_mean"] = has_data ? json(cell.means.iou_mean) : json(nullptr);
    out["hpd_mean"] = has_data ? json(cell.means.hpd_mean) : json(nullptr);
    out["snr_mean"] = cell.means.snr_mean ? json(*cell.means.snr_mean) : json(nullptr);
    out["n_samples"] = cell.means.n_records;
    out["n_snr_excluded"] = cell.means.n_snr_excluded;
    out["n_errors"] = cell.n_errors;
    out["seconds"] = cell.seconds;
    out["aborted"] = cell.aborted;
    out["abort_reason"] = cell.abort_reason;
    out["params"] = cell.params;
    return out;
}

CellResult cell_from_json(const json& doc) {
    CellResult cell;
    cell.interpreter = doc.at("interpreter").get<std::string>();
    cell.aggregation = aggregation_from_name(doc.at("aggregation").get<std::string>());
    if (!doc.at("n_perturbations").is_null()) cell.budget = doc["n_perturbations"].get<double>();
    cell.means.n_records = doc.at("n_samples").get<std::size_t>();
    if (!doc.at("iou_mean").is_null()) cell.means.iou_mean = doc["iou_mean"].get<double>();
    if (!doc.at("hpd_mean").is_null()) cell.means.hpd_mean = doc["hpd_mean"].get<double>();
    if (!doc.at("snr_mean").is_null()) cell.means.snr_mean = doc["snr_mean"].get<double>();
    cell.means.n_snr_excluded = doc.at("n_snr_excluded").get<std::size_t>();
    cell.n_errors = doc.at("n_errors").get<std::size_t>();
    cell.seconds = doc.at("seconds").get<double>();
    cell.aborted = doc.at("aborted").get<bool>();
    cell.abort_reason = doc.at("abort_reason").get<std::string>();
    if (doc.contains("params"))
        cell.params = doc["params"].get<std::map<std::string, std::string>>();
    return cell;
}

json verification_to_json(const VerificationSummary& v) {
    return json{{"mean_delta_comprehensiveness", v.mean_delta_comprehensiveness},
                {"mean_delta_sufficiency", v.mean_delta_sufficiency},
                {"mean_p_full", v.mean_p_full},
                {"n_evaluated", v.n_evaluated},
                {"n_skipped_single_sentence", v.n_skipped_single_sentence},
                {"n_errors", v.n_errors}};
}

VerificationSummary verification_from_json(const json& doc) {
    VerificationSummary v;
    v.mean_delta_comprehensiveness = doc.at("mean_delta_comprehensiveness").get<double>();
    v.mean_delta_sufficiency = doc.at("mean_delta_sufficiency").get<double>();
    v.mean_p_full = doc.at("mean_p_full").get<double>();
    v.n_evaluated = doc.at("n_evaluated").get<std::size_t>();
    v.n_skipped_single_sentence = doc.at("n_skipped_single_sentence").get<std::size_t>();
    v.n_errors = doc.at("n_errors").get<std::size_t>();
    return v;
}

std::string csv_number(const json& value) { return value.is_null() ? std::string() : value.dump(); }

std::string fixed(double value, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
    return buf;
}

std::string budget_label(const CellResult& cell) {
    if (!cell.budget) return "-";
    const double b = *cell.budget;
    if (b == static_cast<double>(static_cast<long long>(b)))
        return std::to_string(static_cast<long long>(b));
    return fixed(b, 2);
}

std::string render_markdown(const ExperimentReport& report) {
    std::ostringstream md;
    md << "# Experiment Report\n\n";
    if (report.config.contains("dataset"))
        md << "Dataset: `" << report.config["dataset"].value("name", std::string("?")) << "` ("
           << report.config["dataset"].value("path", std::string("?")) << ")  \n";
    if (report.config.contains("model"))
        md << "Model: `" << report.config["model"].value("type", std::string("?")) << "`\n";

    md << "\n## Dataset Statistics\n\n";
    md << "| Samples Used | Avg Sentences | Accuracy | Recall |\n";
    md << "|---:|---:|---:|---:|\n";
    md << "| " << report.stats.n_samples_used << " | " << fixed(report.stats.avg_sentences, 2) << " | "
       << fixed(report.stats.accuracy) << " | "
       << (report.stats.recall ? fixed(*report.stats.recall) : std::string("-")) << " |\n";

    const DispositionCounts& d = report.dispositions;
    md << "\nDispositions: loaded=" << d.loaded << ", used=" << d.used
       << ", filtered_length=" << d.filtered_length << ", filtered_flag=" << d.filtered_flag
       << ", non_tp=" << d.non_tp << ", errored=" << d.errored << "\n";

    const auto table = [&](const char* title, auto value_of, bool with_excluded) {
        md << "\n## " << title << "\n\n";
        md << "| Interpreter | Aggregation | Samples | Mean | N |" << (with_excluded ? " Excluded |" : "")
           << "\n";
        md << "|---|---|---:|---:|---:|" << (with_excluded ? "---:|" : "") << "\n";
        for (const CellResult& cell : report.cells) {
            md << "| " << cell.interpreter << " | " << aggregation_name(cell.aggregation) << " | "
               << budget_label(cell) << " | ";
            if (cell.aborted)
                md << "aborted";
            else
                md << value_of(cell);
            md << " | " << cell.means.n_records << " |";
            if (with_excluded) md << " " << cell.means.n_snr_excluded << " |";
            md << "\n";
        }
    };
    table(
        "IoU Results",
        [](const CellResult& c) { return c.means.n_records > 0 ? fixed(c.means.iou_mean) : std::string("-"); },
        false);
    table(
        "HPD Results",
        [](const CellResult& c) { return c.means.n_records > 0 ? fixed(c.means.hpd_mean) : std::string("-"); },
        false);
    table(
        "SNR Results",
        [](const CellResult& c) { return c.means.snr_mean ? fixed(*c.means.snr_mean) : std::string("-"); },
        true);

    if (report.verification) {
        const VerificationSummary& v = *report.verification;
        md << "\n## Ground-Truth Verification\n\n";
        md << "| Mean p(full) | Comprehensiveness | Sufficiency | Evaluated | Skipped | Errors |\n";
        md << "|---:|---:|---:|---:|---:|---:|\n";
        md << "| " << fixed(v.mean_p_full) << " | " << fixed(v.mean_delta_comprehensiveness) << " | "
           << fixed(v.mean_delta_sufficiency) << " | " << v.n_evaluated << " | "
           << v.n_skipped_single_sentence << " | " << v.n_errors << " |\n";
    }

    if (!report.warnings.empty()) {
        md << "\n## Warnings\n\n";
        for (const std::string& w : report.warnings) md << "- " << w << "\n";
    }
    return md.str();
}

std::string render_csv(const ExperimentReport& report) {
    std::ostringstream csv;
    csv << "interpreter,aggregation,n_perturbations,iou_mean,hpd_mean,snr_mean,"
           "n_samples,n_snr_excluded,seconds\n";
    for (const CellResult& cell : report.cells) {
        const json j = cell_to_json(cell);
        csv << cell.interpreter << ',' << aggregation_name(cell.aggregation) << ','
            << csv_number(j["n_perturbations"]) << ',' << csv_number(j["iou_mean"]) << ','
            << csv_number(j["hpd_mean"]) << ',' << csv_number(j["snr_mean"]) << ','
            << cell.means.n_records << ',' << cell.means.n_snr_excluded << ',' << csv_number(j["seconds"])
            << "\n";
    }
    return csv.str();
}

}  // namespace

json report_to_json(const ExperimentReport& report) {
    json cells = json::array();
    for (const CellResult& cell : report.cells) cells.push_back(cell_to_json(cell));
    json out;
    out["config"] = report.config;
    out["stats"] = stats_to_json(report.stats);
    out["dispositions"] = dispositions_to_json(report.dispositions);
    out["cells"] = std::move(cells);
    out["verification"] = report.verification ? verification_to_json(*report.verification) : json(nullptr);
    out["warnings"] = report.warnings;
    return out;
}

ExperimentReport report_from_json(const json& doc) {
    ExperimentReport report;
    try {
        report.config = doc.at("config");
        report.stats = stats_from_json(doc.at("stats"));
        report.dispositions = dispositions_from_json(doc.at("dispositions"));
        for (const json& cell : doc.at("cells")) report.cells.push_back(cell_from_json(cell));
        if (!doc.at("verification").is_null())
            report.verification = verification_from_json(doc["verification"]);
        for (const json& w : doc.at("warnings")) report.warnings.push_back(w.get<std::string>());
    } catch (const json::exception& e) {
        raise(ErrorCode::parse, std::string("invalid report JSON: ") + e.what());
    }
    return report;
}

std::string render_report(const ExperimentReport& report, const std::string& format) {
    if (format == "json") return report_to_json(report).dump(2) + "\n";
    if (format == "csv") return render_csv(report);
    if (format == "markdown" || format == "md") return render_markdown(report);
    raise(ErrorCode::config, "unknown report format: " + format + " (expected json, csv or markdown)");
}

void emit_report(const ExperimentReport& report, const std::string& format, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::io, "cannot write report to " + path);
    out << render_report(report, format);
    if (!out) raise(ErrorCode::io, "failed while writing report to " + path);
}

std::string render_metric_records(const ExperimentReport& report) {
    std::ostringstream out;
    for (const CellResult& cell : report.cells) {
        for (const MetricRecord& r : cell.records) {
            json line;
            line["sample_id"] = r.sample_id;
            line["interpreter"] = cell.interpreter;
            line["aggregation"] = aggregation_name(cell.aggregation);
            line["iou"] = r.iou;
            line["hpd"] = r.hpd;
            line["snr"] = r.snr ? json(*r.snr) : json(nullptr);
            line["rank_of_gt"] = r.rank_of_gt;
            out << line.dump() << '\n';
        }
    }
    return out.str();
}

}  // namespace attriq
