#include "attriq/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "attriq/error.hpp"

namespace attriq {
namespace {

using nlohmann::json;

// Maps a codepoint index into a UTF-8 string to its byte offset, or npos.
std::size_t codepoint_to_byte(const std::string& s, std::size_t cp_index) {
    std::size_t cp = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if ((static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) continue;  // continuation byte
        if (cp == cp_index) return i;
        ++cp;
    }
    return cp == cp_index ? s.size() : std::string::npos;
}

bool substring_matches(const std::string& context, std::size_t offset, const std::string& text) {
    return offset + text.size() <= context.size() && context.compare(offset, text.size(), text) == 0;
}

// SQuAD files produced by Python tooling carry codepoint offsets; internal
// spans are byte offsets. Returns the normalized byte offset or npos.
std::size_t normalize_answer_offset(const std::string& context, std::size_t offset, const std::string& text) {
    if (substring_matches(context, offset, text)) return offset;
    const std::size_t byte_offset = codepoint_to_byte(context, offset);
    if (byte_offset != std::string::npos && substring_matches(context, byte_offset, text)) return byte_offset;
    return std::string::npos;
}

}  // namespace

std::vector<RawQaRecord> load_squad_json(const std::string& path, const std::string& split_name) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::io, "cannot open dataset file: " + path);

    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        raise(ErrorCode::parse, "malformed JSON in " + path + ": " + e.what());
    }

    if (!doc.is_object() || !doc.contains("data") || !doc["data"].is_array())
        raise(ErrorCode::parse, path + ": expected top-level object with a 'data' array");

    std::vector<RawQaRecord> records;
    std::vector<std::string> bad_ids;
    try {
        for (const auto& article : doc["data"]) {
            for (const auto& paragraph : article.at("paragraphs")) {
                const std::string context = paragraph.at("context").get<std::string>();
                for (const auto& qa : paragraph.at("qas")) {
                    RawQaRecord rec;
                    rec.id = qa.at("id").get<std::string>();
                    rec.question = qa.at("question").get<std::string>();
                    rec.context = context;
                    for (const auto& ans : qa.at("answers")) {
                        Answer a;
                        a.text = ans.at("text").get<std::string>();
                        a.answer_start = ans.at("answer_start").get<std::size_t>();
                        const std::size_t offset = normalize_answer_offset(rec.context, a.answer_start, a.text);
                        if (offset == std::string::npos) {
                            bad_ids.push_back(rec.id);
                            continue;
                        }
                        a.answer_start = offset;
                        rec.answers.push_back(std::move(a));
                    }
                    const bool declared_impossible =
                        qa.contains("is_impossible") && qa["is_impossible"].get<bool>();
                    if (declared_impossible && !rec.answers.empty()) bad_ids.push_back(rec.id);
                    rec.is_impossible = rec.answers.empty();
                    records.push_back(std::move(rec));
                }
            }
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::parse, path + " (" + split_name + "): unexpected schema: " + e.what());
    }

    if (!bad_ids.empty()) {
        std::sort(bad_ids.begin(), bad_ids.end());
        bad_ids.erase(std::unique(bad_ids.begin(), bad_ids.end()), bad_ids.end());
        std::ostringstream msg;
        msg << path << " (" << split_name << "): " << bad_ids.size()
            << " record(s) failed answer-span validation:";
        for (std::size_t i = 0; i < bad_ids.size() && i < 10; ++i) msg << ' ' << bad_ids[i];
        if (bad_ids.size() > 10) msg << " ...";
        raise(ErrorCode::validation, msg.str());
    }
    return records;
}

Sample derive_ground_truth(const RawQaRecord& record, std::vector<SentenceSpan> sentences) {
    if (sentences.empty())
        raise(ErrorCode::validation, "record " + record.id + ": context has no sentences");

    Sample sample;
    sample.record = record;
    sample.sentences = std::move(sentences);
    if (record.answers.empty()) return sample;

    const Answer& first = record.answers.front();
    const std::size_t pos = first.answer_start;
    std::size_t gt = sample.sentences.size();
    for (const SentenceSpan& s : sample.sentences) {
        if (pos < s.end) {
            // Also covers answer_start inside the whitespace gap before s:
            // snap forward to the following sentence.
            gt = s.index;
            break;
        }
    }
    if (gt == sample.sentences.size()) {
        gt = sample.sentences.size() - 1;  // past the last span
        sample.flags.gt_snapped = true;
    }
    sample.gt_sentence = gt;

    const std::size_t answer_end = pos + first.text.size();
    if (answer_end > sample.sentences[gt].end) sample.flags.boundary_crossing = true;
    return sample;
}

std::vector<Sample> build_samples(const std::vector<RawQaRecord>& records, const SentenceSegmenter& segmenter) {
    std::vector<Sample> samples;
    samples.reserve(records.size());
    for (const RawQaRecord& rec : records)
        samples.push_back(derive_ground_truth(rec, segmenter.segment(rec.context)));
    return samples;
}

std::size_t whitespace_token_length(const std::string& question, const std::string& context) {
    const auto count = [](const std::string& s) {
        std::size_t n = 0;
        bool in_token = false;
        for (char c : s) {
            const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
            if (!space && !in_token) ++n;
            in_token = !space;
        }
        return n;
    };
    return count(question) + count(context);
}

std::vector<Sample> filter_by_length(const std::vector<Sample>& samples, const LengthFn& length_fn,
                                     std::size_t max_tokens) {
    if (max_tokens == 0) raise(ErrorCode::config, "max_tokens must be positive");
    std::vector<Sample> kept;
    for (const Sample& s : samples)
        if (length_fn(s.record.question, s.record.context) <= max_tokens) kept.push_back(s);
    return kept;
}

DatasetStats compute_stats(const std::vector<Sample>& samples, const std::vector<bool>& predictions) {
    if (samples.size() != predictions.size())
        raise(ErrorCode::validation, "compute_stats: samples and predictions differ in length");

    DatasetStats stats;
    stats.n_samples_used = samples.size();
    if (samples.empty()) return stats;

    std::size_t correct = 0;
    std::size_t answerable = 0;
    std::size_t answerable_predicted = 0;
    double sentence_sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const bool has_gt = samples[i].gt_sentence.has_value();
        if (predictions[i] == has_gt) ++correct;
        if (has_gt) {
            ++answerable;
            if (predictions[i]) ++answerable_predicted;
        }
        sentence_sum += static_cast<double>(samples[i].n_sentences());
    }
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
    stats.avg_sentences = sentence_sum / static_cast<double>(samples.size());
    if (answerable > 0)
        stats.recall = static_cast<double>(answerable_predicted) / static_cast<double>(answerable);
    return stats;
}

void write_sample_cache(const std::string& path, const std::vector<Sample>& samples) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::io, "cannot open cache file for writing: " + path);
    for (const Sample& s : samples) {
        json line;
        line["id"] = s.record.id;
        line["question"] = s.record.question;
        line["context"] = s.record.context;
        json spans = json::array();
        for (const SentenceSpan& sp : s.sentences) spans.push_back({sp.start, sp.end});
        line["sentence_spans"] = std::move(spans);
        if (s.gt_sentence)
            line["gt_sentence"] = *s.gt_sentence;
        else
            line["gt_sentence"] = nullptr;
        json flags = json::array();
        if (s.flags.boundary_crossing) flags.push_back("boundary_crossing");
        if (s.flags.gt_snapped) flags.push_back("gt_snapped");
        line["flags"] = std::move(flags);
        out << line.dump() << '\n';
    }
}

std::vector<Sample> read_sample_cache(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::io, "cannot open cache file: " + path);
    std::vector<Sample> samples;
    std::string text;
    std::size_t line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        if (text.empty()) continue;
        json line;
        try {
            line = json::parse(text);
        } catch (const json::exception& e) {
            raise(ErrorCode::parse, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        Sample s;
        s.record.id = line.at("id").get<std::string>();
        s.record.question = line.at("question").get<std::string>();
        s.record.context = line.at("context").get<std::string>();
        std::size_t index = 0;
        for (const auto& sp : line.at("sentence_spans"))
            s.sentences.push_back({index++, sp.at(0).get<std::size_t>(), sp.at(1).get<std::size_t>()});
        if (!line.at("gt_sentence").is_null()) s.gt_sentence = line["gt_sentence"].get<std::size_t>();
        s.record.is_impossible = !s.gt_sentence.has_value();
        for (const auto& f : line.at("flags")) {
            const std::string name = f.get<std::string>();
            if (name == "boundary_crossing") s.flags.boundary_crossing = true;
            if (name == "gt_snapped") s.flags.gt_snapped = true;
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace attriq
