#include "augkit/eval_harness.hpp"

#include "augkit/errors.hpp"
#include "augkit/sampling.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace augkit::eval {

using corpus::Problem;

Style style_from_string(std::string_view name) {
    if (name == "gsm") return Style::gsm;
    if (name == "math") return Style::math;
    throw Error(Errc::invalid_argument, "unknown grading style: " + std::string(name));
}

namespace {

std::optional<parse::ExtractedAnswer> try_extract(const std::string& text, Style style) {
    try {
        return style == Style::gsm ? parse::extract_final_answer_gsm(text)
                                   : parse::extract_boxed_math(text);
    } catch (const Error&) {
        return std::nullopt;
    }
}

parse::ExtractedAnswer gold_answer_of(const Problem& p, Style style) {
    if (p.gold_answer) {
        return parse::make_answer(*p.gold_answer);
    }
    if (auto extracted = try_extract(p.gold_response, style)) {
        return *extracted;
    }
    throw Error(Errc::missing_field,
                "problem " + p.id + " has no gold answer and none is extractable");
}

} // namespace

std::pair<std::vector<EvalRecord>, AccuracyReport>
grade(const std::map<std::string, std::string>& outputs, std::span<const Problem> gold,
      Style style, double abs_tol) {
    std::map<std::string, const Problem*> by_id;
    for (const auto& p : gold) {
        by_id[p.id] = &p;
    }

    std::vector<EvalRecord> records;
    records.reserve(outputs.size());
    AccuracyReport report;
    for (const auto& [id, output] : outputs) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw Error(Errc::unknown_problem_id, "output id '" + id + "' matches no gold problem");
        }
        EvalRecord rec;
        rec.problem_id = id;
        rec.output = output;
        rec.gold = gold_answer_of(*it->second, style);
        rec.extracted = try_extract(output, style);
        rec.correct = rec.extracted && parse::answers_equal(*rec.extracted, rec.gold, abs_tol);
        report.n += 1;
        report.n_correct += rec.correct ? 1 : 0;
        records.push_back(std::move(rec));
    }
    return {std::move(records), report};
}

AccuracyReport stratified_report(std::span<const EvalRecord> records,
                                 const std::map<std::string, parse::Difficulty>& difficulty_labels,
                                 const std::map<std::string, std::string>* subjects) {
    AccuracyReport report;
    for (const auto& rec : records) {
        auto it = difficulty_labels.find(rec.problem_id);
        if (it == difficulty_labels.end()) {
            throw Error(Errc::missing_label, "no difficulty label for '" + rec.problem_id + "'");
        }
        report.n += 1;
        report.n_correct += rec.correct ? 1 : 0;
        auto& bucket = report.by_difficulty[parse::to_string(it->second)];
        bucket.n += 1;
        bucket.n_correct += rec.correct ? 1 : 0;
        if (subjects) {
            auto sub = subjects->find(rec.problem_id);
            if (sub != subjects->end()) {
                auto& sbucket = report.by_subject[sub->second];
                sbucket.n += 1;
                sbucket.n_correct += rec.correct ? 1 : 0;
            }
        }
    }
    return report;
}

std::vector<Problem> sample_eval_split(std::span<const Problem> problems, std::size_t n,
                                       std::uint64_t seed) {
    if (n > problems.size()) {
        throw Error(Errc::target_too_large, "requested " + std::to_string(n) + " of " +
                                                std::to_string(problems.size()) + " problems");
    }
    std::vector<Problem> pool(problems.begin(), problems.end());
    std::sort(pool.begin(), pool.end(),
              [](const Problem& a, const Problem& b) { return a.id < b.id; });
    std::mt19937_64 gen(seed);
    const auto idx = rng::sample_indices(pool.size(), n, gen);
    std::vector<Problem> out;
    out.reserve(n);
    for (std::size_t i : idx) {
        out.push_back(std::move(pool[i]));
    }
    return out;
}

std::map<std::string, std::string> load_outputs_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::io_failure, "cannot open " + path.string());
    }
    std::map<std::string, std::string> outputs;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(Errc::malformed_line,
                        path.string() + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
        }
        if (!obj.contains("id") || !obj["id"].is_string() || !obj.contains("output") ||
            !obj["output"].is_string()) {
            throw Error(Errc::missing_field,
                        "line " + std::to_string(line_no) + ": need string fields 'id', 'output'",
                        line_no);
        }
        const std::string id = obj["id"].get<std::string>();
        if (!outputs.emplace(id, obj["output"].get<std::string>()).second) {
            throw Error(Errc::duplicate_id, "duplicate output id '" + id + "'", line_no);
        }
    }
    return outputs;
}

std::string report_to_json(const AccuracyReport& report) {
    nlohmann::json obj;
    obj["n"] = report.n;
    obj["n_correct"] = report.n_correct;
    obj["overall_percent"] = report.overall();
    auto bucket_json = [](const std::map<std::string, Bucket>& buckets) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [name, b] : buckets) {
            out[name] = {{"n", b.n}, {"n_correct", b.n_correct}, {"percent", b.percent()}};
        }
        return out;
    };
    if (!report.by_difficulty.empty()) obj["by_difficulty"] = bucket_json(report.by_difficulty);
    if (!report.by_subject.empty()) obj["by_subject"] = bucket_json(report.by_subject);
    return obj.dump(2);
}

std::string render_text_table(const AccuracyReport& report) {
    std::ostringstream out;
    char row[128];
    std::snprintf(row, sizeof(row), "%-24s %8s %8s %9s\n", "bucket", "n", "correct", "accuracy");
    out << row;
    out << std::string(52, '-') << '\n';
    auto emit = [&](const std::string& name, std::size_t n, std::size_t n_correct, double pct) {
        std::snprintf(row, sizeof(row), "%-24s %8zu %8zu %8.2f%%\n", name.c_str(), n, n_correct,
                      pct);
        out << row;
    };
    emit("overall", report.n, report.n_correct, report.overall());
    for (const char* label : {"easy", "medium", "hard"}) {
        auto it = report.by_difficulty.find(label);
        if (it != report.by_difficulty.end()) {
            emit(std::string("difficulty/") + label, it->second.n, it->second.n_correct,
                 it->second.percent());
        }
    }
    for (const auto& [name, bucket] : report.by_subject) {
        emit("subject/" + name, bucket.n, bucket.n_correct, bucket.percent());
    }
    return out.str();
}

} // namespace augkit::eval
