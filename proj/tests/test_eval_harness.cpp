#include <doctest.h>

#include "augkit/errors.hpp"
#include "augkit/eval_harness.hpp"

#include <filesystem>
#include <fstream>

using namespace augkit;
using corpus::Problem;
using eval::Style;

namespace {

Problem gsm_gold(const std::string& id, const std::string& answer) {
    Problem p;
    p.id = id;
    p.dataset = corpus::Dataset::gsm8k;
    p.query = "q-" + id;
    p.gold_response = "steps $1+1 = <<1+1=2>>2$ ##### " + answer;
    p.gold_answer = answer;
    return p;
}

} // namespace

TEST_CASE("grading identity: gold responses score 100%") {
    std::vector<Problem> gold;
    std::map<std::string, std::string> outputs;
    for (int i = 0; i < 10; ++i) {
        auto p = gsm_gold("p" + std::to_string(i), std::to_string(10 + i));
        outputs[p.id] = p.gold_response;
        gold.push_back(std::move(p));
    }
    const auto [records, report] = eval::grade(outputs, gold, Style::gsm);
    CHECK(report.n == 10);
    CHECK(report.n_correct == 10);
    CHECK(report.overall() == doctest::Approx(100.0));
    for (const auto& r : records) CHECK(r.correct);
}

TEST_CASE("wrong and missing answers grade incorrect, never error") {
    std::vector<Problem> gold = {gsm_gold("a", "18"), gsm_gold("b", "7"), gsm_gold("c", "9")};
    std::map<std::string, std::string> outputs;
    outputs["a"] = "computed $24*0.833 = <<24*0.833=19.992>>19.992$ ##### 19.992"; // wrong value
    outputs["b"] = "I am not sure.";                                               // no extraction
    outputs["c"] = "so we get ##### 9.0004";                                       // within tolerance
    const auto [records, report] = eval::grade(outputs, gold, Style::gsm, 1e-3);
    CHECK(report.n == 3);
    CHECK(report.n_correct == 1);
    for (const auto& r : records) {
        if (r.problem_id == "a") CHECK_FALSE(r.correct);
        if (r.problem_id == "b") {
            CHECK_FALSE(r.correct);
            CHECK_FALSE(r.extracted.has_value());
        }
        if (r.problem_id == "c") CHECK(r.correct);
    }

    outputs["zzz"] = "##### 1";
    try {
        eval::grade(outputs, gold, Style::gsm);
        FAIL("expected UnknownProblemId");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unknown_problem_id);
    }
}

TEST_CASE("math style grades boxed answers with string fallback") {
    Problem p;
    p.id = "m";
    p.dataset = corpus::Dataset::math;
    p.subject = "Algebra";
    p.query = "q";
    p.gold_response = "the answer is $\\boxed{\\frac{3}{5}}$";
    std::vector<Problem> gold = {p};

    std::map<std::string, std::string> outputs;
    outputs["m"] = "therefore $\\boxed{\\frac{3}{5}}$";
    auto [records, report] = eval::grade(outputs, gold, Style::math);
    CHECK(report.n_correct == 1);

    outputs["m"] = "therefore $\\boxed{\\frac{4}{5}}$";
    auto [records2, report2] = eval::grade(outputs, gold, Style::math);
    CHECK(report2.n_correct == 0);
}

TEST_CASE("grade fixture: 7 of 10 correct is 70%") {
    std::vector<Problem> gold;
    std::map<std::string, std::string> outputs;
    for (int i = 0; i < 10; ++i) {
        auto p = gsm_gold("p" + std::to_string(i), std::to_string(i));
        outputs[p.id] = i < 7 ? ("ok ##### " + std::to_string(i)) : "ok ##### 999";
        gold.push_back(std::move(p));
    }
    const auto [records, report] = eval::grade(outputs, gold, Style::gsm);
    CHECK(report.overall() == doctest::Approx(70.0));
}

TEST_CASE("stratified report reproduces the published difficulty split") {
    // 100 problems per bucket, accuracies 0.55 / 0.42 / 0.21
    std::vector<eval::EvalRecord> records;
    std::map<std::string, parse::Difficulty> labels;
    auto add_bucket = [&](const std::string& prefix, parse::Difficulty label, int correct) {
        for (int i = 0; i < 100; ++i) {
            eval::EvalRecord r;
            r.problem_id = prefix + std::to_string(i);
            r.correct = i < correct;
            records.push_back(std::move(r));
            labels[prefix + std::to_string(i)] = label;
        }
    };
    add_bucket("easy", parse::Difficulty::easy, 55);
    add_bucket("med", parse::Difficulty::medium, 42);
    add_bucket("hard", parse::Difficulty::hard, 21);

    const auto report = eval::stratified_report(records, labels);
    CHECK(report.n == 300);
    CHECK(report.by_difficulty.at("easy").percent() == doctest::Approx(55.0));
    CHECK(report.by_difficulty.at("medium").percent() == doctest::Approx(42.0));
    CHECK(report.by_difficulty.at("hard").percent() == doctest::Approx(21.0));

    // bucket ns partition n, and the weighted mean recombines exactly
    std::size_t n_sum = 0, correct_sum = 0;
    for (const auto& [name, bucket] : report.by_difficulty) {
        n_sum += bucket.n;
        correct_sum += bucket.n_correct;
    }
    CHECK(n_sum == report.n);
    CHECK(correct_sum == report.n_correct);

    const auto rendered = eval::render_text_table(report);
    CHECK(rendered.find("difficulty/easy") != std::string::npos);
    CHECK(rendered.find("55.00%") != std::string::npos);

    // single bucket: bucket accuracy equals overall
    std::vector<eval::EvalRecord> one(records.begin(), records.begin() + 100);
    std::map<std::string, parse::Difficulty> one_labels;
    for (const auto& r : one) one_labels[r.problem_id] = parse::Difficulty::easy;
    const auto single = eval::stratified_report(one, one_labels);
    CHECK(single.by_difficulty.size() == 1);
    CHECK(single.by_difficulty.at("easy").percent() == doctest::Approx(single.overall()));

    std::map<std::string, parse::Difficulty> incomplete;
    CHECK_THROWS_AS(eval::stratified_report(records, incomplete), Error);
}

TEST_CASE("subject buckets appear for competition-style grading") {
    std::vector<eval::EvalRecord> records;
    std::map<std::string, parse::Difficulty> labels;
    std::map<std::string, std::string> subjects;
    const std::vector<std::string> names = {"Algebra", "Geometry", "Prealgebra"};
    for (int i = 0; i < 30; ++i) {
        eval::EvalRecord r;
        r.problem_id = "m" + std::to_string(i);
        r.correct = i % 3 == 0;
        records.push_back(std::move(r));
        labels["m" + std::to_string(i)] = parse::Difficulty::medium;
        subjects["m" + std::to_string(i)] = names[i % 3];
    }
    const auto report = eval::stratified_report(records, labels, &subjects);
    CHECK(report.by_subject.size() == 3);
    CHECK(report.by_subject.at("Algebra").n == 10);
    std::size_t total = 0;
    for (const auto& [name, bucket] : report.by_subject) total += bucket.n;
    CHECK(total == report.n);
}

TEST_CASE("eval split sampling is deterministic") {
    std::vector<Problem> problems;
    for (int i = 0; i < 1000; ++i) {
        problems.push_back(gsm_gold("p" + std::to_string(i), "1"));
    }
    const auto sampled = eval::sample_eval_split(problems, 500, 11);
    CHECK(sampled.size() == 500);
    const auto again = eval::sample_eval_split(problems, 500, 11);
    REQUIRE(again.size() == sampled.size());
    for (std::size_t i = 0; i < sampled.size(); ++i) {
        CHECK(sampled[i].id == again[i].id);
    }
    const auto full = eval::sample_eval_split(problems, problems.size(), 11);
    CHECK(full.size() == problems.size());
    CHECK_THROWS_AS(eval::sample_eval_split(problems, 1001, 11), Error);
}

TEST_CASE("outputs jsonl loads and reports json renders") {
    const auto dir = std::filesystem::temp_directory_path() / "augkit_eval";
    std::filesystem::create_directories(dir);
    const auto path = dir / "outputs.jsonl";
    std::ofstream(path) << R"({"id":"a","output":"##### 1"})" << '\n'
                        << R"({"id":"b","output":"##### 2"})" << '\n';
    const auto outputs = eval::load_outputs_jsonl(path);
    CHECK(outputs.size() == 2);
    CHECK(outputs.at("b") == "##### 2");

    std::ofstream(path) << R"({"id":"a","output":"x"})" << '\n'
                        << R"({"id":"a","output":"y"})" << '\n';
    CHECK_THROWS_AS(eval::load_outputs_jsonl(path), Error);

    eval::AccuracyReport report;
    report.n = 4;
    report.n_correct = 3;
    const auto json_text = eval::report_to_json(report);
    CHECK(json_text.find("\"overall_percent\": 75.0") != std::string::npos);
}
