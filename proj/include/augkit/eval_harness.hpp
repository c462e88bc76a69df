#pragma once

#include "augkit/corpus.hpp"
#include "augkit/parse.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace augkit::eval {

enum class Style { gsm, math };

Style style_from_string(std::string_view name);

struct EvalRecord {
    std::string problem_id;
    std::string output;
    std::optional<parse::ExtractedAnswer> extracted;
    parse::ExtractedAnswer gold;
    bool correct = false;
};

struct Bucket {
    std::size_t n = 0;
    std::size_t n_correct = 0;

    double percent() const noexcept {
        return n == 0 ? 0.0 : 100.0 * static_cast<double>(n_correct) / static_cast<double>(n);
    }
};

struct AccuracyReport {
    std::size_t n = 0;
    std::size_t n_correct = 0;
    std::map<std::string, Bucket> by_difficulty;
    std::map<std::string, Bucket> by_subject;

    double overall() const noexcept {
        return n == 0 ? 0.0 : 100.0 * static_cast<double>(n_correct) / static_cast<double>(n);
    }
};

// Grades externally produced outputs against gold problems. gsm style
// extracts after "#####", math style from \boxed{...}; an output with no
// extractable answer is incorrect, never an error.
std::pair<std::vector<EvalRecord>, AccuracyReport>
grade(const std::map<std::string, std::string>& outputs, std::span<const corpus::Problem> gold,
      Style style, double abs_tol = 1e-3);

// Per-bucket accuracy over difficulty labels (and subjects when given).
AccuracyReport stratified_report(std::span<const EvalRecord> records,
                                 const std::map<std::string, parse::Difficulty>& difficulty_labels,
                                 const std::map<std::string, std::string>* subjects = nullptr);

// Uniform seeded subset for train/test accuracy probes; default n = 500.
std::vector<corpus::Problem> sample_eval_split(std::span<const corpus::Problem> problems,
                                               std::size_t n, std::uint64_t seed);

// {"id": ..., "output": ...} JSONL.
std::map<std::string, std::string> load_outputs_jsonl(const std::filesystem::path& path);

std::string report_to_json(const AccuracyReport& report);
std::string render_text_table(const AccuracyReport& report);

} // namespace augkit::eval
