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

namespace augkit::analyze {

struct ScalingPoint {
    double x = 0; // dataset size in thousands of samples
    double y = 0; // test accuracy in percent
};

// y = intercept + slope * ln(x)
struct ScalingFit {
    double intercept = 0;
    double slope = 0;
    double r2 = 0;
    double x_min = 0;
    double x_max = 0;
};

struct SegmentedFit {
    std::vector<ScalingFit> segments;   // ordered by x range
    std::vector<double> breakpoints;    // between consecutive segments
};

struct DifficultyHistogram {
    std::size_t easy = 0;
    std::size_t medium = 0;
    std::size_t hard = 0;

    std::size_t total() const noexcept { return easy + medium + hard; }
};

// Buckets problems by annotation count of their gold responses.
DifficultyHistogram difficulty_histogram(std::span<const corpus::Problem> problems);

enum class TargetMode { easy, medium, hard, wrong, random };

TargetMode target_mode_from_string(std::string_view name);

// Picks up to n problems to augment next. Difficulty modes filter by label,
// wrong mode needs per-problem correctness from a prior grading run, random
// samples uniformly. Deterministic per seed; sorted by id.
std::vector<corpus::Problem>
select_targets(std::span<const corpus::Problem> problems, TargetMode mode,
               const std::map<std::string, bool>* eval_results, std::size_t n, std::uint64_t seed);

// Ordinary least squares of y on ln(x). Natural logarithm throughout.
ScalingFit fit_loglinear(std::span<const ScalingPoint> points);

double predict(const ScalingFit& fit, double x);

// Accuracy gained when the data amount doubles: slope * ln(2).
double doubling_gain(const ScalingFit& fit);

// One fit per explicit inclusive [lo, hi] range over x.
SegmentedFit fit_segmented(std::span<const ScalingPoint> points,
                           std::span<const std::pair<double, double>> ranges);

// Scans every single breakpoint between consecutive x values and keeps the
// split minimizing total SSE, each side with at least 2 points.
SegmentedFit fit_segmented_auto(std::span<const ScalingPoint> points);

// Sample Pearson correlation coefficient.
double pearson(std::span<const std::pair<double, double>> pairs);

// CSV with header "x_thousands,y_accuracy".
std::vector<ScalingPoint> load_points_csv(const std::filesystem::path& path);

std::string fit_to_json(const ScalingFit& fit);
std::string fit_to_json(const SegmentedFit& fit);

} // namespace augkit::analyze
