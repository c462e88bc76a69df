#include "augkit/analyze.hpp"

#include "augkit/errors.hpp"
#include "augkit/sampling.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace augkit::analyze {

using corpus::Problem;

namespace {

double sse_of(const ScalingFit& fit, std::span<const ScalingPoint> points) {
    double sse = 0;
    for (const auto& p : points) {
        const double r = p.y - (fit.intercept + fit.slope * std::log(p.x));
        sse += r * r;
    }
    return sse;
}

void sort_problems_by_id(std::vector<Problem>& problems) {
    std::sort(problems.begin(), problems.end(),
              [](const Problem& a, const Problem& b) { return a.id < b.id; });
}

std::vector<Problem> pick_n(std::vector<Problem> eligible, std::size_t n, std::uint64_t seed) {
    if (n >= eligible.size()) {
        sort_problems_by_id(eligible);
        return eligible;
    }
    // Sampling happens over the id-sorted pool so the draw does not depend on
    // input order.
    sort_problems_by_id(eligible);
    std::mt19937_64 gen(seed);
    const auto idx = rng::sample_indices(eligible.size(), n, gen);
    std::vector<Problem> out;
    out.reserve(n);
    for (std::size_t i : idx) {
        out.push_back(std::move(eligible[i]));
    }
    return out;
}

} // namespace

DifficultyHistogram difficulty_histogram(std::span<const Problem> problems) {
    DifficultyHistogram hist;
    for (const auto& p : problems) {
        switch (parse::classify_difficulty(parse::count_reasoning_steps_gsm(p.gold_response))) {
        case parse::Difficulty::easy: ++hist.easy; break;
        case parse::Difficulty::medium: ++hist.medium; break;
        case parse::Difficulty::hard: ++hist.hard; break;
        }
    }
    return hist;
}

TargetMode target_mode_from_string(std::string_view name) {
    if (name == "easy") return TargetMode::easy;
    if (name == "medium") return TargetMode::medium;
    if (name == "hard") return TargetMode::hard;
    if (name == "wrong") return TargetMode::wrong;
    if (name == "random") return TargetMode::random;
    throw Error(Errc::invalid_argument, "unknown target mode: " + std::string(name));
}

std::vector<Problem> select_targets(std::span<const Problem> problems, TargetMode mode,
                                    const std::map<std::string, bool>* eval_results, std::size_t n,
                                    std::uint64_t seed) {
    std::vector<Problem> eligible;
    switch (mode) {
    case TargetMode::easy:
    case TargetMode::medium:
    case TargetMode::hard: {
        const auto want = mode == TargetMode::easy     ? parse::Difficulty::easy
                          : mode == TargetMode::medium ? parse::Difficulty::medium
                                                       : parse::Difficulty::hard;
        for (const auto& p : problems) {
            if (parse::classify_difficulty(parse::count_reasoning_steps_gsm(p.gold_response)) ==
                want) {
                eligible.push_back(p);
            }
        }
        break;
    }
    case TargetMode::wrong: {
        if (!eval_results) {
            throw Error(Errc::missing_eval_results,
                        "wrong mode requires per-problem correctness from a grading run");
        }
        for (const auto& p : problems) {
            auto it = eval_results->find(p.id);
            if (it != eval_results->end() && !it->second) {
                eligible.push_back(p);
            }
        }
        break;
    }
    case TargetMode::random:
        eligible.assign(problems.begin(), problems.end());
        break;
    }
    return pick_n(std::move(eligible), n, seed);
}

ScalingFit fit_loglinear(std::span<const ScalingPoint> points) {
    if (points.size() < 2) {
        throw Error(Errc::degenerate_x, "log-linear fit needs at least 2 points");
    }
    double u_mean = 0, y_mean = 0;
    for (const auto& p : points) {
        if (!(p.x > 0)) {
            throw Error(Errc::degenerate_x, "x must be > 0 for a log fit");
        }
        u_mean += std::log(p.x);
        y_mean += p.y;
    }
    const double n = static_cast<double>(points.size());
    u_mean /= n;
    y_mean /= n;

    double suu = 0, suy = 0, syy = 0;
    for (const auto& p : points) {
        const double du = std::log(p.x) - u_mean;
        const double dy = p.y - y_mean;
        suu += du * du;
        suy += du * dy;
        syy += dy * dy;
    }
    if (suu <= 0) {
        throw Error(Errc::degenerate_x, "all x values coincide");
    }

    ScalingFit fit;
    fit.slope = suy / suu;
    fit.intercept = y_mean - fit.slope * u_mean;
    const double sse = sse_of(fit, points);
    fit.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
    auto [mn, mx] = std::minmax_element(points.begin(), points.end(),
                                        [](const auto& a, const auto& b) { return a.x < b.x; });
    fit.x_min = mn->x;
    fit.x_max = mx->x;
    return fit;
}

double predict(const ScalingFit& fit, double x) {
    if (!(x > 0)) {
        throw Error(Errc::invalid_argument, "prediction needs x > 0");
    }
    return fit.intercept + fit.slope * std::log(x);
}

double doubling_gain(const ScalingFit& fit) {
    return fit.slope * std::log(2.0);
}

SegmentedFit fit_segmented(std::span<const ScalingPoint> points,
                           std::span<const std::pair<double, double>> ranges) {
    SegmentedFit out;
    for (const auto& [lo, hi] : ranges) {
        std::vector<ScalingPoint> segment;
        for (const auto& p : points) {
            if (p.x >= lo && p.x <= hi) segment.push_back(p);
        }
        if (segment.size() < 2) {
            throw Error(Errc::insufficient_points,
                        "range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                            "] holds fewer than 2 points");
        }
        out.segments.push_back(fit_loglinear(segment));
    }
    std::sort(out.segments.begin(), out.segments.end(),
              [](const ScalingFit& a, const ScalingFit& b) { return a.x_min < b.x_min; });
    for (std::size_t i = 1; i < out.segments.size(); ++i) {
        if (out.segments[i].x_min <= out.segments[i - 1].x_max) {
            throw Error(Errc::invalid_argument, "segment ranges overlap");
        }
        out.breakpoints.push_back((out.segments[i - 1].x_max + out.segments[i].x_min) / 2.0);
    }
    return out;
}

SegmentedFit fit_segmented_auto(std::span<const ScalingPoint> points) {
    if (points.size() < 4) {
        throw Error(Errc::insufficient_points, "auto breakpoint search needs at least 4 points");
    }
    std::vector<ScalingPoint> sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const ScalingPoint& a, const ScalingPoint& b) { return a.x < b.x; });

    std::optional<SegmentedFit> best;
    double best_sse = 0;
    for (std::size_t k = 2; k + 2 <= sorted.size(); ++k) {
        if (sorted[k - 1].x == sorted[k].x) continue; // split must fall between distinct x
        const std::span<const ScalingPoint> left(sorted.data(), k);
        const std::span<const ScalingPoint> right(sorted.data() + k, sorted.size() - k);
        ScalingFit lf, rf;
        try {
            lf = fit_loglinear(left);
            rf = fit_loglinear(right);
        } catch (const Error&) {
            continue; // a side with coincident x values cannot be fitted
        }
        const double total = sse_of(lf, left) + sse_of(rf, right);
        if (!best || total < best_sse) {
            best_sse = total;
            SegmentedFit cand;
            cand.segments = {lf, rf};
            cand.breakpoints = {(sorted[k - 1].x + sorted[k].x) / 2.0};
            best = std::move(cand);
        }
    }
    if (!best) {
        throw Error(Errc::insufficient_points, "no valid split with 2 points per side");
    }
    return *best;
}

double pearson(std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 2) {
        throw Error(Errc::degenerate_variance, "correlation needs at least 2 pairs");
    }
    double x_mean = 0, y_mean = 0;
    for (const auto& [x, y] : pairs) {
        x_mean += x;
        y_mean += y;
    }
    const double n = static_cast<double>(pairs.size());
    x_mean /= n;
    y_mean /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (const auto& [x, y] : pairs) {
        sxx += (x - x_mean) * (x - x_mean);
        syy += (y - y_mean) * (y - y_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    if (sxx <= 0 || syy <= 0) {
        throw Error(Errc::degenerate_variance, "a marginal is constant");
    }
    return sxy / std::sqrt(sxx * syy);
}

std::vector<ScalingPoint> load_points_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::io_failure, "cannot open " + path.string());
    }
    std::vector<ScalingPoint> points;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("x_thousands", 0) == 0) continue;
        std::istringstream row(line);
        std::string x_str, y_str;
        if (!std::getline(row, x_str, ',') || !std::getline(row, y_str)) {
            throw Error(Errc::malformed_line,
                        path.string() + ":" + std::to_string(line_no) + ": expected x,y", line_no);
        }
        try {
            points.push_back({std::stod(x_str), std::stod(y_str)});
        } catch (const std::exception&) {
            throw Error(Errc::malformed_line,
                        path.string() + ":" + std::to_string(line_no) + ": non-numeric value",
                        line_no);
        }
    }
    return points;
}

namespace {

nlohmann::json fit_json(const ScalingFit& fit) {
    nlohmann::json obj;
    obj["a"] = fit.intercept;
    obj["b"] = fit.slope;
    obj["r2"] = fit.r2;
    obj["x_range"] = {fit.x_min, fit.x_max};
    obj["doubling_gain"] = doubling_gain(fit);
    return obj;
}

} // namespace

std::string fit_to_json(const ScalingFit& fit) {
    return fit_json(fit).dump(2);
}

std::string fit_to_json(const SegmentedFit& fit) {
    nlohmann::json obj;
    obj["segments"] = nlohmann::json::array();
    for (const auto& seg : fit.segments) {
        obj["segments"].push_back(fit_json(seg));
    }
    obj["breakpoints"] = fit.breakpoints;
    return obj.dump(2);
}

} // namespace augkit::analyze
