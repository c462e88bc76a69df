#include <doctest.h>

#include "augkit/analyze.hpp"
#include "augkit/errors.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace augkit;
using analyze::ScalingPoint;

namespace {

// Full published series for the competition-math scaling study (x in
// thousands, y in percent), zero row excluded.
const std::vector<ScalingPoint> kMathSeries = {
    {7.5, 6.5},   {15, 8.0},    {22.5, 9.0},  {30, 9.8},    {37.5, 10.6},
    {82.5, 14.4}, {157.5, 18.7}, {232.5, 20.3}, {307.5, 23.1}};

corpus::Problem problem_with_steps(const std::string& id, int steps) {
    corpus::Problem p;
    p.id = id;
    p.dataset = corpus::Dataset::gsm8k;
    p.query = "q";
    std::string response;
    for (int i = 0; i < steps; ++i) {
        response += "$1+1 = <<1+1=2>>2$ ";
    }
    response += "##### 2";
    p.gold_response = response;
    p.gold_answer = "2";
    return p;
}

double sse_against(const analyze::ScalingFit& fit, const std::vector<ScalingPoint>& points,
                   double lo, double hi) {
    double sse = 0;
    for (const auto& p : points) {
        if (p.x < lo || p.x > hi) continue;
        const double r = p.y - (fit.intercept + fit.slope * std::log(p.x));
        sse += r * r;
    }
    return sse;
}

} // namespace

TEST_CASE("log-linear fit reproduces the published segment coefficients") {
    std::vector<ScalingPoint> low(kMathSeries.begin(), kMathSeries.begin() + 5);
    const auto low_fit = analyze::fit_loglinear(low);
    // frozen from an independent least-squares computation
    CHECK(low_fit.intercept == doctest::Approx(1.338850).epsilon(1e-4));
    CHECK(low_fit.slope == doctest::Approx(2.503414).epsilon(1e-4));
    CHECK(low_fit.r2 == doctest::Approx(0.991810).epsilon(1e-4));
    CHECK(low_fit.x_min == 7.5);
    CHECK(low_fit.x_max == 37.5);

    std::vector<ScalingPoint> high(kMathSeries.begin() + 5, kMathSeries.end());
    const auto high_fit = analyze::fit_loglinear(high);
    CHECK(high_fit.intercept == doctest::Approx(-13.555643).epsilon(1e-4));
    CHECK(high_fit.slope == doctest::Approx(6.330517).epsilon(1e-4));
    CHECK(high_fit.r2 == doctest::Approx(0.984555).epsilon(1e-4));
}

TEST_CASE("two points interpolate exactly") {
    const std::vector<ScalingPoint> two = {{10, 5.0}, {100, 15.0}};
    const auto fit = analyze::fit_loglinear(two);
    CHECK(fit.r2 == doctest::Approx(1.0));
    CHECK(analyze::predict(fit, 10) == doctest::Approx(5.0));
    CHECK(analyze::predict(fit, 100) == doctest::Approx(15.0));
}

TEST_CASE("fit errors") {
    CHECK_THROWS_AS(analyze::fit_loglinear(std::vector<ScalingPoint>{{10, 5}}), Error);
    CHECK_THROWS_AS(analyze::fit_loglinear(std::vector<ScalingPoint>{{10, 5}, {10, 6}}), Error);
    CHECK_THROWS_AS(analyze::fit_loglinear(std::vector<ScalingPoint>{{0, 5}, {10, 6}}), Error);
}

TEST_CASE("ols normal equations hold on random data") {
    std::mt19937_64 gen(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ScalingPoint> points;
        const std::size_t n = 3 + gen() % 20;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = 1.0 + static_cast<double>(gen() % 10000) / 37.0;
            const double y = static_cast<double>(gen() % 1000) / 13.0;
            points.push_back({x, y});
        }
        const auto fit = analyze::fit_loglinear(points);
        double sum_r = 0, sum_ru = 0, mag = 0;
        for (const auto& p : points) {
            const double r = p.y - analyze::predict(fit, p.x);
            sum_r += r;
            sum_ru += r * std::log(p.x);
            mag += std::fabs(p.y);
        }
        CHECK(std::fabs(sum_r) <= 1e-9 * std::max(1.0, mag));
        CHECK(std::fabs(sum_ru) <= 1e-8 * std::max(1.0, mag));
        CHECK(fit.r2 >= 0.0);
        CHECK(fit.r2 <= 1.0);
    }
}

TEST_CASE("predict and doubling gain match the published arithmetic") {
    const analyze::ScalingFit fit_7b{13.2, 10.7, 1.0, 7.5, 97.5};
    const analyze::ScalingFit fit_7b2{21.3, 9.8, 1.0, 7.5, 97.5};
    const analyze::ScalingFit fit_13b2{36.3, 7.6, 1.0, 7.5, 97.5};

    CHECK(analyze::predict(fit_7b, 17) == doctest::Approx(43.4).epsilon(0.008));
    CHECK(analyze::predict(fit_7b, 104) == doctest::Approx(62.7).epsilon(0.005));
    CHECK(analyze::predict(fit_13b2, 104) == doctest::Approx(71.4).epsilon(0.005));
    CHECK(analyze::predict(fit_7b, 1) == doctest::Approx(13.2));

    CHECK(analyze::doubling_gain(fit_7b) == doctest::Approx(7.4).epsilon(0.01));
    CHECK(analyze::doubling_gain(fit_7b2) == doctest::Approx(6.8).epsilon(0.01));
    CHECK(analyze::doubling_gain(fit_13b2) == doctest::Approx(5.3).epsilon(0.01));
    CHECK(analyze::doubling_gain({0.0, 0.0, 0, 0, 0}) == 0.0);

    // strictly increasing when the slope is positive
    double prev = analyze::predict(fit_7b, 1);
    for (double x = 2; x < 200; x *= 1.7) {
        const double y = analyze::predict(fit_7b, x);
        CHECK(y > prev);
        prev = y;
    }
}

TEST_CASE("explicit segmented fit splits the published series") {
    const std::vector<std::pair<double, double>> ranges = {{7.5, 37.5}, {82.5, 307.5}};
    const auto seg = analyze::fit_segmented(kMathSeries, ranges);
    REQUIRE(seg.segments.size() == 2);
    CHECK(seg.segments[0].slope == doctest::Approx(2.503414).epsilon(1e-4));
    CHECK(seg.segments[1].slope == doctest::Approx(6.330517).epsilon(1e-4));
    REQUIRE(seg.breakpoints.size() == 1);
    CHECK(seg.breakpoints[0] == doctest::Approx(60.0));

    CHECK_THROWS_AS(
        analyze::fit_segmented(kMathSeries, std::vector<std::pair<double, double>>{{400, 500}}),
        Error);
}

TEST_CASE("auto breakpoint search lands between the two regimes") {
    const auto seg = analyze::fit_segmented_auto(kMathSeries);
    REQUIRE(seg.segments.size() == 2);
    REQUIRE(seg.breakpoints.size() == 1);
    CHECK(seg.breakpoints[0] > 37.5);
    CHECK(seg.breakpoints[0] < 82.5);

    // exhaustive-scan oracle: no other split beats the returned one
    const double best = sse_against(seg.segments[0], kMathSeries, 0, seg.breakpoints[0]) +
                        sse_against(seg.segments[1], kMathSeries, seg.breakpoints[0], 1e9);
    std::vector<ScalingPoint> sorted = kMathSeries;
    for (std::size_t k = 2; k + 2 <= sorted.size(); ++k) {
        std::vector<ScalingPoint> left(sorted.begin(), sorted.begin() + static_cast<long>(k));
        std::vector<ScalingPoint> right(sorted.begin() + static_cast<long>(k), sorted.end());
        const double total = sse_against(analyze::fit_loglinear(left), left, 0, 1e9) +
                             sse_against(analyze::fit_loglinear(right), right, 0, 1e9);
        CHECK(best <= total + 1e-9);
    }

    // the two-segment model never loses to the single fit
    const auto single = analyze::fit_loglinear(kMathSeries);
    CHECK(best <= sse_against(single, kMathSeries, 0, 1e9) + 1e-9);

    // collinear-in-ln points fit both segments exactly
    std::vector<ScalingPoint> collinear;
    for (double x : {2.0, 4.0, 8.0, 16.0}) {
        collinear.push_back({x, 1.0 + 2.0 * std::log(x)});
    }
    const auto perfect = analyze::fit_segmented_auto(collinear);
    CHECK(perfect.segments[0].r2 == doctest::Approx(1.0));
    CHECK(perfect.segments[1].r2 == doctest::Approx(1.0));

    CHECK_THROWS_AS(analyze::fit_segmented_auto(std::vector<ScalingPoint>{{1, 1}, {2, 2}, {3, 3}}),
                    Error);
}

TEST_CASE("pearson matches the direct-formula values frozen before the build") {
    using pairs_t = std::vector<std::pair<double, double>>;
    const pairs_t pairs_7b = {{56.4, 35.9}, {41.8, 38.1}, {51.4, 45.0}, {55.0, 48.2},
                              {61.6, 51.1}, {71.4, 53.0}, {79.8, 58.2}, {83.6, 61.4}};
    const pairs_t pairs_7b2 = {{65.2, 41.6}, {48.4, 43.6}, {57.4, 51.3}, {64.8, 55.8},
                               {66.6, 56.6}, {79.0, 57.0}, {85.2, 61.2}, {85.6, 66.3}};
    const pairs_t pairs_13b2 = {{75.4, 50.0}, {80.4, 56.3}, {80.4, 58.9}, {82.6, 61.9},
                                {82.2, 63.2}, {84.4, 65.5}, {86.6, 67.2}, {89.2, 69.8}};

    CHECK(analyze::pearson(pairs_7b) == doctest::Approx(0.889010096565).epsilon(1e-9));
    CHECK(analyze::pearson(pairs_7b2) == doctest::Approx(0.808604959491).epsilon(1e-9));
    CHECK(analyze::pearson(pairs_13b2) == doctest::Approx(0.974683515895).epsilon(1e-9));
    CHECK(analyze::pearson(pairs_7b) > 0);
    CHECK(analyze::pearson(pairs_7b2) > 0);
    CHECK(analyze::pearson(pairs_13b2) > 0);

    const pairs_t identical = {{1, 1}, {2, 2}, {3, 3}};
    CHECK(analyze::pearson(identical) == doctest::Approx(1.0));

    const pairs_t constant_x = {{5, 1}, {5, 2}, {5, 3}};
    CHECK_THROWS_AS(analyze::pearson(constant_x), Error);
}

TEST_CASE("difficulty histogram counts by annotation count") {
    std::vector<corpus::Problem> problems;
    const std::vector<int> steps = {0, 1, 2, 2, 3, 3, 3, 4, 5, 9};
    for (std::size_t i = 0; i < steps.size(); ++i) {
        problems.push_back(problem_with_steps("p" + std::to_string(i), steps[i]));
    }
    const auto hist = analyze::difficulty_histogram(problems);
    CHECK(hist.easy == 4);
    CHECK(hist.medium == 3);
    CHECK(hist.hard == 3);
    CHECK(hist.total() == problems.size());

    // permutation invariance
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(problems.begin(), problems.end(), gen);
        const auto again = analyze::difficulty_histogram(problems);
        CHECK(again.easy == hist.easy);
        CHECK(again.medium == hist.medium);
        CHECK(again.hard == hist.hard);
    }

    CHECK(analyze::difficulty_histogram({}).total() == 0);
}

TEST_CASE("target selection modes") {
    std::vector<corpus::Problem> problems;
    for (int i = 0; i < 10; ++i) {
        problems.push_back(problem_with_steps("p" + std::to_string(i), i % 6));
    }
    // steps: 0,1,2,3,4,5,0,1,2,3 -> easy x6 (0,1,2,0,1,2), medium x2, hard x2

    const auto hard = analyze::select_targets(problems, analyze::TargetMode::hard, nullptr, 100, 1);
    CHECK(hard.size() == 2);
    for (const auto& p : hard) {
        CHECK(parse::count_reasoning_steps_gsm(p.gold_response) > 3);
    }

    const auto all_random =
        analyze::select_targets(problems, analyze::TargetMode::random, nullptr, 10, 1);
    CHECK(all_random.size() == 10);

    const auto some_random =
        analyze::select_targets(problems, analyze::TargetMode::random, nullptr, 4, 5);
    CHECK(some_random.size() == 4);
    CHECK(some_random ==
          analyze::select_targets(problems, analyze::TargetMode::random, nullptr, 4, 5));

    std::map<std::string, bool> eval_results;
    for (int i = 0; i < 10; ++i) {
        eval_results["p" + std::to_string(i)] = !(i == 2 || i == 5 || i == 7);
    }
    const auto wrong =
        analyze::select_targets(problems, analyze::TargetMode::wrong, &eval_results, 100, 1);
    REQUIRE(wrong.size() == 3);
    CHECK(wrong[0].id == "p2");
    CHECK(wrong[1].id == "p5");
    CHECK(wrong[2].id == "p7");

    CHECK_THROWS_AS(analyze::select_targets(problems, analyze::TargetMode::wrong, nullptr, 1, 1),
                    Error);
}

TEST_CASE("points csv loads with its header") {
    const auto dir = std::filesystem::temp_directory_path() / "augkit_analyze";
    std::filesystem::create_directories(dir);
    const auto path = dir / "points.csv";
    std::ofstream(path) << "x_thousands,y_accuracy\n7.5,35.9\n13.5,38.1\n";
    const auto points = analyze::load_points_csv(path);
    REQUIRE(points.size() == 2);
    CHECK(points[1].x == doctest::Approx(13.5));
    CHECK(points[1].y == doctest::Approx(38.1));

    std::ofstream(path) << "x_thousands,y_accuracy\nnot,numeric\n";
    CHECK_THROWS_AS(analyze::load_points_csv(path), Error);
}
