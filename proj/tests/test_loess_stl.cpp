#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "support/oracles.hpp"
#include "trendlens/error.hpp"
#include "trendlens/loess.hpp"
#include "trendlens/stl.hpp"

using namespace trendlens;
using trendlens::testing::correlation;
using trendlens::testing::gaussian_series;

namespace {

std::vector<double> iota_d(std::size_t n, double from = 0.0) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = from + static_cast<double>(i);
    return v;
}

MonthlySeries monthly(std::vector<double> v) { return MonthlySeries(YearMonth(2006, 1), std::move(v)); }

double total_variation(const std::vector<double>& v) {
    double tv = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) tv += std::abs(v[i] - v[i - 1]);
    return tv;
}

}  // namespace

TEST_CASE("auto_trend_window") {
    CHECK(auto_trend_window(12, SeasonalWindow::periodic()) == 19);
    CHECK(auto_trend_window(12, SeasonalWindow::span(3)) == 37);
    CHECK(auto_trend_window(4, SeasonalWindow::periodic()) == 7);
    CHECK_THROWS_AS(auto_trend_window(12, SeasonalWindow::span(1)), ConfigError);
    CHECK(next_odd(6) == 7);
    CHECK(next_odd(7) == 7);
    CHECK(next_odd(6.2) == 7);
}

TEST_CASE("loess reproduces polynomials of its degree") {
    const auto xs = iota_d(40);
    const std::vector<double> at{-3.0, 0.0, 7.5, 20.0, 39.0, 44.0};
    for (int degree = 0; degree <= 2; ++degree) {
        std::vector<double> ys(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double x = xs[i];
            ys[i] = degree == 0 ? 4.25 : degree == 1 ? 2.0 - 0.7 * x : 1.0 + 0.3 * x - 0.05 * x * x;
        }
        for (std::size_t q : {static_cast<std::size_t>(degree + 3), std::size_t{7}, std::size_t{19}, std::size_t{55}}) {
            const auto fit = loess(xs, ys, at, q, degree);
            for (std::size_t k = 0; k < at.size(); ++k) {
                const double x = at[k];
                const double expect = degree == 0 ? 4.25 : degree == 1 ? 2.0 - 0.7 * x : 1.0 + 0.3 * x - 0.05 * x * x;
                CHECK(fit[k] == doctest::Approx(expect).epsilon(1e-9).scale(1.0));
            }
        }
    }
}

TEST_CASE("loess matches a direct normal-equation oracle") {
    const auto xs = iota_d(60);
    auto noise = gaussian_series(60, 17, 0.3);
    std::vector<double> ys(60);
    for (std::size_t i = 0; i < 60; ++i) ys[i] = std::sin(xs[i] / 5.0) + noise[i];
    for (int degree : {1, 2}) {
        for (std::size_t q : {std::size_t{7}, std::size_t{13}}) {
            for (double x0 : {0.0, 3.5, 29.0, 59.0, 61.0}) {
                const double ours = loess_at(xs, ys, x0, q, degree);
                const double oracle = trendlens::testing::loess_oracle(xs, ys, x0, q, degree);
                CHECK(std::abs(ours - oracle) <= 1e-8);
            }
        }
    }
}

TEST_CASE("loess degenerate windows") {
    // Window {0, 1, 2} around x = 1: tricube is zero at both ends and the
    // robustness weight is zero in the middle, so the window mean is used.
    const auto xs = iota_d(10);
    const auto ys = iota_d(10, 5.0);
    std::vector<double> w(10, 0.0);
    w[0] = 1.0;
    CHECK(loess_at(xs, ys, 1.0, 3, 1, w) == doctest::Approx(5.0));
    w[0] = 0.0;
    w[9] = 1.0;
    CHECK_THROWS_AS(loess_at(xs, ys, 1.0, 3, 1, w), NumericalError);
}

TEST_CASE("STL additivity on random series") {
    std::mt19937_64 rng(123);
    std::uniform_int_distribution<int> len(24, 200);
    std::uniform_real_distribution<double> level(-50, 500);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<std::size_t>(len(rng));
        auto y = gaussian_series(n, 1000 + trial, 25.0);
        const double base = level(rng);
        for (auto& v : y) v += base;
        StlConfig cfg;
        cfg.outer_iterations = trial % 3;
        const auto d = stl_decompose(monthly(y), cfg);
        double ymax = 0.0;
        for (double v : y) ymax = std::max(ymax, std::abs(v));
        for (std::size_t i = 0; i < n; ++i) {
            const double sum = d.trend.values()[i] + d.seasonal.values()[i] + d.remainder.values()[i];
            CHECK(std::abs(sum - y[i]) <= 1e-9 * std::max(ymax, 1.0));
        }
        for (double w : d.robustness_weights) {
            CHECK(w >= 0.0);
            CHECK(w <= 1.0);
            if (cfg.outer_iterations == 0) CHECK(w == 1.0);
        }
    }
}

TEST_CASE("STL on a pure line") {
    // The first inner pass puts the within-year ramp into S; further passes
    // shrink it geometrically, so the tolerance needs more than the default two.
    std::vector<double> y(96);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 20.0 + 0.5 * static_cast<double>(i);
    const double range = y.back() - y.front();
    StlConfig cfg;
    cfg.inner_iterations = 20;
    const auto d = stl_decompose(monthly(y), cfg);
    for (double s : d.seasonal.values()) CHECK(std::abs(s) < 1e-6 * range);
    for (std::size_t i = 12; i + 12 < y.size(); ++i) CHECK(std::abs(d.trend.values()[i] - y[i]) < 1e-6);
}

TEST_CASE("STL recovers a synthetic seasonal") {
    const std::size_t n = 168;
    std::vector<double> y(n);
    std::vector<double> truth(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        truth[i] = 3.0 * std::sin(2.0 * std::numbers::pi * t / 12.0);
        y[i] = 10.0 + 0.1 * t + truth[i];
    }
    const auto d = stl_decompose(monthly(y), StlConfig{});
    CHECK(correlation(d.seasonal.values(), truth) > 0.999);
    double ymax = 0.0;
    for (double v : y) ymax = std::max(ymax, std::abs(v));
    for (std::size_t c = 0; c + 12 <= n; c += 12) {
        double m = 0.0;
        for (std::size_t i = c; i < c + 12; ++i) m += d.seasonal.values()[i];
        CHECK(std::abs(m / 12.0) <= 1e-6 * ymax);
    }
}

TEST_CASE("periodic seasonal is identical across cycles before low-pass removal") {
    // With a pure periodic input, every cycle of S must coincide.
    std::vector<double> y(120);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 50.0 + static_cast<double>((i * 7) % 12);
    const auto d = stl_decompose(monthly(y), StlConfig{});
    for (std::size_t i = 12; i < y.size(); ++i) {
        CHECK(d.seasonal.values()[i] == doctest::Approx(d.seasonal.values()[i - 12]).epsilon(1e-9));
    }
}

TEST_CASE("larger trend windows give smoother trends") {
    const std::size_t n = 168;
    auto noise = gaussian_series(n, 77, 12.0);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        y[i] = 300.0 - 0.4 * t + (t > 100 ? 2.5 * (t - 100) : 0.0) + 20.0 * std::sin(2.0 * std::numbers::pi * t / 12.0) +
               noise[i];
    }
    double previous = 1e300;
    for (int w : {5, 9, 13, 19}) {
        StlConfig cfg;
        cfg.trend_window = w;
        const double tv = total_variation(stl_decompose(monthly(y), cfg).trend.values());
        CHECK(tv < previous);
        previous = tv;
    }
}

TEST_CASE("STL robustness downweights an outlier") {
    std::vector<double> y(96);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 100.0 + 5.0 * std::sin(2.0 * std::numbers::pi * i / 12.0);
    y[40] += 400.0;
    StlConfig cfg;
    cfg.outer_iterations = 5;
    cfg.inner_iterations = 1;
    const auto d = stl_decompose(monthly(y), cfg);
    CHECK(d.robustness_weights[40] < 0.01);
    CHECK(std::abs(d.trend.values()[40] - 100.0) < 5.0);
}

TEST_CASE("STL config validation and determinism") {
    CHECK_THROWS_AS(stl_decompose(monthly(std::vector<double>(23, 1.0)), StlConfig{}), DataError);
    StlConfig even;
    even.trend_window = 8;
    CHECK_THROWS_AS(even.validate(), ConfigError);
    StlConfig tiny;
    tiny.period = 1;
    CHECK_THROWS_AS(tiny.validate(), ConfigError);
    StlConfig neg;
    neg.outer_iterations = -1;
    CHECK_THROWS_AS(neg.validate(), ConfigError);

    const auto y = gaussian_series(72, 4, 3.0);
    StlConfig cfg;
    cfg.seasonal_window = SeasonalWindow::span(7);
    cfg.outer_iterations = 2;
    std::ostringstream a;
    std::ostringstream b;
    stl_decompose(monthly(y), cfg).write_csv(a);
    stl_decompose(monthly(y), cfg).write_csv(b);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("month,trend,seasonal,remainder\n2006-01,", 0) == 0);
}
