#include "trendlens/stl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "trendlens/error.hpp"
#include "trendlens/loess.hpp"

namespace trendlens {

namespace {

void check_window(int w, const char* name) {
    if (w < 3 || w % 2 == 0) throw ConfigError(fmt::format("stl: {} must be odd and >= 3 (got {})", name, w));
}

std::vector<double> positions(std::size_t n, double first = 1.0) {
    std::vector<double> xs(n);
    std::iota(xs.begin(), xs.end(), first);
    return xs;
}

std::vector<double> moving_average(const std::vector<double>& x, std::size_t len) {
    std::vector<double> out(x.size() - len + 1);
    double acc = std::accumulate(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(len), 0.0);
    out[0] = acc / static_cast<double>(len);
    for (std::size_t i = 1; i < out.size(); ++i) {
        acc += x[i + len - 1] - x[i - 1];
        out[i] = acc / static_cast<double>(len);
    }
    return out;
}

// Smooths every cycle-subseries and evaluates it one period beyond each end.
// Result has n + 2 * period entries; entry period + i aligns with input i.
std::vector<double> smooth_cycle_subseries(const std::vector<double>& detrended, const std::vector<double>& rw,
                                           const StlConfig& cfg) {
    const auto n = detrended.size();
    const auto np = static_cast<std::size_t>(cfg.period);
    std::vector<double> cycle(n + 2 * np, 0.0);

    for (std::size_t j = 0; j < np; ++j) {
        std::vector<double> sub;
        std::vector<double> sub_w;
        for (std::size_t i = j; i < n; i += np) {
            sub.push_back(detrended[i]);
            sub_w.push_back(rw[i]);
        }
        const std::size_t k = sub.size();
        std::vector<double> fitted(k + 2);

        if (cfg.seasonal_window.is_periodic()) {
            double wsum = std::accumulate(sub_w.begin(), sub_w.end(), 0.0);
            double acc = 0.0;
            if (wsum > 0.0) {
                for (std::size_t m = 0; m < k; ++m) acc += sub_w[m] * sub[m];
                acc /= wsum;
            } else {
                acc = std::accumulate(sub.begin(), sub.end(), 0.0) / static_cast<double>(k);
            }
            std::fill(fitted.begin(), fitted.end(), acc);
        } else {
            const auto xs = positions(k);
            const auto at = positions(k + 2, 0.0);
            fitted = loess(xs, sub, at, static_cast<std::size_t>(cfg.seasonal_window.cycles()), cfg.seasonal_degree(),
                           sub_w);
        }
        for (std::size_t m = 0; m < k + 2; ++m) cycle[j + m * np] = fitted[m];
    }
    return cycle;
}

std::vector<double> robustness_weights(const std::vector<double>& residual) {
    std::vector<double> abs_r(residual.size());
    std::transform(residual.begin(), residual.end(), abs_r.begin(), [](double r) { return std::abs(r); });
    std::vector<double> sorted = abs_r;
    const auto n = sorted.size();
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2), sorted.end());
    double med = sorted[n / 2];
    if (n % 2 == 0) {
        const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2));
        med = 0.5 * (med + lower);
    }
    const double h = 6.0 * med;

    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = abs_r[i];
        if (h <= 0.0) {
            w[i] = r <= 0.0 ? 1.0 : 0.0;
        } else if (r <= 0.001 * h) {
            w[i] = 1.0;
        } else if (r <= 0.999 * h) {
            const double u = r / h;
            w[i] = (1.0 - u * u) * (1.0 - u * u);
        } else {
            w[i] = 0.0;
        }
    }
    return w;
}

}  // namespace

int StlConfig::resolved_trend_window() const { return trend_window.value_or(auto_trend_window(period, seasonal_window)); }

int StlConfig::resolved_lowpass_window() const { return lowpass_window.value_or(next_odd(period)); }

void StlConfig::validate() const {
    if (period < 2) throw ConfigError("stl: period must be >= 2");
    if (!seasonal_window.is_periodic()) check_window(seasonal_window.cycles(), "seasonal window");
    if (trend_window) check_window(*trend_window, "trend window");
    if (lowpass_window) check_window(*lowpass_window, "low-pass window");
    if (inner_iterations < 0 || outer_iterations < 0) throw ConfigError("stl: iteration counts must be >= 0");
}

void Decomposition::write_csv(std::ostream& out) const {
    out << "month,trend,seasonal,remainder\n";
    for (std::size_t i = 0; i < trend.size(); ++i) {
        out << fmt::format("{},{},{},{}\n", trend.month_at(i).to_string(), trend[i], seasonal[i], remainder[i]);
    }
}

int next_odd(double x) {
    auto v = static_cast<long long>(std::ceil(x));
    if (v % 2 == 0) ++v;
    return static_cast<int>(v);
}

int auto_trend_window(int period, SeasonalWindow seasonal_window) {
    if (period < 2) throw ConfigError("auto_trend_window: period must be >= 2");
    double denom = 1.0;
    if (!seasonal_window.is_periodic()) {
        const double s = seasonal_window.cycles();
        if (s <= 1.5) throw ConfigError("auto_trend_window: seasonal window must exceed 1.5");
        denom = 1.0 - 1.5 / s;
    }
    return next_odd(std::ceil(1.5 * period / denom));
}

Decomposition stl_decompose(const MonthlySeries& series, const StlConfig& cfg) {
    cfg.validate();
    const auto n = series.size();
    const auto np = static_cast<std::size_t>(cfg.period);
    if (n < 2 * np) {
        throw DataError(fmt::format("stl: series of {} months is shorter than two periods ({})", n, 2 * np));
    }
    const auto trend_span = static_cast<std::size_t>(cfg.resolved_trend_window());
    const auto lowpass_span = static_cast<std::size_t>(cfg.resolved_lowpass_window());
    check_window(static_cast<int>(trend_span), "trend window");

    const auto& y = series.values();
    const auto xs = positions(n);
    std::vector<double> trend(n, 0.0);
    std::vector<double> seasonal(n, 0.0);
    std::vector<double> rw(n, 1.0);
    std::vector<double> work(n);

    for (int outer = 0;; ++outer) {
        for (int inner = 0; inner < cfg.inner_iterations; ++inner) {
            for (std::size_t i = 0; i < n; ++i) work[i] = y[i] - trend[i];
            const auto cycle = smooth_cycle_subseries(work, rw, cfg);

            // Low-pass: MA(np), MA(np), MA(3), then loess.
            auto lp = moving_average(moving_average(moving_average(cycle, np), np), 3);
            lp = loess(xs, lp, xs, lowpass_span, 1);

            for (std::size_t i = 0; i < n; ++i) seasonal[i] = cycle[np + i] - lp[i];
            for (std::size_t i = 0; i < n; ++i) work[i] = y[i] - seasonal[i];
            trend = loess(xs, work, xs, trend_span, 1, rw);
        }
        if (outer >= cfg.outer_iterations) break;
        for (std::size_t i = 0; i < n; ++i) work[i] = y[i] - trend[i] - seasonal[i];
        rw = robustness_weights(work);
    }
    if (cfg.outer_iterations == 0) std::fill(rw.begin(), rw.end(), 1.0);

    std::vector<double> remainder(n);
    for (std::size_t i = 0; i < n; ++i) remainder[i] = y[i] - trend[i] - seasonal[i];

    const auto& label = series.label();
    return Decomposition{
        MonthlySeries(series.start(), std::move(trend), label + ":trend"),
        MonthlySeries(series.start(), std::move(seasonal), label + ":seasonal"),
        MonthlySeries(series.start(), std::move(remainder), label + ":remainder"),
        std::move(rw),
    };
}

}  // namespace trendlens
