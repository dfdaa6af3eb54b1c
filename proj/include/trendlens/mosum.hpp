#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendlens/series.hpp"

namespace trendlens {

/// How the prior and after window variances combine into the scale estimate.
enum class VarianceRule { Average, Min, Max };

struct MosumConfig {
    int bandwidth = 10;  // G, months
    double eta = 0.4;
    double epsilon = 0.1;  // at G = 10 a single exceeding point suffices
    double alpha = 0.05;
    VarianceRule variance_rule = VarianceRule::Average;
    int bootstrap_replicates = 1000;
    std::uint64_t seed = 0;

    /// Throws ConfigError unless G >= 1, 2G < length, eta > 0,
    /// epsilon in (0, 1], alpha in (0, 1) and replicates >= 0.
    void validate(std::size_t length) const;

    nlohmann::json to_json() const;
};

using Trace = std::vector<std::optional<double>>;

struct ChangePointReport {
    YearMonth start;  // month of index 0 of the analysed slope series
    Trace trace;
    double threshold = 0.0;
    std::vector<std::size_t> change_points;
    std::vector<std::pair<std::size_t, std::size_t>> intervals;  // inclusive, at level 1 - alpha
    MosumConfig config;

    nlohmann::json to_json() const;
};

/// Moving-sum statistic
///
///     |mean(x[t, t+G)) - mean(x[t-G, t))| / (sigma * sqrt(2/G))
///
/// where sigma^2 combines the two window variances (denominator G - 1) by the
/// variance rule. Defined for t in [G, n-G); the first and last G points are
/// empty. Window variances are floored at 1e-12 times the whole-series
/// variance so a noiseless step yields a large finite value; a constant
/// series yields zero everywhere.
Trace mosum_statistic(std::span<const double> x, int bandwidth, VarianceRule rule = VarianceRule::Average);
Trace mosum_statistic(const SlopeSeries& series, int bandwidth, VarianceRule rule = VarianceRule::Average);

/// Asymptotic critical value (b + q) / a with a = sqrt(2 ln(n/G)),
/// b = 2 ln(n/G) + 0.5 ln ln(n/G) + ln(3 / (2 sqrt(pi))) and
/// q = -ln(-0.5 ln(1 - alpha)). The ln ln argument is floored at e.
double mosum_threshold(std::size_t n, int bandwidth, double alpha);

/// Threshold-exceeding local maxima, filtered by the epsilon criterion
/// (every point within a centred window of width >= epsilon*G exceeds the
/// threshold) and the eta criterion (accepted points at least eta*G apart,
/// larger statistic wins, earliest index on ties). Intervals come from
/// `bootstrap_intervals`.
ChangePointReport detect(std::span<const double> x, const MosumConfig& config, YearMonth start = {});
ChangePointReport detect(const SlopeSeries& series, const MosumConfig& config);

/// Percentile bootstrap for change-point locations: residuals around the
/// piecewise-constant fit between detected points are resampled with
/// replacement, each change point is relocated to the maximum of the
/// resampled statistic within +-G, and the alpha/2, 1-alpha/2 quantiles of
/// the relocation give the interval (widened to contain the point). Each
/// replicate draws from its own seed-derived stream.
std::vector<std::pair<std::size_t, std::size_t>> bootstrap_intervals(std::span<const double> x,
                                                                     const std::vector<std::size_t>& change_points,
                                                                     const MosumConfig& config);

}  // namespace trendlens
