#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendlens/series.hpp"

namespace trendlens {

struct SegregConfig {
    int n_breakpoints = 2;
    std::vector<double> initial;  // explicit starting breakpoints; empty = k/(K+1) quantiles of time
    int max_iterations = 50;
    double tolerance = 1e-6;  // months
    int restarts = 10;        // chains, the first one unjittered
    double jitter = 6.0;      // uniform +- months around the initial guesses
    int profile_seeds = 5;    // extra chains started at the best tuples of a coarse breakpoint grid
    std::uint64_t seed = 0;

    void validate(std::size_t n) const;
    nlohmann::json to_json() const;
};

/// Continuous piecewise-linear fit
///
///     y = intercept + slope*t + sum_k increments[k] * (t - breakpoints[k])_+
struct SegmentedFit {
    double intercept = 0.0;
    double slope = 0.0;
    std::vector<double> increments;
    std::vector<double> breakpoints;
    std::vector<double> breakpoint_se;
    std::vector<std::pair<double, double>> intervals;  // 95%
    double rss = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<double> rss_history;  // rss after each accepted iteration

    double predict(double t) const;

    /// Breakpoint positions are month offsets from `start`.
    nlohmann::json to_json(YearMonth start) const;
};

/// Iterative linearization: at the current breakpoints regress y on
/// [1, t, (t - psi_k)_+, -1{t > psi_k}], move psi_k by gamma_k / delta_k with
/// step halving whenever rss would grow, and stop once no breakpoint moves
/// more than the tolerance. The rss profile has kinks at the sample times
/// where the linearization stalls; single-spacing moves that lower rss
/// restart it from there. Every segment keeps at least two samples.
/// Chains start from the initial guesses, their jittered copies and the best
/// tuples of a coarse breakpoint grid; the best chain wins by (rss, psi).
/// Standard errors by the delta method, se(psi) = se(gamma) / |delta|.
SegmentedFit fit_segmented(std::span<const double> t, std::span<const double> y, const SegregConfig& config);
SegmentedFit fit_segmented(const MonthlySeries& series, const SegregConfig& config);

/// Exact rss minimiser with breakpoints restricted to interior sample
/// times; n_breakpoints <= 2 and at most 300 observations.
SegmentedFit fit_segmented_exhaustive(std::span<const double> t, std::span<const double> y, int n_breakpoints);
SegmentedFit fit_segmented_exhaustive(const MonthlySeries& series, int n_breakpoints);

/// Continuous piecewise-linear least squares at fixed breakpoints.
SegmentedFit fit_at_breakpoints(std::span<const double> t, std::span<const double> y,
                                const std::vector<double>& breakpoints);

struct StabilityReport {
    std::vector<std::vector<double>> runs;  // breakpoints of each successful run
    int failed_runs = 0;
    std::vector<double> spread;  // max - min per breakpoint
    bool unstable = false;

    nlohmann::json to_json() const;
};

inline constexpr double kUnstableSpreadMonths = 6.0;

/// Single-chain re-fits from independently jittered starts; flags the
/// configuration unstable when any breakpoint spreads by more than six
/// months or fewer than two runs converge.
StabilityReport stability_probe(const MonthlySeries& series, const SegregConfig& config, int runs);
StabilityReport stability_probe(std::span<const double> t, std::span<const double> y, const SegregConfig& config,
                                int runs);

}  // namespace trendlens
