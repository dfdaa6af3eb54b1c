#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendlens/series.hpp"

namespace trendlens {

struct WelchSummary {
    double mean = 0.0;
    double sd = 0.0;  // sample, n-1
    std::size_t n = 0;

    static WelchSummary of(const Summary& s) { return {s.mean, s.sd, s.n}; }
    static WelchSummary of(const MonthlySeries& series) { return of(summarize(series)); }
};

/// One-sided alternative: Greater means the after-mean exceeds the before-mean.
enum class Tail { Less, Greater };

struct WelchResult {
    WelchSummary before;
    WelchSummary after;
    double t_statistic = 0.0;  // oriented so that larger supports the alternative
    double dof = 0.0;
    double critical = 0.0;
    double alpha = 0.05;
    Tail tail = Tail::Greater;
    bool significant = false;
    double percent_change = 0.0;

    nlohmann::json to_json() const;

    /// before_mean,before_sd,before_n,after_mean,after_sd,after_n,t,t_s,significant,percent
    static std::vector<std::string> csv_header();
    std::vector<std::string> csv_fields() const;
};

/// (mean_b - mean_a) / sqrt(sd_b^2/n_b + sd_a^2/n_a).
double welch_t(const WelchSummary& before, const WelchSummary& after);

/// Welch-Satterthwaite effective degrees of freedom.
double welch_satterthwaite_dof(const WelchSummary& before, const WelchSummary& after);

WelchResult welch_test(const WelchSummary& before, const WelchSummary& after, double alpha, Tail tail);

/// Tail matching the sign of the observed change (ties test for an increase).
Tail observed_direction(const WelchSummary& before, const WelchSummary& after);

}  // namespace trendlens
