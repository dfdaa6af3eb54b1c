#include "trendlens/mosum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "trendlens/error.hpp"
#include "trendlens/random.hpp"

namespace trendlens {

namespace {

struct WindowStats {
    double mean;
    double var;  // denominator len - 1
};

WindowStats window_stats(std::span<const double> x, std::size_t begin, std::size_t len) {
    double mean = 0.0;
    for (std::size_t i = begin; i < begin + len; ++i) mean += x[i];
    mean /= static_cast<double>(len);
    double ss = 0.0;
    for (std::size_t i = begin; i < begin + len; ++i) ss += (x[i] - mean) * (x[i] - mean);
    return {mean, ss / static_cast<double>(std::max<std::size_t>(len - 1, 1))};
}

double series_variance(std::span<const double> x) {
    return window_stats(x, 0, x.size()).var;
}

std::size_t argmax_in(const Trace& trace, std::size_t lo, std::size_t hi) {
    std::size_t best = lo;
    double best_v = -1.0;
    for (std::size_t i = lo; i <= hi; ++i) {
        if (trace[i] && *trace[i] > best_v) {
            best_v = *trace[i];
            best = i;
        }
    }
    return best;
}

double quantile7(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string_view rule_name(VarianceRule r) {
    switch (r) {
        case VarianceRule::Average: return "average";
        case VarianceRule::Min: return "min";
        case VarianceRule::Max: return "max";
    }
    return "average";
}

}  // namespace

void MosumConfig::validate(std::size_t length) const {
    if (bandwidth < 1) throw ConfigError("mosum: bandwidth G must be >= 1");
    if (2 * static_cast<std::size_t>(bandwidth) >= length) {
        throw ConfigError(fmt::format("mosum: 2G = {} must be smaller than the series length {}", 2 * bandwidth, length));
    }
    if (!(eta > 0.0)) throw ConfigError("mosum: eta must be > 0");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("mosum: epsilon must be in (0, 1]");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("mosum: alpha must be in (0, 1)");
    if (bootstrap_replicates < 0) throw ConfigError("mosum: bootstrap replicates must be >= 0");
}

nlohmann::json MosumConfig::to_json() const {
    return {{"bandwidth", bandwidth},     {"eta", eta},
            {"epsilon", epsilon},         {"alpha", alpha},
            {"variance_rule", rule_name(variance_rule)},
            {"bootstrap_replicates", bootstrap_replicates},
            {"seed", seed}};
}

Trace mosum_statistic(std::span<const double> x, int bandwidth, VarianceRule rule) {
    const auto n = x.size();
    if (bandwidth < 1 || 2 * static_cast<std::size_t>(bandwidth) >= n) {
        throw DataError(fmt::format("mosum: series length {} must exceed 2G = {}", n, 2 * bandwidth));
    }
    const auto g = static_cast<std::size_t>(bandwidth);
    const double var_floor = 1e-12 * series_variance(x);
    const double norm = std::sqrt(2.0 / static_cast<double>(g));

    Trace trace(n);
    for (std::size_t t = g; t < n - g; ++t) {
        const auto prior = window_stats(x, t - g, g);
        const auto after = window_stats(x, t, g);
        double var = 0.0;
        switch (rule) {
            case VarianceRule::Average: var = 0.5 * (prior.var + after.var); break;
            case VarianceRule::Min: var = std::min(prior.var, after.var); break;
            case VarianceRule::Max: var = std::max(prior.var, after.var); break;
        }
        var = std::max(var, var_floor);
        const double diff = std::abs(after.mean - prior.mean);
        trace[t] = var > 0.0 ? diff / (std::sqrt(var) * norm) : 0.0;
    }
    return trace;
}

Trace mosum_statistic(const SlopeSeries& series, int bandwidth, VarianceRule rule) {
    return mosum_statistic(series.values(), bandwidth, rule);
}

double mosum_threshold(std::size_t n, int bandwidth, double alpha) {
    if (bandwidth < 1 || static_cast<std::size_t>(2 * bandwidth) >= n) {
        throw ConfigError("mosum threshold: need n > 2G >= 2");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("mosum threshold: alpha must be in (0, 1)");
    const double ratio = static_cast<double>(n) / bandwidth;
    const double log_ratio = std::log(ratio);
    const double a = std::sqrt(2.0 * log_ratio);
    const double b = 2.0 * log_ratio + 0.5 * std::log(std::log(std::max(ratio, std::numbers::e))) +
                     std::log(3.0 / (2.0 * std::sqrt(std::numbers::pi)));
    const double q = -std::log(-0.5 * std::log1p(-alpha));
    return (b + q) / a;
}

std::vector<std::pair<std::size_t, std::size_t>> bootstrap_intervals(std::span<const double> x,
                                                                     const std::vector<std::size_t>& change_points,
                                                                     const MosumConfig& config) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (auto cp : change_points) out.emplace_back(cp, cp);
    if (change_points.empty() || config.bootstrap_replicates == 0) return out;

    const auto n = x.size();
    const auto g = static_cast<std::size_t>(config.bandwidth);

    // Piecewise-constant fit between consecutive change points.
    std::vector<double> fit(n);
    std::size_t seg_begin = 0;
    for (std::size_t s = 0; s <= change_points.size(); ++s) {
        const std::size_t seg_end = s < change_points.size() ? change_points[s] : n;
        double mean = 0.0;
        for (std::size_t i = seg_begin; i < seg_end; ++i) mean += x[i];
        mean /= static_cast<double>(std::max<std::size_t>(seg_end - seg_begin, 1));
        for (std::size_t i = seg_begin; i < seg_end; ++i) fit[i] = mean;
        seg_begin = seg_end;
    }
    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = x[i] - fit[i];

    std::vector<std::vector<double>> shifts(change_points.size());
    std::vector<double> sample(n);
    for (int r = 0; r < config.bootstrap_replicates; ++r) {
        std::mt19937_64 rng(substream_seed(config.seed, static_cast<std::uint64_t>(r)));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::size_t i = 0; i < n; ++i) sample[i] = fit[i] + resid[pick(rng)];
        const auto trace = mosum_statistic(sample, config.bandwidth, config.variance_rule);
        for (std::size_t c = 0; c < change_points.size(); ++c) {
            const auto cp = change_points[c];
            const auto lo = std::max(g, cp >= g ? cp - g : 0);
            const auto hi = std::min(n - g - 1, cp + g);
            const auto moved = argmax_in(trace, lo, hi);
            shifts[c].push_back(static_cast<double>(moved) - static_cast<double>(cp));
        }
    }

    for (std::size_t c = 0; c < change_points.size(); ++c) {
        const auto cp = static_cast<double>(change_points[c]);
        const double lo = cp + std::floor(quantile7(shifts[c], 0.5 * config.alpha));
        const double hi = cp + std::ceil(quantile7(shifts[c], 1.0 - 0.5 * config.alpha));
        out[c].first = static_cast<std::size_t>(std::clamp(std::min(lo, cp), 0.0, static_cast<double>(n - 1)));
        out[c].second = static_cast<std::size_t>(std::clamp(std::max(hi, cp), 0.0, static_cast<double>(n - 1)));
    }
    return out;
}

ChangePointReport detect(std::span<const double> x, const MosumConfig& config, YearMonth start) {
    config.validate(x.size());
    const auto n = x.size();
    const auto g = static_cast<std::size_t>(config.bandwidth);

    ChangePointReport rep;
    rep.start = start;
    rep.config = config;
    rep.trace = mosum_statistic(x, config.bandwidth, config.variance_rule);
    rep.threshold = mosum_threshold(n, config.bandwidth, config.alpha);

    const auto above = [&](std::ptrdiff_t i) {
        return i >= 0 && static_cast<std::size_t>(i) < n && rep.trace[static_cast<std::size_t>(i)] &&
               *rep.trace[static_cast<std::size_t>(i)] > rep.threshold;
    };
    const auto value = [&](std::size_t i) { return rep.trace[i].value_or(-1.0); };
    const auto half = static_cast<std::ptrdiff_t>(std::ceil((config.epsilon * static_cast<double>(g) - 1.0) / 2.0));

    std::vector<std::size_t> candidates;
    for (std::size_t i = g; i < n - g; ++i) {
        if (!above(static_cast<std::ptrdiff_t>(i))) continue;
        if (i > 0 && value(i - 1) > value(i)) continue;
        if (i + 1 < n && value(i + 1) > value(i)) continue;
        bool wide = true;
        for (std::ptrdiff_t d = -half; d <= half && wide; ++d) wide = above(static_cast<std::ptrdiff_t>(i) + d);
        if (wide) candidates.push_back(i);
    }

    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) { return value(a) > value(b); });
    const double min_gap = config.eta * static_cast<double>(g);
    for (auto c : candidates) {
        const bool far = std::all_of(rep.change_points.begin(), rep.change_points.end(), [&](std::size_t k) {
            return std::abs(static_cast<double>(c) - static_cast<double>(k)) >= min_gap;
        });
        if (far) rep.change_points.push_back(c);
    }
    std::sort(rep.change_points.begin(), rep.change_points.end());
    rep.intervals = bootstrap_intervals(x, rep.change_points, config);
    return rep;
}

ChangePointReport detect(const SlopeSeries& series, const MosumConfig& config) {
    return detect(series.values(), config, series.start());
}

nlohmann::json ChangePointReport::to_json() const {
    nlohmann::json tr = nlohmann::json::array();
    for (const auto& v : trace) tr.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    nlohmann::json points = nlohmann::json::array();
    for (std::size_t i = 0; i < change_points.size(); ++i) {
        const auto cp = change_points[i];
        points.push_back({{"index", cp},
                          {"month", (start + static_cast<std::int64_t>(cp)).to_string()},
                          {"statistic", trace[cp].value_or(0.0)},
                          {"interval",
                           {(start + static_cast<std::int64_t>(intervals[i].first)).to_string(),
                            (start + static_cast<std::int64_t>(intervals[i].second)).to_string()}}});
    }
    return {{"start", start.to_string()},
            {"config", config.to_json()},
            {"threshold", threshold},
            {"change_points", points},
            {"trace", tr}};
}

}  // namespace trendlens
