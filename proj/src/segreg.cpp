#include "trendlens/segreg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "trendlens/error.hpp"
#include "trendlens/random.hpp"
#include "trendlens/student_t.hpp"

namespace trendlens {

namespace {

constexpr double kMinIncrement = 1e-12;
constexpr int kMaxHalvings = 10;
constexpr int kMaxPolishRounds = 200;
constexpr double kMaxProfileTuples = 20000;
constexpr std::size_t kMinProfileStride = 3;

struct Ols {
    Eigen::VectorXd coef;
    Eigen::VectorXd se;
    double rss = 0.0;
};

std::optional<Ols> ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool with_se) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-12);
    if (qr.rank() < x.cols()) return std::nullopt;
    Ols out;
    out.coef = qr.solve(y);
    out.rss = (y - x * out.coef).squaredNorm();
    if (with_se) {
        const auto dof = static_cast<double>(x.rows() - x.cols());
        const double sigma2 = dof > 0 ? out.rss / dof : 0.0;
        const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
        out.se = (sigma2 * xtx_inv.diagonal()).cwiseSqrt();
    }
    return out;
}

Eigen::MatrixXd design(std::span<const double> t, const std::vector<double>& psi, bool with_indicators) {
    const auto n = static_cast<Eigen::Index>(t.size());
    const auto k = static_cast<Eigen::Index>(psi.size());
    Eigen::MatrixXd x(n, 2 + k * (with_indicators ? 2 : 1));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ti = t[static_cast<std::size_t>(i)];
        x(i, 0) = 1.0;
        x(i, 1) = ti;
        for (Eigen::Index j = 0; j < k; ++j) {
            const double p = psi[static_cast<std::size_t>(j)];
            x(i, 2 + j) = std::max(ti - p, 0.0);
            if (with_indicators) x(i, 2 + k + j) = ti > p ? -1.0 : 0.0;
        }
    }
    return x;
}

Eigen::VectorXd as_vector(std::span<const double> y) {
    return Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
}

bool valid_breakpoints(std::span<const double> t, const std::vector<double>& psi) {
    const double lo = t.front();
    const double hi = t.back();
    for (std::size_t k = 0; k < psi.size(); ++k) {
        if (!std::isfinite(psi[k]) || psi[k] <= lo || psi[k] >= hi) return false;
        if (k && !(psi[k] > psi[k - 1])) return false;
    }
    return true;
}

// Every segment keeps at least two sample times so the linearized design
// stays full rank.
bool separated(std::span<const double> t, const std::vector<double>& psi) {
    if (!valid_breakpoints(t, psi)) return false;
    std::size_t i = 0;
    for (std::size_t k = 0; k <= psi.size(); ++k) {
        const double upper = k < psi.size() ? psi[k] : std::numeric_limits<double>::infinity();
        std::size_t count = 0;
        while (i < t.size() && t[i] <= upper) {
            ++count;
            ++i;
        }
        if (count < 2) return false;
    }
    return true;
}

std::optional<double> rss_at(std::span<const double> t, const Eigen::VectorXd& y, const std::vector<double>& psi) {
    if (!valid_breakpoints(t, psi)) return std::nullopt;
    auto fit = ols(design(t, psi, false), y, false);
    if (!fit) return std::nullopt;
    return fit->rss;
}

// Coefficients at fixed breakpoints plus delta-method standard errors.
std::optional<SegmentedFit> finalize(std::span<const double> t, const Eigen::VectorXd& y, const std::vector<double>& psi) {
    if (!valid_breakpoints(t, psi)) return std::nullopt;
    auto base = ols(design(t, psi, false), y, false);
    if (!base) return std::nullopt;
    const auto k = psi.size();

    SegmentedFit fit;
    fit.intercept = base->coef(0);
    fit.slope = base->coef(1);
    for (std::size_t j = 0; j < k; ++j) fit.increments.push_back(base->coef(static_cast<Eigen::Index>(2 + j)));
    fit.breakpoints = psi;
    fit.rss = base->rss;

    const auto n = t.size();
    const double dof = static_cast<double>(n) - 2.0 - 2.0 * static_cast<double>(k);
    const double tq = dof > 0 ? student_t_quantile(0.975, dof) : std::numeric_limits<double>::quiet_NaN();
    auto aug = ols(design(t, psi, true), y, true);
    for (std::size_t j = 0; j < k; ++j) {
        double se = std::numeric_limits<double>::quiet_NaN();
        if (aug) {
            const double delta = aug->coef(static_cast<Eigen::Index>(2 + j));
            const double se_gamma = aug->se(static_cast<Eigen::Index>(2 + k + j));
            if (std::abs(delta) > kMinIncrement) se = se_gamma / std::abs(delta);
        }
        fit.breakpoint_se.push_back(se);
        fit.intervals.emplace_back(psi[j] - tq * se, psi[j] + tq * se);
    }
    return fit;
}

struct ChainResult {
    std::vector<double> psi;
    double rss;
    bool converged;
    int iterations;
    std::vector<double> history;
};

// Linearization steps from the chain's current point. False on degeneracy.
bool descend(std::span<const double> t, const Eigen::VectorXd& y, ChainResult& out, const SegregConfig& cfg) {
    const auto k = out.psi.size();
    out.converged = false;
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        ++out.iterations;
        auto aug = ols(design(t, out.psi, true), y, false);
        if (!aug) return false;

        std::vector<double> step(k);
        for (std::size_t j = 0; j < k; ++j) {
            const double delta = aug->coef(static_cast<Eigen::Index>(2 + j));
            const double gamma = aug->coef(static_cast<Eigen::Index>(2 + k + j));
            if (std::abs(delta) < kMinIncrement) return false;
            step[j] = gamma / delta;
        }

        bool accepted = false;
        double scale = 1.0;
        for (int h = 0; h <= kMaxHalvings; ++h, scale *= 0.5) {
            std::vector<double> next(k);
            for (std::size_t j = 0; j < k; ++j) next[j] = out.psi[j] + scale * step[j];
            if (!separated(t, next)) continue;
            auto next_rss = rss_at(t, y, next);
            if (!next_rss || *next_rss > out.rss) continue;

            double moved = 0.0;
            for (std::size_t j = 0; j < k; ++j) moved = std::max(moved, std::abs(next[j] - out.psi[j]));
            out.psi = std::move(next);
            out.rss = *next_rss;
            out.history.push_back(out.rss);
            accepted = true;
            if (moved < cfg.tolerance) out.converged = true;
            break;
        }
        // No step lowers rss: the current point is a local minimum.
        if (!accepted) out.converged = true;
        if (out.converged) return true;
    }
    return true;
}

// Best single-coordinate move of one sample spacing, if it lowers rss.
std::optional<std::pair<std::vector<double>, double>> polish_move(std::span<const double> t, const Eigen::VectorXd& y,
                                                                  const ChainResult& at) {
    const double spacing = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    std::optional<std::pair<std::vector<double>, double>> best;
    for (std::size_t j = 0; j < at.psi.size(); ++j) {
        for (double d : {-spacing, spacing}) {
            auto psi = at.psi;
            psi[j] += d;
            if (!separated(t, psi)) continue;
            auto rss = rss_at(t, y, psi);
            if (!rss || *rss >= (best ? best->second : at.rss)) continue;
            best.emplace(std::move(psi), *rss);
        }
    }
    return best;
}

// Linearization to a stationary point, then unit moves across the kinks of
// the rss profile (at sample times) where the linearization stalls.
std::optional<ChainResult> run_chain(std::span<const double> t, const Eigen::VectorXd& y, std::vector<double> psi,
                                     const SegregConfig& cfg) {
    std::sort(psi.begin(), psi.end());
    if (!separated(t, psi)) return std::nullopt;
    auto rss = rss_at(t, y, psi);
    if (!rss) return std::nullopt;

    ChainResult out{psi, *rss, false, 0, {*rss}};
    if (!descend(t, y, out, cfg)) return std::nullopt;
    for (int round = 0; round < kMaxPolishRounds && out.converged; ++round) {
        auto move = polish_move(t, y, out);
        if (!move) break;
        out.psi = std::move(move->first);
        out.rss = move->second;
        out.history.push_back(out.rss);
        if (!descend(t, y, out, cfg)) return std::nullopt;
    }
    return out;
}

// Best tuples of a coarse breakpoint grid, used as extra chain starts.
std::vector<std::vector<double>> profile_seeds(std::span<const double> t, const Eigen::VectorXd& y, int k, int count) {
    std::vector<std::vector<double>> out;
    if (count <= 0) return out;
    const auto n = t.size();
    std::size_t stride = 1;
    const auto tuples = [&](std::size_t s) {
        double c = 1.0;
        const double m = static_cast<double>((n - 2) / s);
        for (int j = 0; j < k; ++j) c *= (m - j) / (j + 1);
        return c;
    };
    while (tuples(stride) > kMaxProfileTuples) ++stride;
    if (stride < kMinProfileStride) stride = kMinProfileStride;

    std::vector<std::size_t> grid;
    for (std::size_t i = stride; i + 1 < n; i += stride) grid.push_back(i);
    if (grid.size() < static_cast<std::size_t>(k)) return out;

    std::vector<std::pair<double, std::vector<double>>> scored;
    std::vector<std::size_t> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        std::vector<double> psi;
        for (auto i : idx) psi.push_back(t[grid[i]]);
        if (separated(t, psi)) {
            if (auto rss = rss_at(t, y, psi)) scored.emplace_back(*rss, std::move(psi));
        }
        // Next combination in lexicographic order.
        int j = k - 1;
        while (j >= 0 && idx[static_cast<std::size_t>(j)] == grid.size() - static_cast<std::size_t>(k - j)) --j;
        if (j < 0) break;
        ++idx[static_cast<std::size_t>(j)];
        for (auto m = static_cast<std::size_t>(j) + 1; m < idx.size(); ++m) idx[m] = idx[m - 1] + 1;
    }
    const auto keep = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(count));
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end());
    for (std::size_t i = 0; i < keep; ++i) out.push_back(std::move(scored[i].second));
    return out;
}

std::vector<double> initial_guess(std::span<const double> t, const SegregConfig& cfg) {
    if (!cfg.initial.empty()) return cfg.initial;
    std::vector<double> psi;
    const auto n = t.size();
    for (int k = 1; k <= cfg.n_breakpoints; ++k) {
        const double h = static_cast<double>(n - 1) * k / (cfg.n_breakpoints + 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, n - 1);
        psi.push_back(t[lo] + (h - static_cast<double>(lo)) * (t[hi] - t[lo]));
    }
    return psi;
}

std::vector<double> jittered(std::span<const double> t, std::vector<double> psi, const SegregConfig& cfg,
                             std::uint64_t stream) {
    std::mt19937_64 rng(substream_seed(cfg.seed, stream));
    std::uniform_real_distribution<double> u(-cfg.jitter, cfg.jitter);
    const double lo = t.front();
    const double hi = t.back();
    for (auto& p : psi) p = std::clamp(p + u(rng), lo + 0.5, hi - 0.5);
    std::sort(psi.begin(), psi.end());
    return psi;
}

void check_inputs(std::span<const double> t, std::span<const double> y) {
    if (t.size() != y.size()) throw ConfigError("segmented regression: t and y lengths differ");
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (!(t[i] > t[i - 1])) throw ConfigError("segmented regression: t must be strictly increasing");
    }
}

std::vector<double> month_axis(const MonthlySeries& s) {
    std::vector<double> t(s.size());
    std::iota(t.begin(), t.end(), 0.0);
    return t;
}

}  // namespace

void SegregConfig::validate(std::size_t n) const {
    if (n_breakpoints < 1) throw ConfigError("segmented regression: need at least one breakpoint");
    if (static_cast<std::size_t>(4 * (n_breakpoints + 1)) > n) {
        throw DataError(fmt::format("segmented regression: {} observations are too few for {} breakpoints", n,
                                    n_breakpoints));
    }
    if (!initial.empty() && initial.size() != static_cast<std::size_t>(n_breakpoints)) {
        throw ConfigError("segmented regression: initial guesses must match the breakpoint count");
    }
    if (max_iterations < 1 || restarts < 1) throw ConfigError("segmented regression: iterations and restarts must be >= 1");
    if (!(tolerance > 0.0) || jitter < 0.0) throw ConfigError("segmented regression: bad tolerance or jitter");
    if (profile_seeds < 0) throw ConfigError("segmented regression: profile seeds must be >= 0");
}

nlohmann::json SegregConfig::to_json() const {
    return {{"n_breakpoints", n_breakpoints}, {"initial", initial},   {"max_iterations", max_iterations},
            {"tolerance", tolerance},         {"restarts", restarts}, {"jitter", jitter},
            {"profile_seeds", profile_seeds}, {"seed", seed}};
}

double SegmentedFit::predict(double t) const {
    double v = intercept + slope * t;
    for (std::size_t k = 0; k < breakpoints.size(); ++k) v += increments[k] * std::max(t - breakpoints[k], 0.0);
    return v;
}

nlohmann::json SegmentedFit::to_json(YearMonth start) const {
    const auto month = [&](double pos) {
        return std::isfinite(pos) ? nlohmann::json((start + static_cast<std::int64_t>(std::lround(pos))).to_string())
                                  : nlohmann::json(nullptr);
    };
    const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json bps = nlohmann::json::array();
    for (std::size_t k = 0; k < breakpoints.size(); ++k) {
        bps.push_back({{"position", breakpoints[k]},
                       {"month", month(breakpoints[k])},
                       {"se", num(breakpoint_se[k])},
                       {"interval", {num(intervals[k].first), num(intervals[k].second)}},
                       {"interval_months", {month(intervals[k].first), month(intervals[k].second)}},
                       {"slope_increment", increments[k]}});
    }
    return {{"start", start.to_string()}, {"intercept", intercept}, {"slope", slope},   {"breakpoints", bps},
            {"rss", rss},                 {"converged", converged}, {"iterations", iterations}};
}

SegmentedFit fit_at_breakpoints(std::span<const double> t, std::span<const double> y,
                                const std::vector<double>& breakpoints) {
    check_inputs(t, y);
    auto fit = finalize(t, as_vector(y), breakpoints);
    if (!fit) throw NumericalError("segmented regression: breakpoints give a singular design");
    fit->converged = true;
    return *fit;
}

SegmentedFit fit_segmented(std::span<const double> t, std::span<const double> y, const SegregConfig& cfg) {
    check_inputs(t, y);
    cfg.validate(t.size());
    const auto yv = as_vector(y);
    const auto start = initial_guess(t, cfg);

    std::vector<std::vector<double>> starts{start};
    for (int chain = 1; chain < cfg.restarts; ++chain) {
        starts.push_back(jittered(t, start, cfg, static_cast<std::uint64_t>(chain)));
    }
    for (auto& seed : profile_seeds(t, yv, cfg.n_breakpoints, cfg.profile_seeds)) starts.push_back(std::move(seed));

    std::optional<ChainResult> best;
    for (const auto& psi0 : starts) {
        auto res = run_chain(t, yv, psi0, cfg);
        if (!res) continue;
        if (!best || std::tie(res->rss, res->psi) < std::tie(best->rss, best->psi)) best = std::move(res);
    }
    if (!best) throw NumericalError("segmented regression: no stable breakpoint configuration");

    auto fit = finalize(t, yv, best->psi);
    if (!fit) throw NumericalError("segmented regression: no stable breakpoint configuration");
    fit->converged = best->converged;
    fit->iterations = best->iterations;
    fit->rss_history = std::move(best->history);
    return *fit;
}

SegmentedFit fit_segmented(const MonthlySeries& series, const SegregConfig& config) {
    const auto t = month_axis(series);
    return fit_segmented(t, series.values(), config);
}

SegmentedFit fit_segmented_exhaustive(std::span<const double> t, std::span<const double> y, int n_breakpoints) {
    check_inputs(t, y);
    if (n_breakpoints < 1 || n_breakpoints > 2) throw ConfigError("exhaustive fit supports one or two breakpoints");
    if (t.size() > 300) throw ConfigError("exhaustive fit is limited to 300 observations");
    const auto n = t.size();
    if (n < 4 * static_cast<std::size_t>(n_breakpoints + 1)) throw DataError("exhaustive fit: series too short");
    const double interior = static_cast<double>(n - 2);
    const double candidates = n_breakpoints == 1 ? interior : interior * (interior - 1.0) / 2.0;
    if (candidates > 1e6) throw ConfigError("exhaustive fit: grid exceeds 10^6 candidates");

    const auto yv = as_vector(y);
    std::optional<std::pair<double, std::vector<double>>> best;
    const auto consider = [&](std::vector<double> psi) {
        auto rss = rss_at(t, yv, psi);
        if (rss && (!best || *rss < best->first)) best.emplace(*rss, std::move(psi));
    };
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (n_breakpoints == 1) {
            consider({t[i]});
            continue;
        }
        for (std::size_t j = i + 1; j + 1 < n; ++j) consider({t[i], t[j]});
    }
    if (!best) throw NumericalError("exhaustive fit: every candidate design is singular");
    auto fit = finalize(t, yv, best->second);
    fit->converged = true;
    return *fit;
}

SegmentedFit fit_segmented_exhaustive(const MonthlySeries& series, int n_breakpoints) {
    const auto t = month_axis(series);
    return fit_segmented_exhaustive(t, series.values(), n_breakpoints);
}

StabilityReport stability_probe(std::span<const double> t, std::span<const double> y, const SegregConfig& config,
                                int runs) {
    check_inputs(t, y);
    config.validate(t.size());
    if (runs < 2) throw ConfigError("stability probe needs at least two runs");
    const auto yv = as_vector(y);
    const auto start = initial_guess(t, config);

    StabilityReport rep;
    for (int r = 0; r < runs; ++r) {
        auto psi0 = jittered(t, start, config, 0x5EED0000ULL + static_cast<std::uint64_t>(r));
        auto res = run_chain(t, yv, psi0, config);
        if (!res || !res->converged) {
            ++rep.failed_runs;
            continue;
        }
        rep.runs.push_back(res->psi);
    }
    const auto k = static_cast<std::size_t>(config.n_breakpoints);
    rep.spread.assign(k, 0.0);
    for (std::size_t j = 0; j < k && !rep.runs.empty(); ++j) {
        double lo = rep.runs.front()[j];
        double hi = lo;
        for (const auto& run : rep.runs) {
            lo = std::min(lo, run[j]);
            hi = std::max(hi, run[j]);
        }
        rep.spread[j] = hi - lo;
    }
    rep.unstable = rep.runs.size() < 2 ||
                   std::any_of(rep.spread.begin(), rep.spread.end(), [](double s) { return s > kUnstableSpreadMonths; });
    return rep;
}

StabilityReport stability_probe(const MonthlySeries& series, const SegregConfig& config, int runs) {
    const auto t = month_axis(series);
    return stability_probe(t, series.values(), config, runs);
}

nlohmann::json StabilityReport::to_json() const {
    return {{"runs", runs}, {"failed_runs", failed_runs}, {"spread", spread}, {"unstable", unstable}};
}

}  // namespace trendlens
