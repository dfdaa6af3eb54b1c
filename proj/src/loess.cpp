#include "trendlens/loess.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "trendlens/error.hpp"

namespace trendlens {

namespace {

double tricube(double r, double h) {
    if (h <= 0.0) return r <= 0.0 ? 1.0 : 0.0;
    if (r <= 0.001 * h) return 1.0;
    if (r > 0.999 * h) return 0.0;
    const double u = r / h;
    const double v = 1.0 - u * u * u;
    return v * v * v;
}

// Index range [lo, hi) of the q points nearest to x0 in sorted xs.
std::pair<std::size_t, std::size_t> neighbourhood(std::span<const double> xs, double x0, std::size_t q) {
    const std::size_t n = xs.size();
    if (q >= n) return {0, n};
    std::size_t hi = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), x0) - xs.begin());
    std::size_t lo = hi;
    while (hi - lo < q) {
        if (lo == 0) {
            ++hi;
        } else if (hi == n) {
            --lo;
        } else if (x0 - xs[lo - 1] <= xs[hi] - x0) {
            --lo;
        } else {
            ++hi;
        }
    }
    return {lo, hi};
}

}  // namespace

double loess_at(std::span<const double> xs, std::span<const double> ys, double x0, std::size_t span_points,
                int degree, std::span<const double> weights) {
    const std::size_t n = xs.size();
    const auto [lo, hi] = neighbourhood(xs, x0, span_points);

    double h = std::max(std::abs(x0 - xs[lo]), std::abs(xs[hi - 1] - x0));
    if (span_points > n && n > 1) {
        const double spacing = (xs[n - 1] - xs[0]) / static_cast<double>(n - 1);
        h += 0.5 * static_cast<double>(span_points - n) * spacing;
    }

    const std::size_t m = hi - lo;
    std::vector<double> w(m);
    double wsum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double rw = weights.empty() ? 1.0 : weights[lo + i];
        w[i] = tricube(std::abs(xs[lo + i] - x0), h) * rw;
        wsum += w[i];
    }

    if (wsum <= 0.0) {
        double rsum = 0.0;
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double rw = weights.empty() ? 1.0 : weights[lo + i];
            rsum += rw;
            acc += rw * ys[lo + i];
        }
        if (rsum <= 0.0) throw NumericalError(fmt::format("loess: empty neighbourhood at x = {}", x0));
        return acc / rsum;
    }

    const double scale = h > 0.0 ? h : 1.0;
    for (int d = std::clamp(degree, 0, 2); d > 0; --d) {
        const auto cols = static_cast<Eigen::Index>(d + 1);
        Eigen::MatrixXd design(static_cast<Eigen::Index>(m), cols);
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) {
            const double sw = std::sqrt(w[i]);
            const double u = (xs[lo + i] - x0) / scale;
            double p = sw;
            for (Eigen::Index c = 0; c < cols; ++c) {
                design(static_cast<Eigen::Index>(i), c) = p;
                p *= u;
            }
            rhs(static_cast<Eigen::Index>(i)) = sw * ys[lo + i];
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        qr.setThreshold(1e-10);
        if (qr.rank() == cols) return qr.solve(rhs)(0);
    }

    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += w[i] * ys[lo + i];
    return acc / wsum;
}

std::vector<double> loess(std::span<const double> xs, std::span<const double> ys, std::span<const double> at,
                          std::size_t span_points, int degree, std::span<const double> weights) {
    if (xs.size() != ys.size() || xs.empty()) throw ConfigError("loess: xs and ys must be non-empty and equal length");
    if (!weights.empty() && weights.size() != xs.size()) throw ConfigError("loess: weight length mismatch");
    if (degree < 0 || degree > 2) throw ConfigError("loess: degree must be 0, 1 or 2");
    if (span_points < static_cast<std::size_t>(degree) + 1) throw ConfigError("loess: span smaller than degree + 1");
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (!(xs[i] > xs[i - 1])) throw ConfigError("loess: xs must be strictly increasing");
    }
    std::vector<double> out(at.size());
    for (std::size_t i = 0; i < at.size(); ++i) out[i] = loess_at(xs, ys, at[i], span_points, degree, weights);
    return out;
}

}  // namespace trendlens
