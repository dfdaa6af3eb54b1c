#include "trendlens/student_t.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "trendlens/error.hpp"

namespace trendlens {

namespace {

constexpr double kTiny = 1e-300;
constexpr double kEps = 1e-16;

// Continued fraction for I_x(a,b), valid for x < (a+1)/(a+b+2).
double beta_fraction(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw NumericalError(fmt::format("incomplete beta failed to converge (a={}, b={}, x={})", a, b, x));
}

// I_x(a,b) with y = 1 - x supplied separately to avoid cancellation.
double incomplete_beta_xy(double a, double b, double x, double y) {
    if (x <= 0.0) return 0.0;
    if (y <= 0.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(y);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
    return 1.0 - front * beta_fraction(b, a, y) / b;
}

// P(T > t) for t >= 0.
double upper_tail(double t, double dof) {
    const double t2 = t * t;
    const double x = dof / (dof + t2);
    const double y = t2 / (dof + t2);
    return 0.5 * incomplete_beta_xy(0.5 * dof, 0.5, x, y);
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
        throw ConfigError("incomplete_beta: need a, b > 0 and x in [0, 1]");
    }
    return incomplete_beta_xy(a, b, x, 1.0 - x);
}

double student_t_cdf(double t, double dof) {
    if (!(dof > 0.0)) throw ConfigError("student_t_cdf: dof must be > 0");
    if (std::isnan(t)) return t;
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double tail = upper_tail(std::abs(t), dof);
    return t >= 0.0 ? 1.0 - tail : tail;
}

double student_t_pdf(double t, double dof) {
    if (!(dof > 0.0)) throw ConfigError("student_t_pdf: dof must be > 0");
    const double log_norm = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                            0.5 * std::log(dof * std::numbers::pi);
    return std::exp(log_norm - 0.5 * (dof + 1.0) * std::log1p(t * t / dof));
}

double student_t_quantile(double p, double dof) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError(fmt::format("student_t_quantile: p = {} not in (0, 1)", p));
    if (!(dof > 0.0)) throw ConfigError(fmt::format("student_t_quantile: dof = {} must be > 0", dof));
    if (p == 0.5) return 0.0;

    // Solve upper_tail(t) = q on t > 0, then restore the sign.
    const double q = p < 0.5 ? p : 1.0 - p;
    double lo = 0.0;
    double hi = 1.0;
    while (upper_tail(hi, dof) > q) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) throw NumericalError("student_t_quantile: failed to bracket");
    }

    double t = 0.5 * (lo + hi);
    for (int iter = 0; iter < 300; ++iter) {
        const double f = upper_tail(t, dof) - q;
        if (f == 0.0) break;
        // upper_tail decreases in t
        if (f > 0.0) {
            lo = t;
        } else {
            hi = t;
        }
        const double deriv = -student_t_pdf(t, dof);
        double next = deriv != 0.0 ? t - f / deriv : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - t);
        t = next;
        if (step <= 1e-14 * std::max(1.0, std::abs(t)) || hi - lo <= 1e-15 * std::max(1.0, hi)) break;
    }
    return p < 0.5 ? -t : t;
}

}  // namespace trendlens
