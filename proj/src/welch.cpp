#include "trendlens/welch.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "trendlens/error.hpp"
#include "trendlens/student_t.hpp"

namespace trendlens {

namespace {

void check_summary(const WelchSummary& s, const char* which) {
    if (s.n < 2) throw DataError(fmt::format("welch: {} sample needs at least two observations", which));
    if (!(s.sd >= 0.0) || !std::isfinite(s.mean)) throw DataError(fmt::format("welch: {} summary is invalid", which));
}

double standard_error(const WelchSummary& b, const WelchSummary& a) {
    check_summary(b, "before");
    check_summary(a, "after");
    if (b.sd == 0.0 && a.sd == 0.0) throw DataError("welch: both samples have zero variance");
    return std::sqrt(b.sd * b.sd / static_cast<double>(b.n) + a.sd * a.sd / static_cast<double>(a.n));
}

}  // namespace

double welch_t(const WelchSummary& before, const WelchSummary& after) {
    return (before.mean - after.mean) / standard_error(before, after);
}

double welch_satterthwaite_dof(const WelchSummary& before, const WelchSummary& after) {
    standard_error(before, after);
    const double nb = static_cast<double>(before.n);
    const double na = static_cast<double>(after.n);
    const double vb = before.sd * before.sd / nb;
    const double va = after.sd * after.sd / na;
    return (vb + va) * (vb + va) / (vb * vb / (nb - 1.0) + va * va / (na - 1.0));
}

Tail observed_direction(const WelchSummary& before, const WelchSummary& after) {
    return after.mean >= before.mean ? Tail::Greater : Tail::Less;
}

WelchResult welch_test(const WelchSummary& before, const WelchSummary& after, double alpha, Tail tail) {
    if (!(alpha > 0.0 && alpha <= 0.5)) throw ConfigError(fmt::format("welch: alpha = {} not in (0, 0.5]", alpha));
    WelchResult r;
    r.before = before;
    r.after = after;
    r.alpha = alpha;
    r.tail = tail;
    const double t = welch_t(before, after);
    r.t_statistic = tail == Tail::Greater ? -t : t;
    r.dof = welch_satterthwaite_dof(before, after);
    r.critical = student_t_quantile(1.0 - alpha, r.dof);
    r.significant = r.t_statistic > r.critical;
    r.percent_change = before.mean != 0.0 ? 100.0 * (after.mean - before.mean) / before.mean
                                          : std::numeric_limits<double>::quiet_NaN();
    return r;
}

nlohmann::json WelchResult::to_json() const {
    auto summary = [](const WelchSummary& s) { return nlohmann::json{{"mean", s.mean}, {"sd", s.sd}, {"n", s.n}}; };
    nlohmann::json j = {
        {"before", summary(before)},
        {"after", summary(after)},
        {"t", t_statistic},
        {"dof", dof},
        {"t_s", critical},
        {"alpha", alpha},
        {"tail", tail == Tail::Greater ? "greater" : "less"},
        {"significant", significant},
    };
    j["percent_change"] = std::isfinite(percent_change) ? nlohmann::json(percent_change) : nlohmann::json(nullptr);
    return j;
}

std::vector<std::string> WelchResult::csv_header() {
    return {"before_mean", "before_sd", "before_n", "after_mean", "after_sd",
            "after_n",     "t",         "t_s",      "significant", "percent"};
}

std::vector<std::string> WelchResult::csv_fields() const {
    return {
        fmt::format("{:.2f}", before.mean),
        fmt::format("{:.2f}", before.sd),
        fmt::format("{}", before.n),
        fmt::format("{:.2f}", after.mean),
        fmt::format("{:.2f}", after.sd),
        fmt::format("{}", after.n),
        fmt::format("{:.2f}", t_statistic),
        fmt::format("{:.2f}", critical),
        significant ? "yes" : "no",
        std::isfinite(percent_change) ? fmt::format("{:+.1f}", percent_change) : "N/A",
    };
}

}  // namespace trendlens
