#include <doctest.h>

#include <cmath>
#include <numbers>

#include "trendlens/error.hpp"
#include "trendlens/student_t.hpp"
#include "trendlens/welch.hpp"

using namespace trendlens;

namespace {
const WelchSummary kProp47Before{281.4, 33.2, 106};
const WelchSummary kProp47After{322.9, 53.9, 62};
const WelchSummary kNonProp47Before{387.3, 44.8, 106};
const WelchSummary kNonProp47After{337.1, 34.8, 62};
}  // namespace

TEST_CASE("welch_t on the city-wide monthly summaries") {
    CHECK(std::abs(std::abs(welch_t(kProp47Before, kProp47After)) - 5.5) <= 0.05);
    CHECK(std::abs(std::abs(welch_t(kNonProp47Before, kNonProp47After)) - 8.1) <= 0.05);
    CHECK(welch_t(kProp47Before, kProp47Before) == 0.0);
}

TEST_CASE("Welch-Satterthwaite degrees of freedom") {
    CHECK(std::lround(welch_satterthwaite_dof(kProp47Before, kProp47After)) == 89);
    CHECK(std::lround(welch_satterthwaite_dof(kNonProp47Before, kNonProp47After)) == 153);

    SUBCASE("equal sd and n collapse to 2n - 2") {
        const WelchSummary a{10.0, 3.0, 25};
        const WelchSummary b{12.0, 3.0, 25};
        CHECK(welch_satterthwaite_dof(a, b) == doctest::Approx(48.0).epsilon(1e-12));
    }
    SUBCASE("bounded by min(n)-1 and n_b+n_a-2") {
        for (double sb : {0.5, 1.0, 5.0, 40.0}) {
            for (double sa : {0.3, 2.0, 9.0}) {
                for (std::size_t nb : {3u, 20u, 106u}) {
                    for (std::size_t na : {2u, 19u, 62u}) {
                        const double nu = welch_satterthwaite_dof({0, sb, nb}, {1, sa, na});
                        CHECK(nu >= static_cast<double>(std::min(nb, na)) - 1.0 - 1e-9);
                        CHECK(nu <= static_cast<double>(nb + na) - 2.0 + 1e-9);
                    }
                }
            }
        }
    }
}

TEST_CASE("welch_t is antisymmetric and scale invariant") {
    const double t = welch_t(kProp47Before, kProp47After);
    CHECK(welch_t(kProp47After, kProp47Before) == doctest::Approx(-t));
    for (double k : {0.1, 3.0, 250.0}) {
        const WelchSummary b{kProp47Before.mean * k, kProp47Before.sd * k, kProp47Before.n};
        const WelchSummary a{kProp47After.mean * k, kProp47After.sd * k, kProp47After.n};
        CHECK(welch_t(b, a) == doctest::Approx(t).epsilon(1e-12));
        CHECK(welch_satterthwaite_dof(b, a) ==
              doctest::Approx(welch_satterthwaite_dof(kProp47Before, kProp47After)).epsilon(1e-12));
        CHECK(welch_test(b, a, 0.05, Tail::Greater).significant ==
              welch_test(kProp47Before, kProp47After, 0.05, Tail::Greater).significant);
    }
}

TEST_CASE("welch rejects degenerate input") {
    CHECK_THROWS_AS(welch_t({1.0, 0.0, 10}, {2.0, 0.0, 10}), DataError);
    CHECK_THROWS_AS(welch_t({1.0, 1.0, 1}, {2.0, 1.0, 10}), DataError);
    CHECK_THROWS_AS(welch_test(kProp47Before, kProp47After, 0.7, Tail::Greater), ConfigError);
}

TEST_CASE("student_t_quantile") {
    CHECK(std::abs(student_t_quantile(0.95, 89) - 1.66) <= 0.005);
    CHECK(student_t_quantile(0.5, 7.3) == 0.0);
    // Cauchy closed form tan(pi (p - 1/2)).
    CHECK(student_t_quantile(0.95, 1) == doctest::Approx(std::tan(std::numbers::pi * 0.45)).epsilon(1e-10));
    CHECK(student_t_quantile(0.1, 1) == doctest::Approx(std::tan(std::numbers::pi * -0.4)).epsilon(1e-10));
    // nu = 2 closed form t = (2p - 1) / sqrt(2 p (1 - p)).
    for (double p : {0.01, 0.3, 0.77, 0.999}) {
        CHECK(student_t_quantile(p, 2) == doctest::Approx((2 * p - 1) / std::sqrt(2 * p * (1 - p))).epsilon(1e-10));
    }
    CHECK_THROWS_AS(student_t_quantile(0.0, 5), ConfigError);
    CHECK_THROWS_AS(student_t_quantile(1.0, 5), ConfigError);
    CHECK_THROWS_AS(student_t_quantile(0.5, 0.0), ConfigError);
}

TEST_CASE("student t cdf and quantile round trip") {
    for (double nu : {1.0, 2.0, 5.0, 10.0, 89.0, 153.0, 1000.0}) {
        for (int k = 1; k <= 99; ++k) {
            const double p = k / 100.0;
            CHECK(std::abs(student_t_cdf(student_t_quantile(p, nu), nu) - p) <= 1e-7);
        }
    }
}

TEST_CASE("incomplete beta special cases") {
    // I_x(1, 1) = x and I_x(a, 1) = x^a.
    for (double x : {0.0, 0.1, 0.5, 0.93, 1.0}) {
        CHECK(incomplete_beta(1, 1, x) == doctest::Approx(x).epsilon(1e-14));
        CHECK(incomplete_beta(3.5, 1, x) == doctest::Approx(std::pow(x, 3.5)).epsilon(1e-12));
    }
    CHECK(incomplete_beta(2, 3, 0.4) + incomplete_beta(3, 2, 0.6) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("welch_test assembles a table row") {
    SUBCASE("city-wide Prop.47 increase") {
        const auto r = welch_test(kProp47Before, kProp47After, 0.05, Tail::Greater);
        CHECK(r.significant);
        CHECK(std::abs(r.percent_change - 14.7) <= 0.2);
        CHECK(r.t_statistic > r.critical);
    }
    SUBCASE("Downtown neighborhood") {
        const auto r = welch_test({86.48, 14.59, 106}, {118.69, 29.31, 62}, 0.05, Tail::Greater);
        CHECK(std::abs(r.t_statistic - 8.09) <= 0.05);
        CHECK(r.significant);
        CHECK(std::abs(r.percent_change - 37.2) <= 0.2);
    }
    SUBCASE("non-Prop.47 decrease tested as Less") {
        const auto r = welch_test(kNonProp47Before, kNonProp47After, 0.05, Tail::Less);
        CHECK(r.significant);
        CHECK(std::lround(r.percent_change) == -13);
    }
    SUBCASE("identical samples") {
        const auto r = welch_test(kProp47Before, kProp47Before, 0.05, Tail::Greater);
        CHECK_FALSE(r.significant);
        CHECK(r.percent_change == 0.0);
    }
    SUBCASE("csv row order") {
        const auto r = welch_test({86.48, 14.59, 106}, {118.69, 29.31, 62}, 0.05, Tail::Greater);
        const auto f = r.csv_fields();
        REQUIRE(f.size() == WelchResult::csv_header().size());
        CHECK(f[0] == "86.48");
        CHECK(f[5] == "62");
        CHECK(f[8] == "yes");
        CHECK(f[9] == "+37.2");
        CHECK(r.to_json()["significant"] == true);
    }
}
