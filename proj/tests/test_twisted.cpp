#include <doctest.h>

#include <cmath>
#include <vector>

#include "heavytail/error.hpp"
#include "heavytail/twisted.hpp"

using namespace heavytail;

TEST_CASE("zero twist is plain truncation") {
    for (const auto& m : {IncrementModel::pareto(2.5), IncrementModel::product_lambda_laplace(4.0),
                          IncrementModel::queue(2.5, 0.5)}) {
        for (double u : {0.5, 30.0}) {
            const TwistedTruncated tw(m, u, 0.0);
            CHECK(tw.log_mgf() == doctest::Approx(std::log(m.below(u))).epsilon(1e-12));
            RngStream rng(1, 0);
            const int n = 200000;
            const double cut = -0.3;
            int below = 0;
            for (int i = 0; i < n; ++i)
                if (tw.sample(rng) < cut) ++below;
            const double p = m.below(cut) / m.below(u);
            CHECK(std::abs(below - n * p) <= 4.0 * std::sqrt(n * p * (1 - p)));
        }
    }
}

TEST_CASE("discrete twist reweights atoms") {
    const auto toy = IncrementModel::discrete({{-1.0, 0.9}, {9.0, 0.1}});
    const TwistedTruncated tw(toy, 5.0, 1.0);
    CHECK(tw.log_mgf() == doctest::Approx(std::log(0.9 * std::exp(-1.0))).epsilon(1e-14));
    RngStream rng(2, 0);
    for (int i = 0; i < 1000; ++i) CHECK(tw.sample(rng) == -1.0);
    CHECK_THROWS_AS(TwistedTruncated(toy, -1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(TwistedTruncated(toy, 5.0, -0.1), ConfigError);
}

TEST_CASE("tabulated log-MGF matches direct quadrature") {
    for (const auto& m : {IncrementModel::pareto(2.5), IncrementModel::pareto(1.75, 1.0),
                          IncrementModel::product_lambda_laplace(4.0), IncrementModel::queue(2.5, 0.5)}) {
        for (double u : {10.0, 1000.0}) {
            const double theta = -std::log(50.0 * m.tail_at_least(u)) / u;
            const TwistedTruncated tw(m, u, theta);
            CHECK(tw.log_mgf() == doctest::Approx(truncated_log_mgf(m, u, theta)).epsilon(1e-10));
        }
    }
}

TEST_CASE("sample mean equals the log-MGF derivative") {
    for (const auto& m : {IncrementModel::pareto(2.5), IncrementModel::product_lambda_laplace(4.0),
                          IncrementModel::queue(2.5, 0.5)}) {
        const double u = 100.0;
        const double theta = -std::log(100.0 * m.tail_at_least(u)) / u;
        const TwistedTruncated tw(m, u, theta);
        const double h = 1e-4;
        const double slope = (truncated_log_mgf(m, u, theta + h) - truncated_log_mgf(m, u, theta - h)) / (2.0 * h);
        RngStream rng(4, 0);
        const int n = 1'000'000;
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = tw.sample(rng);
            REQUIRE(x < u);
            s += x;
            s2 += x * x;
        }
        const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
        CHECK(std::abs(mean - slope) <= 3.0 * se);
    }
}

TEST_CASE("log-MGF is nondecreasing and convex in theta") {
    const auto m = IncrementModel::queue(2.5, 0.5);
    const double u = 200.0;
    std::vector<double> lam;
    for (int i = 0; i <= 12; ++i) lam.push_back(TwistedTruncated(m, u, 0.002 * i).log_mgf());
    for (std::size_t i = 1; i < lam.size(); ++i) CHECK(lam[i] >= lam[i - 1] - 1e-12);
    for (std::size_t i = 1; i + 1 < lam.size(); ++i) CHECK(lam[i] <= 0.5 * (lam[i - 1] + lam[i + 1]) + 1e-9);
}

TEST_CASE("samples stay strictly below the truncation point") {
    const auto m = IncrementModel::pareto(1.75, 1.0);
    const double u = 5.0;
    const TwistedTruncated tw(m, u, 2.0);  // strong twist piles mass at u
    RngStream rng(9, 0);
    for (int i = 0; i < 200000; ++i) REQUIRE(tw.sample(rng) < u);
}
