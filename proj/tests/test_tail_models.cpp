#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "heavytail/error.hpp"
#include "heavytail/quadrature.hpp"
#include "heavytail/tail_models.hpp"

using namespace heavytail;

namespace {

// Pr{Lambda R > x}, Lambda Pareto(4) on [1, inf), R Laplace(1); 30-digit reference values.
constexpr double kProductTail10 = 1.18759673918888913856e-3;
constexpr double kProductTail20 = 7.49997597210164642251e-5;
constexpr double kProductTail40 = 4.68749999999977083448e-6;
constexpr double kProductIntegrated10 = 3.98892241713795369622e-3;

std::vector<IncrementModel> continuous_models() {
    return {IncrementModel::pareto(2.5), IncrementModel::pareto(2.5, 0.0, false), IncrementModel::pareto(1.75, 1.0),
            IncrementModel::product_lambda_laplace(4.0), IncrementModel::queue(2.5, 0.5)};
}

} // namespace

TEST_CASE("uncentred Pareto service tail") {
    const auto v = IncrementModel::pareto(2.5, 0.0, false);
    CHECK(v.tail(0.0) == 1.0);
    for (double t : {0.5, 3.0, 100.0, 1e6}) CHECK(v.tail(t) == doctest::Approx(std::pow(1.0 + t, -2.5)).epsilon(1e-14));
    CHECK(v.integrated_tail(100.0) == doctest::Approx(std::pow(101.0, -1.5) / 1.5).epsilon(1e-13));
    CHECK(v.integrated_tail(100.0) == doctest::Approx(6.5679e-4).epsilon(1e-4));
}

TEST_CASE("Pareto closed form matches forced quadrature") {
    for (const auto& m : {IncrementModel::pareto(2.5), IncrementModel::pareto(2.5, 0.0, false),
                          IncrementModel::pareto(1.75, 1.0)}) {
        for (int i = 0; i < 20; ++i) {
            const double x = -0.5 + std::pow(1.8, i);
            CHECK(m.tail(x, EvalPath::Quadrature) == doctest::Approx(m.tail(x)).epsilon(1e-8));
            CHECK(m.integrated_tail(x, EvalPath::Quadrature) == doctest::Approx(m.integrated_tail(x)).epsilon(1e-8));
        }
    }
}

TEST_CASE("product model tail against high-precision reference") {
    const auto m = IncrementModel::product_lambda_laplace(4.0);
    CHECK(m.tail(10.0) == doctest::Approx(kProductTail10).epsilon(1e-10));
    CHECK(m.tail(20.0) == doctest::Approx(kProductTail20).epsilon(1e-10));
    CHECK(m.tail(40.0) == doctest::Approx(kProductTail40).epsilon(1e-10));
    CHECK(m.tail(10.0, EvalPath::Quadrature) == doctest::Approx(kProductTail10).epsilon(1e-10));
    CHECK(m.integrated_tail(10.0) == doctest::Approx(kProductIntegrated10).epsilon(1e-9));
    CHECK(m.integrated_tail(0.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    // symmetric law: left tail mirrors right tail
    CHECK(m.below(-10.0) == doctest::Approx(kProductTail10).epsilon(1e-10));
}

TEST_CASE("product model tail against naive simulation") {
    // independent generator: Lambda = U^(-1/4), R = +-Exp(1)
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    const std::uint64_t n = 100'000'000;
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const double lambda = std::pow(1.0 - unif(gen), -0.25);
        const double r = expo(gen);
        if (unif(gen) < 0.5 && lambda * r > 10.0) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    const auto m = IncrementModel::product_lambda_laplace(4.0);
    CHECK(std::abs(m.tail(10.0) - p) <= 3.0 * se);
}

TEST_CASE("discrete toy tail") {
    const auto toy = IncrementModel::discrete({{-1.0, 0.9}, {9.0, 0.1}});
    CHECK(toy.tail(0.0) == doctest::Approx(0.1));
    CHECK(toy.tail(9.0) == 0.0);
    CHECK(toy.tail_at_least(9.0) == doctest::Approx(0.1));
    CHECK(toy.below(-1.0) == 0.0);
    CHECK_THROWS_AS(IncrementModel::discrete({{-1.0, 0.9}, {9.0, 0.2}}), ConfigError);
    CHECK_THROWS_AS(IncrementModel::discrete({{-1.0, 1.1}, {9.0, -0.1}}), ConfigError);
    CHECK_THROWS_AS(toy.density(0.0), ConfigError);
}

TEST_CASE("queue model parameters") {
    const auto q = IncrementModel::queue(2.5, 0.5);
    CHECK(q.queue_drift() == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK_THROWS_AS(IncrementModel::queue(2.5, 1.0), ConfigError);
    CHECK_THROWS_AS(IncrementModel::pareto(1.0), ConfigError);
    // Pr{X > x} = E[(1 + x - mu + A)^(-2.5)], 30-digit quadrature at x = 5
    CHECK(q.tail(5.0) == doctest::Approx(9.85778312865249154121e-3).epsilon(1e-10));
    CHECK(q.tail(5.0, EvalPath::Quadrature) == doctest::Approx(q.tail(5.0)).epsilon(1e-9));
    CHECK(q.integrated_tail(1000.0, EvalPath::Quadrature) == doctest::Approx(q.integrated_tail(1000.0)).epsilon(1e-9));
}

TEST_CASE("integrated tail is an antiderivative of the tail") {
    for (const auto& m : continuous_models()) {
        for (double x : {0.3, 5.0, 70.0, 2000.0}) {
            const double h = 1e-4 * std::max(1.0, x);
            const double fd = (m.integrated_tail(x - h) - m.integrated_tail(x + h)) / (2.0 * h);
            CHECK(fd == doctest::Approx(m.tail(x)).epsilon(1e-6));
        }
    }
}

TEST_CASE("Karamata ratio at 1e6") {
    for (const auto& m : {IncrementModel::pareto(2.5), IncrementModel::queue(2.5, 0.5)}) {
        const double x = 1e6;
        const double ratio = m.integrated_tail(x) * (m.alpha() - 1.0) / (x * m.tail(x));
        CHECK(std::abs(ratio - 1.0) < 1e-3);
    }
}

TEST_CASE("tails and integrated tails are nonincreasing") {
    for (const auto& m : continuous_models()) {
        double prev_t = 2.0, prev_i = INFINITY;
        for (double x = -20.0; x < 1e5; x = x < 1.0 ? x + 0.37 : x * 1.3) {
            const double t = m.tail(x), i = m.integrated_tail(x);
            CHECK(t <= prev_t);
            CHECK(i <= prev_i);
            CHECK(t >= 0.0);
            CHECK(t <= 1.0);
            prev_t = t;
            prev_i = i;
        }
    }
}

TEST_CASE("G-beta tails") {
    const auto m = IncrementModel::pareto(2.5);
    for (double x : {1.0, 10.0, 1e3}) CHECK(g_beta_tail(m, x, 2.5) == doctest::Approx(m.tail(x)).epsilon(1e-13));
    CHECK_THROWS_AS(g_beta_tail(m, 10.0, 2.0), ConfigError);
    CHECK_THROWS_AS(g_beta_integrated(m, 10.0, 1.5), ConfigError);
    CHECK_THROWS_AS(g_beta_tail(m, 0.0, 2.5), ConfigError);

    // pure power tail u^(-1.75) on u >= 1 with beta = 2.25: integral is x^(-1.25)/1.25
    const auto pure = IncrementModel::pareto(1.75, 1.0, false);
    for (double x : {1.0, 7.0, 1e4}) {
        CHECK(pure.tail(x) == doctest::Approx(std::pow(x, -1.75)).epsilon(1e-13));
        CHECK(g_beta_integrated(pure, x, 2.25) == doctest::Approx(std::pow(x, -1.25) / 1.25).epsilon(1e-12));
        const auto q = quad::integrate_to_infinity([&](double u) { return g_beta_tail(pure, u, 2.25); }, x, x);
        CHECK(q.value == doctest::Approx(std::pow(x, -1.25) / 1.25).epsilon(1e-8));
    }
    const auto centred = IncrementModel::pareto(1.75, 1.0);
    double prev = INFINITY;
    for (double x = 0.5; x < 1e7; x *= 2.1) {
        const double g = g_beta_integrated(centred, x, 2.25);
        CHECK(g < prev);
        prev = g;
    }
}

TEST_CASE("sampling: discrete frequencies") {
    const auto toy = IncrementModel::discrete({{-2.0, 0.5}, {1.0, 0.3}, {3.0, 0.15}, {5.0, 0.05}});
    RngStream rng(3, 0);
    const int n = 1'000'000;
    std::vector<int> counts(4, 0);
    for (int i = 0; i < n; ++i) {
        const double x = toy.sample(rng);
        counts[x < 0 ? 0 : x < 2 ? 1 : x < 4 ? 2 : 3]++;
    }
    const double probs[] = {0.5, 0.3, 0.15, 0.05};
    for (int j = 0; j < 4; ++j) {
        const double sd = std::sqrt(n * probs[j] * (1 - probs[j]));
        CHECK(std::abs(counts[j] - n * probs[j]) <= 4.0 * sd);
    }
}

TEST_CASE("sampling: zero means") {
    const int n = 10'000'000;
    {
        const auto m = IncrementModel::pareto(2.5);
        RngStream rng(5, 0);
        double s = 0, s2 = 0;
        for (int i = 0; i < n; ++i) {
            const double x = m.sample(rng);
            s += x;
            s2 += x * x;
        }
        const double mean = s / n, sd = std::sqrt(s2 / n - mean * mean);
        CHECK(std::abs(mean) <= 4.0 * sd / std::sqrt(n));
    }
    {
        // V - A has mean 2/3 - 4/3
        const auto q = IncrementModel::queue(2.5, 0.5);
        RngStream rng(6, 0);
        double s = 0, s2 = 0;
        for (int i = 0; i < n; ++i) {
            const double x = q.sample(rng) - q.queue_drift();
            s += x;
            s2 += x * x;
        }
        const double mean = s / n, sd = std::sqrt(s2 / n - mean * mean);
        CHECK(std::abs(mean + 2.0 / 3.0) <= 4.0 * sd / std::sqrt(n));
    }
}

TEST_CASE("conditional tail sampling") {
    RngStream rng(8, 0);
    const int n = 1'000'000;
    SUBCASE("Pareto above 100") {
        const auto v = IncrementModel::pareto(2.5, 0.0, false);
        double mn = INFINITY;
        int above = 0;
        for (int i = 0; i < n; ++i) {
            const double x = v.sample_conditional_tail(100.0, rng);
            mn = std::min(mn, x);
            if (x > 200.0) ++above;
        }
        CHECK(mn >= 100.0);
        const double p = std::pow(201.0 / 101.0, -2.5);
        CHECK(std::abs(above - n * p) <= 4.0 * std::sqrt(n * p * (1 - p)));
    }
    SUBCASE("toy above 5") {
        const auto toy = IncrementModel::discrete({{-1.0, 0.9}, {9.0, 0.1}});
        for (int i = 0; i < 1000; ++i) CHECK(toy.sample_conditional_tail(5.0, rng) == 9.0);
    }
    SUBCASE("product above 20") {
        const auto m = IncrementModel::product_lambda_laplace(4.0);
        int above = 0;
        double mn = INFINITY;
        for (int i = 0; i < n; ++i) {
            const double x = m.sample_conditional_tail(20.0, rng);
            mn = std::min(mn, x);
            if (x > 40.0) ++above;
        }
        CHECK(mn >= 20.0);
        const double p = kProductTail40 / kProductTail20;
        CHECK(std::abs(above - n * p) <= 3.0 * std::sqrt(n * p * (1 - p)));
    }
    SUBCASE("product below the switch point and queue") {
        const auto m = IncrementModel::product_lambda_laplace(4.0);
        const auto q = IncrementModel::queue(2.5, 0.5);
        for (double c : {-2.0, 0.5, 3.0}) {
            int above_m = 0, above_q = 0;
            const int k = 200000;
            for (int i = 0; i < k; ++i) {
                if (m.sample_conditional_tail(c, rng) > c + 2.0) ++above_m;
                if (q.sample_conditional_tail(c, rng) > c + 2.0) ++above_q;
            }
            const double pm = m.tail(c + 2.0) / m.tail(c), pq = q.tail(c + 2.0) / q.tail(c);
            CHECK(std::abs(above_m - k * pm) <= 4.0 * std::sqrt(k * pm * (1 - pm)));
            CHECK(std::abs(above_q - k * pq) <= 4.0 * std::sqrt(k * pq * (1 - pq)));
        }
    }
    SUBCASE("underflowing tail") {
        const auto toy = IncrementModel::discrete({{-1.0, 0.9}, {9.0, 0.1}});
        CHECK_THROWS_AS(toy.sample_conditional_tail(10.0, rng), SamplingError);
    }
}
