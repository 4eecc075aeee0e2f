#include <doctest.h>

#include <cmath>
#include <vector>

#include "heavytail/error.hpp"
#include "heavytail/oracle.hpp"

using namespace heavytail;

namespace {

const DiscreteToy kTwoPoint{{{-1.0, 0.9}, {9.0, 0.1}}};
const DiscreteToy kFourPoint{{{-2.0, 0.5}, {1.0, 0.3}, {3.0, 0.15}, {5.0, 0.05}}};

double d(long double x) { return static_cast<double>(x); }

} // namespace

TEST_CASE("sum enumeration by hand") {
    const auto e = oracle::enumerate_ld(kTwoPoint, 2, 7.0);
    // (9,-1), (-1,9), (9,9)
    CHECK(d(e.probability) == doctest::Approx(0.19).epsilon(1e-15));
    CHECK(d(e.dominant) == doctest::Approx(0.19).epsilon(1e-15));
    CHECK(e.residual == 0);
    CHECK(e.outcome_count == 4);
    CHECK(oracle::enumerate_ld(kTwoPoint, 2, 18.0).probability == 0);
    CHECK(d(oracle::enumerate_ld(kTwoPoint, 2, -2.5).probability) == doctest::Approx(1.0).epsilon(1e-15));
    // ties: S = 8 is not > 8
    CHECK(d(oracle::enumerate_ld(kTwoPoint, 2, 8.0).probability) == doctest::Approx(0.01).epsilon(1e-14));

    const auto r = oracle::enumerate_ld(kFourPoint, 3, 4.0);
    CHECK(d(r.dominant + r.residual) == doctest::Approx(d(r.probability)).epsilon(1e-15));
    // residual part: all three below 4, sum above 4
    long double res = 0;
    const double v[] = {-2, 1, 3};
    const long double p[] = {0.5L, 0.3L, 0.15L};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                if (v[i] + v[j] + v[k] > 4.0) res += p[i] * p[j] * p[k];
    CHECK(d(r.residual) == doctest::Approx(d(res)).epsilon(1e-15));
}

TEST_CASE("enumeration does not depend on atom order") {
    const DiscreteToy shuffled{{{5.0, 0.05}, {-2.0, 0.5}, {3.0, 0.15}, {1.0, 0.3}}};
    for (double b : {0.5, 2.5, 6.0}) {
        CHECK(d(oracle::enumerate_ld(shuffled, 4, b).probability) ==
              doctest::Approx(d(oracle::enumerate_ld(kFourPoint, 4, b).probability)).epsilon(1e-15));
        CHECK(d(oracle::enumerate_block(shuffled, 2, b, 0.25, 2).block) ==
              doctest::Approx(d(oracle::enumerate_block(kFourPoint, 2, b, 0.25, 2).block)).epsilon(1e-15));
    }
}

TEST_CASE("block enumeration by hand") {
    // first block (two steps), b = 5, mu = 1: X_1 = 9, or X_1 = -1 then X_2 = 9
    const auto e = oracle::enumerate_block(kTwoPoint, 1, 5.0, 1.0, 2);
    CHECK(d(e.block) == doctest::Approx(0.19).epsilon(1e-15));
    CHECK(d(e.a) == doctest::Approx(0.19).epsilon(1e-15));
    CHECK(e.b == 0);
    CHECK(e.c == 0);
    // b = 7.5: after a -1 step, 9 - 2 = 6 no longer crosses
    const auto f = oracle::enumerate_block(kTwoPoint, 1, 7.5, 1.0, 2);
    CHECK(d(f.block) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(d(f.a) == doctest::Approx(0.1).epsilon(1e-15));
    // second block impossible when a single jump cannot cover the level
    CHECK(oracle::enumerate_block(kTwoPoint, 2, 100.0, 1.0, 2).block == 0);
    CHECK_THROWS_AS(oracle::enumerate_block(kTwoPoint, 0, 5.0, 1.0, 2), ConfigError);
}

TEST_CASE("block enumeration partitions the block event") {
    for (double b : {1.2, 2.6, 4.1}) {
        for (double mu : {0.25, 0.5}) {
            for (int k = 1; k <= 3; ++k) {
                const auto e = oracle::enumerate_block(kFourPoint, k, b, mu, 2);
                CHECK(d(e.a + e.b + e.c) == doctest::Approx(d(e.block)).epsilon(1e-15));
                CHECK(e.a >= 0);
                CHECK(e.b >= 0);
                CHECK(e.c >= 0);
            }
        }
    }
    // block probabilities of disjoint blocks sum to at most 1
    long double total = 0;
    for (int k = 1; k <= 3; ++k) total += oracle::enumerate_block(kFourPoint, k, 1.2, 0.25, 2).block;
    CHECK(total <= 1);
}

TEST_CASE("naive simulation agrees with enumeration") {
    const IncrementModel toy = IncrementModel::discrete(kFourPoint.atoms);
    const auto e = oracle::enumerate_block(kFourPoint, 2, 2.6, 0.25, 2);
    const auto n = oracle::naive_mc_block(toy, 2, 2.6, 0.25, 2, 1'000'000, 1);
    CHECK(std::abs(n.block.mean - d(e.block)) <= 4.0 * n.block.std_error);
    CHECK(std::abs(n.a.mean - d(e.a)) <= 4.0 * n.a.std_error);
    CHECK(std::abs(n.b.mean - d(e.b)) <= 4.0 * n.b.std_error);
    CHECK(std::abs(n.c.mean - d(e.c)) <= 4.0 * n.c.std_error);
    CHECK(n.block.n_reps == 1'000'000);

    const auto again = oracle::naive_mc_block(toy, 2, 2.6, 0.25, 2, 1'000'000, 1, 3);
    CHECK(again.block.mean == n.block.mean);
    CHECK(again.c.mean == n.c.mean);

    const auto zero = oracle::naive_mc_block(IncrementModel::discrete(kTwoPoint.atoms), 2, 100.0, 1.0, 2, 10'000, 2);
    CHECK(zero.block.mean == 0.0);
    CHECK(zero.block.std_error == 0.0);

    CHECK_THROWS_AS(oracle::naive_mc_block(toy, 20, 2.6, 0.25, 2, 1'000'000, 1), ConfigError);
    CHECK_THROWS_AS(oracle::naive_mc_block(toy, 2, 2.6, 0.25, 2, 1000, 1, 0, 100), ConfigError);
}

TEST_CASE("asymptotic baselines") {
    const auto q = IncrementModel::queue(2.5, 0.5);
    const auto base = oracle::asymptotic_baselines(q, 0, 1000.0, 2.0 / 3.0);
    CHECK(base.large_deviation == 0.0);
    // 30-digit quadrature reference
    CHECK(base.level_crossing == doctest::Approx(3.15439885158e-5).epsilon(1e-9));
    CHECK(std::abs(base.level_crossing / std::pow(1001.0, -1.5) - 1.0) < 0.01);
    const auto p = IncrementModel::pareto(2.5, 0.0, false);
    const auto pb = oracle::asymptotic_baselines(p, 100, 100.0, 1.0);
    CHECK(pb.large_deviation == doctest::Approx(100.0 * std::pow(101.0, -2.5)).epsilon(1e-14));
    CHECK(pb.level_crossing == doctest::Approx(std::pow(101.0, -1.5) / 1.5).epsilon(1e-13));
}
