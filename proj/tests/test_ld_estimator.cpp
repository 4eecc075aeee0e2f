#include <doctest.h>

#include <cmath>
#include <vector>

#include "heavytail/error.hpp"
#include "heavytail/ld_estimator.hpp"
#include "heavytail/oracle.hpp"

using namespace heavytail;

namespace {

const std::vector<Atom> kTwoPoint{{-1.0, 0.9}, {9.0, 0.1}};
const std::vector<Atom> kFourPoint{{-2.0, 0.5}, {1.0, 0.3}, {3.0, 0.15}, {5.0, 0.05}};

// Visits every n-tuple of atom indices.
template <class F>
void for_each_path(std::size_t atoms, int n, F&& f) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    while (true) {
        f(idx);
        int pos = 0;
        while (pos < n && ++idx[static_cast<std::size_t>(pos)] == atoms) idx[static_cast<std::size_t>(pos++)] = 0;
        if (pos == n) return;
    }
}

struct Expectations {
    long double dom = 0, res = 0;
};

// Exact expectations of the two components under their sampling measures.
Expectations exact_expectations(const std::vector<Atom>& atoms, int n, double b) {
    const LdEstimator est(LdProblem{IncrementModel::discrete(atoms), n, b});
    long double tail = 0;
    for (const auto& a : atoms)
        if (a.value >= b) tail += a.probability;
    std::vector<long double> tw(atoms.size(), 0);
    long double tw_total = 0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
        if (atoms[j].value < b) tw[j] = atoms[j].probability * std::exp(static_cast<long double>(est.theta()) * atoms[j].value);
        tw_total += tw[j];
    }
    Expectations e;
    std::vector<double> x(static_cast<std::size_t>(n));
    for_each_path(atoms.size(), n, [&](const std::vector<std::size_t>& idx) {
        long double plain = 1, twisted = 1;
        for (int i = 0; i < n; ++i) {
            const auto j = idx[static_cast<std::size_t>(i)];
            x[static_cast<std::size_t>(i)] = atoms[j].value;
            plain *= atoms[j].probability;
            twisted *= tw[j] / tw_total;
        }
        // forced-jump measure: uniform index, that coordinate conditioned on X >= b
        long double forced = 0;
        for (int i = 0; i < n; ++i)
            if (x[static_cast<std::size_t>(i)] >= b) forced += plain / tail;
        forced /= n;
        if (forced > 0) e.dom += forced * est.score_dom(x);
        if (twisted > 0) e.res += twisted * est.score_res(x);
    });
    return e;
}

} // namespace

TEST_CASE("twisting parameter") {
    SUBCASE("unit theta") {
        const LdProblem p{IncrementModel::discrete(kTwoPoint), 1, std::log(10.0)};
        CHECK(theta_n_b(p) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("Pareto") {
        const LdProblem p{IncrementModel::pareto(2.5, 0.0, false), 100, 100.0};
        CHECK(theta_n_b(p) == doctest::Approx((2.5 * std::log(101.0) - std::log(100.0)) / 100.0).epsilon(1e-13));
        CHECK(theta_n_b(p) == doctest::Approx(0.0693263).epsilon(1e-5));
    }
    SUBCASE("event not rare") {
        const LdProblem p{IncrementModel::discrete(kTwoPoint), 10, 8.5};
        CHECK_THROWS_WITH_AS(theta_n_b(p), doctest::Contains("not rare"), ConfigError);
        CHECK_THROWS_AS(LdEstimator{p}, ConfigError);
    }
    SUBCASE("invalid inputs") {
        CHECK_THROWS_AS(theta_n_b(LdProblem{IncrementModel::pareto(2.5), 0, 10.0}), ConfigError);
        CHECK_THROWS_AS(theta_n_b(LdProblem{IncrementModel::pareto(2.5), 10, -1.0}), ConfigError);
        CHECK_THROWS_WITH_AS(theta_n_b(LdProblem{IncrementModel::discrete(kTwoPoint), 2, 9.5}),
                             doctest::Contains("Pr{X >= b} = 0"), ConfigError);
    }
}

TEST_CASE("component expectations equal exact decompositions") {
    struct Case {
        const std::vector<Atom>* atoms;
        double b;
        int max_n;
    };
    for (const Case& c : {Case{&kTwoPoint, 8.5, 5}, Case{&kTwoPoint, 5.0, 5}, Case{&kTwoPoint, 2.0, 5},
                          Case{&kFourPoint, 4.5, 5}, Case{&kFourPoint, 2.5, 4}, Case{&kFourPoint, 0.5, 1},
                          Case{&kFourPoint, 4.0, 5}}) {
        for (int n = 1; n <= c.max_n; ++n) {
            CAPTURE(c.b);
            CAPTURE(n);
            const auto exact = oracle::enumerate_ld(DiscreteToy{*c.atoms}, n, c.b);
            const auto e = exact_expectations(*c.atoms, n, c.b);
            CHECK(static_cast<double>(e.dom) == doctest::Approx(static_cast<double>(exact.dominant)).epsilon(1e-12));
            CHECK(static_cast<double>(e.res) == doctest::Approx(static_cast<double>(exact.residual)).epsilon(1e-12));
            CHECK(static_cast<double>(e.dom + e.res) ==
                  doctest::Approx(static_cast<double>(exact.probability)).epsilon(1e-12));
        }
    }
}

TEST_CASE("simulated estimate agrees with enumeration") {
    const LdProblem p{IncrementModel::discrete(kFourPoint), 5, 4.5};
    const auto exact = oracle::enumerate_ld(DiscreteToy{kFourPoint}, 5, 4.5);
    const RunStats r = estimate_large_deviation(p, 200'000, 0, 42);
    CHECK(std::abs(r.mean - static_cast<double>(exact.probability)) <= 4.0 * r.std_error);
    CHECK(std::abs(r.component_means[0] - static_cast<double>(exact.dominant)) <= 4.0 * r.component_std_errors[0]);
    CHECK(std::abs(r.component_means[1] - static_cast<double>(exact.residual)) <= 4.0 * r.component_std_errors[1]);
    CHECK(r.mean_work == doctest::Approx(10.0));
}

TEST_CASE("samples respect their bounds and sum their components") {
    const LdEstimator est(LdProblem{IncrementModel::pareto(2.5), 100, 100.0});
    const double n_tail = std::exp(est.log_n_tail());
    RngStream root(9, 0);
    for (std::uint64_t i = 0; i < 2000; ++i) {
        RngStream rng(9, i);
        const EstimatorSample s = est.sample(rng);
        REQUIRE(s.n_components == 2);
        CHECK(s.value == s.components[0] + s.components[1]);
        CHECK(s.components[0] <= n_tail * (1 + 1e-12));
        CHECK(s.components[1] <= n_tail * est.res_bound_factor() * (1 + 1e-12));
        CHECK(s.nu == 200);
        CHECK(s.max_index == 100);
    }
    // the dominant component takes values n Fbar(b) / count only
    RngStream rng(10, 0);
    for (int i = 0; i < 200; ++i) {
        const double z = est.sample_dom(rng).value;
        if (z > 0) {
            const double count = n_tail / z;
            CHECK(count == doctest::Approx(std::round(count)).epsilon(1e-12));
        }
    }
}

TEST_CASE("two replications give a finite standard error") {
    const RunStats r = estimate_large_deviation(LdProblem{IncrementModel::pareto(2.5), 50, 200.0}, 2, 1, 1);
    CHECK(std::isfinite(r.std_error));
    CHECK(r.n_reps == 2);
    CHECK_THROWS_AS(estimate_large_deviation(LdProblem{IncrementModel::pareto(2.5), 50, 200.0}, 1, 1, 1), ConfigError);
}

TEST_CASE("outside the efficiency regime a warning is issued") {
    const LdEstimator inside(LdProblem{IncrementModel::pareto(2.5), 100, 100.0});
    CHECK(inside.warnings().empty());
    const LdEstimator outside(LdProblem{IncrementModel::pareto(2.5), 100, 8.0});
    REQUIRE(outside.warnings().size() == 1);
    CHECK(outside.warnings()[0].find("efficiency") != std::string::npos);
}
