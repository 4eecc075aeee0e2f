#pragma once

#include <cstdint>

#include "heavytail/harness.hpp"
#include "heavytail/tail_models.hpp"

// Ground-truth generators for tests. Deliberately independent of the
// estimator code: only models, streams and the statistics accumulator are used.
namespace heavytail::oracle {

struct LdEnumeration {
    long double probability = 0;  // Pr{S_n > b}
    long double dominant = 0;     // Pr{S_n > b, max X_i >= b}
    long double residual = 0;     // Pr{S_n > b, max X_i < b}
    std::uint64_t outcome_count = 0;
};

struct BlockEnumeration {
    long double block = 0;  // Pr{n_{k-1} < tau_b <= n_k}
    long double a = 0;      // jump X_i >= b + i mu for some i in (n_{k-1}, tau_b]
    long double b = 0;      // max_{i <= tau_b} X_i < b + n_{k-1} mu
    long double c = 0;      // the rest of the block event
    std::uint64_t outcome_count = 0;
};

inline constexpr std::uint64_t kMaxOutcomes = 10'000'000;

// Full enumeration over the atoms of a discrete model, in extended precision.
LdEnumeration enumerate_ld(const DiscreteToy& toy, int n, double b);
BlockEnumeration enumerate_block(const DiscreteToy& toy, int k, double b, double mu, std::uint64_t r);

struct NaiveBlockResult {
    RunStats block, a, b, c;
};

// Finite-horizon naive simulation of the block event and its three parts.
// Throws ConfigError when paths * n_k exceeds work_budget.
NaiveBlockResult naive_mc_block(const IncrementModel& model, int k, double b, double mu, std::uint64_t r,
                                std::uint64_t paths, std::uint64_t seed, int threads = 0,
                                std::uint64_t work_budget = 1'000'000'000);

struct Baselines {
    double large_deviation = 0.0;  // n Pr{X > b}
    double level_crossing = 0.0;   // Fbar_I(b) / mu
};

Baselines asymptotic_baselines(const IncrementModel& model, std::int64_t n, double b, double mu);

} // namespace heavytail::oracle
