#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "heavytail/harness.hpp"
#include "heavytail/tail_models.hpp"
#include "heavytail/twisted.hpp"

namespace heavytail {

// n_0 = 0, n_k = r^k.
class BlockScheme {
public:
    explicit BlockScheme(std::uint64_t r = 2);
    std::uint64_t r() const { return r_; }
    std::uint64_t n(int k) const;
    // Largest k with n_k <= 2^62.
    int max_k() const { return max_k_; }

private:
    std::uint64_t r_;
    int max_k_;
};

struct CrossingProblem {
    IncrementModel model;
    double mu = 1.0;  // drift subtracted per step
    double b = 1.0;
    BlockScheme scheme{2};

    void validate() const;
    // b + i mu
    double level(std::uint64_t i) const { return b + static_cast<double>(i) * mu; }
};

enum class Regime { FiniteVariance, StrongEfficiency, SubStrong };

struct RegimeSpec {
    Regime regime = Regime::FiniteVariance;
    double beta = 0.0;   // 0 selects the default
    double gamma = 0.0;  // 0 selects the default (SubStrong only)
    bool allow_alpha_boundary = false;  // StrongEfficiency at alpha == 1.5
};

std::string regime_name(Regime r);
Regime parse_regime(const std::string& name);

// Law of the block index K. T is the integrated tail (FiniteVariance) or the
// integrated G^(beta) tail; p_k = (T(b + n_{k-1} mu) - T(b + n_k mu)) / T(b).
class BlockPmf {
public:
    BlockPmf(const CrossingProblem& problem, const RegimeSpec& spec);

    Regime regime() const { return regime_; }
    double beta() const { return beta_; }
    double gamma() const { return gamma_; }
    int max_k() const { return static_cast<int>(ratio_.size()) - 1; }
    double p(int k) const;
    // T(b + n_k mu) / T(b), k = 0..max_k
    double survival(int k) const { return ratio_.at(static_cast<std::size_t>(k)); }
    int sample(RngStream& rng) const;
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    Regime regime_;
    double beta_ = 0.0;
    double gamma_ = 0.0;
    std::vector<double> ratio_;
    std::vector<std::string> warnings_;
};

// q_k = sum over i in (n_{k-1}, n_k] of Pr{X >= b + i mu}, by direct
// compensated summation.
double q_k(const CrossingProblem& problem, int k);
// Index i in (n_{k-1}, n_k] with cumulative mass first exceeding target,
// by a second summation pass in O(1) memory.
std::uint64_t locate_two_pass(const CrossingProblem& problem, int k, double target);

// Cumulative table of Pr{X >= b + i mu} over a block, stored every
// `stride` indices, so that index sampling needs at most `stride` tail
// evaluations per draw.
class JumpIndexTable {
public:
    JumpIndexTable(const CrossingProblem& problem, int k, bool parallel = true, std::uint64_t stride = 256);
    double total() const { return total_; }
    // Index with cumulative mass first exceeding u * total.
    std::uint64_t locate(double u) const;
    std::size_t checkpoints() const { return cumulative_.size(); }
    const std::vector<double>& cumulative() const { return cumulative_; }

private:
    const CrossingProblem* problem_;
    std::uint64_t first_, last_, stride_;
    std::vector<double> cumulative_;  // mass of (first-1, first-1 + j*stride]
    double total_ = 0.0;
};

// Events of a path that ends up crossing within block k, judged on the
// increments up to the crossing time tau.
struct BlockOutcome {
    bool in_block = false;  // n_{k-1} < tau <= n_k
    bool a = false;         // some i in (n_{k-1}, tau] has X_i >= b + i mu
    bool b = false;         // all X_i, i <= tau, below b + n_{k-1} mu
    bool c = false;         // remaining part of the block event
    std::uint64_t tau = 0;  // 0 when no crossing within n_k steps
};

BlockOutcome classify_block(const CrossingProblem& problem, int k, std::span<const double> x);

// Per-block sub-estimators and the randomized-block estimator.
class CrossingEstimator {
public:
    CrossingEstimator(CrossingProblem problem, RegimeSpec spec);
    // Sub-estimators only (no block law); used for block-level checks and
    // for bounded-support models where the block law is not defined.
    explicit CrossingEstimator(CrossingProblem problem);
    ~CrossingEstimator();

    const CrossingProblem& problem() const { return problem_; }
    const BlockPmf& pmf() const;
    bool has_pmf() const { return static_cast<bool>(pmf_); }
    std::vector<std::string> warnings() const;

    double q(int k) const;
    // Pr{X >= b + n_{k-1} mu}
    double block_tail(int k) const;
    // theta_k = -log(n_k Pr{X >= u}) / u with u = b + n_{k-1} mu.
    double theta(int k) const;
    const TwistedTruncated& twisted(int k) const;

    EstimatorSample sample_z1(int k, RngStream& rng) const;
    EstimatorSample sample_z2(int k, RngStream& rng) const;
    EstimatorSample sample_z3(int k, RngStream& rng) const;
    EstimatorSample sample_block(int k, RngStream& rng) const;  // Z_k = Z_k1 + Z_k2 + Z_k3
    EstimatorSample sample(RngStream& rng) const;                // Z_K / p_K

    // Estimator values for a realized path of n_k increments (Z_k1, Z_k3)
    // or of the increments up to min(tau, n_k) (Z_k2).
    double score_z1(int k, std::span<const double> x) const;
    double score_z2(int k, std::span<const double> x) const;
    double score_z3(int k, std::span<const double> x) const;

private:
    struct BlockCache;
    BlockCache& cache(int k) const;

    CrossingProblem problem_;
    std::unique_ptr<BlockPmf> pmf_;
    mutable std::mutex mutex_;
    mutable std::map<int, std::unique_ptr<BlockCache>> caches_;
};

RunStats estimate_level_crossing(const CrossingEstimator& estimator, std::uint64_t n_reps, int threads,
                                 std::uint64_t seed);
RunStats estimate_level_crossing(const CrossingProblem& problem, const RegimeSpec& spec, std::uint64_t n_reps,
                                 int threads, std::uint64_t seed);
// Replications of a single block's Z_k (no randomization over k).
RunStats estimate_block(const CrossingEstimator& estimator, int k, std::uint64_t n_reps, int threads,
                        std::uint64_t seed);

} // namespace heavytail
