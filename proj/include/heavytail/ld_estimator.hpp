#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "heavytail/harness.hpp"
#include "heavytail/tail_models.hpp"
#include "heavytail/twisted.hpp"

namespace heavytail {

struct LdProblem {
    IncrementModel model;
    std::int64_t n = 1;
    double b = 1.0;
    double epsilon_regime = 0.1;

    // 1 / min(alpha, 2)
    double beta() const;
    // b > n^(beta + epsilon)
    bool in_regime() const;
    void validate() const;
};

// theta = -log(n Pr{X >= b}) / b; ConfigError when n Pr{X >= b} >= 1.
double theta_n_b(const LdProblem& problem);

// Estimator of Pr{S_n > b} as Z_dom + Z_res. Z_dom forces one uniformly chosen
// increment above b; Z_res draws all increments from the exponentially
// twisted law truncated at b. Immutable after construction.
class LdEstimator {
public:
    explicit LdEstimator(LdProblem problem);

    const LdProblem& problem() const { return problem_; }
    double theta() const { return theta_; }
    double log_mgf() const { return twisted_->log_mgf(); }
    const TwistedTruncated& twisted() const { return *twisted_; }
    // log(n Pr{X >= b})
    double log_n_tail() const { return log_n_tail_; }
    // exp(n Lambda_b(theta)), the factor in the per-draw bound for Z_res
    double res_bound_factor() const;
    const std::vector<std::string>& warnings() const { return warnings_; }

    EstimatorSample sample_dom(RngStream& rng) const;
    EstimatorSample sample_res(RngStream& rng) const;
    // Z_dom and Z_res from independent child streams.
    EstimatorSample sample(RngStream& rng) const;

    // Value of Z_dom for a realized path of n increments, as generated under
    // the forced-jump measure.
    double score_dom(std::span<const double> x) const;
    // Value of Z_res for a realized path of n increments drawn from the twisted law.
    double score_res(std::span<const double> x) const;

private:
    LdProblem problem_;
    double log_n_tail_ = 0.0;
    double theta_ = 0.0;
    std::shared_ptr<const TwistedTruncated> twisted_;
    std::vector<std::string> warnings_;
};

RunStats estimate_large_deviation(const LdEstimator& estimator, std::uint64_t n_reps, int threads,
                                  std::uint64_t seed);
RunStats estimate_large_deviation(const LdProblem& problem, std::uint64_t n_reps, int threads, std::uint64_t seed);

} // namespace heavytail
