#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "heavytail/rng.hpp"
#include "heavytail/tail_models.hpp"

namespace heavytail {

// Exponentially twisted, truncated law: dF_theta/dF(x) = exp(theta x - Lambda_u(theta)) 1(x < u),
// with Lambda_u(theta) = log of the integral of e^{theta x} F(dx) over (-inf, u).
//
// Discrete models are reweighted exactly. Continuous models are sampled by
// inverting a tabulated CDF: the support below u is cut into cells, each
// refined until a cubic Hermite interpolant of the cell CDF matches
// Gauss-Kronrod integrals to 1e-13 of the total mass. The reported log-MGF is
// the log of the tabulated total, so sampler and likelihood ratio agree.
class TwistedTruncated {
public:
    TwistedTruncated(const IncrementModel& model, double threshold, double theta);

    double threshold() const { return threshold_; }
    double theta() const { return theta_; }
    double log_mgf() const { return log_mgf_; }
    std::size_t cells() const { return knots_.empty() ? atom_values_.size() : knots_.size() - 1; }

    // Every draw is strictly below threshold().
    double sample(RngStream& rng) const;

private:
    void build_discrete(const DiscreteToy& toy);
    void build_continuous(const IncrementModel& model);
    double invert_cell(std::size_t cell, double target) const;

    double threshold_;
    double theta_;
    double log_mgf_ = 0.0;
    double below_threshold_;  // largest double < threshold

    // continuous table, density scaled by exp(-theta * threshold)
    std::vector<double> knots_;
    std::vector<double> density_;
    std::vector<double> cumulative_;
    std::vector<std::uint32_t> guide_;  // guide_[j]: first cell whose upper cumulative exceeds j/size of the total

    std::vector<double> atom_values_;
    std::vector<double> atom_cumulative_;
};

TwistedTruncated make_twisted(const IncrementModel& model, double threshold, double theta);

// Lambda_u(theta) by direct adaptive quadrature, independent of the sampling table.
double truncated_log_mgf(const IncrementModel& model, double threshold, double theta);

} // namespace heavytail
