#include "heavytail/ld_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "heavytail/error.hpp"

namespace heavytail {

namespace {

// Relative slack for per-draw bound checks; the bounds are exact identities
// up to rounding of exp/log.
constexpr double kBoundSlack = 1e-12;

void check_bound(double value, double bound, const char* what) {
    if (!(value <= bound * (1.0 + kBoundSlack))) {
        std::ostringstream os;
        os << what << " bound violated: " << value << " > " << bound;
        throw SamplingError(os.str());
    }
}

} // namespace

double LdProblem::beta() const { return 1.0 / std::min(model.alpha(), 2.0); }

bool LdProblem::in_regime() const {
    return std::log(b) > (beta() + epsilon_regime) * std::log(static_cast<double>(n));
}

void LdProblem::validate() const {
    if (n < 1) throw ConfigError("n must be >= 1");
    if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("b must be finite and > 0");
    if (!(epsilon_regime > 0.0)) throw ConfigError("epsilon_regime must be > 0");
}

double theta_n_b(const LdProblem& problem) {
    problem.validate();
    const double log_nt = std::log(static_cast<double>(problem.n)) + problem.model.log_tail_at_least(problem.b);
    if (!std::isfinite(log_nt) && log_nt < 0.0) {
        throw ConfigError("Pr{X >= b} = 0: no single jump reaches b, the twisting parameter is undefined");
    }
    if (!(log_nt < 0.0)) {
        throw ConfigError("n Pr{X >= b} >= 1: the event is not rare, use naive simulation instead");
    }
    return -log_nt / problem.b;
}

LdEstimator::LdEstimator(LdProblem problem) : problem_(std::move(problem)) {
    theta_ = theta_n_b(problem_);
    log_n_tail_ = std::log(static_cast<double>(problem_.n)) + problem_.model.log_tail_at_least(problem_.b);
    twisted_ = std::make_shared<const TwistedTruncated>(problem_.model, problem_.b, theta_);
    if (!problem_.in_regime()) {
        std::ostringstream os;
        os << "b = " << problem_.b << " is not above n^(beta + epsilon) = "
           << std::pow(static_cast<double>(problem_.n), problem_.beta() + problem_.epsilon_regime)
           << "; the single-big-jump efficiency guarantee does not apply";
        warnings_.push_back(os.str());
    }
}

double LdEstimator::res_bound_factor() const {
    return std::exp(static_cast<double>(problem_.n) * twisted_->log_mgf());
}

double LdEstimator::score_dom(std::span<const double> x) const {
    const double b = problem_.b;
    double s = 0.0;
    std::int64_t count = 0;
    for (double xi : x) {
        s += xi;
        if (xi >= b) ++count;
    }
    if (count == 0 || !(s > b)) return 0.0;
    return std::exp(log_n_tail_) / static_cast<double>(count);
}

double LdEstimator::score_res(std::span<const double> x) const {
    double s = 0.0;
    for (double xi : x) s += xi;
    if (!(s > problem_.b)) return 0.0;
    return std::exp(-theta_ * s + static_cast<double>(problem_.n) * twisted_->log_mgf());
}

EstimatorSample LdEstimator::sample_dom(RngStream& rng) const {
    const std::int64_t n = problem_.n;
    const double b = problem_.b;
    const std::int64_t forced = std::uniform_int_distribution<std::int64_t>(0, n - 1)(rng);
    double s = 0.0;
    std::int64_t count = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        double xi;
        if (i == forced) {
            xi = problem_.model.sample_conditional_tail(b, rng);
            if (!(xi >= b)) throw SamplingError("conditional tail sample below its threshold");
        } else {
            xi = problem_.model.sample(rng);
        }
        s += xi;
        if (xi >= b) ++count;
    }
    EstimatorSample out;
    const double z = s > b ? std::exp(log_n_tail_) / static_cast<double>(count) : 0.0;
    check_bound(z, std::exp(log_n_tail_), "Z_dom <= n Pr{X >= b}");
    out.add_component(z);
    out.nu = static_cast<std::uint64_t>(n);
    out.max_index = out.nu;
    return out;
}

EstimatorSample LdEstimator::sample_res(RngStream& rng) const {
    const std::int64_t n = problem_.n;
    const double b = problem_.b;
    double s = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double xi = twisted_->sample(rng);
        if (!(xi < b)) throw SamplingError("twisted sample not below its truncation point");
        s += xi;
    }
    const double log_lambda_n = static_cast<double>(n) * twisted_->log_mgf();
    EstimatorSample out;
    const double z = s > b ? std::exp(-theta_ * s + log_lambda_n) : 0.0;
    check_bound(z, std::exp(log_n_tail_ + log_lambda_n), "Z_res <= n Pr{X >= b} exp(n Lambda)");
    out.add_component(z);
    out.nu = static_cast<std::uint64_t>(n);
    out.max_index = out.nu;
    return out;
}

EstimatorSample LdEstimator::sample(RngStream& rng) const {
    RngStream dom_rng = rng.child(stream_label::dominant);
    RngStream res_rng = rng.child(stream_label::residual);
    const EstimatorSample dom = sample_dom(dom_rng);
    const EstimatorSample res = sample_res(res_rng);
    EstimatorSample out;
    out.add_component(dom.value);
    out.add_component(res.value);
    out.nu = dom.nu + res.nu;
    out.max_index = std::max(dom.max_index, res.max_index);
    return out;
}

RunStats estimate_large_deviation(const LdEstimator& estimator, std::uint64_t n_reps, int threads,
                                  std::uint64_t seed) {
    if (n_reps < 2) throw ConfigError("at least two replications are needed for a standard error");
    return run([&estimator](std::uint64_t, RngStream& rng) { return estimator.sample(rng); }, n_reps, threads, seed);
}

RunStats estimate_large_deviation(const LdProblem& problem, std::uint64_t n_reps, int threads, std::uint64_t seed) {
    const LdEstimator estimator(problem);
    return estimate_large_deviation(estimator, n_reps, threads, seed);
}

} // namespace heavytail
