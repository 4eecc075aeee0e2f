#pragma once

#include <stdexcept>
#include <string>

namespace heavytail {

// Invalid experiment or estimator configuration, including regime violations.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical evaluation (quadrature) failed to reach the requested tolerance.
class EvaluationError : public std::runtime_error {
public:
    EvaluationError(const std::string& what, double achieved_tolerance)
        : std::runtime_error(what + " (achieved tolerance " + std::to_string(achieved_tolerance) + ")"),
          achieved_tolerance_(achieved_tolerance) {}

    double achieved_tolerance() const noexcept { return achieved_tolerance_; }

private:
    double achieved_tolerance_;
};

// A sampler was asked for a draw it cannot produce (e.g. conditioning on an
// event whose probability underflows).
class SamplingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace heavytail
