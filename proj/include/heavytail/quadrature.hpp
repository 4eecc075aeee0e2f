#pragma once

#include <functional>
#include <span>

namespace heavytail::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;
};

struct Options {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    int max_intervals = 4000;
};

using Integrand = std::function<double(double)>;

// Single 15-point Kronrod rule on [a, b] with the embedded 7-point Gauss
// estimate as error.
Result gauss_kronrod15(const Integrand& f, double a, double b);

// Globally adaptive Gauss-Kronrod on [a, b]. Throws EvaluationError when the
// tolerance is not met within max_intervals subdivisions.
Result integrate(const Integrand& f, double a, double b, const Options& opts = {});

// Same, with the interval pre-split at the given interior breakpoints
// (points outside (a, b) are ignored).
Result integrate(const Integrand& f, double a, double b, std::span<const double> breakpoints,
                 const Options& opts = {});

// Integral of a regularly varying integrand over [a, inf). The half line is
// cut into pieces [a + s(2^j - 1), a + s(2^(j+1) - 1)); once successive piece
// ratios settle, the geometric remainder is added and the loop stops.
Result integrate_to_infinity(const Integrand& f, double a, double scale, const Options& opts = {});

} // namespace heavytail::quad
