#include "heavytail/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "heavytail/error.hpp"

namespace heavytail::quad {

namespace {

constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b;
    Result r;
    bool operator<(const Segment& o) const { return r.error < o.r.error; }
};

} // namespace

Result gauss_kronrod15(const Integrand& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    std::array<double, 7> f1{}, f2{};
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kNodes[j];
        f1[j] = f(center - dx);
        f2[j] = f(center + dx);
        kronrod += kKronrodWeights[j] * (f1[j] + f2[j]);
        if (j % 2 == 1) gauss += kGaussWeights[j / 2] * (f1[j] + f2[j]);
    }
    const double mean = 0.5 * kronrod;
    double resasc = kKronrodWeights[7] * std::abs(fc - mean);
    double resabs = kKronrodWeights[7] * std::abs(fc);
    for (int j = 0; j < 7; ++j) {
        resasc += kKronrodWeights[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
        resabs += kKronrodWeights[j] * (std::abs(f1[j]) + std::abs(f2[j]));
    }
    resasc *= std::abs(half);
    resabs *= std::abs(half);

    double err = std::abs((kronrod - gauss) * half);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
        err = std::max(50.0 * eps * resabs, err);
    return {kronrod * half, err};
}

Result integrate(const Integrand& f, double a, double b, const Options& opts) {
    if (a == b) return {};
    std::priority_queue<Segment> heap;
    Result first = gauss_kronrod15(f, a, b);
    heap.push({a, b, first});
    double total = first.value;
    double total_err = first.error;
    int intervals = 1;
    auto tolerance = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::abs(total)); };
    while (total_err > tolerance()) {
        if (intervals >= opts.max_intervals)
            throw EvaluationError("adaptive quadrature did not converge", total_err / std::max(std::abs(total), 1e-300));
        Segment worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // Interval cannot be split further in double precision; accept.
            break;
        }
        heap.pop();
        Result left = gauss_kronrod15(f, worst.a, mid);
        Result right = gauss_kronrod15(f, mid, worst.b);
        total += left.value + right.value - worst.r.value;
        total_err += left.error + right.error - worst.r.error;
        heap.push({worst.a, mid, left});
        heap.push({mid, worst.b, right});
        ++intervals;
    }
    // Resum to shed the drift accumulated by incremental updates.
    double sum = 0.0, err = 0.0;
    while (!heap.empty()) {
        sum += heap.top().r.value;
        err += heap.top().r.error;
        heap.pop();
    }
    return {sum, err};
}

Result integrate(const Integrand& f, double a, double b, std::span<const double> breakpoints,
                 const Options& opts) {
    std::vector<double> cuts{a};
    for (double p : breakpoints)
        if (p > std::min(a, b) && p < std::max(a, b)) cuts.push_back(p);
    cuts.push_back(b);
    if (a < b)
        std::sort(cuts.begin(), cuts.end());
    else
        std::sort(cuts.begin(), cuts.end(), std::greater<>());
    Result out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        Result piece = integrate(f, cuts[i], cuts[i + 1], opts);
        out.value += piece.value;
        out.error += piece.error;
    }
    return out;
}

Result integrate_to_infinity(const Integrand& f, double a, double scale, const Options& opts) {
    Result out;
    double prev_piece = 0.0;
    double prev_ratio = -1.0;
    int zero_run = 0;
    for (int j = 0; j < 1000; ++j) {
        const double lo = a + scale * (std::ldexp(1.0, j) - 1.0);
        const double hi = a + scale * (std::ldexp(1.0, j + 1) - 1.0);
        Options piece_opts = opts;
        piece_opts.abs_tol = std::max(opts.abs_tol, 1e-3 * opts.rel_tol * std::abs(out.value));
        Result piece = integrate(f, lo, hi, piece_opts);
        out.value += piece.value;
        out.error += piece.error;

        if (piece.value == 0.0) {
            if (++zero_run >= 2 && j >= 2) return out;
            continue;
        }
        zero_run = 0;
        if (j >= 2 && prev_piece != 0.0) {
            const double ratio = piece.value / prev_piece;
            if (ratio >= 0.0 && ratio < 1.0) {
                const double remainder = piece.value * ratio / (1.0 - ratio);
                const bool settled = prev_ratio >= 0.0 && std::abs(ratio - prev_ratio) <= 1e-3 * (1.0 - ratio) + 1e-12;
                if (std::abs(remainder) <= opts.rel_tol * std::abs(out.value) && (settled || ratio < 1e-3)) {
                    out.value += remainder;
                    out.error += std::abs(remainder) * std::abs(ratio - prev_ratio) + piece.error;
                    return out;
                }
            }
            prev_ratio = ratio;
        }
        prev_piece = piece.value;
    }
    throw EvaluationError("tail integral did not converge", out.error / std::max(std::abs(out.value), 1e-300));
}

} // namespace heavytail::quad
