#include "heavytail/twisted.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "heavytail/error.hpp"
#include "heavytail/quadrature.hpp"

namespace heavytail {

namespace {

constexpr double kCellTol = 1e-13;
constexpr double kNegligible = 1e-17;

// Cubic Hermite CDF on a cell of width h with end densities ga, gb and mass m,
// evaluated at s in [0, 1].
double hermite(double s, double h, double ga, double gb, double m) {
    const double s2 = s * s, s3 = s2 * s;
    return h * ga * (s3 - 2.0 * s2 + s) + m * (-2.0 * s3 + 3.0 * s2) + h * gb * (s3 - s2);
}

double hermite_slope(double s, double h, double ga, double gb, double m) {
    return h * ga * (3.0 * s * s - 4.0 * s + 1.0) + m * (-6.0 * s * s + 6.0 * s) + h * gb * (3.0 * s * s - 2.0 * s);
}

bool hermite_monotone(double h, double ga, double gb, double m) {
    // slope is quadratic in s: c2 s^2 + c1 s + c0
    const double c2 = 3.0 * h * ga - 6.0 * m + 3.0 * h * gb;
    const double c1 = -4.0 * h * ga + 6.0 * m - 2.0 * h * gb;
    if (c2 > 0.0) {
        const double vertex = -c1 / (2.0 * c2);
        if (vertex > 0.0 && vertex < 1.0) return hermite_slope(vertex, h, ga, gb, m) >= 0.0;
    }
    return true;
}

// Lower cut below which the twisted mass is negligible relative to a lower
// bound on the total.
double lower_cut(const IncrementModel& model, double u, double theta) {
    const double edge = model.left_edge();
    if (std::isfinite(edge)) return edge;
    double anchor = std::min(u, 0.0) - 1.0;
    double mass = 0.0;
    for (int j = 0; j < 200; ++j) {
        mass = std::exp(theta * (anchor - u)) * (model.below(u) - model.below(anchor));
        if (mass > 0.0) break;
        anchor = u - std::ldexp(1.0, j);
    }
    if (!(mass > 0.0)) throw EvaluationError("twisted law: no mass found below the truncation point", 1.0);
    for (int j = 0; j < 1100; ++j) {
        const double lo = anchor - std::ldexp(1.0, j);
        const double left = std::exp(theta * (lo - u)) * model.below(lo);
        if (left <= kNegligible * mass) return lo;
    }
    throw EvaluationError("twisted law: left tail too heavy to truncate", 1.0);
}

std::vector<double> initial_grid(const IncrementModel& model, double lo, double u) {
    std::vector<double> pts{lo, u};
    auto add = [&](double p) {
        if (p > lo && p < u) pts.push_back(p);
    };
    for (double bp : model.breakpoints()) add(bp);
    for (int j = -6; j <= 62; ++j) {
        const double d = std::ldexp(1.0, j);
        add(u - d);
        add(d);
        add(-d);
        add(lo + d);
    }
    add(0.0);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

} // namespace

TwistedTruncated::TwistedTruncated(const IncrementModel& model, double threshold, double theta)
    : threshold_(threshold), theta_(theta),
      below_threshold_(std::nextafter(threshold, -std::numeric_limits<double>::infinity())) {
    if (!(theta >= 0.0) || !std::isfinite(theta)) throw ConfigError("twist parameter must be finite and >= 0");
    if (!std::isfinite(threshold)) throw ConfigError("truncation point must be finite");
    if (!(model.below(threshold) > 0.0)) throw ConfigError("truncation point leaves no mass: F(u) = 0");
    if (const auto* toy = std::get_if<DiscreteToy>(&model.kind()))
        build_discrete(*toy);
    else
        build_continuous(model);
}

void TwistedTruncated::build_discrete(const DiscreteToy& toy) {
    double c = 0.0;
    for (const Atom& a : toy.atoms) {
        if (a.value >= threshold_) break;
        atom_values_.push_back(a.value);
        c += a.probability * std::exp(theta_ * (a.value - threshold_));
        atom_cumulative_.push_back(c);
    }
    if (!(c > 0.0)) throw ConfigError("twisted law has no mass below the truncation point");
    log_mgf_ = theta_ * threshold_ + std::log(c);
}

void TwistedTruncated::build_continuous(const IncrementModel& model) {
    const double u = threshold_;
    const double theta = theta_;
    auto g = [&](double x) { return std::exp(theta * (x - u)) * model.density(x); };
    const double lo = lower_cut(model, u, theta);
    const std::vector<double> grid = initial_grid(model, lo, u);

    quad::Options opts;
    opts.rel_tol = 1e-12;
    const double total = quad::integrate(g, lo, u, grid, opts).value;
    if (!(total > 0.0)) throw EvaluationError("twisted law: zero total mass", 1.0);
    const double tol = kCellTol * total;

    struct Cell {
        double a, b, ga, gb;
    };
    std::vector<Cell> stack;
    for (std::size_t i = grid.size() - 1; i-- > 0;) stack.push_back({grid[i], grid[i + 1], g(grid[i]), g(grid[i + 1])});

    knots_.push_back(lo);
    density_.push_back(stack.back().ga);
    cumulative_.push_back(0.0);
    double running = 0.0;
    while (!stack.empty()) {
        Cell c = stack.back();
        stack.pop_back();
        const double h = c.b - c.a;
        const double mid = 0.5 * (c.a + c.b);
        const quad::Result whole = quad::gauss_kronrod15(g, c.a, c.b);
        const quad::Result half = quad::gauss_kronrod15(g, c.a, mid);
        const double m = std::max(whole.value, 0.0);
        const bool tiny = mid <= c.a || mid >= c.b || h <= 1e-13 * std::max(1.0, std::abs(mid));
        const bool good = whole.error <= tol && std::abs(hermite(0.5, h, c.ga, c.gb, m) - half.value) <= tol &&
                          hermite_monotone(h, c.ga, c.gb, m);
        if (!good && !tiny) {
            const double gm = g(mid);
            stack.push_back({mid, c.b, gm, c.gb});
            stack.push_back({c.a, mid, c.ga, gm});
            continue;
        }
        running += m;
        knots_.push_back(c.b);
        density_.push_back(c.gb);
        cumulative_.push_back(running);
    }
    if (!(running > 0.0)) throw EvaluationError("twisted law: zero tabulated mass", 1.0);
    log_mgf_ = theta * u + std::log(running);

    const std::size_t n_cells = knots_.size() - 1;
    guide_.resize(2 * n_cells);
    std::size_t cell = 0;
    for (std::size_t j = 0; j < guide_.size(); ++j) {
        const double level = running * static_cast<double>(j) / static_cast<double>(guide_.size());
        while (cell + 1 < n_cells && cumulative_[cell + 1] <= level) ++cell;
        guide_[j] = static_cast<std::uint32_t>(cell);
    }
}

double TwistedTruncated::invert_cell(std::size_t cell, double target) const {
    const double a = knots_[cell], b = knots_[cell + 1];
    const double h = b - a;
    const double ga = density_[cell], gb = density_[cell + 1];
    const double m = cumulative_[cell + 1] - cumulative_[cell];
    if (!(m > 0.0)) return a;
    double lo = 0.0, hi = 1.0;
    double s = std::clamp(target / m, 0.0, 1.0);
    const double tol = 1e-15 * m;
    for (int it = 0; it < 60; ++it) {
        const double val = hermite(s, h, ga, gb, m) - target;
        if (std::abs(val) <= tol) break;
        if (val > 0.0)
            hi = s;
        else
            lo = s;
        const double slope = hermite_slope(s, h, ga, gb, m);
        double next = slope > 0.0 ? s - val / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - s) <= 1e-15) {
            s = next;
            break;
        }
        s = next;
    }
    return a + s * h;
}

double TwistedTruncated::sample(RngStream& rng) const {
    if (!atom_values_.empty()) {
        const double target = rng.uniform() * atom_cumulative_.back();
        const auto it = std::upper_bound(atom_cumulative_.begin(), atom_cumulative_.end(), target);
        const auto idx = std::min<std::size_t>(it - atom_cumulative_.begin(), atom_values_.size() - 1);
        return atom_values_[idx];
    }
    const double v = rng.uniform();
    const double target = v * cumulative_.back();
    const std::size_t n_cells = knots_.size() - 1;
    std::size_t cell = guide_[std::min(guide_.size() - 1, static_cast<std::size_t>(v * static_cast<double>(guide_.size())))];
    while (cell + 1 < n_cells && cumulative_[cell + 1] <= target) ++cell;
    const double x = invert_cell(cell, target - cumulative_[cell]);
    return std::min(x, below_threshold_);
}

TwistedTruncated make_twisted(const IncrementModel& model, double threshold, double theta) {
    return TwistedTruncated(model, threshold, theta);
}

double truncated_log_mgf(const IncrementModel& model, double threshold, double theta) {
    const double u = threshold;
    if (const auto* toy = std::get_if<DiscreteToy>(&model.kind())) {
        double s = 0.0;
        for (const Atom& a : toy->atoms)
            if (a.value < u) s += a.probability * std::exp(theta * (a.value - u));
        return theta * u + std::log(s);
    }
    auto g = [&](double x) { return std::exp(theta * (x - u)) * model.density(x); };
    quad::Options opts;
    opts.rel_tol = 1e-12;
    std::vector<double> bps = model.breakpoints();
    const double edge = model.left_edge();
    double total = 0.0;
    double start = std::isfinite(edge) ? edge : std::min(u, 0.0) - 1.0;
    if (start >= u) return -std::numeric_limits<double>::infinity();
    total += quad::integrate(g, start, u, bps, opts).value;
    if (!std::isfinite(edge)) {
        auto left = [&](double y) { return g(start - y); };
        total += quad::integrate_to_infinity(left, 0.0, 1.0, opts).value;
    }
    return theta * u + std::log(total);
}

} // namespace heavytail
