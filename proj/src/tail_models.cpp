#include "heavytail/tail_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "heavytail/error.hpp"
#include "heavytail/quadrature.hpp"

#include <boost/math/special_functions/gamma.hpp>

namespace heavytail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailRelTol = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Pareto helpers. z(x) = x + offset >= 1 on the support.
struct ParetoGeometry {
    double alpha, offset, edge;
};

ParetoGeometry geometry(const ParetoShifted& p, double shift) {
    // X = Y - shift, Y = location + W, Pr{W > w} = (1 + w)^(-alpha)
    return {p.alpha, 1.0 - p.location + shift, p.location - shift};
}

// Integral of s^(p-1) e^{-s} / 2 over [0, x].
double half_lower_gamma(double p, double x) { return 0.5 * boost::math::tgamma_lower(p, x); }

// Continued fraction h(x) with Gamma(s, x) = e^{-x} x^s h(x) (modified Lentz);
// converges for x > s + 1.
double upper_gamma_fraction(double s, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) return h;
    }
    throw EvaluationError("incomplete gamma continued fraction did not converge", 4.0 * std::numeric_limits<double>::epsilon());
}

void validate_toy(std::vector<Atom>& atoms, double nominal_alpha) {
    if (atoms.empty()) throw ConfigError("discrete model needs at least one atom");
    double total = 0.0;
    for (const Atom& a : atoms) {
        if (!std::isfinite(a.value)) throw ConfigError("discrete atom values must be finite");
        if (!(a.probability > 0.0)) throw ConfigError("discrete atom probabilities must be positive");
        total += a.probability;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "discrete atom probabilities must sum to 1 (got " << total << ")";
        throw ConfigError(os.str());
    }
    if (!(nominal_alpha > 1.0)) throw ConfigError("nominal tail index must exceed 1");
    std::sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) { return l.value < r.value; });
    // merge coincident atoms so tail sums do not depend on input order
    std::vector<Atom> merged;
    for (const Atom& a : atoms) {
        if (!merged.empty() && merged.back().value == a.value)
            merged.back().probability += a.probability;
        else
            merged.push_back(a);
    }
    atoms = std::move(merged);
}

} // namespace

IncrementModel::IncrementModel(Kind kind) : kind_(std::move(kind)) {
    std::visit(Overloaded{
                   [&](ParetoShifted& p) {
                       if (!(p.alpha > 1.0)) throw ConfigError("Pareto tail index must exceed 1");
                       if (!std::isfinite(p.location)) throw ConfigError("Pareto location must be finite");
                       mean_shift_ = p.centered ? p.location + 1.0 / (p.alpha - 1.0) : 0.0;
                   },
                   [&](ProductLambdaLaplace& p) {
                       if (!(p.alpha_lambda > 1.0)) throw ConfigError("Lambda tail index must exceed 1");
                   },
                   [&](QueueIncrement& q) {
                       if (!(q.service_alpha > 1.0)) throw ConfigError("service tail index must exceed 1");
                       if (!(q.arrival_rate > 0.0)) throw ConfigError("arrival rate must be positive");
                       const double drift = 1.0 / q.arrival_rate - 1.0 / (q.service_alpha - 1.0);
                       if (!(drift > 0.0)) throw ConfigError("queue is unstable: E[A] - E[V] must be positive");
                       const double rate = q.arrival_rate, a = q.service_alpha;
                       auto f = [rate, a](double v) { return std::exp(-rate * v) * a * std::pow(1.0 + v, -a - 1.0); };
                       quad::Options opts;
                       opts.rel_tol = kTailRelTol;
                       laplace_service_ = quad::integrate(f, 0.0, 60.0 / rate, opts).value;
                   },
                   [&](DiscreteToy& t) {
                       validate_toy(t.atoms, t.nominal_alpha);
                       toy_cumulative_.clear();
                       double c = 0.0;
                       for (const Atom& a : t.atoms) toy_cumulative_.push_back(c += a.probability);
                   },
               },
               kind_);
}

IncrementModel IncrementModel::pareto(double alpha, double location, bool centered) {
    return IncrementModel(ParetoShifted{alpha, location, centered});
}

IncrementModel IncrementModel::product_lambda_laplace(double alpha_lambda) {
    return IncrementModel(ProductLambdaLaplace{alpha_lambda});
}

IncrementModel IncrementModel::queue(double service_alpha, double rho) {
    if (!(service_alpha > 1.0)) throw ConfigError("service tail index must exceed 1");
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("traffic intensity must lie in (0, 1)");
    const double mean_service = 1.0 / (service_alpha - 1.0);
    return IncrementModel(QueueIncrement{service_alpha, rho / mean_service});
}

IncrementModel IncrementModel::discrete(std::vector<Atom> atoms, double nominal_alpha) {
    return IncrementModel(DiscreteToy{std::move(atoms), nominal_alpha});
}

std::string IncrementModel::name() const {
    return std::visit(Overloaded{
                          [](const ParetoShifted&) { return std::string("pareto"); },
                          [](const ProductLambdaLaplace&) { return std::string("product_lambda_laplace"); },
                          [](const QueueIncrement&) { return std::string("queue"); },
                          [](const DiscreteToy&) { return std::string("discrete"); },
                      },
                      kind_);
}

double IncrementModel::alpha() const {
    return std::visit(Overloaded{
                          [](const ParetoShifted& p) { return p.alpha; },
                          [](const ProductLambdaLaplace& p) { return p.alpha_lambda; },
                          [](const QueueIncrement& q) { return q.service_alpha; },
                          [](const DiscreteToy& t) { return t.nominal_alpha; },
                      },
                      kind_);
}

double IncrementModel::queue_drift() const {
    if (const auto* q = std::get_if<QueueIncrement>(&kind_))
        return 1.0 / q->arrival_rate - 1.0 / (q->service_alpha - 1.0);
    return 0.0;
}

double IncrementModel::left_edge() const {
    return std::visit(Overloaded{
                          [&](const ParetoShifted& p) { return geometry(p, mean_shift_).edge; },
                          [](const ProductLambdaLaplace&) { return -kInf; },
                          [](const QueueIncrement&) { return -kInf; },
                          [](const DiscreteToy& t) { return t.atoms.front().value; },
                      },
                      kind_);
}

double IncrementModel::right_edge() const {
    if (const auto* t = std::get_if<DiscreteToy>(&kind_)) return t->atoms.back().value;
    return kInf;
}

std::vector<double> IncrementModel::breakpoints() const {
    return std::visit(Overloaded{
                          [&](const ParetoShifted& p) { return std::vector<double>{geometry(p, mean_shift_).edge}; },
                          [](const ProductLambdaLaplace&) { return std::vector<double>{0.0}; },
                          [&](const QueueIncrement&) { return std::vector<double>{queue_drift()}; },
                          [](const DiscreteToy& t) {
                              std::vector<double> v;
                              for (const Atom& a : t.atoms) v.push_back(a.value);
                              return v;
                          },
                      },
                      kind_);
}

double IncrementModel::queue_power_moment(double c, double p) const {
    return std::exp(queue_log_power_moment(c, p));
}

double IncrementModel::queue_log_power_moment(double c, double p) const {
    // E[(c + A)^(-p)] = rate^p e^{rate c} Gamma(1 - p, rate c) = rate c^(1-p) h(rate c)
    const double rate = std::get<QueueIncrement>(kind_).arrival_rate;
    if (rate * c < 2.0 - p) {
        // slow fraction convergence; integrate directly
        auto f = [c, p, rate](double y) { return std::exp(-y) * std::pow(c + y / rate, -p); };
        quad::Options opts;
        opts.rel_tol = kTailRelTol;
        return std::log(quad::integrate(f, 0.0, 60.0, opts).value);
    }
    return std::log(rate) + (1.0 - p) * std::log(c) + std::log(upper_gamma_fraction(1.0 - p, rate * c));
}

double IncrementModel::tail_closed(double x) const {
    return std::visit(
        Overloaded{
            [&](const ParetoShifted& p) {
                const auto g = geometry(p, mean_shift_);
                return x < g.edge ? 1.0 : std::pow(x + g.offset, -p.alpha);
            },
            [&](const ProductLambdaLaplace& p) {
                const double a = p.alpha_lambda;
                auto upper = [a](double y) {
                    if (y < 1e-8) return 0.5 * (1.0 - a * y / (a + 1.0));
                    return a * std::pow(y, -a) * half_lower_gamma(a, y);
                };
                return x >= 0.0 ? upper(x) : 1.0 - upper(-x);
            },
            [&](const QueueIncrement& q) {
                const double t = x - queue_drift();
                if (t < 0.0) return 1.0 - std::exp(q.arrival_rate * t) * laplace_service_;
                return queue_power_moment(1.0 + t, q.service_alpha);
            },
            [&](const DiscreteToy& t) {
                double s = 0.0;
                for (auto it = t.atoms.rbegin(); it != t.atoms.rend() && it->value > x; ++it) s += it->probability;
                return s;
            },
        },
        kind_);
}

double IncrementModel::tail(double x, EvalPath path) const {
    if (path == EvalPath::Quadrature && !is_discrete()) return tail_by_quadrature(x);
    return tail_closed(x);
}

double IncrementModel::tail_at_least(double x) const {
    if (const auto* t = std::get_if<DiscreteToy>(&kind_)) {
        double s = 0.0;
        for (auto it = t->atoms.rbegin(); it != t->atoms.rend() && it->value >= x; ++it) s += it->probability;
        return s;
    }
    return tail_closed(x);
}

double IncrementModel::log_tail_at_least(double x) const {
    return std::visit(
        Overloaded{
            [&](const ParetoShifted& p) {
                const auto g = geometry(p, mean_shift_);
                return x <= g.edge ? 0.0 : -p.alpha * std::log(x + g.offset);
            },
            [&](const ProductLambdaLaplace& p) {
                if (x < 1.0) return std::log(tail_closed(x));
                const double a = p.alpha_lambda;
                return std::log(a) - a * std::log(x) + std::log(half_lower_gamma(a, x));
            },
            [&](const QueueIncrement& q) {
                const double t = x - queue_drift();
                if (t < 0.0) return std::log(tail_closed(x));
                return queue_log_power_moment(1.0 + t, q.service_alpha);
            },
            [&](const DiscreteToy&) {
                const double s = tail_at_least(x);
                return s > 0.0 ? std::log(s) : -kInf;
            },
        },
        kind_);
}

double IncrementModel::below(double x) const {
    if (is_discrete()) return 1.0 - tail_at_least(x);
    // evaluate left tails directly so that they keep relative accuracy far out
    if (std::holds_alternative<ProductLambdaLaplace>(kind_) && x < 0.0) return tail_closed(-x);
    if (const auto* q = std::get_if<QueueIncrement>(&kind_)) {
        const double t = x - queue_drift();
        if (t < 0.0) return std::exp(q->arrival_rate * t) * laplace_service_;
    }
    return 1.0 - tail_closed(x);
}

double IncrementModel::integrated_closed(double x) const {
    return std::visit(
        Overloaded{
            [&](const ParetoShifted& p) {
                const auto g = geometry(p, mean_shift_);
                const double at_edge = 1.0 / (p.alpha - 1.0);
                return x < g.edge ? (g.edge - x) + at_edge : std::pow(x + g.offset, 1.0 - p.alpha) / (p.alpha - 1.0);
            },
            [&](const ProductLambdaLaplace& p) {
                const double a = p.alpha_lambda;
                auto upper = [a](double y) {
                    if (y < 1e-8) return 0.5 * a / (a - 1.0) - 0.5 * y;
                    return a * std::pow(y, 1.0 - a) * half_lower_gamma(a - 1.0, y);
                };
                // symmetric and zero mean: Fbar_I(x) - Fbar_I(-x) = -x
                return x >= 0.0 ? upper(x) : -x + upper(-x);
            },
            [&](const QueueIncrement& q) {
                const double t = x - queue_drift();
                const double a = q.service_alpha;
                if (t >= 0.0) return queue_power_moment(1.0 + t, a - 1.0) / (a - 1.0);
                const double rate = q.arrival_rate;
                return -t - laplace_service_ * (1.0 - std::exp(rate * t)) / rate + queue_power_moment(1.0, a - 1.0) / (a - 1.0);
            },
            [&](const DiscreteToy& t) {
                double s = 0.0;
                for (const Atom& a : t.atoms)
                    if (a.value > x) s += a.probability * (a.value - x);
                return s;
            },
        },
        kind_);
}

double IncrementModel::integrated_tail(double x, EvalPath path) const {
    if (path == EvalPath::Quadrature && !is_discrete()) return integrated_by_quadrature(x);
    return integrated_closed(x);
}

double IncrementModel::density(double x) const {
    return std::visit(
        Overloaded{
            [&](const ParetoShifted& p) {
                const auto g = geometry(p, mean_shift_);
                return x < g.edge ? 0.0 : p.alpha * std::pow(x + g.offset, -p.alpha - 1.0);
            },
            [&](const ProductLambdaLaplace& p) {
                const double a = p.alpha_lambda;
                const double y = std::abs(x);
                if (y < 1e-8) return 0.5 * a / (a + 1.0);
                return a * std::pow(y, -a - 1.0) * half_lower_gamma(a + 1.0, y);
            },
            [&](const QueueIncrement& q) {
                const double t = x - queue_drift();
                if (t < 0.0) return q.arrival_rate * std::exp(q.arrival_rate * t) * laplace_service_;
                return q.service_alpha * queue_power_moment(1.0 + t, q.service_alpha + 1.0);
            },
            [&](const DiscreteToy&) -> double { throw ConfigError("discrete model has no density"); },
        },
        kind_);
}

double IncrementModel::tail_by_quadrature(double x) const {
    quad::Options opts;
    opts.rel_tol = kTailRelTol;
    auto f = [this](double u) { return density(u); };
    double start = std::max(x, left_edge());
    double total = 0.0;
    for (double bp : breakpoints()) {
        if (bp > start) {
            total += quad::integrate(f, start, bp, opts).value;
            start = bp;
        }
    }
    total += quad::integrate_to_infinity(f, start, std::max(1.0, std::abs(start)), opts).value;
    return total;
}

double IncrementModel::integrated_by_quadrature(double x) const {
    quad::Options opts;
    opts.rel_tol = kTailRelTol;
    auto f = [this](double u) { return tail_closed(u); };
    double start = x;
    double total = 0.0;
    for (double bp : breakpoints()) {
        if (bp > start) {
            total += quad::integrate(f, start, bp, opts).value;
            start = bp;
        }
    }
    total += quad::integrate_to_infinity(f, start, std::max(1.0, std::abs(start)), opts).value;
    return total;
}

double IncrementModel::sample(RngStream& rng) const {
    return std::visit(
        Overloaded{
            [&](const ParetoShifted& p) {
                const auto g = geometry(p, mean_shift_);
                return std::pow(rng.uniform(), -1.0 / p.alpha) - g.offset;
            },
            [&](const ProductLambdaLaplace& p) {
                const double scale = std::pow(rng.uniform(), -1.0 / p.alpha_lambda);
                const double u = rng.uniform();
                const double r = u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
                return scale * r;
            },
            [&](const QueueIncrement& q) {
                const double v = std::pow(rng.uniform(), -1.0 / q.service_alpha) - 1.0;
                const double a = rng.exponential() / q.arrival_rate;
                return v - a + queue_drift();
            },
            [&](const DiscreteToy& t) {
                const double u = rng.uniform();
                const auto it = std::upper_bound(toy_cumulative_.begin(), toy_cumulative_.end(), u);
                const auto idx = std::min<std::size_t>(it - toy_cumulative_.begin(), t.atoms.size() - 1);
                return t.atoms[idx].value;
            },
        },
        kind_);
}

double IncrementModel::sample_conditional_tail(double threshold, RngStream& rng) const {
    if (log_tail_at_least(threshold) == -kInf)
        throw SamplingError("conditional tail sampling: Pr{X >= threshold} underflows");
    const double c = threshold;
    const double x = std::visit(
        Overloaded{
            [&](const ParetoShifted& p) {
                const auto g = geometry(p, mean_shift_);
                if (c <= g.edge) return sample(rng);
                return (c + g.offset) * std::pow(rng.uniform(), -1.0 / p.alpha) - g.offset;
            },
            [&](const ProductLambdaLaplace& p) {
                const double a = p.alpha_lambda;
                if (c <= 0.0) {
                    for (;;) {
                        const double y = sample(rng);
                        if (y >= c) return y;
                    }
                }
                // Given X >= c the variable s = c / Lambda has density proportional to
                // s^(a-1) e^{-s} on (0, c], and R - c/Lambda ~ Exp(1).
                const double switch_point = std::pow(std::tgamma(a + 1.0), 1.0 / a);
                double s = 0.0;
                if (c < switch_point) {
                    do {
                        s = c * std::pow(rng.uniform(), 1.0 / a);
                    } while (rng.uniform() >= std::exp(-s));
                } else {
                    std::gamma_distribution<double> gamma(a, 1.0);
                    do {
                        s = gamma(rng);
                    } while (s > c || s <= 0.0);
                }
                return c + (c / s) * rng.exponential();
            },
            [&](const QueueIncrement& q) {
                const double drift = queue_drift();
                const double t = c - drift;
                const double a = q.service_alpha;
                // A has density proportional to rate e^{-rate a} Pr{V >= t + a}; propose from
                // Exp(rate) and accept with Pr{V >= t + a} / Pr{V >= max(t, 0)}.
                const double base = std::pow(1.0 + std::max(t, 0.0), -a);
                for (;;) {
                    const double arrival = rng.exponential() / q.arrival_rate;
                    const double need = t + arrival;
                    const double accept = need <= 0.0 ? 1.0 : std::pow(1.0 + need, -a) / base;
                    if (rng.uniform() < accept) {
                        const double v = need <= 0.0 ? std::pow(rng.uniform(), -1.0 / a) - 1.0
                                                     : (1.0 + need) * std::pow(rng.uniform(), -1.0 / a) - 1.0;
                        return v - arrival + drift;
                    }
                }
            },
            [&](const DiscreteToy& t) {
                const auto first = std::lower_bound(t.atoms.begin(), t.atoms.end(), c,
                                                    [](const Atom& at, double v) { return at.value < v; });
                double mass = 0.0;
                for (auto it = first; it != t.atoms.end(); ++it) mass += it->probability;
                double u = rng.uniform() * mass;
                for (auto it = first; it != t.atoms.end(); ++it) {
                    if (u < it->probability) return it->value;
                    u -= it->probability;
                }
                return t.atoms.back().value;
            },
        },
        kind_);
    return std::max(x, threshold);
}

double g_beta_tail(const IncrementModel& model, double x, double beta) {
    if (!(beta > 2.0)) throw ConfigError("g-tail exponent beta must exceed 2");
    if (!(x > 0.0)) throw ConfigError("g-tail argument must be positive");
    if (model.is_discrete()) return model.tail(x) * std::pow(x, model.alpha() - beta);
    return std::exp(model.log_tail_at_least(x) + (model.alpha() - beta) * std::log(x));
}

double g_beta_integrated(const IncrementModel& model, double x, double beta) {
    if (!(beta > 2.0)) throw ConfigError("g-tail exponent beta must exceed 2");
    if (!(x > 0.0)) throw ConfigError("g-tail argument must be positive");
    if (const auto* p = std::get_if<ParetoShifted>(&model.kind())) {
        // pure power tail x^(-alpha) on x >= 1
        const double offset = 1.0 - p->location + model.mean_shift();
        if (offset == 0.0 && x >= 1.0) return std::pow(x, 1.0 - beta) / (beta - 1.0);
    }
    quad::Options opts;
    opts.rel_tol = kTailRelTol;
    auto f = [&](double u) { return g_beta_tail(model, u, beta); };
    double start = x;
    double total = 0.0;
    for (double bp : model.breakpoints()) {
        if (bp > start) {
            total += quad::integrate(f, start, bp, opts).value;
            start = bp;
        }
    }
    total += quad::integrate_to_infinity(f, start, std::max(1.0, start), opts).value;
    return total;
}

} // namespace heavytail
