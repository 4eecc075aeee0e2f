#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "heavytail/rng.hpp"

namespace heavytail {

// Lomax-type increment: raw Y = location + W with Pr{W > w} = (1 + w)^(-alpha),
// optionally centered so that E[X] = 0. location = 1 gives the classical
// Pareto tail y^(-alpha) on y >= 1.
struct ParetoShifted {
    double alpha = 2.5;
    double location = 0.0;
    bool centered = true;
};

// X = Lambda * R with Pr{Lambda > x} = min(1, x^(-alpha_lambda)) and R ~ Laplace(1)
// (density e^{-|r|}/2), Lambda independent of R.
struct ProductLambdaLaplace {
    double alpha_lambda = 4.0;
};

// M/G/1 increment X = V - A + drift, with service tail Pr{V > t} = (1 + t)^(-service_alpha),
// A ~ Exp(arrival_rate) and drift = E[A] - E[V] so that E[X] = 0.
struct QueueIncrement {
    double service_alpha = 2.5;
    double arrival_rate = 0.75;
};

struct Atom {
    double value;
    double probability;
};

// Finite-support increment used by the exact enumeration oracles. The support
// is bounded, so nominal_alpha only feeds regime selection.
struct DiscreteToy {
    std::vector<Atom> atoms;
    double nominal_alpha = 2.5;
};

enum class EvalPath { Auto, Quadrature };

class IncrementModel {
public:
    using Kind = std::variant<ParetoShifted, ProductLambdaLaplace, QueueIncrement, DiscreteToy>;

    explicit IncrementModel(Kind kind);

    static IncrementModel pareto(double alpha, double location = 0.0, bool centered = true);
    static IncrementModel product_lambda_laplace(double alpha_lambda);
    // Queue increment for traffic intensity rho: arrival rate = rho / E[V].
    static IncrementModel queue(double service_alpha, double rho);
    static IncrementModel discrete(std::vector<Atom> atoms, double nominal_alpha = 2.5);

    const Kind& kind() const { return kind_; }
    std::string name() const;

    double alpha() const;
    double mean_shift() const { return mean_shift_; }
    // E[A] - E[V] for the queue model, 0 otherwise.
    double queue_drift() const;
    bool is_discrete() const { return std::holds_alternative<DiscreteToy>(kind_); }
    // Smallest point of the support, -inf when unbounded below.
    double left_edge() const;
    // Largest point of the support, +inf when unbounded above.
    double right_edge() const;
    // Points where the density is not smooth.
    std::vector<double> breakpoints() const;

    double tail(double x, EvalPath path = EvalPath::Auto) const;  // Pr{X > x}
    double tail_at_least(double x) const;                          // Pr{X >= x}
    double log_tail_at_least(double x) const;                      // log Pr{X >= x}, never underflows for the tail families
    double below(double x) const;                                  // Pr{X < x}
    double integrated_tail(double x, EvalPath path = EvalPath::Auto) const;
    // Lebesgue density; throws ConfigError for DiscreteToy.
    double density(double x) const;

    double sample(RngStream& rng) const;
    // Draw from F(. | X >= threshold); the result is >= threshold.
    double sample_conditional_tail(double threshold, RngStream& rng) const;

private:
    double tail_closed(double x) const;
    double integrated_closed(double x) const;
    double tail_by_quadrature(double x) const;
    double integrated_by_quadrature(double x) const;

    // E[(c + A)^(-p)] for the queue arrival A ~ Exp(rate), c >= 1.
    double queue_power_moment(double c, double p) const;
    double queue_log_power_moment(double c, double p) const;

    Kind kind_;
    double mean_shift_ = 0.0;
    double laplace_service_ = 0.0;  // E[exp(-rate V)], queue only
    std::vector<double> toy_cumulative_;
};

// G^(beta)(x) = Fbar(x) / x^(beta - alpha), x > 0, beta > 2.
double g_beta_tail(const IncrementModel& model, double x, double beta);
// Integral of g_beta_tail over [x, inf).
double g_beta_integrated(const IncrementModel& model, double x, double beta);

} // namespace heavytail
