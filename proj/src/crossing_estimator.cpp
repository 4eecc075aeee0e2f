#include "heavytail/crossing_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "heavytail/error.hpp"

namespace heavytail {

namespace {

constexpr double kBoundSlack = 1e-12;
constexpr std::uint64_t kMaxBlockLength = std::uint64_t{1} << 62;

// Neumaier compensated summation.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            carry += (sum - t) + x;
        else
            carry += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + carry; }
};

void check_bound(double value, double bound, const char* what) {
    if (!(value <= bound * (1.0 + kBoundSlack))) {
        std::ostringstream os;
        os << what << " bound violated: " << value << " > " << bound;
        throw SamplingError(os.str());
    }
}

std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

} // namespace

BlockScheme::BlockScheme(std::uint64_t r) : r_(r), max_k_(0) {
    if (r < 2) throw ConfigError("block ratio r must be an integer >= 2");
    std::uint64_t n = 1;
    while (n <= kMaxBlockLength / r) {
        n *= r;
        ++max_k_;
    }
}

std::uint64_t BlockScheme::n(int k) const {
    if (k < 0 || k > max_k_) throw ConfigError("block index " + std::to_string(k) + " out of range");
    if (k == 0) return 0;
    std::uint64_t n = 1;
    for (int i = 0; i < k; ++i) n *= r_;
    return n;
}

void CrossingProblem::validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("drift mu must be finite and > 0");
    if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("level b must be finite and > 0");
}

std::string regime_name(Regime r) {
    switch (r) {
    case Regime::FiniteVariance: return "finite_variance";
    case Regime::StrongEfficiency: return "strong_efficiency";
    case Regime::SubStrong: return "sub_strong";
    }
    return "unknown";
}

Regime parse_regime(const std::string& name) {
    if (name == "finite_variance") return Regime::FiniteVariance;
    if (name == "strong_efficiency") return Regime::StrongEfficiency;
    if (name == "sub_strong") return Regime::SubStrong;
    throw ConfigError("unknown regime '" + name + "' (finite_variance | strong_efficiency | sub_strong)");
}

// ---------------------------------------------------------------------------
// block law

BlockPmf::BlockPmf(const CrossingProblem& problem, const RegimeSpec& spec) : regime_(spec.regime) {
    problem.validate();
    const double alpha = problem.model.alpha();
    switch (spec.regime) {
    case Regime::FiniteVariance:
        if (alpha <= 2.0) {
            warnings_.push_back("finite_variance regime with alpha = " + fmt(alpha) +
                                " <= 2: the expected termination work E[nu_b] is infinite");
        }
        break;
    case Regime::StrongEfficiency: {
        if (alpha < 1.5 || (alpha == 1.5 && !spec.allow_alpha_boundary)) {
            throw ConfigError("strong_efficiency regime needs alpha > 1.5 (got " + fmt(alpha) +
                              "): by the impossibility theorem for alpha < 1.5 there does not exist an assignment "
                              "of (p_k, n_k) with both finite second moment and finite expected termination time" +
                              (alpha == 1.5 ? std::string("; alpha = 1.5 needs the explicit boundary override") : ""));
        }
        if (alpha > 2.0) {
            warnings_.push_back("strong_efficiency regime is designed for alpha in (1.5, 2]; alpha = " + fmt(alpha) +
                                " would also allow the finite_variance regime");
        }
        if (alpha == 1.5) {
            // (2, 2 alpha - 1) is empty here; only beta > 2 can be enforced
            if (!(spec.beta > 2.0)) {
                throw ConfigError("strong_efficiency at the alpha = 1.5 boundary needs an explicit beta > 2");
            }
            beta_ = spec.beta;
            warnings_.push_back("strong_efficiency at alpha = 1.5: no efficiency guarantee unless the slowly varying "
                                "factor decays like a negative power of log x");
            break;
        }
        beta_ = spec.beta > 0.0 ? spec.beta : 0.5 * (2.0 + (2.0 * alpha - 1.0));
        if (!(beta_ > 2.0 && beta_ < 2.0 * alpha - 1.0)) {
            throw ConfigError("strong_efficiency regime needs beta in (2, 2 alpha - 1) = (2, " + fmt(2.0 * alpha - 1.0) +
                              "), got " + fmt(beta_));
        }
        break;
    }
    case Regime::SubStrong: {
        if (!(alpha > 1.0 && alpha <= 1.5)) {
            throw ConfigError("sub_strong regime needs alpha in (1, 1.5], got " + fmt(alpha));
        }
        const double gmax = (alpha - 1.0) / (2.0 - alpha);
        gamma_ = spec.gamma > 0.0 ? spec.gamma : 0.5 * gmax;
        if (!(gamma_ > 0.0 && gamma_ < gmax)) {
            throw ConfigError("sub_strong regime needs gamma in (0, (alpha - 1)/(2 - alpha)) = (0, " + fmt(gmax) +
                              "), got " + fmt(gamma_));
        }
        const double bmax = alpha + (alpha - 1.0) / gamma_;
        beta_ = spec.beta > 0.0 ? spec.beta : 0.5 * (2.0 + bmax);
        if (!(beta_ > 2.0 && beta_ < bmax)) {
            throw ConfigError("sub_strong regime needs beta in (2, alpha + (alpha - 1)/gamma) = (2, " + fmt(bmax) +
                              "), got " + fmt(beta_));
        }
        break;
    }
    }

    auto integrated = [&](double x) {
        return regime_ == Regime::FiniteVariance ? problem.model.integrated_tail(x)
                                                 : g_beta_integrated(problem.model, x, beta_);
    };
    const BlockScheme& scheme = problem.scheme;
    const double t0 = integrated(problem.b);
    if (!(t0 > 0.0) || !std::isfinite(t0)) throw ConfigError("integrated tail at b is not positive and finite");
    ratio_.push_back(1.0);
    for (int k = 1; k <= scheme.max_k(); ++k) {
        const double r = integrated(problem.level(scheme.n(k))) / t0;
        if (!(r < ratio_.back()) || !(r > 0.0)) {
            throw ConfigError("block law is degenerate at k = " + std::to_string(k) +
                              ": the integrated tail must be strictly decreasing and positive (unbounded support)");
        }
        ratio_.push_back(r);
    }
}

double BlockPmf::p(int k) const {
    if (k < 1 || k > max_k()) return 0.0;
    return ratio_[static_cast<std::size_t>(k - 1)] - ratio_[static_cast<std::size_t>(k)];
}

int BlockPmf::sample(RngStream& rng) const {
    // K = min{k : T_k / T_0 <= U}; Pr{K = k} = ratio_{k-1} - ratio_k.
    const double u = rng.uniform();
    if (u < ratio_.back()) throw SamplingError("block index beyond n_k = 2^62; block law table exhausted");
    // ratio_ is strictly decreasing
    const auto it = std::lower_bound(ratio_.begin(), ratio_.end(), u, [](double r, double v) { return r > v; });
    return static_cast<int>(it - ratio_.begin());
}

// ---------------------------------------------------------------------------
// jump index sums

double q_k(const CrossingProblem& problem, int k) {
    const std::uint64_t first = problem.scheme.n(k - 1) + 1, last = problem.scheme.n(k);
    CompensatedSum s;
    for (std::uint64_t i = first; i <= last; ++i) s.add(problem.model.tail_at_least(problem.level(i)));
    return s.value();
}

std::uint64_t locate_two_pass(const CrossingProblem& problem, int k, double target) {
    const std::uint64_t first = problem.scheme.n(k - 1) + 1, last = problem.scheme.n(k);
    CompensatedSum s;
    std::uint64_t chosen = last;
    for (std::uint64_t i = first; i <= last; ++i) {
        const double t = problem.model.tail_at_least(problem.level(i));
        s.add(t);
        if (t > 0.0 && s.value() > target) {
            chosen = i;
            break;
        }
    }
    return chosen;
}

JumpIndexTable::JumpIndexTable(const CrossingProblem& problem, int k, bool parallel, std::uint64_t stride)
    : problem_(&problem), first_(problem.scheme.n(k - 1) + 1), last_(problem.scheme.n(k)), stride_(stride) {
    if (stride_ == 0) throw ConfigError("stride must be positive");
    const std::uint64_t count = last_ - first_ + 1;
    const std::uint64_t segments = (count + stride_ - 1) / stride_;
    std::vector<double> seg(segments);
    auto fill = [&](std::uint64_t j) {
        CompensatedSum s;
        const std::uint64_t lo = first_ + j * stride_;
        const std::uint64_t hi = std::min(last_, lo + stride_ - 1);
        for (std::uint64_t i = lo; i <= hi; ++i) s.add(problem.model.tail_at_least(problem.level(i)));
        seg[j] = s.value();
    };
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t j = 0; j < static_cast<std::int64_t>(segments); ++j) fill(static_cast<std::uint64_t>(j));
    } else {
        for (std::uint64_t j = 0; j < segments; ++j) fill(j);
    }
    cumulative_.resize(segments);
    CompensatedSum running;
    for (std::uint64_t j = 0; j < segments; ++j) {
        running.add(seg[j]);
        cumulative_[j] = running.value();
    }
    total_ = segments ? cumulative_.back() : 0.0;
}

std::uint64_t JumpIndexTable::locate(double u) const {
    const double target = u * total_;
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    std::uint64_t j = static_cast<std::uint64_t>(it - cumulative_.begin());
    if (j >= cumulative_.size()) j = cumulative_.size() - 1;
    double running = j == 0 ? 0.0 : cumulative_[j - 1];
    const std::uint64_t lo = first_ + j * stride_;
    const std::uint64_t hi = std::min(last_, lo + stride_ - 1);
    std::uint64_t last_positive = lo;
    for (std::uint64_t i = lo; i <= hi; ++i) {
        const double t = problem_->model.tail_at_least(problem_->level(i));
        if (t > 0.0) last_positive = i;
        running += t;
        if (t > 0.0 && running > target) return i;
    }
    // rounding left the target just above the segment sum
    return last_positive;
}

// ---------------------------------------------------------------------------
// events

BlockOutcome classify_block(const CrossingProblem& problem, int k, std::span<const double> x) {
    const std::uint64_t lo = problem.scheme.n(k - 1), hi = problem.scheme.n(k);
    const double u = problem.level(lo);
    BlockOutcome out;
    double s = 0.0;
    bool big_before = false;  // some X_i >= u, i <= tau
    bool jump_in_block = false;
    const std::uint64_t steps = std::min<std::uint64_t>(hi, x.size());
    for (std::uint64_t i = 1; i <= steps; ++i) {
        const double xi = x[i - 1];
        s += xi;
        if (xi >= u) big_before = true;
        if (i > lo && xi >= problem.level(i)) jump_in_block = true;
        if (s - static_cast<double>(i) * problem.mu > problem.b) {
            out.tau = i;
            break;
        }
    }
    if (out.tau == 0 || out.tau <= lo) return out;
    out.in_block = true;
    out.a = jump_in_block;
    out.b = !big_before;
    out.c = !out.a && !out.b;
    return out;
}

// ---------------------------------------------------------------------------
// estimator

struct CrossingEstimator::BlockCache {
    std::once_flag table_once;
    std::unique_ptr<JumpIndexTable> table;
    std::once_flag twisted_once;
    std::unique_ptr<TwistedTruncated> twisted;
    double theta = 0.0;
    double tail = 0.0;  // Pr{X >= b + n_{k-1} mu}
    double log_n_tail = 0.0;
};

CrossingEstimator::CrossingEstimator(CrossingProblem problem) : problem_(std::move(problem)) { problem_.validate(); }

CrossingEstimator::CrossingEstimator(CrossingProblem problem, RegimeSpec spec) : CrossingEstimator(std::move(problem)) {
    pmf_ = std::make_unique<BlockPmf>(problem_, spec);
    for (int k = 1; k <= pmf_->max_k(); ++k) {
        const std::uint64_t nk = problem_.scheme.n(k);
        const double log_nt = std::log(static_cast<double>(nk)) +
                              problem_.model.log_tail_at_least(problem_.level(problem_.scheme.n(k - 1)));
        if (!(log_nt < 0.0)) {
            throw ConfigError("block k = " + std::to_string(k) + " is not rare: n_k Pr{X >= b + n_{k-1} mu} >= 1, so "
                              "theta_k <= 0; increase b or mu");
        }
    }
}

CrossingEstimator::~CrossingEstimator() = default;

const BlockPmf& CrossingEstimator::pmf() const {
    if (!pmf_) throw ConfigError("estimator was built without a block law");
    return *pmf_;
}

std::vector<std::string> CrossingEstimator::warnings() const {
    return pmf_ ? pmf_->warnings() : std::vector<std::string>{};
}

CrossingEstimator::BlockCache& CrossingEstimator::cache(int k) const {
    if (k < 1 || k > problem_.scheme.max_k()) throw ConfigError("block index " + std::to_string(k) + " out of range");
    std::lock_guard<std::mutex> lock(mutex_);
    auto& slot = caches_[k];
    if (!slot) {
        slot = std::make_unique<BlockCache>();
        const double u = problem_.level(problem_.scheme.n(k - 1));
        slot->tail = problem_.model.tail_at_least(u);
        slot->log_n_tail = std::log(static_cast<double>(problem_.scheme.n(k))) + problem_.model.log_tail_at_least(u);
    }
    return *slot;
}

double CrossingEstimator::q(int k) const {
    BlockCache& c = cache(k);
    std::call_once(c.table_once, [&] { c.table = std::make_unique<JumpIndexTable>(problem_, k); });
    return c.table->total();
}

double CrossingEstimator::block_tail(int k) const { return cache(k).tail; }

double CrossingEstimator::theta(int k) const {
    const BlockCache& c = cache(k);
    const double u = problem_.level(problem_.scheme.n(k - 1));
    if (c.log_n_tail == -std::numeric_limits<double>::infinity()) {
        throw ConfigError("block k = " + std::to_string(k) + ": Pr{X >= b + n_{k-1} mu} = 0, theta_k is undefined");
    }
    if (!(c.log_n_tail < 0.0)) {
        throw ConfigError("block k = " + std::to_string(k) + " is not rare: n_k Pr{X >= b + n_{k-1} mu} >= 1, so "
                          "theta_k <= 0");
    }
    return -c.log_n_tail / u;
}

const TwistedTruncated& CrossingEstimator::twisted(int k) const {
    BlockCache& c = cache(k);
    std::call_once(c.twisted_once, [&] {
        c.theta = theta(k);
        c.twisted = std::make_unique<TwistedTruncated>(problem_.model, problem_.level(problem_.scheme.n(k - 1)), c.theta);
    });
    return *c.twisted;
}

EstimatorSample CrossingEstimator::sample_z1(int k, RngStream& rng) const {
    const std::uint64_t lo = problem_.scheme.n(k - 1), hi = problem_.scheme.n(k);
    const double qk = q(k);
    EstimatorSample out;
    out.max_index = hi;
    if (!(qk > 0.0)) {
        out.add_component(0.0);
        return out;
    }
    const JumpIndexTable& table = *cache(k).table;
    const std::uint64_t jump = table.locate(rng.uniform());

    double s = 0.0;
    std::uint64_t tau = 0, count = 0;
    bool a = false;
    std::uint64_t i = 1;
    for (; i <= hi; ++i) {
        double xi;
        const double level = problem_.level(i);
        if (i == jump) {
            xi = problem_.model.sample_conditional_tail(level, rng);
            if (!(xi >= level)) throw SamplingError("conditional tail sample below its threshold");
        } else {
            xi = problem_.model.sample(rng);
        }
        const bool big = i > lo && xi >= level;
        if (big) ++count;
        if (tau == 0) {
            s += xi;
            if (big) a = true;
            if (s - static_cast<double>(i) * problem_.mu > problem_.b) {
                tau = i;
                // the indicator is settled to zero
                if (tau <= lo || !a) break;
            }
        }
    }
    out.nu = std::min(i, hi);
    const bool hit = tau > lo && a;
    if (hit && i <= hi) throw SamplingError("internal: block walk stopped early on the event");
    const double z = hit ? qk / static_cast<double>(count) : 0.0;
    check_bound(z, qk, "Z_k1 <= q_k");
    out.add_component(z);
    return out;
}

EstimatorSample CrossingEstimator::sample_z2(int k, RngStream& rng) const {
    const std::uint64_t lo = problem_.scheme.n(k - 1), hi = problem_.scheme.n(k);
    const TwistedTruncated& tw = twisted(k);
    const double th = tw.theta();
    const double u = tw.threshold();
    double s = 0.0;
    std::uint64_t tau = 0, i = 1;
    for (; i <= hi; ++i) {
        const double xi = tw.sample(rng);
        if (!(xi < u)) throw SamplingError("twisted sample not below its truncation point");
        s += xi;
        if (s - static_cast<double>(i) * problem_.mu > problem_.b) {
            tau = i;
            break;
        }
    }
    EstimatorSample out;
    out.max_index = hi;
    out.nu = std::min(i, hi);
    double z = 0.0;
    if (tau > lo) {
        if (!(th * s >= th * problem_.b)) throw SamplingError("theta_k S_tau < theta_k b on the crossing event");
        z = std::exp(-th * s + static_cast<double>(tau) * tw.log_mgf());
    }
    out.add_component(z);
    return out;
}

EstimatorSample CrossingEstimator::sample_z3(int k, RngStream& rng) const {
    const std::uint64_t lo = problem_.scheme.n(k - 1), hi = problem_.scheme.n(k);
    const BlockCache& c = cache(k);
    EstimatorSample out;
    out.max_index = hi;
    if (!(c.tail > 0.0)) {
        out.add_component(0.0);
        return out;
    }
    const double u = problem_.level(lo);
    const double bound = std::exp(c.log_n_tail);
    const std::uint64_t jump = std::uniform_int_distribution<std::uint64_t>(1, hi)(rng);

    double s = 0.0;
    std::uint64_t tau = 0, count = 0;
    bool big_before = false, a = false;
    std::uint64_t i = 1;
    for (; i <= hi; ++i) {
        double xi;
        if (i == jump) {
            xi = problem_.model.sample_conditional_tail(u, rng);
            if (!(xi >= u)) throw SamplingError("conditional tail sample below its threshold");
        } else {
            xi = problem_.model.sample(rng);
        }
        if (xi >= u) ++count;
        if (tau == 0) {
            s += xi;
            if (xi >= u) big_before = true;
            if (i > lo && xi >= problem_.level(i)) a = true;
            if (s - static_cast<double>(i) * problem_.mu > problem_.b) {
                tau = i;
                if (tau <= lo || a || !big_before) break;
            }
        }
    }
    out.nu = std::min(i, hi);
    const bool hit = tau > lo && !a && big_before;
    if (hit && i <= hi) throw SamplingError("internal: block walk stopped early on the event");
    const double z = hit ? bound / static_cast<double>(count) : 0.0;
    check_bound(z, bound, "Z_k3 <= n_k Pr{X >= b + n_{k-1} mu}");
    out.add_component(z);
    return out;
}

EstimatorSample CrossingEstimator::sample_block(int k, RngStream& rng) const {
    RngStream r1 = rng.child(stream_label::block_jump);
    RngStream r2 = rng.child(stream_label::block_twisted);
    RngStream r3 = rng.child(stream_label::block_other);
    const EstimatorSample z1 = sample_z1(k, r1);
    const EstimatorSample z2 = sample_z2(k, r2);
    const EstimatorSample z3 = sample_z3(k, r3);
    EstimatorSample out;
    out.add_component(z1.value);
    out.add_component(z2.value);
    out.add_component(z3.value);
    out.nu = z1.nu + z2.nu + z3.nu;
    out.max_index = std::max({z1.max_index, z2.max_index, z3.max_index});
    return out;
}

EstimatorSample CrossingEstimator::sample(RngStream& rng) const {
    const BlockPmf& law = pmf();
    RngStream rk = rng.child(stream_label::block_index);
    const int k = law.sample(rk);
    const double pk = law.p(k);
    const EstimatorSample zk = sample_block(k, rng);
    EstimatorSample out;
    for (int j = 0; j < zk.n_components; ++j) out.add_component(zk.components[static_cast<std::size_t>(j)] / pk);
    out.nu = zk.nu;
    out.max_index = zk.max_index;
    if (out.max_index > problem_.scheme.n(k)) throw SamplingError("increment index beyond n_K");
    return out;
}

double CrossingEstimator::score_z1(int k, std::span<const double> x) const {
    const std::uint64_t lo = problem_.scheme.n(k - 1), hi = problem_.scheme.n(k);
    if (x.size() < hi) throw ConfigError("score_z1 needs n_k increments");
    const BlockOutcome o = classify_block(problem_, k, x);
    if (!o.a) return 0.0;
    std::uint64_t count = 0;
    for (std::uint64_t i = lo + 1; i <= hi; ++i)
        if (x[i - 1] >= problem_.level(i)) ++count;
    return q(k) / static_cast<double>(count);
}

double CrossingEstimator::score_z2(int k, std::span<const double> x) const {
    const BlockOutcome o = classify_block(problem_, k, x);
    if (!o.in_block) return 0.0;
    const TwistedTruncated& tw = twisted(k);
    double s = 0.0;
    for (std::uint64_t i = 0; i < o.tau; ++i) s += x[i];
    return std::exp(-tw.theta() * s + static_cast<double>(o.tau) * tw.log_mgf());
}

double CrossingEstimator::score_z3(int k, std::span<const double> x) const {
    const std::uint64_t hi = problem_.scheme.n(k);
    if (x.size() < hi) throw ConfigError("score_z3 needs n_k increments");
    const BlockOutcome o = classify_block(problem_, k, x);
    if (!o.c) return 0.0;
    const double u = problem_.level(problem_.scheme.n(k - 1));
    std::uint64_t count = 0;
    for (std::uint64_t i = 1; i <= hi; ++i)
        if (x[i - 1] >= u) ++count;
    return std::exp(cache(k).log_n_tail) / static_cast<double>(count);
}

RunStats estimate_level_crossing(const CrossingEstimator& estimator, std::uint64_t n_reps, int threads,
                                 std::uint64_t seed) {
    if (n_reps < 2) throw ConfigError("at least two replications are needed for a standard error");
    return run([&estimator](std::uint64_t, RngStream& rng) { return estimator.sample(rng); }, n_reps, threads, seed);
}

RunStats estimate_level_crossing(const CrossingProblem& problem, const RegimeSpec& spec, std::uint64_t n_reps,
                                 int threads, std::uint64_t seed) {
    const CrossingEstimator estimator(problem, spec);
    return estimate_level_crossing(estimator, n_reps, threads, seed);
}

RunStats estimate_block(const CrossingEstimator& estimator, int k, std::uint64_t n_reps, int threads,
                        std::uint64_t seed) {
    if (n_reps < 2) throw ConfigError("at least two replications are needed for a standard error");
    return run([&estimator, k](std::uint64_t, RngStream& rng) { return estimator.sample_block(k, rng); }, n_reps,
               threads, seed);
}

} // namespace heavytail
