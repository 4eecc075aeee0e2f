#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include "heavytail/rng.hpp"

namespace heavytail {

// One replication of an estimator. value is the sum of the first
// n_components entries of components.
struct EstimatorSample {
    double value = 0.0;
    std::array<double, 3> components{};
    int n_components = 0;
    std::uint64_t nu = 0;         // increments generated
    std::uint64_t max_index = 0;  // largest increment index touched

    void add_component(double v) {
        components[static_cast<std::size_t>(n_components++)] = v;
        value += v;
    }
};

// Welford accumulator with the Chan et al. pairwise merge.
class MomentAccumulator {
public:
    void add(double x);
    void merge(const MomentAccumulator& other);
    std::uint64_t count() const { return n_; }
    double mean() const { return mean_; }
    // Unbiased sample variance; 0 for fewer than two points.
    double variance() const;

private:
    std::uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct RunStats {
    std::uint64_t n_reps = 0;
    double mean = 0.0;
    double variance = 0.0;
    double std_error = 0.0;
    double cv = 0.0;  // NaN when mean == 0
    double mean_work = 0.0;
    std::uint64_t max_work = 0;
    double mean_max_index = 0.0;
    std::array<double, 3> component_means{};
    std::array<double, 3> component_std_errors{};
    std::uint64_t seed = 0;
};

class RunAccumulator {
public:
    void add(const EstimatorSample& s);
    void merge(const RunAccumulator& other);
    std::uint64_t count() const { return value_.count(); }
    RunStats stats(std::uint64_t seed) const;

private:
    MomentAccumulator value_;
    std::array<MomentAccumulator, 3> components_;
    MomentAccumulator work_;
    MomentAccumulator max_index_;
    std::uint64_t max_work_ = 0;
};

// Thrown when a replication fails; carries the statistics of the replications
// completed before the failing chunk.
class PartialRunError : public std::runtime_error {
public:
    PartialRunError(const std::string& cause, RunStats partial);
    const RunStats& partial() const { return partial_; }
    std::uint64_t completed() const { return partial_.n_reps; }

private:
    RunStats partial_;
};

// Draws replication `index` using the supplied stream. Must be safe to call
// concurrently for distinct indices.
using Replication = std::function<EstimatorSample(std::uint64_t index, RngStream& rng)>;

// N = max(1, ceil(cv^2 / (delta * epsilon^2))).
std::uint64_t required_samples(double cv, double epsilon, double delta);

// Replications are grouped in fixed chunks and merged in index order, so the
// result does not depend on the thread count. threads <= 0 uses the OpenMP
// default.
RunStats run(const Replication& rep, std::uint64_t n_reps, int threads, std::uint64_t seed);
RunStats run_serial(const Replication& rep, std::uint64_t n_reps, std::uint64_t seed);

inline constexpr std::uint64_t kChunkSize = 64;

} // namespace heavytail
