#include "heavytail/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <vector>

#include <omp.h>

#include "heavytail/error.hpp"

namespace heavytail {

void MomentAccumulator::add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
    const double n = na + nb;
    const double delta = other.mean_ - mean_;
    mean_ += delta * nb / n;
    m2_ += other.m2_ + delta * delta * na * nb / n;
    n_ += other.n_;
}

double MomentAccumulator::variance() const {
    if (n_ < 2) return 0.0;
    return std::max(m2_, 0.0) / static_cast<double>(n_ - 1);
}

void RunAccumulator::add(const EstimatorSample& s) {
    value_.add(s.value);
    for (std::size_t i = 0; i < components_.size(); ++i) components_[i].add(s.components[i]);
    work_.add(static_cast<double>(s.nu));
    max_index_.add(static_cast<double>(s.max_index));
    max_work_ = std::max(max_work_, s.nu);
}

void RunAccumulator::merge(const RunAccumulator& other) {
    value_.merge(other.value_);
    for (std::size_t i = 0; i < components_.size(); ++i) components_[i].merge(other.components_[i]);
    work_.merge(other.work_);
    max_index_.merge(other.max_index_);
    max_work_ = std::max(max_work_, other.max_work_);
}

RunStats RunAccumulator::stats(std::uint64_t seed) const {
    RunStats s;
    s.n_reps = value_.count();
    s.mean = value_.mean();
    s.variance = value_.variance();
    s.std_error = s.n_reps > 0 ? std::sqrt(s.variance / static_cast<double>(s.n_reps)) : 0.0;
    s.cv = s.mean > 0.0 ? std::sqrt(s.variance) / s.mean : std::numeric_limits<double>::quiet_NaN();
    s.mean_work = work_.mean();
    s.max_work = max_work_;
    s.mean_max_index = max_index_.mean();
    for (std::size_t i = 0; i < components_.size(); ++i) {
        s.component_means[i] = components_[i].mean();
        s.component_std_errors[i] =
            s.n_reps > 0 ? std::sqrt(components_[i].variance() / static_cast<double>(s.n_reps)) : 0.0;
    }
    s.seed = seed;
    return s;
}

PartialRunError::PartialRunError(const std::string& cause, RunStats partial)
    : std::runtime_error("run aborted after " + std::to_string(partial.n_reps) + " completed replications: " + cause),
      partial_(partial) {}

std::uint64_t required_samples(double cv, double epsilon, double delta) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (!(cv >= 0.0) || !std::isfinite(cv)) throw ConfigError("cv must be finite and >= 0");
    // small slack so that exact quotients are not pushed up by rounding
    const double n = cv * cv / (delta * epsilon * epsilon);
    const double r = std::round(n);
    const double c = std::abs(n - r) <= 1e-9 * std::max(1.0, r) ? r : std::ceil(n);
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(c));
}

namespace {

struct ChunkResult {
    RunAccumulator acc;
    std::optional<std::string> failure;
};

void run_chunk(const Replication& rep, std::uint64_t chunk, std::uint64_t n_reps, std::uint64_t seed,
               ChunkResult& out) {
    const std::uint64_t begin = chunk * kChunkSize;
    const std::uint64_t end = std::min(n_reps, begin + kChunkSize);
    try {
        for (std::uint64_t i = begin; i < end; ++i) {
            RngStream rng(seed, i);
            out.acc.add(rep(i, rng));
        }
    } catch (const std::exception& e) {
        out.failure = e.what();
    } catch (...) {
        out.failure = "unknown error";
    }
}

RunStats combine(const std::vector<ChunkResult>& chunks, std::uint64_t seed) {
    RunAccumulator total;
    for (const ChunkResult& c : chunks) {
        if (c.failure) {
            throw PartialRunError(*c.failure, total.stats(seed));
        }
        total.merge(c.acc);
    }
    return total.stats(seed);
}

} // namespace

RunStats run(const Replication& rep, std::uint64_t n_reps, int threads, std::uint64_t seed) {
    if (n_reps == 0) throw ConfigError("number of replications must be >= 1");
    const std::uint64_t n_chunks = (n_reps + kChunkSize - 1) / kChunkSize;
    std::vector<ChunkResult> chunks(n_chunks);
    const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(n_chunks); ++c) {
        run_chunk(rep, static_cast<std::uint64_t>(c), n_reps, seed, chunks[static_cast<std::size_t>(c)]);
    }
    return combine(chunks, seed);
}

RunStats run_serial(const Replication& rep, std::uint64_t n_reps, std::uint64_t seed) {
    if (n_reps == 0) throw ConfigError("number of replications must be >= 1");
    const std::uint64_t n_chunks = (n_reps + kChunkSize - 1) / kChunkSize;
    std::vector<ChunkResult> chunks(n_chunks);
    for (std::uint64_t c = 0; c < n_chunks; ++c) {
        run_chunk(rep, c, n_reps, seed, chunks[c]);
        if (chunks[c].failure) break;
    }
    return combine(chunks, seed);
}

} // namespace heavytail
