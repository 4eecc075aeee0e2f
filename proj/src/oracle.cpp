#include "heavytail/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "heavytail/error.hpp"

namespace heavytail::oracle {

namespace {

std::uint64_t outcome_count(std::size_t support, int n) {
    long double total = 1;
    for (int i = 0; i < n; ++i) {
        total *= static_cast<long double>(support);
        if (total > static_cast<long double>(kMaxOutcomes)) {
            throw ConfigError("enumeration needs more than " + std::to_string(kMaxOutcomes) + " outcomes");
        }
    }
    return static_cast<std::uint64_t>(total);
}

// Odometer over all index vectors in [0, m)^n.
bool advance(std::vector<std::size_t>& idx, std::size_t m) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (++idx[i] < m) return true;
        idx[i] = 0;
    }
    return false;
}

struct Events {
    bool in_block, a, b;
};

Events classify(const std::vector<double>& x, std::uint64_t lo, std::uint64_t hi, double b, double mu) {
    const double u = b + static_cast<double>(lo) * mu;
    long double s = 0;
    bool big = false, jump = false;
    for (std::uint64_t i = 1; i <= hi; ++i) {
        const double xi = x[i - 1];
        s += xi;
        if (xi >= u) big = true;
        if (i > lo && xi >= b + static_cast<double>(i) * mu) jump = true;
        if (s - static_cast<long double>(i) * mu > b) {
            if (i <= lo) return {false, false, false};
            return {true, jump, !big};
        }
    }
    return {false, false, false};
}

std::uint64_t block_length(std::uint64_t r, int k) {
    std::uint64_t n = 1;
    for (int i = 0; i < k; ++i) n *= r;
    return n;
}

} // namespace

LdEnumeration enumerate_ld(const DiscreteToy& toy, int n, double b) {
    if (n < 0) throw ConfigError("n must be >= 0");
    LdEnumeration out;
    const std::size_t m = toy.atoms.size();
    out.outcome_count = outcome_count(m, n);
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    do {
        long double p = 1, s = 0;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i : idx) {
            p *= toy.atoms[i].probability;
            s += toy.atoms[i].value;
            mx = std::max(mx, toy.atoms[i].value);
        }
        if (s > b) {
            out.probability += p;
            if (mx >= b)
                out.dominant += p;
            else
                out.residual += p;
        }
    } while (advance(idx, m));
    return out;
}

BlockEnumeration enumerate_block(const DiscreteToy& toy, int k, double b, double mu, std::uint64_t r) {
    if (k < 1) throw ConfigError("block index must be >= 1");
    const std::uint64_t lo = k == 1 ? 0 : block_length(r, k - 1), hi = block_length(r, k);
    BlockEnumeration out;
    const std::size_t m = toy.atoms.size();
    out.outcome_count = outcome_count(m, static_cast<int>(hi));
    std::vector<std::size_t> idx(hi, 0);
    std::vector<double> x(hi);
    do {
        long double p = 1;
        for (std::uint64_t i = 0; i < hi; ++i) {
            p *= toy.atoms[idx[i]].probability;
            x[i] = toy.atoms[idx[i]].value;
        }
        const Events e = classify(x, lo, hi, b, mu);
        if (!e.in_block) continue;
        out.block += p;
        if (e.a)
            out.a += p;
        else if (e.b)
            out.b += p;
        else
            out.c += p;
    } while (advance(idx, m));
    return out;
}

NaiveBlockResult naive_mc_block(const IncrementModel& model, int k, double b, double mu, std::uint64_t r,
                                std::uint64_t paths, std::uint64_t seed, int threads, std::uint64_t work_budget) {
    if (k < 1) throw ConfigError("block index must be >= 1");
    const std::uint64_t lo = k == 1 ? 0 : block_length(r, k - 1), hi = block_length(r, k);
    if (paths == 0) throw ConfigError("paths must be >= 1");
    if (static_cast<long double>(paths) * hi > static_cast<long double>(work_budget)) {
        throw ConfigError("naive simulation exceeds its work budget");
    }
    // One stream per batch of paths keeps stream setup off the inner loop.
    constexpr std::uint64_t batch = 4096;
    const std::uint64_t batches = (paths + batch - 1) / batch;
    auto batch_rep = [&](std::uint64_t j, RngStream& rng) {
        EstimatorSample counts;
        std::vector<double> path(hi);
        const std::uint64_t n = std::min(batch, paths - j * batch);
        std::uint64_t nb = 0, na = 0, nbb = 0, nc = 0;
        for (std::uint64_t p = 0; p < n; ++p) {
            for (std::uint64_t i = 0; i < hi; ++i) path[i] = model.sample(rng);
            const Events e = classify(path, lo, hi, b, mu);
            if (!e.in_block) continue;
            ++nb;
            if (e.a)
                ++na;
            else if (e.b)
                ++nbb;
            else
                ++nc;
        }
        counts.components = {static_cast<double>(na), static_cast<double>(nbb), static_cast<double>(nc)};
        counts.n_components = 3;
        counts.value = static_cast<double>(nb);
        counts.nu = n;
        return counts;
    };
    // Batch totals are exact integers; moments of the path indicators follow
    // from the totals.
    std::vector<EstimatorSample> totals(batches);
    run(
        [&](std::uint64_t j, RngStream& rng) {
            totals[j] = batch_rep(j, rng);
            return EstimatorSample{};
        },
        batches, threads, seed);
    std::uint64_t sums[4] = {0, 0, 0, 0};
    for (const EstimatorSample& t : totals) {
        sums[0] += static_cast<std::uint64_t>(t.value);
        for (int i = 0; i < 3; ++i) sums[i + 1] += static_cast<std::uint64_t>(t.components[static_cast<std::size_t>(i)]);
    }
    auto indicator_stats = [&](std::uint64_t hits) {
        RunStats s;
        s.n_reps = paths;
        s.mean = static_cast<double>(hits) / static_cast<double>(paths);
        s.variance = paths > 1 ? s.mean * (1.0 - s.mean) * static_cast<double>(paths) / static_cast<double>(paths - 1)
                               : 0.0;
        s.std_error = std::sqrt(s.variance / static_cast<double>(paths));
        s.cv = s.mean > 0.0 ? std::sqrt(s.variance) / s.mean : std::numeric_limits<double>::quiet_NaN();
        s.mean_work = static_cast<double>(hi);
        s.max_work = hi;
        s.mean_max_index = static_cast<double>(hi);
        s.seed = seed;
        return s;
    };
    return {indicator_stats(sums[0]), indicator_stats(sums[1]), indicator_stats(sums[2]), indicator_stats(sums[3])};
}

Baselines asymptotic_baselines(const IncrementModel& model, std::int64_t n, double b, double mu) {
    Baselines out;
    out.large_deviation = n <= 0 ? 0.0 : static_cast<double>(n) * model.tail(b);
    out.level_crossing = mu > 0.0 ? model.integrated_tail(b) / mu : 0.0;
    return out;
}

} // namespace heavytail::oracle
