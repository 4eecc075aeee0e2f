#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace heavytail {

// Reproducible random stream identified by a root seed and a key path
// (replication index, sub-estimator label, ...). Two streams with the same
// key path produce identical sequences regardless of which thread runs them.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t index);

    // Independent child stream keyed by an additional label.
    RngStream child(std::uint64_t label) const;

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    // Uniform on the open interval (0, 1); never returns 0 or 1.
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    // Exponential with unit rate.
    double exponential();

    std::uint64_t seed() const { return seed_; }
    const std::vector<std::uint64_t>& key() const { return key_; }

private:
    RngStream(std::uint64_t seed, std::vector<std::uint64_t> key);
    void reseed();

    std::uint64_t seed_;
    std::vector<std::uint64_t> key_;
    std::mt19937_64 engine_;
};

// Labels for the independent sub-draws inside one replication.
namespace stream_label {
inline constexpr std::uint64_t dominant = 1;
inline constexpr std::uint64_t residual = 2;
inline constexpr std::uint64_t block_index = 10;
inline constexpr std::uint64_t block_jump = 11;
inline constexpr std::uint64_t block_twisted = 12;
inline constexpr std::uint64_t block_other = 13;
} // namespace stream_label

} // namespace heavytail
