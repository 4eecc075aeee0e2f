#include "heavytail/rng.hpp"

#include <cmath>

namespace heavytail {

RngStream::RngStream(std::uint64_t seed, std::uint64_t index) : RngStream(seed, std::vector<std::uint64_t>{index}) {}

RngStream::RngStream(std::uint64_t seed, std::vector<std::uint64_t> key) : seed_(seed), key_(std::move(key)) {
    reseed();
}

void RngStream::reseed() {
    std::vector<std::uint32_t> words;
    words.reserve(2 * key_.size() + 3);
    words.push_back(static_cast<std::uint32_t>(seed_));
    words.push_back(static_cast<std::uint32_t>(seed_ >> 32));
    // length prefix
    words.push_back(static_cast<std::uint32_t>(key_.size()));
    for (std::uint64_t k : key_) {
        words.push_back(static_cast<std::uint32_t>(k));
        words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
}

RngStream RngStream::child(std::uint64_t label) const {
    std::vector<std::uint64_t> key = key_;
    key.push_back(label);
    return RngStream(seed_, std::move(key));
}

double RngStream::exponential() { return -std::log(uniform()); }

} // namespace heavytail
