#include "fusebench/random_stream.hpp"

#include <cmath>

namespace fusebench {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t splitmix_finalize(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

// SplitMix64 step: advances the state and returns the next output.
std::uint64_t splitmix_next(std::uint64_t& state) {
    state += kGolden;
    return splitmix_finalize(state);
}

// Combine two 64-bit values into one well-mixed key.
std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = splitmix_finalize(a + kGolden);
    x ^= b + kGolden + (x << 6) + (x >> 2);
    return splitmix_finalize(x);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    std::uint64_t sm = mix_key(seed, stream_id);
    for (auto& word : state_) {
        word = splitmix_next(sm);
    }
}

RandomStream RandomStream::child(std::uint64_t child_id) const {
    return RandomStream(mix_key(seed_, stream_id_), child_id);
}

std::uint64_t RandomStream::bits() {
    // xoshiro256++ by Blackman and Vigna.
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double RandomStream::uniform() {
    return static_cast<double>(bits() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_normal_ = v * factor;
    has_spare_ = true;
    return u * factor;
}

} // namespace fusebench
