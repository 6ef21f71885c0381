#ifndef FUSEBENCH_RANDOM_STREAM_HPP
#define FUSEBENCH_RANDOM_STREAM_HPP

#include <cstdint>

namespace fusebench {

/// Splittable pseudo-random stream with a (seed, stream_id) identity.
///
/// The underlying generator is xoshiro256++ whose 256-bit state is expanded
/// with SplitMix64 from the 64-bit key hash(seed, stream_id). Child streams
/// are keyed by hash(parent key, child_id), so deriving a child depends only
/// on the parent's identity, never on how many values the parent has drawn.
/// This is what makes per-trial / per-sample substreams safe to consume from
/// concurrent workers: any schedule yields the same numbers.
///
/// All draws are pure integer arithmetic plus log/sqrt for the normal
/// transform, so identical (seed, stream_id, draw sequence) reproduces
/// identical outputs across runs.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    /// Derive an independent substream. Idempotent: depends only on this
    /// stream's identity and child_id.
    RandomStream child(std::uint64_t child_id) const;

    /// Next raw 64 bits.
    std::uint64_t bits();

    /// Uniform double in [0, 1) with 53 random mantissa bits.
    double uniform();

    /// Standard normal draw (Marsaglia polar method, one value cached).
    double normal();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t state_[4];
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

} // namespace fusebench

#endif
