#pragma once

#include <cstdint>
#include <span>

namespace pslab {

// Counter-based splitmix64 generator (Steele, Lea & Flood 2014). The state
// advances by a fixed odd increment and each output is a bijective mix of the
// state, so the stream is a pure function of (seed, draw index). Substreams
// hash (seed, index) into a fresh starting state; chain i always sees the
// same stream no matter how many workers run. This is the generator recorded
// in run artifacts as "splitmix64".
class Rng {
  public:
    static constexpr const char* kName = "splitmix64";

    explicit Rng(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static Rng substream(std::uint64_t seed, std::uint64_t index) {
        return Rng(mix64(seed ^ mix64(index + 0xD1B54A32D192ED03ULL)));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    // Uniform double in [0, 1), 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Index drawn proportionally to the (nonnegative) weights. The caller
    // guarantees at least one positive weight.
    std::size_t categorical(std::span<const double> weights);

  private:
    std::uint64_t state_;
};

}  // namespace pslab
