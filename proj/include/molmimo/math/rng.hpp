#pragma once

// Counter-derived random substreams.  Every parallel unit of work (molecule,
// replication, sweep point) gets its own generator whose state is a hash of
// (seed, path indices), so results are independent of thread scheduling.

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace molmimo {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// SplitMix64 as a UniformRandomBitGenerator; usable with <random> distributions.
class SplitMix64 {
  public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return splitmix64_next(state_); }

  private:
    std::uint64_t state_;
};

// Derives a generator from a master seed and a path of indices, e.g.
// (replication, source, molecule).  Each index is absorbed through a full
// SplitMix64 round, which is enough to decorrelate neighbouring paths.
inline SplitMix64 substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = seed ^ 0x6a09e667f3bcc908ULL;
    for (std::uint64_t p : path) {
        s ^= p + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        (void)splitmix64_next(s);
    }
    (void)splitmix64_next(s);
    return SplitMix64(s);
}

} // namespace molmimo
