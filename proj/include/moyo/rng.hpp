#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random streams: every variate is a pure function of
// (key, index), so simulations are reproducible independently of thread
// count or evaluation order.

namespace moyo::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fold(std::uint64_t h, std::uint64_t w) {
    return mix64(h ^ (mix64(w + kGolden) + (h << 6) + (h >> 2)));
}

// Stream purposes; distinct tags give independent streams from one master seed.
inline constexpr std::uint64_t kTagSimulation = 0x51u;
inline constexpr std::uint64_t kTagInitialState = 0x52u;
inline constexpr std::uint64_t kTagMala = 0x53u;
inline constexpr std::uint64_t kTagOracle = 0x54u;
inline constexpr std::uint64_t kTagMonteCarlo = 0x55u;

inline std::uint64_t derive_key(std::uint64_t master, std::uint64_t tag, std::uint64_t id) {
    return fold(fold(mix64(master + kGolden), tag), id);
}

inline std::uint64_t word_at(std::uint64_t key, std::uint64_t index) {
    return mix64(key + (index + 1) * kGolden);
}

// Uniform on (0,1), endpoints excluded.
inline double uniform_at(std::uint64_t key, std::uint64_t index) {
    return (static_cast<double>(word_at(key, index) >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller; consumes uniform indices 2i and 2i+1.
inline double gaussian_at(std::uint64_t key, std::uint64_t index) {
    const double u1 = uniform_at(key, 2 * index);
    const double u2 = uniform_at(key, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

class Stream {
  public:
    explicit Stream(std::uint64_t key) : key_(key) {}
    Stream(std::uint64_t master, std::uint64_t tag, std::uint64_t id)
        : key_(derive_key(master, tag, id)) {}

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

    double uniform() { return uniform_at(key_, counter_++); }

    double gaussian() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace moyo::rng
