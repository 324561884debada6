#pragma once

#include <cstdint>
#include <random>

namespace socrm {

/// Mixes a seed so that nearby seeds give unrelated streams.
constexpr std::uint64_t mix_seed(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b)
{
    return mix_seed(mix_seed(a) ^ (b + 0x632BE59BD9B4E019ull));
}

/// mt19937_64 with hand-rolled distributions, so streams are identical across
/// standard library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : m_engine(mix_seed(seed)) {}

    /// [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(m_engine() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n)
    {
        // Rejection keeps the result unbiased.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = m_engine();
        while (x >= limit) {
            x = m_engine();
        }
        return x % n;
    }
    std::uint64_t next() { return m_engine(); }

  private:
    std::mt19937_64 m_engine;
};

}  // namespace socrm
