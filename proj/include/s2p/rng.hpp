#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace s2p {

// Deterministic RNG used everywhere seeded behaviour matters. Distributions
// are implemented by hand because the std:: ones are implementation-defined
// and would break bit-level reproducibility of checkpoints and metrics.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive integer range via rejection-free modulo of a wide draw.
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  // Box-Muller with a cached spare draw.
  double normal(double mean = 0.0, double stddev = 1.0);

  // Fisher-Yates, draws n-1 integers.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = next_u64() % i;
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Splitmix64 finalizer; derives independent streams from one experiment seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace s2p
