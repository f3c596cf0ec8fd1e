#pragma once

#include <cstdint>
#include <random>

namespace mhmm {

// Deterministic generator with hand-rolled variate transforms. Standard
// library distributions are implementation-defined, which would break the
// byte-identical-artifacts contract; everything here is pinned.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; no cached spare, so the draw count per
  // call is fixed.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Exact Poisson sampling. Multiplication method, chunked so exp(-lambda)
  // never underflows for large rates.
  long poisson(double lambda);

  // Uniform integer in [lo, hi] inclusive.
  long uniform_int(long lo, long hi);

 private:
  std::mt19937_64 eng_;
};

// Stream splitting: derive an independent child seed from a base seed and up
// to two stream indices (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                          std::uint64_t substream = 0);

}  // namespace mhmm
