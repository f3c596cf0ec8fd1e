#include "mhmm/rng.hpp"

#include <cmath>

#include "mhmm/errors.hpp"

namespace mhmm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

long Rng::poisson(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw DomainError("poisson: rate must be finite and non-negative");
  }
  long total = 0;
  // Poisson additivity: split large rates into chunks the multiplication
  // method can handle without exp() underflow.
  while (lambda > 500.0) {
    total += poisson(500.0);
    lambda -= 500.0;
  }
  const double limit = std::exp(-lambda);
  double prod = 1.0;
  long k = -1;
  do {
    prod *= uniform();
    ++k;
  } while (prod > limit);
  return total + k;
}

long Rng::uniform_int(long lo, long hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  // Rejection-free modulo is fine here: spans are tiny relative to 2^64.
  return lo + static_cast<long>(next_u64() % span);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                          std::uint64_t substream) {
  std::uint64_t h = splitmix64(base ^ 0xa0761d6478bd642fULL);
  h = splitmix64(h ^ stream);
  h = splitmix64(h ^ (substream * 0xe7037ed1a0b428dbULL));
  return h;
}

}  // namespace mhmm
