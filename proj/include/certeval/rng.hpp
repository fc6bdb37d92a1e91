#ifndef CERTEVAL_RNG_HPP_
#define CERTEVAL_RNG_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "certeval/errors.hpp"
#include "certeval/hashutil.hpp"

namespace certeval {

// mt19937_64 output is fully specified by the standard; the standard
// distributions are not. These helpers keep every draw bit-reproducible
// across platforms.
using Rng = std::mt19937_64;

// Uniform double in [0,1) with 53 bits of randomness.
inline double next_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform index in [0, n) via rejection, bias-free.
inline std::size_t next_index(Rng& rng, std::size_t n) {
  if (n == 0) throw ConfigError("next_index: n must be > 0");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return static_cast<std::size_t>(v % n);
}

inline bool next_bernoulli(Rng& rng, double p) { return next_unit(rng) < p; }

// Inverse-CDF draw over non-negative weights.
inline std::size_t next_discrete(Rng& rng, std::span<const double> weights) {
  double total = 0;
  for (double w : weights) {
    if (w < 0) throw ConfigError("next_discrete: negative weight");
    total += w;
  }
  if (total <= 0) throw ConfigError("next_discrete: weights sum to zero");
  double u = next_unit(rng) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0) return i;
  }
  return weights.size() - 1;  // fp slack lands on the last entry
}

template <typename T>
void deterministic_shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i)
    std::swap(items[i - 1], items[next_index(rng, i)]);
}

// Derives an independent stream for a labelled sub-task of a seeded run.
inline Rng derive_rng(std::uint64_t seed, std::string_view label) {
  std::seed_seq seq{seed, fnv1a64(label)};
  return Rng(seq);
}

}  // namespace certeval

#endif  // CERTEVAL_RNG_HPP_
