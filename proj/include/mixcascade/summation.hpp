#pragma once

#include <cstddef>
#include <span>

namespace mixcascade {

/// Pairwise sum with the split at floor(n/2). For n = 2^k the addition tree is
/// the dyadic tree, so summing level-j cell masses reproduces the coarser
/// levels bit for bit.
inline double pairwise_sum(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n == 0) return 0.0;
  if (n == 1) return xs[0];
  if (n == 2) return xs[0] + xs[1];
  const std::size_t half = n / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

}  // namespace mixcascade
