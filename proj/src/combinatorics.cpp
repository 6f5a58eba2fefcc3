#include "codedmm/combinatorics.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "codedmm/errors.hpp"

namespace codedmm {

namespace {

bool binomial_impl(std::uint64_t n, std::uint64_t k, std::uint64_t &out) noexcept {
  if (k > n) {
    out = 0;
    return true;
  }
  k = std::min(k, n - k);
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // acc * (n - k + i) / i is exact at every step.
    acc = acc * (n - k + i) / i;
    if (acc > std::numeric_limits<std::uint64_t>::max()) {
      return false;
    }
  }
  out = static_cast<std::uint64_t>(acc);
  return true;
}

} // namespace

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  std::uint64_t out = 0;
  if (!binomial_impl(n, k, out)) {
    throw RangeError("binomial coefficient C(" + std::to_string(n) + ", " + std::to_string(k) +
                     ") overflows 64 bits");
  }
  return out;
}

std::uint64_t binomial_saturating(std::uint64_t n, std::uint64_t k) noexcept {
  std::uint64_t out = 0;
  if (!binomial_impl(n, k, out)) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return out;
}

double log_binomial(double n, double k) noexcept {
  if (k < 0 || k > n) {
    return -std::numeric_limits<double>::infinity();
  }
  return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1);
}

bool next_combination(std::span<std::uint32_t> c, std::uint32_t n) noexcept {
  const auto k = static_cast<std::uint32_t>(c.size());
  if (k == 0) {
    return false;
  }
  std::uint32_t i = k;
  while (i > 0) {
    --i;
    if (c[i] < n - k + i) {
      ++c[i];
      for (std::uint32_t j = i + 1; j < k; ++j) {
        c[j] = c[j - 1] + 1;
      }
      return true;
    }
  }
  return false;
}

std::vector<std::uint32_t> first_combination(std::uint32_t k) {
  std::vector<std::uint32_t> c(k);
  std::iota(c.begin(), c.end(), 0U);
  return c;
}

std::uint64_t combination_rank(std::span<const std::uint32_t> c, std::uint32_t n) {
  const auto k = static_cast<std::uint32_t>(c.size());
  std::uint64_t rank = 0;
  std::uint32_t prev = 0;
  for (std::uint32_t i = 0; i < k; ++i) {
    for (std::uint32_t v = (i == 0 ? 0 : prev + 1); v < c[i]; ++v) {
      rank += binomial(n - v - 1, k - i - 1);
    }
    prev = c[i];
  }
  return rank;
}

std::vector<std::uint32_t> combination_unrank(std::uint64_t rank, std::uint32_t n, std::uint32_t k) {
  std::vector<std::uint32_t> c(k);
  std::uint32_t v = 0;
  for (std::uint32_t i = 0; i < k; ++i) {
    while (true) {
      const std::uint64_t block = binomial(n - v - 1, k - i - 1);
      if (rank < block) {
        break;
      }
      rank -= block;
      ++v;
    }
    c[i] = v++;
  }
  return c;
}

} // namespace codedmm
