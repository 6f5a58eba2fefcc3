#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace codedmm {

/// Exact binomial coefficient; throws RangeError if it does not fit in 64 bits.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

/// Binomial coefficient saturated at UINT64_MAX. Used for budget checks where
/// only "too large" matters.
std::uint64_t binomial_saturating(std::uint64_t n, std::uint64_t k) noexcept;

/// Natural logarithm of C(n, k) via lgamma.
double log_binomial(double n, double k) noexcept;

/// Advances `c` (strictly increasing indices in [0, n)) to the next k-subset in
/// lexicographic order. Returns false after the last subset.
bool next_combination(std::span<std::uint32_t> c, std::uint32_t n) noexcept;

/// First k-subset of [0, n) in lexicographic order.
std::vector<std::uint32_t> first_combination(std::uint32_t k);

/// Lexicographic rank of a sorted k-subset of [0, n).
std::uint64_t combination_rank(std::span<const std::uint32_t> c, std::uint32_t n);

/// Inverse of combination_rank.
std::vector<std::uint32_t> combination_unrank(std::uint64_t rank, std::uint32_t n, std::uint32_t k);

} // namespace codedmm
