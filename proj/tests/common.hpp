#pragma once

#include <cstdint>
#include <optional>

#include "codedmm/sysparams.hpp"

namespace fixtures {

inline codedmm::RawParams raw(std::int64_t K, std::int64_t q, std::int64_t m, std::int64_t n,
                              std::int64_t N, codedmm::Rational eta,
                              std::optional<int> field_bits = std::nullopt) {
  codedmm::RawParams r;
  r.K = K;
  r.q = q;
  r.m = m;
  r.n = n;
  r.N = N;
  r.eta = eta;
  r.field_bits = field_bits;
  return r;
}

/// K=6, q=4, m=20, N=4, eta=1/2.
inline codedmm::SystemParams small_example(std::int64_t n = 10) {
  return codedmm::derive(raw(6, 4, 20, n, 4, codedmm::Rational(1, 2)));
}

/// K=9, q=6, m=n=N=6000, eta=1/3 over GF(2^14).
inline codedmm::SystemParams reference() {
  return codedmm::derive(raw(9, 6, 6000, 6000, 6000, codedmm::Rational(1, 3), 14));
}

} // namespace fixtures
