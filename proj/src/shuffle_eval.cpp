#include "codedmm/shuffle_eval.hpp"

#include <algorithm>
#include <bit>
#include <limits>

#include "codedmm/combinatorics.hpp"
#include "codedmm/errors.hpp"
#include "codedmm/random.hpp"

namespace codedmm {

Phi phi_linear() {
  return [](std::int64_t j) { return Rational(j); };
}

Phi phi_unit() {
  return [](std::int64_t) { return Rational(1); };
}

Rational MulticastProfile::delivered(std::int64_t s) const {
  Rational acc(0);
  for (std::int64_t j = std::max<std::int64_t>(s, 1); j <= etaq; ++j) {
    acc += alpha[static_cast<std::size_t>(j)];
  }
  return acc;
}

Rational MulticastProfile::multicast_load(std::int64_t s) const {
  Rational acc(0);
  for (std::int64_t j = std::max<std::int64_t>(s, 1); j <= etaq; ++j) {
    acc += alpha[static_cast<std::size_t>(j)] / phi(j);
  }
  return acc;
}

std::optional<std::int64_t> MulticastProfile::last_round(Strategy st) const {
  const std::int64_t s = st == Strategy::first ? s_q : s_q - 1;
  if (s < 1) {
    return std::nullopt;
  }
  return s;
}

std::int64_t smallest_round(const std::vector<Rational> &alpha, const Rational &threshold) {
  const auto etaq = static_cast<std::int64_t>(alpha.size()) - 1;
  Rational tail(0);
  std::int64_t s = etaq + 1;
  // The tail sum grows as s decreases, so scan down from the empty sum.
  for (std::int64_t cand = etaq; cand >= 1; --cand) {
    tail += alpha[static_cast<std::size_t>(cand)];
    if (tail > threshold) {
      break;
    }
    s = cand;
  }
  return s;
}

MulticastProfile multicast_profile(const SystemParams &p, Phi phi) {
  MulticastProfile prof;
  prof.etaq = p.etaq;
  prof.phi = std::move(phi);
  prof.alpha.assign(static_cast<std::size_t>(p.etaq + 1), Rational(0));
  const auto u = [](std::int64_t x) { return static_cast<std::uint64_t>(x); };
  const Rational denom = Rational(p.q, p.K) * Rational(p.batches);
  for (std::int64_t j = 1; j <= p.etaq; ++j) {
    if (j > p.q - 1 || p.etaq - j > p.K - p.q) {
      continue;
    }
    const auto num = binomial(u(p.q - 1), u(j)) * binomial(u(p.K - p.q), u(p.etaq - j));
    prof.alpha[static_cast<std::size_t>(j)] = Rational(static_cast<std::int64_t>(num)) / denom;
  }
  prof.s_q = smallest_round(prof.alpha, Rational(1) - p.eta);
  return prof;
}

Rational load_mds(const SystemParams &p, const Phi &phi) {
  const auto prof = multicast_profile(p, phi);
  const Rational rest = Rational(1) - p.eta;
  Rational best = prof.multicast_load(prof.s_q) + rest - prof.delivered(prof.s_q);
  if (const auto s2 = prof.last_round(Strategy::second)) {
    best = std::min(best, prof.multicast_load(*s2));
  }
  return best;
}

std::vector<std::int64_t> multicast_row_indices(const SystemParams &p, ServerSet Q, int S,
                                                std::int64_t s_last) {
  const auto masks = batch_masks(p.K, p.etaq);
  const ServerSet self = ServerSet{1} << S;
  std::vector<std::int64_t> rows;
  for (std::size_t b = 0; b < masks.size(); ++b) {
    if ((masks[b] & self) != 0 || std::popcount(masks[b] & Q) >= s_last) {
      rows.push_back(static_cast<std::int64_t>(b));
    }
  }
  return rows;
}

std::vector<std::int64_t> u_vector(const AssignmentMatrix &P, const std::vector<std::int64_t> &rows) {
  std::vector<std::int64_t> u(static_cast<std::size_t>(P.partitions()), 0);
  for (const auto b : rows) {
    const auto *row = P.row(b);
    for (std::int64_t t = 0; t < P.partitions(); ++t) {
      u[static_cast<std::size_t>(t)] += row[t];
    }
  }
  return u;
}

std::int64_t residual_from_u(const std::vector<std::int64_t> &u, std::int64_t need) {
  std::int64_t s = 0;
  for (const auto v : u) {
    s += std::max<std::int64_t>(need - v, 0);
  }
  return s;
}

namespace {

std::int64_t strategy_round(const MulticastProfile &prof, Strategy st) {
  const auto s = prof.last_round(st);
  if (!s) {
    throw RangeError("strategy 2 is unavailable when s_q = 1");
  }
  return *s;
}

// Row-sum residual for (Q, S) using precomputed batch masks.
std::int64_t residual_fast(const AssignmentMatrix &P, const std::vector<ServerSet> &masks,
                           ServerSet Q, int S, std::int64_t s_last, std::int64_t need,
                           std::vector<std::int64_t> &u) {
  std::fill(u.begin(), u.end(), 0);
  const ServerSet self = ServerSet{1} << S;
  const std::int64_t T = P.partitions();
  for (std::size_t b = 0; b < masks.size(); ++b) {
    if ((masks[b] & self) == 0 && std::popcount(masks[b] & Q) < s_last) {
      continue;
    }
    const auto *row = P.row(static_cast<std::int64_t>(b));
    for (std::int64_t t = 0; t < T; ++t) {
      u[static_cast<std::size_t>(t)] += row[t];
    }
  }
  return residual_from_u(u, need);
}

} // namespace

std::int64_t residual_unicasts(const PartitionedParams &pp, const AssignmentMatrix &P, ServerSet Q,
                               int S, Strategy st, const MulticastProfile &prof) {
  const auto rows = multicast_row_indices(pp.base, Q, S, strategy_round(prof, st));
  return residual_from_u(u_vector(P, rows), pp.decode_threshold());
}

std::int64_t unicast_messages(const PartitionedParams &pp, const AssignmentMatrix &P, ServerSet Q,
                              Strategy st, const MulticastProfile &prof) {
  const auto &p = pp.base;
  const auto masks = batch_masks(p.K, p.etaq);
  const std::int64_t s_last = strategy_round(prof, st);
  std::vector<std::int64_t> u(static_cast<std::size_t>(P.partitions()));
  std::int64_t total = 0;
  for (ServerSet rest = Q; rest != 0; rest &= rest - 1) {
    const int S = std::countr_zero(rest);
    total += residual_fast(P, masks, Q, S, s_last, pp.decode_threshold(), u);
  }
  return total * (p.N / p.q);
}

Rational multicast_messages(const SystemParams &p, Strategy st, const MulticastProfile &prof) {
  return prof.multicast_load(strategy_round(prof, st)) * Rational(p.m) * Rational(p.N);
}

Rational load_for_q(const PartitionedParams &pp, const AssignmentMatrix &P, ServerSet Q, Strategy st,
                    const MulticastProfile &prof) {
  const auto &p = pp.base;
  const Rational mn = Rational(p.m) * Rational(p.N);
  return (multicast_messages(p, st, prof) + Rational(unicast_messages(pp, P, Q, st, prof))) / mn;
}

ServerSet first_servers(std::int64_t count) { return full_set(count); }

BdcLoad load_bdc(const PartitionedParams &pp, const AssignmentMatrix &P, const LoadOptions &opt) {
  const auto &p = pp.base;
  check_sum_constraints(P, pp);
  const auto prof = multicast_profile(p, opt.phi);
  const auto masks = batch_masks(p.K, p.etaq);
  const std::int64_t need = pp.decode_threshold();
  std::vector<std::int64_t> u(static_cast<std::size_t>(P.partitions()));

  std::vector<ServerSet> qsets;
  if (opt.samples) {
    Rng rng(opt.seed);
    std::vector<int> servers(static_cast<std::size_t>(p.K));
    for (int k = 0; k < p.K; ++k) {
      servers[static_cast<std::size_t>(k)] = k;
    }
    for (std::uint64_t i = 0; i < *opt.samples; ++i) {
      // Partial Fisher-Yates: the first q positions form a uniform q-subset.
      ServerSet Q = 0;
      for (std::int64_t k = 0; k < p.q; ++k) {
        const auto j = static_cast<std::size_t>(k) +
                       static_cast<std::size_t>(rng.uniform_below(static_cast<std::uint64_t>(p.K - k)));
        std::swap(servers[static_cast<std::size_t>(k)], servers[j]);
        Q |= ServerSet{1} << servers[static_cast<std::size_t>(k)];
      }
      qsets.push_back(Q);
    }
  } else {
    const auto count = binomial_saturating(static_cast<std::uint64_t>(p.K), static_cast<std::uint64_t>(p.q));
    if (count > opt.subset_budget) {
      throw BudgetExceeded("exhaustive load evaluation needs C(K, q) = " + std::to_string(count) +
                           " server subsets, above the budget of " +
                           std::to_string(opt.subset_budget) + "; use sampled mode");
    }
    auto c = first_combination(static_cast<std::uint32_t>(p.q));
    do {
      ServerSet Q = 0;
      for (const auto v : c) {
        Q |= ServerSet{1} << v;
      }
      qsets.push_back(Q);
    } while (next_combination(c, static_cast<std::uint32_t>(p.K)));
  }

  BdcLoad out;
  out.value = std::numeric_limits<double>::infinity();
  for (const Strategy st : {Strategy::first, Strategy::second}) {
    const auto s_last = prof.last_round(st);
    if (!s_last) {
      continue;
    }
    std::int64_t residual = 0;
    for (const ServerSet Q : qsets) {
      for (ServerSet rest = Q; rest != 0; rest &= rest - 1) {
        residual += residual_fast(P, masks, Q, std::countr_zero(rest), *s_last, need, u);
        ++out.u_vectors;
      }
    }
    // Each residual value is needed for N/q output vectors; normalize by m N
    // and by the number of Q.
    const Rational unicast(residual, p.m * p.q * static_cast<std::int64_t>(qsets.size()));
    const Rational total = prof.multicast_load(*s_last) + unicast;
    out.per_strategy.push_back(total.to_double());
    if (total.to_double() < out.value) {
      out.value = total.to_double();
      out.strategy = st;
      if (!opt.samples) {
        out.exact = total;
      }
    }
  }
  return out;
}

double load_lt(const SystemParams &p, double epsilon, double epsilon_min, const Phi &phi) {
  if (epsilon < epsilon_min) {
    throw RangeError("epsilon must be at least epsilon_min");
  }
  const auto prof = multicast_profile(p, phi);
  const double need = 1.0 + epsilon - p.eta.to_double();
  // s_{q,LT}: threshold (1 + eps_min) - eta, evaluated in doubles since
  // eps_min is a measured overhead.
  const double threshold = 1.0 + epsilon_min - p.eta.to_double();
  std::int64_t s = p.etaq + 1;
  double tail = 0;
  for (std::int64_t cand = p.etaq; cand >= 1; --cand) {
    tail += prof.alpha[static_cast<std::size_t>(cand)].to_double();
    if (tail > threshold + 1e-12) {
      break;
    }
    s = cand;
  }
  double best = prof.multicast_load(s).to_double() + need - prof.delivered(s).to_double();
  if (s - 1 >= 1) {
    best = std::min(best, prof.multicast_load(s - 1).to_double() +
                              std::max(need - prof.delivered(s - 1).to_double(), 0.0));
  }
  return best;
}

} // namespace codedmm
