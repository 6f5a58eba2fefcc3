#include "codedmm/solvers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "codedmm/combinatorics.hpp"
#include "codedmm/errors.hpp"

namespace codedmm {

AssignmentMatrix heuristic_assign(const PartitionedParams &pp) {
  const auto &p = pp.base;
  const std::int64_t C = p.batches;
  const std::int64_t T = pp.T;
  const std::int64_t Y = p.r / (C * T);
  const std::int64_t d = p.batch_size_int() - Y * T;
  AssignmentMatrix P(C, T, Y);
  for (std::int64_t a = 0; a < d * C; ++a) {
    ++P.at(a / d, a % T);
  }
  return P;
}

namespace {

// Incremental u-vector cache for one strategy. For every (Q, S) pair it keeps
// the u-vector; for every (batch, partition) the number of pairs indexed by
// that batch that are still short on that partition. Incrementing P[b][t]
// lowers the residual objective by exactly count[b][t].
class UCache {
public:
  UCache(const PartitionedParams &pp, std::int64_t s_last, std::uint64_t cell_budget)
      : C_(pp.base.batches), T_(pp.T), need_(pp.decode_threshold()) {
    const auto &p = pp.base;
    const auto nq = binomial_saturating(static_cast<std::uint64_t>(p.K), static_cast<std::uint64_t>(p.q));
    const long double cells = static_cast<long double>(nq) * static_cast<long double>(p.q) *
                              static_cast<long double>(T_);
    if (cells > static_cast<long double>(cell_budget)) {
      throw BudgetExceeded("u-vector cache needs T q C(K, q) = " +
                           std::to_string(static_cast<double>(cells)) + " cells, above the budget of " +
                           std::to_string(cell_budget));
    }
    const auto masks = batch_masks(p.K, p.etaq);
    pairs_of_.resize(static_cast<std::size_t>(C_));
    auto c = first_combination(static_cast<std::uint32_t>(p.q));
    do {
      ServerSet Q = 0;
      for (const auto v : c) {
        Q |= ServerSet{1} << v;
      }
      for (const auto S : c) {
        const ServerSet self = ServerSet{1} << S;
        std::vector<std::int32_t> rows;
        for (std::size_t b = 0; b < masks.size(); ++b) {
          if ((masks[b] & self) != 0 || std::popcount(masks[b] & Q) >= s_last) {
            rows.push_back(static_cast<std::int32_t>(b));
            pairs_of_[b].push_back(static_cast<std::int32_t>(rows_.size()));
          }
        }
        rows_.push_back(std::move(rows));
      }
    } while (next_combination(c, static_cast<std::uint32_t>(p.K)));
    pairs_ = static_cast<std::int64_t>(rows_.size());
    u_.assign(static_cast<std::size_t>(pairs_ * T_), 0);
    count_.assign(static_cast<std::size_t>(C_ * T_), 0);
    for (std::int64_t b = 0; b < C_; ++b) {
      for (std::int64_t t = 0; t < T_; ++t) {
        count_[idx(b, t)] = static_cast<std::int64_t>(pairs_of_[static_cast<std::size_t>(b)].size());
      }
    }
    residual_ = pairs_ * T_ * need_;
  }

  std::int64_t pairs() const { return pairs_; }
  std::int64_t residual() const { return residual_; }
  std::int64_t count(std::int64_t b, std::int64_t t) const { return count_[idx(b, t)]; }

  void add(std::int64_t b, std::int64_t t) {
    for (const auto k : pairs_of_[static_cast<std::size_t>(b)]) {
      auto &uk = u_[static_cast<std::size_t>(k * T_ + t)];
      ++uk;
      if (uk <= need_) {
        --residual_;
      }
      if (uk == need_) {
        for (const auto b2 : rows_[static_cast<std::size_t>(k)]) {
          --count_[idx(b2, t)];
        }
      }
    }
  }

  void remove(std::int64_t b, std::int64_t t) {
    for (const auto k : pairs_of_[static_cast<std::size_t>(b)]) {
      auto &uk = u_[static_cast<std::size_t>(k * T_ + t)];
      if (uk == need_) {
        for (const auto b2 : rows_[static_cast<std::size_t>(k)]) {
          ++count_[idx(b2, t)];
        }
      }
      if (uk <= need_) {
        ++residual_;
      }
      --uk;
    }
  }

private:
  std::int64_t C_;
  std::int64_t T_;
  std::int64_t need_;
  std::int64_t pairs_ = 0;
  std::int64_t residual_ = 0;
  std::vector<std::vector<std::int32_t>> rows_;
  std::vector<std::vector<std::int32_t>> pairs_of_;
  std::vector<std::int32_t> u_;
  std::vector<std::int64_t> count_;

  std::size_t idx(std::int64_t b, std::int64_t t) const { return static_cast<std::size_t>(b * T_ + t); }
};

void check_partial(const AssignmentMatrix &P, const PartitionedParams &pp) {
  const auto &p = pp.base;
  if (P.batches() != p.batches || P.partitions() != pp.T) {
    throw RangeError("partial assignment has the wrong shape");
  }
  for (std::int64_t b = 0; b < P.batches(); ++b) {
    for (std::int64_t t = 0; t < P.partitions(); ++t) {
      if (P.at(b, t) < 0) {
        throw RangeError("partial assignment has a negative entry");
      }
    }
    if (P.row_sum(b) > p.batch_size_int()) {
      throw RangeError("partial assignment row " + std::to_string(b + 1) + " exceeds the batch size");
    }
  }
  for (std::int64_t t = 0; t < P.partitions(); ++t) {
    if (P.col_sum(t) > pp.rows_per_partition()) {
      throw RangeError("partial assignment column " + std::to_string(t + 1) + " exceeds r/T");
    }
  }
}

class Search {
public:
  Search(const PartitionedParams &pp, const AssignmentMatrix &initial, std::int64_t s_last,
         const SolverOptions &opt, std::uint64_t &nodes)
      : pp_(pp), opt_(opt), cache_(pp, s_last, opt.cell_budget), P_(initial), nodes_(nodes) {
    const std::int64_t bs = pp.base.batch_size_int();
    rem_.resize(static_cast<std::size_t>(P_.batches()));
    cap_.resize(static_cast<std::size_t>(P_.partitions()));
    last_.assign(static_cast<std::size_t>(P_.batches()), 0);
    for (std::int64_t b = 0; b < P_.batches(); ++b) {
      rem_[static_cast<std::size_t>(b)] = bs - P_.row_sum(b);
      for (std::int64_t t = 0; t < P_.partitions(); ++t) {
        for (std::int64_t k = 0; k < P_.at(b, t); ++k) {
          cache_.add(b, t);
        }
      }
      if (rem_[static_cast<std::size_t>(b)] > 0) {
        open_.push_back(b);
      }
    }
    for (std::int64_t t = 0; t < P_.partitions(); ++t) {
      cap_[static_cast<std::size_t>(t)] = pp.rows_per_partition() - P_.col_sum(t);
    }
  }

  std::int64_t bound() const {
    std::int64_t gain = 0;
    for (const auto b : open_) {
      const auto r = rem_[static_cast<std::size_t>(b)];
      if (r == 0) {
        continue;
      }
      std::int64_t best = 0;
      for (std::int64_t t = 0; t < P_.partitions(); ++t) {
        if (cap_[static_cast<std::size_t>(t)] > 0) {
          best = std::max(best, cache_.count(b, t));
        }
      }
      gain += r * best;
    }
    return std::max<std::int64_t>(cache_.residual() - gain, 0);
  }

  /// Searches for completions with residual strictly below `best_residual`;
  /// improvements are written back to both arguments.
  void run(std::int64_t &best_residual, std::optional<AssignmentMatrix> &best) {
    best_residual_ = &best_residual;
    best_ = &best;
    dfs(0);
  }

  std::int64_t residual() const { return cache_.residual(); }

private:
  const PartitionedParams &pp_;
  const SolverOptions &opt_;
  UCache cache_;
  AssignmentMatrix P_;
  std::uint64_t &nodes_;
  std::vector<std::int64_t> rem_;
  std::vector<std::int64_t> cap_;
  std::vector<std::int64_t> last_;
  std::vector<std::int64_t> open_;
  std::int64_t *best_residual_ = nullptr;
  std::optional<AssignmentMatrix> *best_ = nullptr;

  void dfs(std::size_t open_pos) {
    if (++nodes_ > opt_.node_budget) {
      throw BudgetExceeded("branch-and-bound node budget of " + std::to_string(opt_.node_budget) +
                           " exhausted");
    }
    while (open_pos < open_.size() && rem_[static_cast<std::size_t>(open_[open_pos])] == 0) {
      ++open_pos;
    }
    if (open_pos == open_.size()) {
      if (cache_.residual() < *best_residual_) {
        *best_residual_ = cache_.residual();
        *best_ = P_;
      }
      return;
    }
    if (opt_.use_bound && bound() >= *best_residual_) {
      return;
    }
    const std::int64_t b = open_[open_pos];
    const auto bi = static_cast<std::size_t>(b);
    // Increments within a row go to nondecreasing columns, so each matrix is
    // reached once.
    std::vector<std::int64_t> cols;
    std::int64_t room = 0;
    for (std::int64_t t = last_[bi]; t < P_.partitions(); ++t) {
      if (cap_[static_cast<std::size_t>(t)] > 0) {
        cols.push_back(t);
        room += cap_[static_cast<std::size_t>(t)];
      }
    }
    if (room < rem_[bi]) {
      return;
    }
    std::stable_sort(cols.begin(), cols.end(), [&](std::int64_t x, std::int64_t y) {
      return cache_.count(b, x) > cache_.count(b, y);
    });
    const std::int64_t saved_last = last_[bi];
    for (const auto t : cols) {
      const auto ti = static_cast<std::size_t>(t);
      cache_.add(b, t);
      ++P_.at(b, t);
      --rem_[bi];
      --cap_[ti];
      last_[bi] = t;
      dfs(open_pos);
      last_[bi] = saved_last;
      ++cap_[ti];
      ++rem_[bi];
      --P_.at(b, t);
      cache_.remove(b, t);
    }
  }
};

Rational residual_to_load(const PartitionedParams &pp, std::int64_t residual, std::int64_t pairs,
                          const Rational &multicast) {
  const auto &p = pp.base;
  return multicast + Rational(residual, p.m * pairs);
}

} // namespace

Rational strategy_load(const PartitionedParams &pp, const AssignmentMatrix &P, Strategy st,
                       const Phi &phi) {
  const auto prof = multicast_profile(pp.base, phi);
  const auto s_last = prof.last_round(st);
  if (!s_last) {
    throw RangeError("strategy 2 is unavailable when s_q = 1");
  }
  UCache cache(pp, *s_last, std::numeric_limits<std::uint64_t>::max());
  for (std::int64_t b = 0; b < P.batches(); ++b) {
    for (std::int64_t t = 0; t < P.partitions(); ++t) {
      for (std::int64_t k = 0; k < P.at(b, t); ++k) {
        cache.add(b, t);
      }
    }
  }
  return residual_to_load(pp, cache.residual(), cache.pairs(), prof.multicast_load(*s_last));
}

double partial_lower_bound(const PartitionedParams &pp, const AssignmentMatrix &partial, Strategy st,
                           const Phi &phi) {
  check_partial(partial, pp);
  const auto prof = multicast_profile(pp.base, phi);
  const auto s_last = prof.last_round(st);
  if (!s_last) {
    throw RangeError("strategy 2 is unavailable when s_q = 1");
  }
  SolverOptions opt;
  opt.phi = phi;
  opt.cell_budget = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t nodes = 0;
  Search search(pp, partial, *s_last, opt, nodes);
  const UCache probe(pp, *s_last, opt.cell_budget);
  return residual_to_load(pp, search.bound(), probe.pairs(), prof.multicast_load(*s_last)).to_double();
}

SolveResult branch_and_bound(const PartitionedParams &pp, const AssignmentMatrix &initial,
                             const SolverOptions &opt, const std::optional<AssignmentMatrix> &incumbent) {
  check_partial(initial, pp);
  if (incumbent) {
    check_sum_constraints(*incumbent, pp);
  }
  const auto prof = multicast_profile(pp.base, opt.phi);
  SolveResult out;
  bool have = false;
  for (const Strategy st : {Strategy::first, Strategy::second}) {
    const auto s_last = prof.last_round(st);
    if (!s_last) {
      continue;
    }
    const Rational multicast = prof.multicast_load(*s_last);
    Search search(pp, initial, *s_last, opt, out.nodes);
    const std::int64_t pairs = static_cast<std::int64_t>(
        binomial(static_cast<std::uint64_t>(pp.base.K), static_cast<std::uint64_t>(pp.base.q)) *
        static_cast<std::uint64_t>(pp.base.q));

    // The incumbent's residual under this strategy (if any) seeds the cutoff.
    std::int64_t best_residual = std::numeric_limits<std::int64_t>::max();
    std::optional<AssignmentMatrix> best;
    if (incumbent) {
      const Rational l = strategy_load(pp, *incumbent, st, opt.phi);
      best_residual = ((l - multicast) * Rational(pp.base.m * pairs)).num();
      best = *incumbent;
    }
    if (have) {
      // Only completions beating the other strategy's optimum matter; a
      // residual r wins iff r < cut, i.e. r < ceil(cut) for integer r.
      const Rational cut = (out.exact_load - multicast) * Rational(pp.base.m * pairs);
      if (cut <= Rational(0)) {
        continue;
      }
      const std::int64_t c = cut.num() / cut.den() + (cut.num() % cut.den() != 0 ? 1 : 0);
      if (c < best_residual) {
        best_residual = c;
        best.reset();
      }
    }
    try {
      search.run(best_residual, best);
    } catch (const BudgetExceeded &) {
      out.budget_hit = true;
      if (!opt.anytime || (!best && !have)) {
        throw;
      }
    }
    if (best) {
      const Rational l = residual_to_load(pp, best_residual, pairs, multicast);
      if (!have || l < out.exact_load) {
        out.P = *best;
        out.exact_load = l;
        out.strategy = st;
        have = true;
      }
    }
    if (out.budget_hit) {
      break;
    }
  }
  if (!have) {
    throw BudgetExceeded("no completion found within the search budget");
  }
  out.load = out.exact_load.to_double();
  return out;
}

SolveResult hybrid_assign(const PartitionedParams &pp, Rng &rng, const HybridOptions &hopt,
                          const SolverOptions &opt) {
  const auto &p = pp.base;
  AssignmentMatrix current = heuristic_assign(pp);
  const auto full = load_bdc(pp, current, LoadOptions{opt.phi, std::nullopt, 0, UINT64_MAX});
  SolveResult out;
  out.P = current;
  out.exact_load = *full.exact;
  out.load = full.value;
  out.strategy = full.strategy;
  out.trace.push_back(out.load);
  if (!std::isfinite(hopt.improvement_threshold)) {
    return out;
  }
  const std::int64_t k = std::min(hopt.unassign_count.value_or(p.batch_size_int()), p.r);
  SolverOptions inner = opt;
  inner.node_budget = hopt.node_budget_per_iteration;
  inner.anytime = true;

  std::vector<double> improvements;
  for (std::int64_t it = 0; it < hopt.iteration_cap; ++it) {
    // Remove k unit entries chosen uniformly among the r placed rows.
    std::vector<std::int64_t> cells;
    cells.reserve(static_cast<std::size_t>(p.r));
    for (std::int64_t b = 0; b < current.batches(); ++b) {
      for (std::int64_t t = 0; t < current.partitions(); ++t) {
        cells.insert(cells.end(), static_cast<std::size_t>(current.at(b, t)), b * pp.T + t);
      }
    }
    rng.shuffle(cells);
    AssignmentMatrix partial = current;
    for (std::int64_t i = 0; i < k; ++i) {
      const auto c = cells[static_cast<std::size_t>(i)];
      --partial.at(c / pp.T, c % pp.T);
    }
    auto step = branch_and_bound(pp, partial, inner, current);
    out.nodes += step.nodes;
    out.budget_hit = out.budget_hit || step.budget_hit;
    const double gain = out.load - step.load;
    if (step.exact_load < out.exact_load) {
      current = step.P;
      out.P = step.P;
      out.exact_load = step.exact_load;
      out.load = step.load;
      out.strategy = step.strategy;
    }
    out.trace.push_back(out.load);
    improvements.push_back(std::max(gain, 0.0));
    if (static_cast<std::int64_t>(improvements.size()) >= hopt.window) {
      const auto first = improvements.end() - hopt.window;
      const double mean = std::accumulate(first, improvements.end(), 0.0) / static_cast<double>(hopt.window);
      if (mean < hopt.improvement_threshold) {
        break;
      }
    }
  }
  return out;
}

} // namespace codedmm
