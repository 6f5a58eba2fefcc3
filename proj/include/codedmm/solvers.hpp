#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "codedmm/random.hpp"
#include "codedmm/rational.hpp"
#include "codedmm/shuffle_eval.hpp"
#include "codedmm/storage_assign.hpp"
#include "codedmm/sysparams.hpp"

namespace codedmm {

/// Every cell gets floor(r/(C T)); then d = r/C - Y T extra rows per
/// batch dealt round-robin over the columns.
AssignmentMatrix heuristic_assign(const PartitionedParams &pp);

struct SolverOptions {
  Phi phi = phi_linear();
  std::uint64_t node_budget = 50'000'000;
  /// Refuse to build the u-vector cache when T q C(K, q) exceeds this.
  std::uint64_t cell_budget = 100'000'000;
  /// false disables pruning, giving a plain exhaustive search.
  bool use_bound = true;
  /// On budget overrun return the incumbent instead of throwing, if one exists.
  bool anytime = false;
};

struct SolveResult {
  AssignmentMatrix P;
  double load = 0;
  Rational exact_load{0};
  Strategy strategy = Strategy::first;
  std::uint64_t nodes = 0;
  bool budget_hit = false;
  std::vector<double> trace; ///< hybrid: load after each iteration, starting point first
};

/// Optimal completion of the partial assignment `initial` (row sums at most
/// the batch size, column sums at most r/T). Searches each available shuffle
/// strategy and returns the best completion by full load.
///
/// `incumbent`, if given, must be a complete assignment; the search only
/// returns something strictly better or the incumbent itself.
SolveResult branch_and_bound(const PartitionedParams &pp, const AssignmentMatrix &initial,
                             const SolverOptions &opt = {},
                             const std::optional<AssignmentMatrix> &incumbent = std::nullopt);

/// Admissible bound on the load of any completion of `partial` under `st`.
double partial_lower_bound(const PartitionedParams &pp, const AssignmentMatrix &partial, Strategy st,
                           const Phi &phi = phi_linear());

/// Load of a complete assignment under a fixed strategy, exactly.
Rational strategy_load(const PartitionedParams &pp, const AssignmentMatrix &P, Strategy st,
                       const Phi &phi = phi_linear());

struct HybridOptions {
  /// Entries removed per iteration; defaults to one batch size.
  std::optional<std::int64_t> unassign_count;
  /// Stop once the mean improvement over the last `window` iterations drops
  /// below this. Infinity disables refinement.
  double improvement_threshold = 1e-9;
  std::int64_t window = 3;
  std::int64_t iteration_cap = 100;
  std::uint64_t node_budget_per_iteration = 20'000;
};

/// Starts from the heuristic assignment and repeatedly removes random entries
/// and completes them optimally.
SolveResult hybrid_assign(const PartitionedParams &pp, Rng &rng, const HybridOptions &hopt = {},
                          const SolverOptions &opt = {});

} // namespace codedmm
