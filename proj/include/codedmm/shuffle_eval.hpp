#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "codedmm/rational.hpp"
#include "codedmm/storage_assign.hpp"
#include "codedmm/sysparams.hpp"

namespace codedmm {

/// Cost of one multicast to j + 1 recipients, in unicast units.
using Phi = std::function<Rational(std::int64_t)>;
Phi phi_linear(); ///< phi(j) = j
Phi phi_unit();   ///< phi(j) = 1

/// The two shuffle strategies: multicast down to s_q recipients and unicast
/// the remainder, or multicast one round further (down to s_q - 1).
enum class Strategy { first = 1, second = 2 };

struct MulticastProfile {
  std::int64_t etaq = 0;
  std::vector<Rational> alpha; ///< alpha[j] for j in 1..etaq; alpha[0] = 0
  std::int64_t s_q = 1;
  Phi phi;

  /// sum_{j=s}^{etaq} alpha_j
  Rational delivered(std::int64_t s) const;
  /// sum_{j=s}^{etaq} alpha_j / phi(j)
  Rational multicast_load(std::int64_t s) const;
  /// Smallest multicast round used by `st`, or nullopt if the strategy is
  /// unavailable (s_q - 1 < 1).
  std::optional<std::int64_t> last_round(Strategy st) const;
};

/// Smallest s in [1, etaq + 1] with sum_{j=s}^{etaq} alpha_j <= threshold.
std::int64_t smallest_round(const std::vector<Rational> &alpha, const Rational &threshold);

MulticastProfile multicast_profile(const SystemParams &p, Phi phi = phi_linear());

/// Unpartitioned load with an MDS code.
Rational load_mds(const SystemParams &p, const Phi &phi = phi_linear());

/// Zero-based ranks of batches whose rows are available to server S (zero
/// based, S in Q) after the multicast rounds etaq down to s_last: batches S
/// stores, and batches not stored by S but by at least s_last servers of Q.
std::vector<std::int64_t> multicast_row_indices(const SystemParams &p, ServerSet Q, int S,
                                                std::int64_t s_last);

/// Sum of rows `rows` of P.
std::vector<std::int64_t> u_vector(const AssignmentMatrix &P, const std::vector<std::int64_t> &rows);

/// sum_t max(m/T - u_t, 0)
std::int64_t residual_from_u(const std::vector<std::int64_t> &u, std::int64_t need);

/// Values S still needs per output vector after multicasting.
std::int64_t residual_unicasts(const PartitionedParams &pp, const AssignmentMatrix &P, ServerSet Q,
                               int S, Strategy st, const MulticastProfile &prof);

/// Unicast messages for one Q: sum over S in Q of the residual times N/q.
std::int64_t unicast_messages(const PartitionedParams &pp, const AssignmentMatrix &P, ServerSet Q,
                              Strategy st, const MulticastProfile &prof);

/// Multicast messages for one Q: m N sum_j alpha_j / phi(j).
Rational multicast_messages(const SystemParams &p, Strategy st, const MulticastProfile &prof);

/// Load of one Q under one strategy: (multicasts + unicasts) / (m N).
Rational load_for_q(const PartitionedParams &pp, const AssignmentMatrix &P, ServerSet Q, Strategy st,
                    const MulticastProfile &prof);

struct LoadOptions {
  Phi phi = phi_linear();
  /// If set, average over this many uniformly drawn Q instead of all C(K, q).
  std::optional<std::uint64_t> samples;
  std::uint64_t seed = 0;
  /// Exhaustive mode refuses when C(K, q) exceeds this.
  std::uint64_t subset_budget = 1'000'000;
};

struct BdcLoad {
  double value = 0;
  std::optional<Rational> exact; ///< set in exhaustive mode
  Strategy strategy = Strategy::first;
  std::uint64_t u_vectors = 0;   ///< u-vectors evaluated in total
  std::vector<double> per_strategy;
};

/// Load of the partitioned scheme with assignment P, minimized over the
/// two strategies. Throws BudgetExceeded in exhaustive mode if C(K, q) is
/// above the subset budget.
BdcLoad load_bdc(const PartitionedParams &pp, const AssignmentMatrix &P, const LoadOptions &opt = {});

/// Load of the LT scheme at overhead epsilon for a code designed at
/// epsilon_min.
double load_lt(const SystemParams &p, double epsilon, double epsilon_min,
               const Phi &phi = phi_linear());

/// Q as the servers {S_1 .. S_q} and similar helpers.
ServerSet first_servers(std::int64_t count);

} // namespace codedmm
