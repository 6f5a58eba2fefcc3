#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "codedmm/galois.hpp"
#include "codedmm/random.hpp"
#include "codedmm/runtime_model.hpp"
#include "codedmm/storage_assign.hpp"
#include "codedmm/sysparams.hpp"

namespace codedmm {

/// Degree distribution over 1..m.
class DegreeDistribution {
public:
  /// `pmf[d]` for d in 0..m; pmf[0] must be 0. Normalizes.
  explicit DegreeDistribution(std::vector<double> pmf, std::int64_t M = 0, double delta = 0);

  std::int64_t m() const noexcept { return static_cast<std::int64_t>(pmf_.size()) - 1; }
  double operator()(std::int64_t d) const { return pmf_[static_cast<std::size_t>(d)]; }
  const std::vector<double> &pmf() const noexcept { return pmf_; }
  double mean_degree() const noexcept { return mean_; }
  std::int64_t spike() const noexcept { return M_; }
  double delta() const noexcept { return delta_; }

  std::int64_t sample(Rng &rng) const;

private:
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  double mean_ = 0;
  std::int64_t M_ = 0;
  double delta_ = 0;
};

/// Ideal Soliton body plus a robust component with spike at degree M:
/// tau(i) = 1/(iM) for i < M, tau(M) = ln(m/(M delta))/M.
DegreeDistribution robust_soliton(std::int64_t m, std::int64_t M, double delta);
DegreeDistribution ideal_soliton(std::int64_t m);

/// floor(m (1 + epsilon)) without floating-point surprises at exact products.
std::int64_t symbols_for_overhead(std::int64_t m, double epsilon);

/// Lower bound on the probability that `symbols` received rows fail to
/// decode: the probability some input symbol is covered by none of them.
double failure_prob_bound_symbols(const DegreeDistribution &dist, std::int64_t symbols);
double failure_prob_bound(const DegreeDistribution &dist, double epsilon);

struct LtDesign {
  std::int64_t m = 0;
  double epsilon_min = 0;
  double pf_target = 0;
  std::int64_t M = 0;
  double delta = 0;
  double bound_at_min = 0;
  DegreeDistribution dist{std::vector<double>{0.0, 1.0}};
};

/// Largest spike location M for which some delta in [1e-9, 1] brings the
/// bound at epsilon_min to pf_target (relative tolerance 0.1). Throws
/// Infeasible if none does.
LtDesign design_code(std::int64_t m, double epsilon_min, double pf_target);

struct LtRow {
  std::vector<std::uint32_t> indices; ///< zero-based, distinct
  std::vector<gf::Element> coefs;     ///< nonzero
};

std::vector<LtRow> lt_encode(Rng &rng, const DegreeDistribution &dist, std::int64_t count,
                             const gf::Field &field);

struct DecodeReport {
  bool success = false;
  std::int64_t inactivations = 0;
  /// Field operations on symbol values, for one symbol column.
  Complexity ops;
  std::int64_t symbols_used = 0;
  /// Recovered values, m x width, when right-hand sides were supplied.
  std::vector<std::vector<gf::Element>> values;
};

/// Peeling with inactivation, Gaussian elimination on the inactive symbols,
/// then back-substitution. `rhs`, if non-empty, holds one value vector per
/// row (all of the same width).
DecodeReport inactivation_decode(const std::vector<LtRow> &rows, std::int64_t m, const gf::Field &field,
                                 const std::vector<std::vector<gf::Element>> &rhs = {});

/// Rank of the rows over the field, by dense elimination.
std::int64_t lt_rank(const std::vector<LtRow> &rows, std::int64_t m, const gf::Field &field);

/// How a server prefix is judged able to decode.
enum class DecodabilityModel {
  bound,   ///< one uniform draw U per trial; decodes once the bound at the
           ///< collected symbol count falls to U or below
  decoder, ///< fresh LT rows per trial, decodes at full rank
  mds,     ///< decodes with m/T rows per partition
};

struct GSimulation {
  GDistribution g;
  std::vector<double> epsilon; ///< realized overhead per trial
  double g_mean() const { return g.mean(); }
};

/// Draws server completion orders and records the smallest prefix g that
/// holds m/T (1 + epsilon_min) rows of every partition and decodes.
GSimulation simulate_g_distribution(const PartitionedParams &pp, const LtDesign &design,
                                    const AssignmentMatrix &P, Rng &rng, std::int64_t trials,
                                    DecodabilityModel model = DecodabilityModel::bound);

/// Distribution of the number of symbols needed to decode, from the bound:
/// mass at k for k in [floor(m(1+eps_min)), max_symbols], the remainder at
/// max_symbols. Index is the symbol count.
std::vector<double> symbols_needed_pmf(const LtDesign &design, std::int64_t max_symbols);

/// Decode cost at epsilon_min, averaged over `runs` successful decodes.
Complexity lt_decode_ops(const LtDesign &design, Rng &rng, std::int64_t runs, int field_bits);

/// Delay of the LT scheme with `partitions` identical codes of dimension
/// design.m: direct encoding at mean degree, map over the g distribution,
/// reduce from the simulated per-partition decode cost.
PhaseDelays lt_scheme_delay(const SystemParams &p, const LtDesign &design, std::int64_t partitions,
                            const GDistribution &g, const Complexity &decode_ops);

} // namespace codedmm
