#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codedmm/lt_code.hpp"
#include "codedmm/random.hpp"
#include "codedmm/runtime_model.hpp"
#include "codedmm/shuffle_eval.hpp"
#include "codedmm/solvers.hpp"
#include "codedmm/storage_assign.hpp"
#include "codedmm/sysparams.hpp"

namespace codedmm {

enum class SchemeKind { uncoded, cmr, sc, unified, bdc, lt, bdc_lt };
enum class SolverKind { heuristic, theorem1, bnb, hybrid, random };

std::string_view to_string(SchemeKind kind);
std::string_view to_string(SolverKind kind);
SchemeKind parse_scheme_kind(std::string_view name);
SolverKind parse_solver_kind(std::string_view name);

struct SchemeSpec {
  SchemeKind kind = SchemeKind::bdc;
  std::int64_t T = 1; ///< partitions, bdc only
  SolverKind solver = SolverKind::heuristic;
  double epsilon_min = 0.3;
  double pf_target = 0.1;
  /// Completion orders drawn to estimate the LT g distribution.
  std::int64_t g_trials = 10'000;
  DecodabilityModel g_model = DecodabilityModel::bound;
  /// Successful LT decodes averaged for the reduce cost.
  std::int64_t decode_runs = 5;
  /// Draw this many Q for the BDC load instead of enumerating all of them.
  std::optional<std::uint64_t> load_samples;
  std::uint64_t subset_budget = 1'000'000;
  SolverOptions solver_options{};
  HybridOptions hybrid_options{};

  std::string label() const;
};

/// Parameters each scheme actually runs with, derived from those of the
/// proposed scheme.
SystemParams baseline_params(SchemeKind kind, const SystemParams &p);

/// Everything needed to evaluate one scheme under either runtime model.
struct SchemePlan {
  SchemeSpec spec;
  SystemParams params;        ///< after baseline_params
  std::int64_t partitions = 1;
  double load = 0;
  std::optional<Rational> exact_load;
  double sigma_map = 0;       ///< whole map phase
  double sigma_encode = 0;    ///< direct encoding, 0 if C = A
  std::optional<double> sigma_encode_via_decode;
  double sigma_reduce = 0;    ///< 0 if there is no decoding
  bool has_reduce = true;
  GDistribution g;
  std::optional<AssignmentMatrix> assignment;
  std::optional<LtDesign> design;
};

/// Solves the assignment, designs the LT code and simulates g as the scheme
/// requires. Propagates BudgetExceeded and Infeasible.
SchemePlan plan_scheme(const SchemeSpec &spec, const SystemParams &p, Rng &rng);

struct SchemeMetrics {
  std::string scheme;
  SchemeKind kind = SchemeKind::uncoded;
  std::int64_t T = 1;
  double load = 0;
  double d_encode = 0;
  double d_map = 0;
  double d_reduce = 0;
  double d = 0;
  double g_mean = 0;
};

SchemeMetrics metrics(const SchemePlan &plan);
SchemeMetrics evaluate(const SchemeSpec &spec, const SystemParams &p, Rng &rng);

/// The same delays when every runtime has shift sigma and tail scale
/// beta = omega * sigma_c, with sigma_c the per-server map complexity of `p`.
SchemeMetrics alt_runtime_metrics(const SchemePlan &plan, const SystemParams &p, double omega);
SchemeMetrics evaluate_alt_runtime(const SchemeSpec &spec, const SystemParams &p, double omega,
                                   Rng &rng);

struct Proportion {
  double value = 0;
  double lower = 0; ///< 95% Wilson interval
  double upper = 0;
};

Proportion wilson_interval(std::uint64_t hits, std::uint64_t trials, double z = 1.959963984540054);

/// Total delay of `trials` independent runs, each phase drawn from its order
/// statistic. Trials are split into fixed chunks with derived seeds, so the
/// result does not depend on `threads`.
std::vector<double> sample_delays(const SchemePlan &plan, std::uint64_t trials, std::uint64_t seed,
                                  unsigned threads = 1);

/// Smallest delay any run can have: the sum of the phase shifts.
double delay_lower_envelope(const SchemePlan &plan);

struct DeadlinePoint {
  double t = 0;
  Proportion miss;
  /// Tail of a shifted Gamma fitted to the samples by moments. An
  /// extrapolation, meaningful where the Monte Carlo estimate is 0.
  double gamma_extrapolation = 0;
};

/// Fraction of sampled delays above each deadline. The same samples serve
/// every t, so the curve is nonincreasing.
std::vector<DeadlinePoint> deadline_curve(const SchemePlan &plan, const std::vector<double> &ts,
                                          std::uint64_t trials, std::uint64_t seed,
                                          unsigned threads = 1);

Proportion deadline_miss_prob(const SchemeSpec &spec, const SystemParams &p, double t,
                              std::uint64_t trials, Rng &rng);

} // namespace codedmm
