#include "codedmm/schemes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <thread>
#include <utility>

#include <boost/math/special_functions/gamma.hpp>

#include "codedmm/combinatorics.hpp"
#include "codedmm/errors.hpp"

namespace codedmm {

namespace {

constexpr std::array<std::pair<SchemeKind, std::string_view>, 7> kSchemeNames{{
    {SchemeKind::uncoded, "uncoded"},
    {SchemeKind::cmr, "cmr"},
    {SchemeKind::sc, "sc"},
    {SchemeKind::unified, "unified"},
    {SchemeKind::bdc, "bdc"},
    {SchemeKind::lt, "lt"},
    {SchemeKind::bdc_lt, "bdc_lt"},
}};

constexpr std::array<std::pair<SolverKind, std::string_view>, 5> kSolverNames{{
    {SolverKind::heuristic, "heuristic"},
    {SolverKind::theorem1, "theorem1"},
    {SolverKind::bnb, "bnb"},
    {SolverKind::hybrid, "hybrid"},
    {SolverKind::random, "random"},
}};

constexpr std::uint64_t kChunk = 8192;

double mn(const SystemParams &p) { return static_cast<double>(p.m) * static_cast<double>(p.N); }

std::string fmt_double(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

AssignmentMatrix solve_assignment(const SchemeSpec &spec, const PartitionedParams &pp, Rng &rng) {
  switch (spec.solver) {
  case SolverKind::heuristic:
    return heuristic_assign(pp);
  case SolverKind::theorem1:
    return theorem1_assignment(pp);
  case SolverKind::bnb:
    return branch_and_bound(pp, AssignmentMatrix(pp.base.batches, pp.T, 0), spec.solver_options).P;
  case SolverKind::hybrid:
    return hybrid_assign(pp, rng, spec.hybrid_options, spec.solver_options).P;
  case SolverKind::random:
    return random_assignment(rng, pp);
  }
  throw RangeError("unknown solver");
}

// Servers finish in uniformly random order, so P(g <= k) is the fraction of
// k-subsets that decode every partition.
GDistribution bdc_g_distribution(const PartitionedParams &pp, const AssignmentMatrix &P,
                                 const SchemeSpec &spec, Rng &rng) {
  const auto &p = pp.base;
  std::uint64_t subsets = 0;
  for (std::int64_t k = p.q; k <= p.K; ++k) {
    subsets = std::min<std::uint64_t>(subsets + binomial_saturating(p.K, k), UINT64_MAX / 2);
  }
  GDistribution g;
  g.pmf.assign(static_cast<std::size_t>(p.K + 1), 0.0);
  if (subsets <= spec.subset_budget) {
    double prev = 0;
    for (std::int64_t k = p.q; k <= p.K; ++k) {
      const double F = std::max(prev, decodable_fraction(P, pp, k));
      g.pmf[static_cast<std::size_t>(k)] = F - prev;
      prev = F;
    }
    g.pmf[static_cast<std::size_t>(p.K)] += 1.0 - prev;
    return g;
  }
  const auto masks = batch_masks(p.K, p.etaq);
  std::vector<int> order(static_cast<std::size_t>(p.K));
  for (int s = 0; s < p.K; ++s) {
    order[static_cast<std::size_t>(s)] = s;
  }
  const auto trials = std::max<std::int64_t>(spec.g_trials, 1);
  for (std::int64_t trial = 0; trial < trials; ++trial) {
    rng.shuffle(order);
    ServerSet done = 0;
    std::int64_t k = p.K;
    for (std::int64_t i = 0; i < p.K; ++i) {
      done |= ServerSet{1} << order[static_cast<std::size_t>(i)];
      if (i + 1 < p.q) {
        continue;
      }
      const auto rows = stored_rows_per_partition(P, masks, done);
      if (std::all_of(rows.begin(), rows.end(),
                      [&](std::int64_t c) { return c >= pp.decode_threshold(); })) {
        k = i + 1;
        break;
      }
    }
    g.pmf[static_cast<std::size_t>(k)] += 1.0 / static_cast<double>(trials);
  }
  return g;
}

void plan_partitioned_mds(SchemePlan &plan, const PartitionedParams &pp) {
  const auto &p = pp.base;
  const double r = static_cast<double>(p.r);
  plan.sigma_map = map_complexity(p).as_sigma(p);
  plan.sigma_encode =
      encode_complexity(r * static_cast<double>(pp.decode_threshold()), r, p.n).as_sigma(p);
  plan.sigma_encode_via_decode = reduce_complexity(p, pp.T, p.n).as_sigma(p);
  plan.sigma_reduce = reduce_complexity(p, pp.T, p.N).as_sigma(p);
  plan.has_reduce = true;
}

void plan_lt(SchemePlan &plan, const PartitionedParams &pp, Rng &rng) {
  const auto &p = pp.base;
  const auto &spec = plan.spec;
  const std::int64_t k = pp.decode_threshold();
  auto design = design_code(k, spec.epsilon_min, spec.pf_target);
  const auto P = heuristic_assign(pp);
  plan.g = simulate_g_distribution(pp, design, P, rng, spec.g_trials, spec.g_model).g;

  const auto pmf = symbols_needed_pmf(design, pp.rows_per_partition());
  double load = 0;
  for (std::size_t s = 0; s < pmf.size(); ++s) {
    if (pmf[s] > 0) {
      const double eps = static_cast<double>(s) / static_cast<double>(k) - 1.0;
      load += pmf[s] * load_lt(p, std::max(eps, spec.epsilon_min), spec.epsilon_min);
    }
  }
  plan.load = load;

  const auto ops = lt_decode_ops(design, rng, spec.decode_runs, p.field_bits);
  const double r = static_cast<double>(p.r);
  plan.sigma_map = map_complexity(p).as_sigma(p);
  plan.sigma_encode = encode_complexity(design.dist.mean_degree() * r, r, p.n).as_sigma(p);
  plan.sigma_encode_via_decode.reset();
  plan.sigma_reduce =
      static_cast<double>(p.N) * static_cast<double>(pp.T) * ops.as_sigma(p);
  plan.has_reduce = true;
  plan.assignment = P;
  plan.design = std::move(design);
}

// Encoding runs on K servers; returns (servers-per-row factor, per-server sigma)
// of the cheaper strategy under the given mean.
template <typename Mean>
std::pair<double, double> encode_choice(const SchemePlan &plan, Mean mean) {
  const auto &p = plan.params;
  const double K = static_cast<double>(p.K);
  std::pair<double, double> best{static_cast<double>(p.etaq), plan.sigma_encode / K};
  if (plan.sigma_encode_via_decode) {
    const std::pair<double, double> alt{K, *plan.sigma_encode_via_decode / K};
    if (alt.first * mean(alt.second) < best.first * mean(best.second)) {
      best = alt;
    }
  }
  return best;
}

} // namespace

std::string_view to_string(SchemeKind kind) {
  for (const auto &[k, name] : kSchemeNames) {
    if (k == kind) {
      return name;
    }
  }
  return "?";
}

std::string_view to_string(SolverKind kind) {
  for (const auto &[k, name] : kSolverNames) {
    if (k == kind) {
      return name;
    }
  }
  return "?";
}

SchemeKind parse_scheme_kind(std::string_view name) {
  for (const auto &[k, n] : kSchemeNames) {
    if (n == name) {
      return k;
    }
  }
  throw RangeError("unknown scheme '" + std::string(name) + "'");
}

SolverKind parse_solver_kind(std::string_view name) {
  for (const auto &[k, n] : kSolverNames) {
    if (n == name) {
      return k;
    }
  }
  throw RangeError("unknown solver '" + std::string(name) + "'");
}

std::string SchemeSpec::label() const {
  std::string s(to_string(kind));
  switch (kind) {
  case SchemeKind::bdc:
    s += "(T=" + std::to_string(T) + "," + std::string(to_string(solver)) + ")";
    break;
  case SchemeKind::lt:
  case SchemeKind::bdc_lt:
    s += "(eps_min=" + fmt_double(epsilon_min) + ",pf=" + fmt_double(pf_target) + ")";
    break;
  default:
    break;
  }
  return s;
}

SystemParams baseline_params(SchemeKind kind, const SystemParams &p) {
  auto raw = p.raw();
  switch (kind) {
  case SchemeKind::uncoded:
    raw.q = p.K;
    raw.eta = Rational(1, p.K);
    break;
  case SchemeKind::cmr:
    raw.q = p.K;
    raw.eta = Rational(p.etaq, p.K);
    break;
  case SchemeKind::sc:
    raw.eta = Rational(1, p.q);
    break;
  default:
    return p;
  }
  return derive(raw, Validation::relaxed);
}

SchemePlan plan_scheme(const SchemeSpec &spec, const SystemParams &p, Rng &rng) {
  SchemePlan plan;
  plan.spec = spec;
  plan.params = baseline_params(spec.kind, p);
  const auto &bp = plan.params;
  switch (spec.kind) {
  case SchemeKind::uncoded:
  case SchemeKind::cmr:
    plan.exact_load =
        spec.kind == SchemeKind::uncoded ? Rational(1) - bp.eta : load_mds(bp);
    plan.load = plan.exact_load->to_double();
    plan.sigma_map = map_complexity(bp).as_sigma(bp);
    plan.has_reduce = false;
    plan.g = GDistribution::point(bp.K, bp.K);
    break;
  case SchemeKind::sc: {
    // Codes of length K over m/q row groups.
    const auto pp = partition(bp, bp.m / bp.q);
    plan.partitions = pp.T;
    plan.exact_load = Rational(1) - bp.eta;
    plan.load = plan.exact_load->to_double();
    plan_partitioned_mds(plan, pp);
    plan.g = GDistribution::point(bp.K, bp.q);
    break;
  }
  case SchemeKind::unified: {
    const auto pp = partition(bp, 1);
    plan.exact_load = load_mds(bp);
    plan.load = plan.exact_load->to_double();
    plan_partitioned_mds(plan, pp);
    plan.g = GDistribution::point(bp.K, bp.q);
    break;
  }
  case SchemeKind::bdc: {
    const auto pp = partition(bp, spec.T);
    plan.partitions = pp.T;
    auto P = solve_assignment(spec, pp, rng);
    LoadOptions lo;
    lo.samples = spec.load_samples;
    lo.seed = rng.next_u64();
    lo.subset_budget = spec.subset_budget;
    const auto load = load_bdc(pp, P, lo);
    plan.load = load.value;
    plan.exact_load = load.exact;
    plan_partitioned_mds(plan, pp);
    plan.g = bdc_g_distribution(pp, P, spec, rng);
    plan.assignment = std::move(P);
    break;
  }
  case SchemeKind::lt:
  case SchemeKind::bdc_lt: {
    const auto pp = partition(bp, spec.kind == SchemeKind::lt ? 1 : partition_limit(bp));
    plan.partitions = pp.T;
    plan_lt(plan, pp, rng);
    break;
  }
  }
  return plan;
}

SchemeMetrics metrics(const SchemePlan &plan) {
  const auto &p = plan.params;
  SchemeMetrics m;
  m.scheme = plan.spec.label();
  m.kind = plan.spec.kind;
  m.T = plan.partitions;
  m.load = plan.load;
  m.d_encode = encode_delay(p, plan.sigma_encode, plan.sigma_encode_via_decode);
  m.d_map = map_delay(p, plan.sigma_map, plan.g);
  m.d_reduce = plan.has_reduce ? reduce_delay(p, plan.sigma_reduce) : 0.0;
  m.d = m.d_encode + m.d_map + m.d_reduce;
  m.g_mean = plan.g.mean();
  return m;
}

SchemeMetrics evaluate(const SchemeSpec &spec, const SystemParams &p, Rng &rng) {
  return metrics(plan_scheme(spec, p, rng));
}

SchemeMetrics alt_runtime_metrics(const SchemePlan &plan, const SystemParams &p, double omega) {
  if (omega < 0) {
    throw RangeError("omega must be nonnegative");
  }
  const auto &bp = plan.params;
  const double beta = omega * map_complexity(p).as_sigma(p) / static_cast<double>(p.K);
  const double norm = mn(bp);
  const double K = static_cast<double>(bp.K);

  SchemeMetrics m = metrics(plan);
  m.d_encode = 0;
  if (plan.sigma_encode > 0) {
    const auto mean = [&](double s) { return alt_order_stat_mean(s, beta, bp.K, bp.K); };
    const auto [factor, sigma] = encode_choice(plan, mean);
    m.d_encode = factor / norm * mean(sigma);
  }
  m.d_map = 0;
  for (std::size_t g = 1; g < plan.g.pmf.size(); ++g) {
    if (plan.g.pmf[g] > 0) {
      m.d_map += plan.g.pmf[g] *
                 alt_order_stat_mean(plan.sigma_map / K, beta, bp.K, static_cast<std::int64_t>(g));
    }
  }
  m.d_map /= norm;
  const double sigma_red = plan.has_reduce ? plan.sigma_reduce / static_cast<double>(bp.q) : 0.0;
  m.d_reduce = alt_order_stat_mean(sigma_red, beta, bp.q, bp.q) / norm;
  m.d = m.d_encode + m.d_map + m.d_reduce;
  return m;
}

SchemeMetrics evaluate_alt_runtime(const SchemeSpec &spec, const SystemParams &p, double omega,
                                   Rng &rng) {
  return alt_runtime_metrics(plan_scheme(spec, p, rng), p, omega);
}

Proportion wilson_interval(std::uint64_t hits, std::uint64_t trials, double z) {
  if (trials == 0) {
    return Proportion{0, 0, 1};
  }
  const double n = static_cast<double>(trials);
  const double ph = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double centre = (ph + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z / (1 + z2 / n) * std::sqrt(ph * (1 - ph) / n + z2 / (4 * n * n));
  const double lower = hits == 0 ? 0.0 : std::clamp(centre - half, 0.0, ph);
  const double upper = hits == trials ? 1.0 : std::clamp(centre + half, ph, 1.0);
  return Proportion{ph, lower, upper};
}

double delay_lower_envelope(const SchemePlan &plan) {
  const auto &p = plan.params;
  const double norm = mn(p);
  double d = 0;
  if (plan.sigma_encode > 0) {
    const auto [factor, sigma] = encode_choice(
        plan, [&](double s) { return order_stat_mean(s, p.K, p.K); });
    d += factor * sigma / norm;
  }
  d += plan.sigma_map / static_cast<double>(p.K) / norm;
  if (plan.has_reduce) {
    d += plan.sigma_reduce / static_cast<double>(p.q) / norm;
  }
  return d;
}

std::vector<double> sample_delays(const SchemePlan &plan, std::uint64_t trials, std::uint64_t seed,
                                  unsigned threads) {
  const auto &p = plan.params;
  const double norm = mn(p);
  const double K = static_cast<double>(p.K);
  const bool encode = plan.sigma_encode > 0;
  const auto [enc_factor, enc_sigma] =
      encode ? encode_choice(plan, [&](double s) { return order_stat_mean(s, p.K, p.K); })
             : std::pair<double, double>{0, 0};

  std::vector<double> g_cdf(plan.g.pmf.size(), 0.0);
  double acc = 0;
  for (std::size_t g = 0; g < g_cdf.size(); ++g) {
    acc += plan.g.pmf[g];
    g_cdf[g] = acc;
  }

  std::vector<double> out(trials);
  const std::uint64_t chunks = (trials + kChunk - 1) / kChunk;
  const auto run_chunk = [&](std::uint64_t c) {
    Rng rng(Rng::derive_seed(seed, c));
    const std::uint64_t end = std::min(trials, (c + 1) * kChunk);
    for (std::uint64_t i = c * kChunk; i < end; ++i) {
      double d = 0;
      if (encode) {
        d += enc_factor * sample_order_stat(rng, enc_sigma, p.K, p.K);
      }
      const double u = rng.uniform01() * acc;
      auto g = static_cast<std::int64_t>(std::upper_bound(g_cdf.begin(), g_cdf.end(), u) -
                                         g_cdf.begin());
      g = std::clamp<std::int64_t>(g, 1, p.K);
      d += sample_order_stat(rng, plan.sigma_map / K, p.K, g);
      if (plan.has_reduce) {
        d += sample_order_stat(rng, plan.sigma_reduce / static_cast<double>(p.q), p.q, p.q);
      }
      out[i] = d / norm;
    }
  };

  const unsigned workers =
      static_cast<unsigned>(std::clamp<std::uint64_t>(threads, 1, std::max<std::uint64_t>(chunks, 1)));
  if (workers <= 1) {
    for (std::uint64_t c = 0; c < chunks; ++c) {
      run_chunk(c);
    }
    return out;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::uint64_t c = w; c < chunks; c += workers) {
        run_chunk(c);
      }
    });
  }
  pool.clear();
  return out;
}

std::vector<DeadlinePoint> deadline_curve(const SchemePlan &plan, const std::vector<double> &ts,
                                          std::uint64_t trials, std::uint64_t seed,
                                          unsigned threads) {
  auto samples = sample_delays(plan, trials, seed, threads);
  std::sort(samples.begin(), samples.end());

  const double shift = delay_lower_envelope(plan);
  double mean = 0;
  for (const double x : samples) {
    mean += x - shift;
  }
  mean /= static_cast<double>(std::max<std::size_t>(samples.size(), 1));
  double var = 0;
  for (const double x : samples) {
    var += (x - shift - mean) * (x - shift - mean);
  }
  var /= static_cast<double>(std::max<std::size_t>(samples.size(), 2) - 1);

  std::vector<DeadlinePoint> out;
  out.reserve(ts.size());
  for (const double t : ts) {
    const auto above = static_cast<std::uint64_t>(
        samples.end() - std::upper_bound(samples.begin(), samples.end(), t));
    DeadlinePoint pt;
    pt.t = t;
    pt.miss = wilson_interval(above, samples.size());
    if (t <= shift) {
      pt.gamma_extrapolation = 1.0;
    } else if (mean > 0 && var > 0) {
      const double shape = mean * mean / var;
      const double scale = var / mean;
      pt.gamma_extrapolation = boost::math::gamma_q(shape, (t - shift) / scale);
    }
    out.push_back(pt);
  }
  return out;
}

Proportion deadline_miss_prob(const SchemeSpec &spec, const SystemParams &p, double t,
                              std::uint64_t trials, Rng &rng) {
  const auto plan = plan_scheme(spec, p, rng);
  return deadline_curve(plan, {t}, trials, rng.next_u64()).front().miss;
}

} // namespace codedmm
