#include "codedmm/lt_code.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "codedmm/errors.hpp"

namespace codedmm {

DegreeDistribution::DegreeDistribution(std::vector<double> pmf, std::int64_t M, double delta)
    : pmf_(std::move(pmf)), M_(M), delta_(delta) {
  if (pmf_.size() < 2) {
    throw RangeError("degree distribution needs m >= 1");
  }
  if (pmf_[0] != 0) {
    throw RangeError("degree 0 must have zero probability");
  }
  long double total = 0;
  for (const double v : pmf_) {
    if (!(v >= 0) || !std::isfinite(v)) {
      throw RangeError("degree probabilities must be finite and non-negative");
    }
    total += v;
  }
  if (total <= 0) {
    throw RangeError("degree distribution has zero mass");
  }
  cdf_.resize(pmf_.size());
  long double acc = 0;
  long double mean = 0;
  for (std::size_t d = 0; d < pmf_.size(); ++d) {
    pmf_[d] = static_cast<double>(pmf_[d] / total);
    acc += pmf_[d];
    mean += static_cast<long double>(d) * pmf_[d];
    cdf_[d] = static_cast<double>(acc);
  }
  cdf_.back() = 1.0;
  mean_ = static_cast<double>(mean);
}

std::int64_t DegreeDistribution::sample(Rng &rng) const {
  const double u = rng.uniform01();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return std::max<std::int64_t>(1, std::min<std::int64_t>(it - cdf_.begin(), m()));
}

namespace {

// Ideal Soliton plus the robust component without its spike term.
std::vector<double> soliton_body(std::int64_t m, std::int64_t M) {
  std::vector<double> w(static_cast<std::size_t>(m + 1), 0.0);
  w[1] = 1.0 / static_cast<double>(m);
  for (std::int64_t d = 2; d <= m; ++d) {
    w[static_cast<std::size_t>(d)] = 1.0 / (static_cast<double>(d) * static_cast<double>(d - 1));
  }
  for (std::int64_t d = 1; d < M; ++d) {
    w[static_cast<std::size_t>(d)] += 1.0 / (static_cast<double>(d) * static_cast<double>(M));
  }
  return w;
}

double spike_mass(std::int64_t m, std::int64_t M, double delta) {
  return std::log(static_cast<double>(m) / (static_cast<double>(M) * delta)) / static_cast<double>(M);
}

void check_spike(std::int64_t m, std::int64_t M, double delta) {
  if (m < 1 || M < 1 || M > m) {
    throw RangeError("robust Soliton needs 1 <= M <= m");
  }
  if (!(delta > 0) || delta > 1) {
    throw RangeError("robust Soliton needs 0 < delta <= 1");
  }
}

} // namespace

DegreeDistribution robust_soliton(std::int64_t m, std::int64_t M, double delta) {
  check_spike(m, M, delta);
  auto w = soliton_body(m, M);
  w[static_cast<std::size_t>(M)] += spike_mass(m, M, delta);
  return DegreeDistribution(std::move(w), M, delta);
}

DegreeDistribution ideal_soliton(std::int64_t m) {
  std::vector<double> w(static_cast<std::size_t>(m + 1), 0.0);
  w[1] = 1.0 / static_cast<double>(m);
  for (std::int64_t d = 2; d <= m; ++d) {
    w[static_cast<std::size_t>(d)] = 1.0 / (static_cast<double>(d) * static_cast<double>(d - 1));
  }
  return DegreeDistribution(std::move(w));
}

std::int64_t symbols_for_overhead(std::int64_t m, double epsilon) {
  const double x = static_cast<double>(m) * (1.0 + epsilon);
  // Products such as 30 * 1.1 land just below the integer they denote.
  return static_cast<std::int64_t>(std::floor(x + 1e-9 * std::max(1.0, x)));
}

namespace {

// x_i = sum_d w(d) C(m-i, d) / C(m, d) for i = 1..m (index 0 unused).
std::vector<long double> inner_terms(const std::vector<double> &w, std::int64_t m) {
  std::vector<long double> x(static_cast<std::size_t>(m + 1), 0.0L);
  for (std::int64_t i = 1; i <= m; ++i) {
    long double ratio = 1.0L;
    long double s = 0.0L;
    for (std::int64_t d = 1; d <= m - i; ++d) {
      ratio *= static_cast<long double>(m - i - d + 1) / static_cast<long double>(m - d + 1);
      s += static_cast<long double>(w[static_cast<std::size_t>(d)]) * ratio;
      if (ratio < 1e-300L) {
        break;
      }
    }
    x[static_cast<std::size_t>(i)] = s;
  }
  return x;
}

double alternating_sum(const std::vector<long double> &x, std::int64_t m, std::int64_t k) {
  if (k <= 0) {
    return 1.0;
  }
  const long double lk = static_cast<long double>(k);
  const long double lgm = std::lgamma(static_cast<long double>(m) + 1);
  long double sum = 0;
  long double comp = 0;
  long double abs_sum = 0;
  for (std::int64_t i = 1; i <= m; ++i) {
    const long double xi = x[static_cast<std::size_t>(i)];
    if (xi <= 0) {
      continue;
    }
    const long double log_term = lgm - std::lgamma(static_cast<long double>(i) + 1) -
                                 std::lgamma(static_cast<long double>(m - i) + 1) + lk * std::log(xi);
    if (log_term < -90.0L) {
      continue;
    }
    const long double mag = std::exp(log_term);
    abs_sum += mag;
    const long double term = (i % 2 == 1 ? mag : -mag) - comp;
    const long double t = sum + term;
    comp = (t - sum) - term;
    sum = t;
  }
  double result = 0;
  if (abs_sum > 1e8L) {
    // Cancellation has eaten the long double mantissa; use the independent
    // coverage approximation instead.
    result = static_cast<double>(-std::expm1(-static_cast<long double>(m) * std::pow(x[1], lk)));
  } else {
    result = static_cast<double>(sum);
  }
  return std::clamp(result, 0.0, 1.0);
}

} // namespace

double failure_prob_bound_symbols(const DegreeDistribution &dist, std::int64_t symbols) {
  const auto x = inner_terms(dist.pmf(), dist.m());
  return alternating_sum(x, dist.m(), symbols);
}

double failure_prob_bound(const DegreeDistribution &dist, double epsilon) {
  return failure_prob_bound_symbols(dist, symbols_for_overhead(dist.m(), epsilon));
}

namespace {

// Bound as a function of delta at fixed (m, M). The ideal Soliton part of
// the inner sums is shared by every M; the robust part adds
// (1/M) sum_{d<M} r(i,d)/d and the spike ln(m/(M delta))/M r(i,M), where
// r(i,d) = C(m-i,d)/C(m,d).
class SpikeFamily {
public:
  SpikeFamily(std::int64_t m, std::int64_t M, const std::vector<long double> &rho_terms,
              long double rho_mass)
      : m_(m), M_(M), a_(rho_terms), b_(static_cast<std::size_t>(m + 1), 0.0L) {
    const long double inv_m = 1.0L / static_cast<long double>(M);
    for (std::int64_t i = 1; i <= m; ++i) {
      long double ratio = 1.0L;
      long double robust = 0.0L;
      for (std::int64_t d = 1; d <= M && ratio > 0; ++d) {
        ratio = d <= m - i ? ratio * static_cast<long double>(m - i - d + 1) /
                                 static_cast<long double>(m - d + 1)
                           : 0.0L;
        if (d < M) {
          robust += ratio / static_cast<long double>(d);
        } else {
          b_[static_cast<std::size_t>(i)] = ratio;
        }
      }
      a_[static_cast<std::size_t>(i)] += robust * inv_m;
    }
    long double tau_mass = 0;
    for (std::int64_t d = 1; d < M; ++d) {
      tau_mass += 1.0L / static_cast<long double>(d);
    }
    body_mass_ = rho_mass + tau_mass * inv_m;
  }

  double bound(double delta, std::int64_t k) const {
    const long double s = spike_mass(m_, M_, delta);
    const long double beta = body_mass_ + s;
    std::vector<long double> x(a_.size());
    for (std::size_t i = 1; i < x.size(); ++i) {
      x[i] = (a_[i] + b_[i] * s) / beta;
    }
    return alternating_sum(x, m_, k);
  }

private:
  std::int64_t m_;
  std::int64_t M_;
  std::vector<long double> a_;
  std::vector<long double> b_;
  long double body_mass_ = 0;
};

constexpr double kDeltaMin = 1e-9;
constexpr double kRelTol = 0.1;
constexpr std::int64_t kLinearScan = 64;

struct SpikeChoice {
  bool feasible = false;
  double delta = 1;
  double bound = 1;
};

// Finds delta in [1e-9, 1] with bound(delta) within kRelTol of the target.
// The bound is monotone in delta for fixed M, but the direction depends on
// whether the spike sits above or below the typical degree, so the
// bisection is oriented by the end points.
SpikeChoice choose_delta(const SpikeFamily &fam, std::int64_t k, double target) {
  SpikeChoice c;
  const double f_lo = fam.bound(kDeltaMin, k);
  const double f_hi = fam.bound(1.0, k);
  const double tol = kRelTol * target;
  if (std::min(f_lo, f_hi) > target + tol || std::max(f_lo, f_hi) < target - tol) {
    return c;
  }
  const auto near = [&](double f) { return std::abs(f - target); };
  c.delta = near(f_hi) <= near(f_lo) ? 1.0 : kDeltaMin;
  c.bound = near(f_hi) <= near(f_lo) ? f_hi : f_lo;
  double lo = std::log(kDeltaMin);
  double hi = 0;
  const bool rising = f_hi >= f_lo;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = fam.bound(std::exp(mid), k);
    if (near(f) < near(c.bound)) {
      c.delta = std::exp(mid);
      c.bound = f;
    }
    if ((f > target) == rising) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  c.feasible = near(c.bound) <= tol;
  return c;
}

} // namespace

LtDesign design_code(std::int64_t m, double epsilon_min, double pf_target) {
  if (m < 1) {
    throw RangeError("design_code needs m >= 1");
  }
  if (!(epsilon_min >= 0)) {
    throw RangeError("epsilon_min must be non-negative");
  }
  if (!(pf_target > 0) || pf_target > 1) {
    throw RangeError("pf_target must lie in (0, 1]");
  }
  const std::int64_t k = symbols_for_overhead(m, epsilon_min);
  LtDesign d;
  d.m = m;
  d.epsilon_min = epsilon_min;
  d.pf_target = pf_target;
  if (pf_target >= 1) {
    // Every code meets a failure target of 1.
    d.M = m;
    d.delta = 1;
    d.dist = robust_soliton(m, m, 1.0);
    d.bound_at_min = failure_prob_bound_symbols(d.dist, k);
    return d;
  }

  std::vector<double> rho(static_cast<std::size_t>(m + 1), 0.0);
  rho[1] = 1.0 / static_cast<double>(m);
  for (std::int64_t j = 2; j <= m; ++j) {
    rho[static_cast<std::size_t>(j)] = 1.0 / (static_cast<double>(j) * static_cast<double>(j - 1));
  }
  const auto rho_terms = inner_terms(rho, m);
  const long double rho_mass = std::accumulate(rho.begin(), rho.end(), 0.0L);
  const auto try_spike = [&](std::int64_t M) {
    return choose_delta(SpikeFamily(m, M, rho_terms, rho_mass), k, pf_target);
  };

  // Geometric scan down from M = m, then every M below kLinearScan.
  std::int64_t found = 0;
  std::int64_t above = 0; // infeasible candidate just above `found`
  SpikeChoice choice;
  std::vector<std::int64_t> candidates;
  for (double Mf = static_cast<double>(m); Mf > kLinearScan; Mf /= std::sqrt(2.0)) {
    candidates.push_back(static_cast<std::int64_t>(std::llround(Mf)));
  }
  for (std::int64_t M = std::min(m, kLinearScan); M >= 1; --M) {
    candidates.push_back(M);
  }
  for (const auto M : candidates) {
    const auto c = try_spike(M);
    if (c.feasible) {
      found = M;
      choice = c;
      break;
    }
    above = M;
  }
  if (found == 0) {
    std::ostringstream msg;
    msg << "no robust Soliton code of dimension " << m << " reaches failure probability "
        << pf_target << " at overhead " << epsilon_min;
    throw Infeasible(msg.str());
  }
  // Between geometric candidates, binary search for the largest feasible M.
  std::int64_t lo = found;
  std::int64_t hi = above == 0 ? found + 1 : above;
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    const auto c = try_spike(mid);
    if (c.feasible) {
      lo = mid;
      choice = c;
    } else {
      hi = mid;
    }
  }

  d.M = lo;
  d.delta = choice.delta;
  d.dist = robust_soliton(m, lo, choice.delta);
  d.bound_at_min = failure_prob_bound_symbols(d.dist, k);
  return d;
}

std::vector<LtRow> lt_encode(Rng &rng, const DegreeDistribution &dist, std::int64_t count,
                             const gf::Field &field) {
  const std::int64_t m = dist.m();
  std::vector<LtRow> rows(static_cast<std::size_t>(count));
  std::vector<char> taken(static_cast<std::size_t>(m), 0);
  const std::uint64_t nonzero = field.size() - 1;
  for (auto &row : rows) {
    const std::int64_t d = dist.sample(rng);
    // Floyd's sampling of d distinct indices.
    for (std::int64_t j = m - d; j < m; ++j) {
      auto t = static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(j + 1)));
      if (taken[static_cast<std::size_t>(t)]) {
        t = j;
      }
      taken[static_cast<std::size_t>(t)] = 1;
      row.indices.push_back(static_cast<std::uint32_t>(t));
    }
    std::sort(row.indices.begin(), row.indices.end());
    for (const auto i : row.indices) {
      taken[i] = 0;
      row.coefs.push_back(static_cast<gf::Element>(1 + rng.uniform_below(nonzero)));
    }
  }
  return rows;
}

namespace {

struct WorkRow {
  std::vector<std::pair<std::uint32_t, gf::Element>> active;
  std::vector<gf::Element> inact;
  std::vector<gf::Element> rhs;
  bool pivot = false;
};

class Decoder {
public:
  Decoder(const std::vector<LtRow> &rows, std::int64_t m, const gf::Field &f,
          const std::vector<std::vector<gf::Element>> &rhs)
      : f_(f), m_(m), rows_(rows.size()), col_rows_(static_cast<std::size_t>(m)),
        col_deg_(static_cast<std::size_t>(m), 0), col_state_(static_cast<std::size_t>(m), kActive),
        col_pivot_(static_cast<std::size_t>(m), -1), col_inact_(static_cast<std::size_t>(m), -1) {
    if (!rhs.empty() && rhs.size() != rows.size()) {
      throw RangeError("one right-hand side per row is required");
    }
    width_ = rhs.empty() ? 0 : rhs.front().size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto &w = rows_[r];
      for (std::size_t k = 0; k < rows[r].indices.size(); ++k) {
        const auto c = rows[r].indices[k];
        if (c >= static_cast<std::uint64_t>(m)) {
          throw RangeError("LT row references a column outside 0..m-1");
        }
        w.active.emplace_back(c, rows[r].coefs[k]);
        col_rows_[c].push_back(static_cast<std::int32_t>(r));
        ++col_deg_[c];
      }
      if (width_) {
        w.rhs = rhs[r];
      }
      if (w.active.size() == 1) {
        ripple_.push_back(static_cast<std::int32_t>(r));
      }
    }
  }

  DecodeReport run() {
    DecodeReport rep;
    std::int64_t unresolved = m_;
    while (unresolved > 0) {
      const auto r = next_ripple();
      if (r >= 0) {
        solve_with(r);
      } else if (!inactivate_one()) {
        break;
      }
      --unresolved;
    }
    rep.inactivations = inactive_;
    if (unresolved > 0) {
      rep.success = false;
      rep.ops = ops_;
      rep.symbols_used = static_cast<std::int64_t>(rows_.size());
      return rep;
    }
    rep.success = solve_inactive(rep.symbols_used);
    if (rep.success) {
      back_substitute();
      rep.symbols_used += pivots_;
      if (width_) {
        rep.values = values_;
      }
    } else {
      rep.symbols_used = static_cast<std::int64_t>(rows_.size());
    }
    rep.ops = ops_;
    return rep;
  }

private:
  static constexpr int kActive = 0;
  static constexpr int kSolved = 1;
  static constexpr int kInactive = 2;

  const gf::Field &f_;
  std::int64_t m_;
  std::size_t width_ = 0;
  std::vector<WorkRow> rows_;
  std::vector<std::vector<std::int32_t>> col_rows_;
  std::vector<std::int64_t> col_deg_;
  std::vector<int> col_state_;
  std::vector<std::int32_t> col_pivot_;
  std::vector<std::int32_t> col_inact_;
  std::vector<std::int32_t> ripple_;
  std::int64_t inactive_ = 0;
  std::int64_t pivots_ = 0;
  Complexity ops_;
  std::vector<std::vector<gf::Element>> basis_;     // by inactive index, dense coefs
  std::vector<std::vector<gf::Element>> basis_rhs_; // matching right-hand sides
  std::vector<bool> has_basis_;
  std::vector<std::vector<gf::Element>> inactive_values_;
  std::vector<std::vector<gf::Element>> values_;

  // dst += c * src on symbol values; counted as one symbol operation.
  void axpy_rhs(std::vector<gf::Element> &dst, const std::vector<gf::Element> &src, gf::Element c) {
    ops_.additions += 1;
    if (c != 1) {
      ops_.multiplications += 1;
    }
    for (std::size_t j = 0; j < width_; ++j) {
      dst[j] ^= f_.mul(c, src[j]);
    }
  }

  void scale_rhs(std::vector<gf::Element> &v, gf::Element c) {
    if (c == 1) {
      return;
    }
    ops_.multiplications += 1;
    for (std::size_t j = 0; j < width_; ++j) {
      v[j] = f_.mul(c, v[j]);
    }
  }

  std::int32_t next_ripple() {
    while (!ripple_.empty()) {
      const auto r = ripple_.back();
      ripple_.pop_back();
      const auto &w = rows_[static_cast<std::size_t>(r)];
      if (!w.pivot && w.active.size() == 1) {
        return r;
      }
    }
    return -1;
  }

  static gf::Element take(WorkRow &w, std::uint32_t c) {
    for (std::size_t k = 0; k < w.active.size(); ++k) {
      if (w.active[k].first == c) {
        const auto a = w.active[k].second;
        w.active[k] = w.active.back();
        w.active.pop_back();
        return a;
      }
    }
    return 0;
  }

  void drop_degrees(const WorkRow &w) {
    for (const auto &[c, a] : w.active) {
      --col_deg_[c];
    }
  }

  void solve_with(std::int32_t r) {
    auto &piv = rows_[static_cast<std::size_t>(r)];
    const auto c = piv.active.front().first;
    const auto a = piv.active.front().second;
    piv.pivot = true;
    drop_degrees(piv);
    ++pivots_;
    col_state_[c] = kSolved;
    col_pivot_[c] = r;
    const auto ainv = f_.inv(a);
    for (const auto r2 : col_rows_[c]) {
      if (r2 == r) {
        continue;
      }
      auto &w = rows_[static_cast<std::size_t>(r2)];
      if (w.pivot) {
        continue;
      }
      const auto b = take(w, c);
      if (b == 0) {
        continue;
      }
      --col_deg_[c];
      const auto factor = f_.mul(b, ainv);
      if (w.inact.size() < piv.inact.size()) {
        w.inact.resize(piv.inact.size(), 0);
      }
      for (std::size_t j = 0; j < piv.inact.size(); ++j) {
        w.inact[j] ^= f_.mul(factor, piv.inact[j]);
      }
      axpy_rhs(w.rhs, piv.rhs, factor);
      if (w.active.size() == 1) {
        ripple_.push_back(r2);
      }
    }
  }

  bool inactivate_one() {
    std::int64_t best = -1;
    std::int64_t best_deg = 0;
    for (std::int64_t c = 0; c < m_; ++c) {
      if (col_state_[static_cast<std::size_t>(c)] == kActive && col_deg_[static_cast<std::size_t>(c)] > best_deg) {
        best = c;
        best_deg = col_deg_[static_cast<std::size_t>(c)];
      }
    }
    if (best < 0) {
      return false;
    }
    const auto c = static_cast<std::uint32_t>(best);
    const auto idx = static_cast<std::size_t>(inactive_++);
    col_state_[c] = kInactive;
    col_inact_[c] = static_cast<std::int32_t>(idx);
    for (const auto r : col_rows_[c]) {
      auto &w = rows_[static_cast<std::size_t>(r)];
      if (w.pivot) {
        continue;
      }
      const auto a = take(w, c);
      if (a == 0) {
        continue;
      }
      if (w.inact.size() <= idx) {
        w.inact.resize(idx + 1, 0);
      }
      w.inact[idx] = a;
      if (w.active.size() == 1) {
        ripple_.push_back(r);
      }
    }
    col_deg_[c] = 0;
    return true;
  }

  bool solve_inactive(std::int64_t &used) {
    const auto I = static_cast<std::size_t>(inactive_);
    basis_.assign(I, {});
    basis_rhs_.assign(I, {});
    has_basis_.assign(I, false);
    std::size_t rank = 0;
    used = 0;
    for (auto &w : rows_) {
      if (rank == I) {
        break;
      }
      if (w.pivot || !w.active.empty()) {
        continue;
      }
      ++used;
      auto v = w.inact;
      v.resize(I, 0);
      auto rhs = w.rhs;
      for (std::size_t j = 0; j < I; ++j) {
        if (v[j] == 0 || !has_basis_[j]) {
          continue;
        }
        const auto c = v[j];
        for (std::size_t k = j; k < I; ++k) {
          v[k] ^= f_.mul(c, basis_[j][k]);
        }
        axpy_rhs(rhs, basis_rhs_[j], c);
      }
      std::size_t lead = 0;
      while (lead < I && v[lead] == 0) {
        ++lead;
      }
      if (lead == I) {
        continue;
      }
      const auto s = f_.inv(v[lead]);
      for (std::size_t k = lead; k < I; ++k) {
        v[k] = f_.mul(s, v[k]);
      }
      scale_rhs(rhs, s);
      basis_[lead] = std::move(v);
      basis_rhs_[lead] = std::move(rhs);
      has_basis_[lead] = true;
      ++rank;
    }
    if (rank < I) {
      return false;
    }
    inactive_values_.assign(I, {});
    for (std::size_t j = I; j-- > 0;) {
      auto x = basis_rhs_[j];
      for (std::size_t k = j + 1; k < I; ++k) {
        if (basis_[j][k] != 0) {
          axpy_rhs(x, inactive_values_[k], basis_[j][k]);
        }
      }
      inactive_values_[j] = std::move(x);
    }
    return true;
  }

  void back_substitute() {
    values_.assign(static_cast<std::size_t>(m_), std::vector<gf::Element>(width_, 0));
    for (std::int64_t c = 0; c < m_; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      if (col_state_[ci] == kInactive) {
        values_[ci] = inactive_values_[static_cast<std::size_t>(col_inact_[ci])];
        continue;
      }
      auto &w = rows_[static_cast<std::size_t>(col_pivot_[ci])];
      auto x = w.rhs;
      for (std::size_t j = 0; j < w.inact.size(); ++j) {
        if (w.inact[j] != 0) {
          axpy_rhs(x, inactive_values_[j], w.inact[j]);
        }
      }
      scale_rhs(x, f_.inv(w.active.front().second));
      values_[ci] = std::move(x);
    }
  }
};

} // namespace

DecodeReport inactivation_decode(const std::vector<LtRow> &rows, std::int64_t m, const gf::Field &field,
                                 const std::vector<std::vector<gf::Element>> &rhs) {
  if (m < 1) {
    throw RangeError("inactivation_decode needs m >= 1");
  }
  return Decoder(rows, m, field, rhs).run();
}

std::int64_t lt_rank(const std::vector<LtRow> &rows, std::int64_t m, const gf::Field &field) {
  if (rows.empty()) {
    return 0;
  }
  gf::Matrix a(rows.size(), static_cast<std::size_t>(m));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < rows[r].indices.size(); ++k) {
      a.at(r, rows[r].indices[k]) = rows[r].coefs[k];
    }
  }
  return static_cast<std::int64_t>(gf::rank(field, std::move(a)));
}

GSimulation simulate_g_distribution(const PartitionedParams &pp, const LtDesign &design,
                                    const AssignmentMatrix &P, Rng &rng, std::int64_t trials,
                                    DecodabilityModel model) {
  const auto &p = pp.base;
  check_sum_constraints(P, pp);
  const std::int64_t k_part = pp.decode_threshold();
  const std::int64_t r_part = pp.rows_per_partition();
  if (model != DecodabilityModel::mds && design.m != k_part) {
    throw RangeError("LT design dimension " + std::to_string(design.m) +
                     " does not match m/T = " + std::to_string(k_part));
  }
  const auto masks = batch_masks(p.K, p.etaq);
  const std::int64_t need =
      model == DecodabilityModel::mds ? k_part : symbols_for_overhead(k_part, design.epsilon_min);

  // Failure bound per collected symbol count.
  std::vector<double> pf;
  if (model == DecodabilityModel::bound) {
    pf.assign(static_cast<std::size_t>(r_part + 1), 1.0);
    const auto x = inner_terms(design.dist.pmf(), k_part);
    for (std::int64_t k = std::min(need, r_part); k <= r_part; ++k) {
      pf[static_cast<std::size_t>(k)] = alternating_sum(x, k_part, k);
    }
  }

  // Row offsets: batch b holds rows [offset[b][t], offset[b][t] + P[b][t])
  // of partition t.
  std::vector<std::int64_t> offset(static_cast<std::size_t>(p.batches * pp.T), 0);
  for (std::int64_t t = 0; t < pp.T; ++t) {
    std::int64_t acc = 0;
    for (std::int64_t b = 0; b < p.batches; ++b) {
      offset[static_cast<std::size_t>(b * pp.T + t)] = acc;
      acc += P.at(b, t);
    }
  }
  const auto &field = gf::Field::get(p.field_bits);

  GSimulation out;
  out.g.pmf.assign(static_cast<std::size_t>(p.K + 1), 0.0);
  std::vector<int> order(static_cast<std::size_t>(p.K));
  std::iota(order.begin(), order.end(), 0);
  for (std::int64_t trial = 0; trial < trials; ++trial) {
    rng.shuffle(order);
    const double u = model == DecodabilityModel::bound ? rng.uniform01() : 0.0;
    std::vector<LtRow> psi;
    if (model == DecodabilityModel::decoder) {
      psi = lt_encode(rng, design.dist, r_part, field);
    }
    ServerSet G = 0;
    std::int64_t g = p.K;
    std::int64_t rows_at_g = r_part;
    for (std::int64_t i = 0; i < p.K; ++i) {
      G |= ServerSet{1} << order[static_cast<std::size_t>(i)];
      if (i + 1 < p.q) {
        continue;
      }
      const auto rows = stored_rows_per_partition(P, masks, G);
      const auto min_rows = *std::min_element(rows.begin(), rows.end());
      if (min_rows < need) {
        continue;
      }
      bool ok = true;
      if (model == DecodabilityModel::bound) {
        ok = pf[static_cast<std::size_t>(min_rows)] <= u;
      } else if (model == DecodabilityModel::decoder) {
        for (std::int64_t t = 0; t < pp.T && ok; ++t) {
          std::vector<LtRow> sub;
          for (std::int64_t b = 0; b < p.batches; ++b) {
            if ((masks[static_cast<std::size_t>(b)] & G) == 0) {
              continue;
            }
            const auto off = offset[static_cast<std::size_t>(b * pp.T + t)];
            for (std::int64_t j = 0; j < P.at(b, t); ++j) {
              sub.push_back(psi[static_cast<std::size_t>(off + j)]);
            }
          }
          ok = lt_rank(sub, k_part, field) == k_part;
        }
      }
      if (ok) {
        g = i + 1;
        rows_at_g = min_rows;
        break;
      }
    }
    out.g.pmf[static_cast<std::size_t>(g)] += 1.0;
    out.epsilon.push_back(static_cast<double>(rows_at_g) / static_cast<double>(k_part) - 1.0);
  }
  for (auto &v : out.g.pmf) {
    v /= static_cast<double>(trials);
  }
  return out;
}

std::vector<double> symbols_needed_pmf(const LtDesign &design, std::int64_t max_symbols) {
  const std::int64_t k0 = symbols_for_overhead(design.m, design.epsilon_min);
  std::vector<double> pmf(static_cast<std::size_t>(std::max(max_symbols, k0) + 1), 0.0);
  if (max_symbols <= k0) {
    pmf[static_cast<std::size_t>(k0)] = 1.0;
    return pmf;
  }
  const auto x = inner_terms(design.dist.pmf(), design.m);
  double prev = 0;
  for (std::int64_t k = k0; k <= max_symbols; ++k) {
    const double success = std::max(prev, 1.0 - alternating_sum(x, design.m, k));
    pmf[static_cast<std::size_t>(k)] = success - prev;
    prev = success;
  }
  pmf[static_cast<std::size_t>(max_symbols)] += 1.0 - prev;
  return pmf;
}

Complexity lt_decode_ops(const LtDesign &design, Rng &rng, std::int64_t runs, int field_bits) {
  const auto &field = gf::Field::get(field_bits);
  const std::int64_t k = symbols_for_overhead(design.m, design.epsilon_min);
  Complexity ok_sum;
  Complexity all_sum;
  std::int64_t ok = 0;
  std::int64_t attempts = 0;
  while (ok < runs && attempts < 20 * runs) {
    const auto rows = lt_encode(rng, design.dist, k, field);
    const auto rep = inactivation_decode(rows, design.m, field);
    ++attempts;
    all_sum = all_sum + rep.ops;
    if (rep.success) {
      ok_sum = ok_sum + rep.ops;
      ++ok;
    }
  }
  if (ok > 0) {
    return (1.0 / static_cast<double>(ok)) * ok_sum;
  }
  return (1.0 / static_cast<double>(attempts)) * all_sum;
}

PhaseDelays lt_scheme_delay(const SystemParams &p, const LtDesign &design, std::int64_t partitions,
                            const GDistribution &g, const Complexity &decode_ops) {
  const double r = static_cast<double>(p.r);
  const double sigma_enc = encode_complexity(design.dist.mean_degree() * r, r, p.n).as_sigma(p);
  const double sigma_map = map_complexity(p).as_sigma(p);
  const double sigma_red = static_cast<double>(p.N) * static_cast<double>(partitions) * decode_ops.as_sigma(p);
  return PhaseDelays{encode_delay(p, sigma_enc, std::nullopt), map_delay(p, sigma_map, g),
                     reduce_delay(p, sigma_red)};
}

} // namespace codedmm
