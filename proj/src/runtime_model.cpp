#include "codedmm/runtime_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "codedmm/errors.hpp"

namespace codedmm {

namespace {

void check_order(std::int64_t K, std::int64_t i) {
  if (K < 1 || i < 1 || i > K) {
    throw RangeError("order statistic index i = " + std::to_string(i) + " outside [1, K = " +
                     std::to_string(K) + "]");
  }
}

} // namespace

double harmonic_tail(std::int64_t K, std::int64_t i) {
  check_order(K, i);
  double s = 0;
  for (std::int64_t j = K; j >= K - i + 1; --j) {
    s += 1.0 / static_cast<double>(j);
  }
  return s;
}

double harmonic_tail_sq(std::int64_t K, std::int64_t i) {
  check_order(K, i);
  double s = 0;
  for (std::int64_t j = K; j >= K - i + 1; --j) {
    const double d = static_cast<double>(j);
    s += 1.0 / (d * d);
  }
  return s;
}

OrderStatModel::OrderStatModel(double sigma_, std::int64_t K_, std::int64_t i_)
    : sigma(sigma_), K(K_), i(i_) {
  if (sigma < 0) {
    throw RangeError("sigma must be non-negative");
  }
  const double h1 = harmonic_tail(K, i);
  const double h2 = harmonic_tail_sq(K, i);
  // (E - sigma) / Var and (E - sigma)^2 / Var; a scales as 1/sigma, b does not.
  a = sigma > 0 ? h1 / (sigma * h2) : std::numeric_limits<double>::infinity();
  b = h1 * h1 / h2;
}

double OrderStatModel::mean() const { return sigma * (1.0 + harmonic_tail(K, i)); }

double OrderStatModel::variance() const { return sigma * sigma * harmonic_tail_sq(K, i); }

double OrderStatModel::cdf(double h) const {
  if (h < sigma) {
    return 0.0;
  }
  if (sigma == 0) {
    return 1.0;
  }
  const double x = a * (h - sigma);
  if (!std::isfinite(x)) {
    return 1.0;
  }
  return boost::math::gamma_p(b, x);
}

double order_stat_mean(double sigma, std::int64_t K, std::int64_t i) {
  return OrderStatModel(sigma, K, i).mean();
}

double order_stat_variance(double sigma, std::int64_t K, std::int64_t i) {
  return OrderStatModel(sigma, K, i).variance();
}

double order_stat_cdf(double h, double sigma, std::int64_t K, std::int64_t i) {
  return OrderStatModel(sigma, K, i).cdf(h);
}

double sample_order_stat(Rng &rng, double sigma, std::int64_t K, std::int64_t i) {
  return sample_order_stat_alt(rng, sigma, sigma, K, i);
}

double sample_order_stat_alt(Rng &rng, double sigma, double beta, std::int64_t K, std::int64_t i) {
  check_order(K, i);
  // The j-th spacing of K exponentials is Exp(beta / (K - j + 1)).
  double tail = 0;
  for (std::int64_t j = 1; j <= i; ++j) {
    tail += rng.exponential(1.0) / static_cast<double>(K - j + 1);
  }
  return sigma + beta * tail;
}

Complexity map_complexity(const SystemParams &p) {
  const double products =
      (Rational(p.K) * p.eta * Rational(p.m)).to_double() * static_cast<double>(p.N);
  return Complexity{products * static_cast<double>(p.n - 1), products * static_cast<double>(p.n)};
}

Complexity encode_complexity(double nonzeros, double rows, std::int64_t n) {
  const double dn = static_cast<double>(n);
  return Complexity{std::max(nonzeros - rows, 0.0) * dn, nonzeros * dn};
}

Complexity reduce_complexity_bm(const SystemParams &p, std::int64_t T, std::int64_t vectors) {
  const double r = static_cast<double>(p.r);
  const double xi = 1.0 - static_cast<double>(p.q) / static_cast<double>(p.K);
  const double nv = static_cast<double>(vectors);
  const double quad = r * r * xi / static_cast<double>(T);
  return Complexity{nv * std::max(quad - r, 0.0), nv * quad};
}

Complexity reduce_complexity_fft(const SystemParams &p, std::int64_t T, std::int64_t vectors) {
  const double len = static_cast<double>(p.r) / static_cast<double>(T);
  const double scale = static_cast<double>(vectors) * static_cast<double>(T);
  const double adds = 2.0 + 8.5 * len * std::log2(0.867 * len);
  const double muls = 2.0 + len * std::log2(4.0 * len);
  return Complexity{scale * std::max(adds, 0.0), scale * std::max(muls, 0.0)};
}

Complexity reduce_complexity(const SystemParams &p, std::int64_t T, std::int64_t vectors) {
  const Complexity bm = reduce_complexity_bm(p, T, vectors);
  const Complexity fft = reduce_complexity_fft(p, T, vectors);
  return bm.as_sigma(p) <= fft.as_sigma(p) ? bm : fft;
}

GDistribution GDistribution::point(std::int64_t K, std::int64_t g) {
  check_order(K, g);
  GDistribution d;
  d.pmf.assign(static_cast<std::size_t>(K + 1), 0.0);
  d.pmf[static_cast<std::size_t>(g)] = 1.0;
  return d;
}

double GDistribution::mean() const {
  double s = 0;
  for (std::size_t g = 0; g < pmf.size(); ++g) {
    s += static_cast<double>(g) * pmf[g];
  }
  return s;
}

std::int64_t GDistribution::min_support() const {
  for (std::size_t g = 0; g < pmf.size(); ++g) {
    if (pmf[g] > 0) {
      return static_cast<std::int64_t>(g);
    }
  }
  return 0;
}

double encode_delay(const SystemParams &p, double sigma_direct,
                    std::optional<double> sigma_via_decode) {
  if (sigma_direct <= 0) {
    return 0.0;
  }
  const double mn = static_cast<double>(p.m) * static_cast<double>(p.N);
  const double K = static_cast<double>(p.K);
  double best = static_cast<double>(p.etaq) / mn * order_stat_mean(sigma_direct / K, p.K, p.K);
  if (sigma_via_decode) {
    best = std::min(best, K / mn * order_stat_mean(*sigma_via_decode / K, p.K, p.K));
  }
  return best;
}

double map_delay(const SystemParams &p, double sigma_map, const GDistribution &g) {
  const double mn = static_cast<double>(p.m) * static_cast<double>(p.N);
  const double per_server = sigma_map / static_cast<double>(p.K);
  double d = 0;
  for (std::size_t k = 1; k < g.pmf.size(); ++k) {
    if (g.pmf[k] > 0) {
      d += g.pmf[k] * order_stat_mean(per_server, p.K, static_cast<std::int64_t>(k));
    }
  }
  return d / mn;
}

double reduce_delay(const SystemParams &p, double sigma_reduce) {
  const double mn = static_cast<double>(p.m) * static_cast<double>(p.N);
  return order_stat_mean(sigma_reduce / static_cast<double>(p.q), p.q, p.q) / mn;
}

PhaseDelays phase_delays(const SystemParams &p, double sigma_encode_direct,
                         std::optional<double> sigma_encode_via_decode, double sigma_map,
                         double sigma_reduce, const GDistribution &g) {
  if (g.min_support() < p.q) {
    throw RangeError("g must be at least q");
  }
  return PhaseDelays{encode_delay(p, sigma_encode_direct, sigma_encode_via_decode),
                     map_delay(p, sigma_map, g), reduce_delay(p, sigma_reduce)};
}

double alt_runtime_cdf(double h, double sigma, double beta) {
  if (h < sigma) {
    return 0.0;
  }
  if (beta <= 0) {
    return 1.0;
  }
  return -std::expm1(-(h - sigma) / beta);
}

double alt_order_stat_mean(double sigma, double beta, std::int64_t K, std::int64_t i) {
  return sigma + beta * harmonic_tail(K, i);
}

} // namespace codedmm
