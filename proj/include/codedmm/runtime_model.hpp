#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "codedmm/random.hpp"
#include "codedmm/sysparams.hpp"

namespace codedmm {

/// Operation counts of one computation.
struct Complexity {
  double additions = 0;
  double multiplications = 0;

  double as_sigma(double sigma_a, double sigma_m) const {
    return additions * sigma_a + multiplications * sigma_m;
  }
  double as_sigma(const SystemParams &p) const { return as_sigma(p.sigma_a, p.sigma_m); }

  friend Complexity operator+(Complexity a, const Complexity &b) {
    a.additions += b.additions;
    a.multiplications += b.multiplications;
    return a;
  }
  friend Complexity operator*(double s, Complexity c) {
    c.additions *= s;
    c.multiplications *= s;
    return c;
  }
};

/// sum_{j=K-i+1}^{K} 1/j
double harmonic_tail(std::int64_t K, std::int64_t i);
/// sum_{j=K-i+1}^{K} 1/j^2
double harmonic_tail_sq(std::int64_t K, std::int64_t i);

/// Runtime of the i-th fastest of K servers. Each server's runtime is
/// shifted-exponential with shift `sigma` and tail mean `sigma`, where sigma
/// is the per-server subtask complexity. The i-th order statistic is
/// approximated by a shifted Gamma with inverse scale a and shape b.
struct OrderStatModel {
  double sigma;
  std::int64_t K;
  std::int64_t i;
  double a;
  double b;

  OrderStatModel(double sigma, std::int64_t K, std::int64_t i);
  double mean() const;
  double variance() const;
  double cdf(double h) const;
};

double order_stat_mean(double sigma, std::int64_t K, std::int64_t i);
double order_stat_variance(double sigma, std::int64_t K, std::int64_t i);
double order_stat_cdf(double h, double sigma, std::int64_t K, std::int64_t i);

/// Exact draw of the i-th smallest of K iid shifted exponentials (shift and
/// tail mean sigma), by the Renyi representation of exponential spacings.
double sample_order_stat(Rng &rng, double sigma, std::int64_t K, std::int64_t i);

/// Same with an independent tail scale beta (the alternative runtime model).
double sample_order_stat_alt(Rng &rng, double sigma, double beta, std::int64_t K, std::int64_t i);

/// Map phase over all K servers: K eta m N inner products of length n.
Complexity map_complexity(const SystemParams &p);

/// Encoding A (m x n) with a `rows` x m generator holding `nonzeros` nonzero
/// entries: every coded row of d nonzeros costs d multiplications and d-1
/// additions per column.
Complexity encode_complexity(double nonzeros, double rows, std::int64_t n);

/// Berlekamp-Massey decoding of T partitions for `vectors` output vectors,
/// evaluated at erasure fraction 1 - q/K.
Complexity reduce_complexity_bm(const SystemParams &p, std::int64_t T, std::int64_t vectors);

/// FFT-based decoding cost model for T partitions.
Complexity reduce_complexity_fft(const SystemParams &p, std::int64_t T, std::int64_t vectors);

/// The cheaper of BM and FFT in weighted time units.
Complexity reduce_complexity(const SystemParams &p, std::int64_t T, std::int64_t vectors);

/// Distribution of the number g of servers the map phase waits for.
struct GDistribution {
  std::vector<double> pmf; ///< pmf[g] for g in 0..K

  static GDistribution point(std::int64_t K, std::int64_t g);
  double mean() const;
  std::int64_t min_support() const;
};

struct PhaseDelays {
  double encode = 0;
  double map = 0;
  double reduce = 0;
  double total() const { return encode + map + reduce; }
};

/// Encoding delay per source row and vector: the cheaper of encoding directly
/// (sigma_direct) and of decoding-based encoding (sigma_via_decode), if given.
double encode_delay(const SystemParams &p, double sigma_direct,
                    std::optional<double> sigma_via_decode);

/// Map delay per source row and vector, averaged over the distribution of g.
double map_delay(const SystemParams &p, double sigma_map, const GDistribution &g);

/// Reduce delay per source row and vector: q servers, wait for all.
double reduce_delay(const SystemParams &p, double sigma_reduce);

PhaseDelays phase_delays(const SystemParams &p, double sigma_encode_direct,
                         std::optional<double> sigma_encode_via_decode, double sigma_map,
                         double sigma_reduce, const GDistribution &g);

/// CDF of the shifted exponential with shift sigma and tail scale beta.
double alt_runtime_cdf(double h, double sigma, double beta);

/// Mean i-th order statistic of K alternative-model runtimes.
double alt_order_stat_mean(double sigma, double beta, std::int64_t K, std::int64_t i);

} // namespace codedmm
