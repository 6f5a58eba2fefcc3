#pragma once

#include <cstdint>
#include <optional>

#include <json.hpp>

#include "codedmm/rational.hpp"

namespace codedmm {

/// Unvalidated inputs to derive().
struct RawParams {
  std::int64_t K = 0;
  std::int64_t q = 0;
  std::int64_t m = 0;
  std::int64_t n = 1;
  std::int64_t N = 1;
  Rational eta{1};
  std::optional<double> sigma_a;
  std::optional<double> sigma_m;
  std::optional<int> field_bits;
};

/// How strictly derive() enforces the storage-layout divisibility rules.
///
/// Baseline schemes (uncoded, CMR, SC) run with parameters that need not admit
/// an integral batch layout; `relaxed` skips the batch-size, eta*m and N/q
/// checks but keeps r, eta*q and the ranges integral.
enum class Validation { strict, relaxed };

struct SystemParams {
  std::int64_t K = 0;
  std::int64_t q = 0;
  std::int64_t m = 0;
  std::int64_t n = 0;
  std::int64_t N = 0;
  Rational eta{1};
  double sigma_a = 0;
  double sigma_m = 0;
  int field_bits = 1;

  std::int64_t r = 0;          ///< coded rows, K*m/q
  std::int64_t etaq = 0;       ///< servers per batch
  std::int64_t batches = 0;    ///< C(K, etaq)
  Rational batch_size{0};      ///< r / batches, integral under strict validation
  Validation validation = Validation::strict;

  std::int64_t batch_size_int() const;
  RawParams raw() const;

  friend bool operator==(const SystemParams &, const SystemParams &) = default;
};

/// Validates `raw` and fills in the derived quantities.
SystemParams derive(const RawParams &raw, Validation mode = Validation::strict);

/// Largest partition count for which lossless assignments exist: r / C(K, etaq).
std::int64_t partition_limit(const SystemParams &p);

/// Smallest l with 2^l >= r + 1.
int default_field_bits(std::int64_t r);

struct PartitionedParams {
  SystemParams base;
  std::int64_t T = 1;

  std::int64_t rows_per_partition() const { return base.r / T; }
  std::int64_t decode_threshold() const { return base.m / T; }
};

/// Checks that T divides both m and r.
PartitionedParams partition(const SystemParams &p, std::int64_t T);

/// Reads {"K":..,"q":..,"m":..,"n":..,"N":..,"eta":"1/3", "sigma_a":..,
/// "sigma_m":.., "field_bits":..}. eta may be a string or a number.
RawParams raw_params_from_json(const nlohmann::json &j);
nlohmann::json to_json(const SystemParams &p);

} // namespace codedmm
