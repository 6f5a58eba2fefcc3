#include "codedmm/sysparams.hpp"

#include <cmath>
#include <string>

#include "codedmm/combinatorics.hpp"
#include "codedmm/errors.hpp"

namespace codedmm {

namespace {

[[noreturn]] void divisibility(const std::string &what) { throw DivisibilityError(what); }

void require_positive(std::int64_t v, const char *name) {
  if (v <= 0) {
    throw RangeError(std::string(name) + " must be positive, got " + std::to_string(v));
  }
}

} // namespace

int default_field_bits(std::int64_t r) {
  int l = 1;
  while (l < 62 && (std::int64_t{1} << l) < r + 1) {
    ++l;
  }
  return l;
}

std::int64_t SystemParams::batch_size_int() const {
  if (!batch_size.is_integer()) {
    throw DivisibilityError("batch size r/C(K, eta*q) = " + batch_size.str() + " is not an integer");
  }
  return batch_size.num();
}

RawParams SystemParams::raw() const {
  return RawParams{K, q, m, n, N, eta, sigma_a, sigma_m, field_bits};
}

SystemParams derive(const RawParams &raw, Validation mode) {
  require_positive(raw.K, "K");
  require_positive(raw.q, "q");
  require_positive(raw.m, "m");
  require_positive(raw.n, "n");
  require_positive(raw.N, "N");
  if (raw.q > raw.K) {
    throw RangeError("q = " + std::to_string(raw.q) + " exceeds K = " + std::to_string(raw.K));
  }
  if (raw.eta < Rational(1, raw.K) || raw.eta > Rational(1)) {
    throw RangeError("eta = " + raw.eta.str() + " outside [1/K, 1]");
  }

  SystemParams p;
  p.K = raw.K;
  p.q = raw.q;
  p.m = raw.m;
  p.n = raw.n;
  p.N = raw.N;
  p.eta = raw.eta;
  p.validation = mode;

  if ((raw.K * raw.m) % raw.q != 0) {
    divisibility("r = K*m/q is not an integer (K*m = " + std::to_string(raw.K * raw.m) +
                 ", q = " + std::to_string(raw.q) + ")");
  }
  p.r = raw.K * raw.m / raw.q;

  const Rational etaq = raw.eta * Rational(raw.q);
  if (!etaq.is_integer()) {
    divisibility("eta*q = " + etaq.str() + " is not an integer");
  }
  p.etaq = etaq.num();
  if (p.etaq < 1) {
    throw RangeError("eta*q must be at least 1");
  }
  p.batches = static_cast<std::int64_t>(binomial(static_cast<std::uint64_t>(p.K),
                                                 static_cast<std::uint64_t>(p.etaq)));
  p.batch_size = Rational(p.r, p.batches);

  if (mode == Validation::strict) {
    if (!(raw.eta * Rational(raw.m)).is_integer()) {
      divisibility("eta*m = " + (raw.eta * Rational(raw.m)).str() + " is not an integer");
    }
    if (!p.batch_size.is_integer()) {
      divisibility("r = " + std::to_string(p.r) + " is not divisible by C(K, eta*q) = " +
                   std::to_string(p.batches));
    }
    if (raw.N % raw.q != 0) {
      divisibility("N = " + std::to_string(raw.N) + " is not divisible by q = " +
                   std::to_string(raw.q));
    }
  }

  const int min_bits = default_field_bits(p.r);
  p.field_bits = raw.field_bits.value_or(min_bits);
  if (p.field_bits < min_bits || p.field_bits > 32) {
    throw RangeError("field_bits = " + std::to_string(p.field_bits) + " must lie in [" +
                     std::to_string(min_bits) + ", 32] so that 2^l >= r + 1");
  }
  const double l = p.field_bits;
  p.sigma_a = raw.sigma_a.value_or(l / 64.0);
  p.sigma_m = raw.sigma_m.value_or(l * std::log2(l));
  if (p.sigma_a < 0 || p.sigma_m < 0) {
    throw RangeError("sigma_a and sigma_m must be non-negative");
  }
  return p;
}

std::int64_t partition_limit(const SystemParams &p) { return p.batch_size_int(); }

PartitionedParams partition(const SystemParams &p, std::int64_t T) {
  require_positive(T, "T");
  if (p.m % T != 0) {
    divisibility("T = " + std::to_string(T) + " does not divide m = " + std::to_string(p.m));
  }
  if (p.r % T != 0) {
    divisibility("T = " + std::to_string(T) + " does not divide r = " + std::to_string(p.r));
  }
  return PartitionedParams{p, T};
}

RawParams raw_params_from_json(const nlohmann::json &j) {
  const auto field = [&](const char *name) -> const nlohmann::json & {
    if (!j.contains(name)) {
      throw ConfigError(std::string("params.") + name, "missing");
    }
    return j.at(name);
  };
  const auto integer = [&](const char *name, std::int64_t fallback, bool required) {
    if (!j.contains(name)) {
      if (required) {
        throw ConfigError(std::string("params.") + name, "missing");
      }
      return fallback;
    }
    const auto &v = j.at(name);
    if (!v.is_number_integer()) {
      throw ConfigError(std::string("params.") + name, "must be an integer");
    }
    return v.get<std::int64_t>();
  };

  RawParams raw;
  raw.K = integer("K", 0, true);
  raw.q = integer("q", 0, true);
  raw.m = integer("m", 0, true);
  raw.n = integer("n", 1, false);
  raw.N = integer("N", 1, false);
  const auto &eta = field("eta");
  try {
    if (eta.is_string()) {
      raw.eta = Rational::parse(eta.get<std::string>());
    } else if (eta.is_number_integer()) {
      raw.eta = Rational(eta.get<std::int64_t>());
    } else {
      throw ConfigError("params.eta", "must be a string such as \"1/3\" or an integer");
    }
  } catch (const RangeError &e) {
    throw ConfigError("params.eta", e.what());
  }
  if (j.contains("sigma_a")) {
    raw.sigma_a = j.at("sigma_a").get<double>();
  }
  if (j.contains("sigma_m")) {
    raw.sigma_m = j.at("sigma_m").get<double>();
  }
  if (j.contains("field_bits")) {
    raw.field_bits = j.at("field_bits").get<int>();
  }
  return raw;
}

nlohmann::json to_json(const SystemParams &p) {
  return nlohmann::json{{"K", p.K},
                        {"q", p.q},
                        {"m", p.m},
                        {"n", p.n},
                        {"N", p.N},
                        {"eta", p.eta.str()},
                        {"sigma_a", p.sigma_a},
                        {"sigma_m", p.sigma_m},
                        {"field_bits", p.field_bits},
                        {"r", p.r},
                        {"batches", p.batches},
                        {"batch_size", p.batch_size.str()}};
}

} // namespace codedmm
