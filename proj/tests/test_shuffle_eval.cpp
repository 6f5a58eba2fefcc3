#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <vector>

#include "codedmm/combinatorics.hpp"
#include "codedmm/errors.hpp"
#include "codedmm/random.hpp"
#include "codedmm/shuffle_eval.hpp"
#include "codedmm/solvers.hpp"
#include "codedmm/storage_assign.hpp"
#include "common.hpp"
#include "oracles.hpp"

using namespace codedmm;

namespace {

AssignmentMatrix small_example_P() {
  std::ifstream f(CODEDMM_FIXTURES "/small_example_P.csv");
  REQUIRE(f.good());
  return read_assignment_csv(f);
}

std::vector<SystemParams> small_params() {
  std::vector<SystemParams> out;
  for (std::int64_t K = 2; K <= 7; ++K) {
    for (std::int64_t q = 1; q <= K; ++q) {
      for (std::int64_t etaq = 1; etaq <= q; ++etaq) {
        const auto C = oracle::choose(K, etaq);
        out.push_back(derive(fixtures::raw(K, q, q * C, 1, q, Rational(etaq, q))));
      }
    }
  }
  return out;
}

std::vector<std::int64_t> divisors_of_both(std::int64_t a, std::int64_t b) {
  std::vector<std::int64_t> out;
  const auto g = std::gcd(a, b);
  for (std::int64_t d = 1; d <= g; ++d) {
    if (g % d == 0) {
      out.push_back(d);
    }
  }
  return out;
}

} // namespace

TEST_CASE("multicast profile of the six-server example") {
  const auto prof = multicast_profile(fixtures::small_example());
  REQUIRE(prof.alpha.size() == 3);
  CHECK(prof.alpha[1] == Rational(3, 5));
  CHECK(prof.alpha[2] == Rational(3, 10));
  CHECK(prof.s_q == 2);
  CHECK(prof.last_round(Strategy::first) == 2);
  CHECK(prof.last_round(Strategy::second) == 1);
}

TEST_CASE("multicast profile matches the closed form") {
  for (const auto &p : small_params()) {
    const auto prof = multicast_profile(p);
    for (std::int64_t j = 1; j <= p.etaq; ++j) {
      REQUIRE(prof.alpha[static_cast<std::size_t>(j)] == oracle::alpha(p, j));
    }
    REQUIRE(prof.s_q == oracle::s_q(p));
  }
}

TEST_CASE("m alpha_j counts the values delivered by multicasts to j-subsets") {
  for (const auto &p : small_params()) {
    const auto pp = partition(p, 1);
    const AssignmentMatrix P(p.batches, 1, p.batch_size_int());
    const auto prof = multicast_profile(p);
    const ServerSet Q = first_servers(p.q);
    for (std::int64_t j = 1; j <= p.etaq; ++j) {
      // rows reached with rounds down to j minus those reached down to j + 1
      const auto with = oracle::known_rows(pp, P, Q, 0, j)[0];
      const auto without = oracle::known_rows(pp, P, Q, 0, j + 1)[0];
      REQUIRE(Rational(with - without) == prof.alpha[static_cast<std::size_t>(j)] * Rational(p.m));
    }
  }
}

TEST_CASE("every server storing everything") {
  const auto p = derive(fixtures::raw(3, 3, 3, 1, 3, Rational(1)));
  const auto prof = multicast_profile(p);
  CHECK(prof.s_q == 1);
  CHECK(load_mds(p) == Rational(0));
  CHECK(multicast_row_indices(p, first_servers(3), 0, prof.s_q).size() ==
        static_cast<std::size_t>(p.batches));
  // eta = 1 with K > q: nothing is left to unicast either
  const auto wide = derive(fixtures::raw(4, 2, 6, 1, 2, Rational(1)));
  CHECK(load_mds(wide) == oracle::load_mds(wide));
  CHECK(load_mds(wide) == Rational(0));
}

TEST_CASE("unpartitioned load") {
  const auto p = fixtures::small_example();
  CHECK(load_mds(p) == Rational(7, 20));
  for (const auto &s : small_params()) {
    REQUIRE(load_mds(s) == oracle::load_mds(s));
    // without multicast gain the load is the plain unicast load
    REQUIRE(load_mds(s, phi_unit()) == Rational(1) - s.eta);
  }
}

TEST_CASE("multicast row indices of the six-server example") {
  const auto p = fixtures::small_example();
  const auto rows = multicast_row_indices(p, first_servers(4), 0, 2);
  CHECK(rows == std::vector<std::int64_t>{0, 1, 2, 3, 4, 5, 6, 9});
  // own batches are always present
  for (int S = 0; S < 4; ++S) {
    const auto r = multicast_row_indices(p, first_servers(4), S, 2);
    for (const auto &l : batch_labels(6, 2)) {
      if ((l.mask >> S) & 1U) {
        CHECK(std::find(r.begin(), r.end(), static_cast<std::int64_t>(l.index)) != r.end());
      }
    }
  }
}

TEST_CASE("residual unicasts of the six-server example") {
  const auto p = fixtures::small_example();
  const auto pp = partition(p, 5);
  const auto P = small_example_P();
  const auto prof = multicast_profile(p);
  const auto Q = first_servers(4);
  const auto u = u_vector(P, multicast_row_indices(p, Q, 0, 2));
  CHECK(u == std::vector<std::int64_t>{6, 6, 2, 2, 0});
  CHECK(residual_from_u(u, 4) == 8);
  CHECK(residual_unicasts(pp, P, Q, 0, Strategy::first, prof) == 8);
  CHECK(unicast_messages(pp, P, Q, Strategy::first, prof) == 30);
  CHECK(multicast_messages(p, Strategy::first, prof) == Rational(12));
  CHECK(load_for_q(pp, P, Q, Strategy::first, prof) == Rational(21, 40));
  CHECK(oracle::load_for_q(pp, P, Q, 2) == Rational(21, 40));
  CHECK(residual_from_u({5, 4, 9}, 4) == 0);
}

TEST_CASE("all-ones assignment leaves the unpartitioned remainder") {
  const auto p = fixtures::small_example();
  const auto pp = partition(p, 2);
  const AssignmentMatrix P(15, 2, 1);
  const auto rows = multicast_row_indices(p, first_servers(4), 0, 2);
  const auto l = static_cast<std::int64_t>(rows.size());
  CHECK(residual_from_u(u_vector(P, rows), pp.decode_threshold()) == std::max<std::int64_t>(p.m - 2 * l, 0));
}

TEST_CASE("BDC load equals the explicit message count") {
  Rng rng(31);
  for (const auto &p : small_params()) {
    if (binomial(static_cast<std::uint64_t>(p.K), static_cast<std::uint64_t>(p.q)) > 50) {
      continue;
    }
    for (auto T : divisors_of_both(p.m, p.r)) {
      const auto pp = partition(p, T);
      for (int k = 0; k < 3; ++k) {
        const auto P = random_assignment(rng, pp);
        const auto got = load_bdc(pp, P);
        REQUIRE(got.exact.has_value());
        REQUIRE(*got.exact == oracle::best_load(pp, P));
        REQUIRE(*got.exact >= load_mds(p));
        for (int st : {1, 2}) {
          const auto want = oracle::strategy_load(pp, P, st);
          if (want) {
            REQUIRE(strategy_load(pp, P, st == 1 ? Strategy::first : Strategy::second) == *want);
          }
        }
      }
    }
  }
}

TEST_CASE("strategy 2 never needs more unicasts than strategy 1") {
  Rng rng(8);
  for (const auto &p : small_params()) {
    const auto prof = multicast_profile(p);
    if (!prof.last_round(Strategy::second)) {
      continue;
    }
    for (auto T : divisors_of_both(p.m, p.r)) {
      const auto pp = partition(p, T);
      const auto P = random_assignment(rng, pp);
      auto c = first_combination(static_cast<std::uint32_t>(p.q));
      do {
        ServerSet Q = 0;
        for (auto v : c) {
          Q |= ServerSet{1} << v;
        }
        for (auto v : c) {
          REQUIRE(residual_unicasts(pp, P, Q, static_cast<int>(v), Strategy::second, prof) <=
                  residual_unicasts(pp, P, Q, static_cast<int>(v), Strategy::first, prof));
        }
      } while (next_combination(c, static_cast<std::uint32_t>(p.K)));
    }
  }
}

TEST_CASE("unpartitioned and lossless partitioned loads coincide") {
  for (const auto &p : {fixtures::small_example(), fixtures::reference()}) {
    const auto one = partition(p, 1);
    const AssignmentMatrix col(p.batches, 1, p.batch_size_int());
    CHECK(*load_bdc(one, col).exact == load_mds(p));
    for (std::int64_t T = 1; T <= partition_limit(p); ++T) {
      if (p.m % T != 0 || p.r % T != 0) {
        continue;
      }
      const auto pp = partition(p, T);
      CHECK(*load_bdc(pp, theorem1_assignment(pp)).exact == load_mds(p));
    }
  }
}

TEST_CASE("exhaustive evaluation touches q C(K,q) u-vectors per strategy") {
  const auto p = fixtures::reference();
  const auto pp = partition(p, 1000);
  const auto res = load_bdc(pp, heuristic_assign(pp));
  const auto prof = multicast_profile(p);
  const std::uint64_t strategies = prof.last_round(Strategy::second) ? 2 : 1;
  CHECK(res.u_vectors == strategies * 6 * 84);
  CHECK(res.per_strategy.size() == strategies);
}

TEST_CASE("sampled load converges to the exhaustive load") {
  const auto p = fixtures::reference();
  const auto pp = partition(p, 3000);
  const auto P = heuristic_assign(pp);
  const double exact = load_bdc(pp, P).value;
  LoadOptions opt;
  opt.samples = 10000;
  opt.seed = 5;
  const double sampled = load_bdc(pp, P, opt).value;
  CHECK(std::abs(sampled - exact) / exact < 0.01);
  CHECK_FALSE(load_bdc(pp, P, opt).exact.has_value());
}

TEST_CASE("exhaustive load evaluation respects the subset budget") {
  const auto p = fixtures::reference();
  const auto pp = partition(p, 1);
  LoadOptions opt;
  opt.subset_budget = 83;
  CHECK_THROWS_AS(load_bdc(pp, heuristic_assign(pp), opt), BudgetExceeded);
}

TEST_CASE("LT load") {
  for (const auto &p : small_params()) {
    REQUIRE(load_lt(p, 0, 0) == doctest::Approx(load_mds(p).to_double()));
  }
  const auto p = fixtures::reference();
  for (double eps_min : {0.0, 0.1, 0.3}) {
    double prev = 0;
    for (double eps = eps_min; eps < eps_min + 1.0; eps += 0.01) {
      const double l = load_lt(p, eps, eps_min);
      REQUIRE(l >= prev - 1e-12);
      prev = l;
    }
  }
  CHECK_THROWS_AS(load_lt(p, 0.1, 0.2), RangeError);
}
