#include <doctest.h>

#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "codedmm/combinatorics.hpp"
#include "codedmm/errors.hpp"
#include "codedmm/random.hpp"
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

std::vector<std::int64_t> common_divisors(std::int64_t a, std::int64_t b) {
  std::vector<std::int64_t> out;
  const std::int64_t g = std::gcd(a, b);
  for (std::int64_t d = 1; d <= g; ++d) {
    if (g % d == 0) {
      out.push_back(d);
    }
  }
  return out;
}

// Random valid parameters: m = q C(K, etaq) k makes every divisibility hold.
PartitionedParams random_instance(Rng &rng, bool within_limit) {
  const auto K = static_cast<std::int64_t>(2 + rng.uniform_below(6));
  const auto q = static_cast<std::int64_t>(1 + rng.uniform_below(static_cast<std::uint64_t>(K)));
  const auto etaq = static_cast<std::int64_t>(1 + rng.uniform_below(static_cast<std::uint64_t>(q)));
  const auto C = oracle::choose(K, etaq);
  const auto k = static_cast<std::int64_t>(1 + rng.uniform_below(3));
  const auto p = derive(fixtures::raw(K, q, q * C * k, 1, q, Rational(etaq, q)));
  auto ts = common_divisors(p.m, p.r);
  if (within_limit) {
    std::erase_if(ts, [&](std::int64_t t) { return t > partition_limit(p); });
  }
  const auto T = ts[rng.uniform_below(ts.size())];
  return partition(p, T);
}

} // namespace

TEST_CASE("batch labels are lexicographic") {
  const auto l3 = batch_labels(3, 2);
  REQUIRE(l3.size() == 3);
  CHECK(l3[0].str() == "1-2");
  CHECK(l3[1].str() == "1-3");
  CHECK(l3[2].str() == "2-3");

  const auto l6 = batch_labels(6, 2);
  REQUIRE(l6.size() == 15);
  CHECK(l6[0].str() == "1-2");
  CHECK(l6[3].str() == "1-5");
  for (std::size_t i = 0; i < l6.size(); ++i) {
    CHECK(l6[i].index == i);
  }
  CHECK(batch_labels(9, 3).size() == binomial(9, 3));
  const auto masks = oracle::lex_batches(7, 3);
  const auto labels = batch_labels(7, 3);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    CHECK(labels[i].mask == masks[i]);
  }
}

TEST_CASE("six-server example assignment") {
  const auto p = fixtures::small_example();
  const auto pp = partition(p, 5);
  const auto P = small_example_P();
  CHECK(satisfies_sum_constraints(P, pp));
  const auto masks = batch_masks(p.K, p.etaq);
  for (auto v : stored_rows_per_partition(P, masks, first_servers(4))) {
    CHECK(v >= 4);
  }
  for (auto v : stored_rows_per_partition(P, masks, 0)) {
    CHECK(v == 0);
  }
  for (auto v : stored_rows_per_partition(P, masks, full_set(6))) {
    CHECK(v == 6);
  }
}

TEST_CASE("lossless construction") {
  const auto p = fixtures::small_example();
  const auto ones = theorem1_assignment(partition(p, 2));
  CHECK(ones == AssignmentMatrix(15, 2, 1));
  CHECK(theorem1_assignment(partition(p, 1)) == AssignmentMatrix(15, 1, 2));
  CHECK_THROWS_AS(theorem1_assignment(partition(p, 5)), PartitionLimitExceeded);

  const auto f = fixtures::reference();
  CHECK(theorem1_assignment(partition(f, 250)) == AssignmentMatrix(36, 250, 1));
  for (std::int64_t T : {1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 24, 25, 30, 40, 50, 60, 75, 100, 120,
                         125, 150, 200, 250}) {
    const auto pp = partition(f, T);
    const auto P = theorem1_assignment(pp);
    REQUIRE(satisfies_sum_constraints(P, pp));
    REQUIRE(oracle::every_subset_decodes(pp, P, 6));
  }
}

TEST_CASE("every server stores eta m rows under the lossless construction") {
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const auto pp = random_instance(rng, true);
    const auto P = theorem1_assignment(pp);
    const auto &p = pp.base;
    const auto masks = oracle::lex_batches(static_cast<int>(p.K), static_cast<int>(p.etaq));
    const std::int64_t expect = (p.eta * Rational(p.m)).num();
    for (int s = 0; s < p.K; ++s) {
      std::int64_t rows = 0;
      for (std::size_t b = 0; b < masks.size(); ++b) {
        if ((masks[b] >> s) & 1U) {
          rows += P.row_sum(static_cast<std::int64_t>(b));
        }
      }
      REQUIRE(rows == expect);
    }
    if (binomial(static_cast<std::uint64_t>(p.K), static_cast<std::uint64_t>(p.q)) <= 10000) {
      REQUIRE(oracle::every_subset_decodes(pp, P, static_cast<int>(p.q)));
      REQUIRE(all_subsets_decode(P, pp, p.q));
    }
  }
}

TEST_CASE("constructors satisfy the sum constraints on random instances") {
  Rng rng(2024);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto pp = random_instance(rng, false);
    REQUIRE(satisfies_sum_constraints(random_assignment(rng, pp), pp));
    REQUIRE(satisfies_sum_constraints(heuristic_assign(pp), pp));
    if (pp.T <= partition_limit(pp.base)) {
      REQUIRE(satisfies_sum_constraints(theorem1_assignment(pp), pp));
    }
  }
}

TEST_CASE("random assignment") {
  const auto p = fixtures::small_example();
  Rng seed1(1);
  const auto one = random_assignment(seed1, partition(p, 1));
  CHECK(one == AssignmentMatrix(15, 1, 2));

  Rng a(99);
  Rng b(99);
  const auto pp = partition(p, 5);
  CHECK(random_assignment(a, pp) == random_assignment(b, pp));

  // Each cell's mean over many draws is bs / T.
  Rng rng(7);
  std::vector<double> mean(15 * 5, 0);
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const auto P = random_assignment(rng, pp);
    for (std::int64_t i = 0; i < 15; ++i) {
      for (std::int64_t t = 0; t < 5; ++t) {
        mean[static_cast<std::size_t>(i * 5 + t)] += static_cast<double>(P.at(i, t)) / n;
      }
    }
  }
  for (double v : mean) {
    CHECK(v == doctest::Approx(0.4).epsilon(0.05));
  }
}

TEST_CASE("sum constraint violations") {
  const auto p = fixtures::small_example();
  const auto pp = partition(p, 2);
  auto P = AssignmentMatrix(15, 2, 1);
  ++P.at(0, 0);
  CHECK_FALSE(satisfies_sum_constraints(P, pp));
  CHECK_THROWS_AS(check_sum_constraints(P, pp), RangeError);
  --P.at(0, 1);
  CHECK_FALSE(satisfies_sum_constraints(P, pp)); // column sums are now 16 and 14
  CHECK_FALSE(satisfies_sum_constraints(AssignmentMatrix(15, 3, 1), pp));
}

TEST_CASE("assignment CSV round trip") {
  const auto p = fixtures::small_example();
  Rng rng(3);
  const auto P = random_assignment(rng, partition(p, 5));
  std::stringstream ss;
  write_assignment_csv(ss, P, p);
  CHECK(ss.str().rfind("batch,servers,1,2,3,4,5\n1,1-2,", 0) == 0);
  std::stringstream with_header("# comment\n\n" + ss.str());
  CHECK(read_assignment_csv(with_header) == P);

  std::stringstream bad("batch,servers,1,2\n1,1-2,1\n");
  CHECK_THROWS_AS(read_assignment_csv(bad), RangeError);
  std::stringstream empty;
  CHECK_THROWS_AS(read_assignment_csv(empty), RangeError);
}

TEST_CASE("decodable fraction") {
  const auto p = fixtures::small_example();
  const auto pp = partition(p, 5);
  const auto P = small_example_P();
  const double frac = decodable_fraction(P, pp, 4);
  // brute force over all 4-subsets
  int good = 0;
  const auto qs = oracle::masks_of_size(6, 4);
  const auto masks = batch_masks(6, 2);
  for (auto Q : qs) {
    bool ok = true;
    for (auto v : stored_rows_per_partition(P, masks, Q)) {
      ok = ok && v >= 4;
    }
    good += ok ? 1 : 0;
  }
  CHECK(frac == doctest::Approx(static_cast<double>(good) / static_cast<double>(qs.size())));
  CHECK(decodable_fraction(P, pp, 6) == 1.0);
}
