#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "codedmm/errors.hpp"
#include "codedmm/galois.hpp"
#include "codedmm/lt_code.hpp"
#include "codedmm/random.hpp"
#include "codedmm/runtime_model.hpp"
#include "codedmm/solvers.hpp"
#include "common.hpp"

using namespace codedmm;

namespace {

gf::Matrix dense(const std::vector<LtRow> &rows, std::int64_t m) {
  gf::Matrix a(rows.size(), static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].indices.size(); ++k) {
      a.at(i, rows[i].indices[k]) = rows[i].coefs[k];
    }
  }
  return a;
}

std::vector<std::vector<gf::Element>> encode_values(const gf::Field &f, const std::vector<LtRow> &rows,
                                                    const std::vector<std::vector<gf::Element>> &x) {
  std::vector<std::vector<gf::Element>> y;
  for (const auto &row : rows) {
    std::vector<gf::Element> v(x.front().size(), 0);
    for (std::size_t k = 0; k < row.indices.size(); ++k) {
      for (std::size_t c = 0; c < v.size(); ++c) {
        v[c] = gf::Field::add(v[c], f.mul(row.coefs[k], x[row.indices[k]][c]));
      }
    }
    y.push_back(v);
  }
  return y;
}

} // namespace

TEST_CASE("robust Soliton against a direct evaluation") {
  const std::int64_t m = 10;
  const std::int64_t M = 5;
  const double delta = 0.5;
  std::vector<long double> w(m + 1, 0.0L);
  w[1] = 1.0L / m + 1.0L / M;
  for (std::int64_t i = 2; i <= m; ++i) {
    w[static_cast<std::size_t>(i)] = 1.0L / (i * (i - 1));
    if (i < M) {
      w[static_cast<std::size_t>(i)] += 1.0L / (i * M);
    }
  }
  w[M] += std::log(static_cast<long double>(m) / (M * delta)) / M;
  long double beta = 0;
  for (auto v : w) {
    beta += v;
  }
  const auto dist = robust_soliton(m, M, delta);
  double mean = 0;
  for (std::int64_t d = 1; d <= m; ++d) {
    CHECK(dist(d) == doctest::Approx(static_cast<double>(w[static_cast<std::size_t>(d)] / beta)).epsilon(1e-12));
    mean += static_cast<double>(d) * dist(d);
  }
  CHECK(dist.mean_degree() == doctest::Approx(mean));
  CHECK(dist.spike() == M);
  CHECK(dist(0) == 0.0);
}

TEST_CASE("degree distributions are normalized") {
  CHECK(robust_soliton(1, 1, 0.5)(1) == doctest::Approx(1.0));
  for (std::int64_t m : {2, 30, 1000}) {
    for (std::int64_t M : {std::int64_t{1}, m / 2 + 1, m}) {
      for (double delta : {1e-9, 0.01, 1.0}) {
        const auto d = robust_soliton(m, M, delta);
        double s = 0;
        for (auto v : d.pmf()) {
          REQUIRE(v >= 0.0);
          s += v;
        }
        REQUIRE(std::abs(s - 1.0) < 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(robust_soliton(10, 11, 0.5), RangeError);
  CHECK_THROWS_AS(robust_soliton(10, 5, 0.0), RangeError);
}

TEST_CASE("failure bound for the ideal Soliton at m = 3") {
  // x_1 = 1/3 * 2/3 + 1/2 * 1/3 = 7/18, x_2 = 1/3 * 1/3 = 1/9, x_3 = 0;
  // bound = 3 x_1^3 - 3 x_2^3 = 1005/5832.
  const auto bound = failure_prob_bound(ideal_soliton(3), 0.0);
  CHECK(bound == doctest::Approx((Rational(1005, 5832)).to_double()).epsilon(1e-12));
}

TEST_CASE("failure bound properties") {
  std::vector<double> full(31, 0.0);
  full[30] = 1.0;
  CHECK(failure_prob_bound(DegreeDistribution(full), 1.0) <= 1e-12);

  const auto dist = robust_soliton(200, 20, 0.1);
  double prev = 1.0;
  for (double eps = 0.0; eps <= 1.0; eps += 0.02) {
    const double b = failure_prob_bound(dist, eps);
    REQUIRE(b >= 0.0);
    REQUIRE(b <= 1.0);
    REQUIRE(b <= prev + 1e-15);
    prev = b;
  }
  CHECK(symbols_for_overhead(30, 0.1) == 33);
  CHECK(symbols_for_overhead(3000, 0.3) == 3900);
}

TEST_CASE("smaller delta lowers the bound") {
  // For a spike near the mean degree (M = 5 at m = 300) the order reverses.
  for (std::int64_t M : {20, 60, 150, 300}) {
    double prev = 0;
    for (double delta : {1e-6, 1e-4, 1e-2, 0.1, 0.5, 1.0}) {
      const double b = failure_prob_bound(robust_soliton(300, M, delta), 0.3);
      CHECK(b >= prev);
      prev = b;
    }
  }
}

TEST_CASE("code design") {
  const auto d = design_code(200, 0.3, 0.1);
  CHECK(std::abs(d.bound_at_min - 0.1) <= 0.01);
  CHECK(failure_prob_bound(robust_soliton(200, d.M, d.delta), 0.3) == doctest::Approx(d.bound_at_min));
  CHECK(d.dist.spike() == d.M);

  const auto trivial = design_code(200, 0.3, 1.0);
  CHECK(trivial.M == 200);

  CHECK_THROWS_AS(design_code(200, 0.01, 1e-12), Infeasible);
}

TEST_CASE("looser targets never raise the mean degree") {
  double prev = std::numeric_limits<double>::infinity();
  // pf = 1 is the fixed M = m design and is excluded
  for (double pf : {1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.3}) {
    const auto d = design_code(300, 0.3, pf);
    CHECK(d.dist.mean_degree() <= prev + 1e-12);
    prev = d.dist.mean_degree();
  }
}

TEST_CASE("encoding") {
  const auto &f = gf::Field::get(8);
  std::vector<double> one(21, 0.0);
  one[1] = 1.0;
  Rng rng(1);
  for (const auto &row : lt_encode(rng, DegreeDistribution(one), 100, f)) {
    REQUIRE(row.indices.size() == 1);
    REQUIRE(row.coefs[0] != 0);
  }

  const auto dist = robust_soliton(40, 8, 0.2);
  Rng a(5);
  Rng b(5);
  const auto ra = lt_encode(a, dist, 50, f);
  const auto rb = lt_encode(b, dist, 50, f);
  for (std::size_t i = 0; i < ra.size(); ++i) {
    REQUIRE(ra[i].indices == rb[i].indices);
    REQUIRE(ra[i].coefs == rb[i].coefs);
  }

  Rng c(9);
  const auto rows = lt_encode(c, dist, 100000, f);
  std::vector<double> hist(41, 0.0);
  double mean = 0;
  for (const auto &row : rows) {
    REQUIRE(std::set<std::uint32_t>(row.indices.begin(), row.indices.end()).size() == row.indices.size());
    REQUIRE(std::all_of(row.coefs.begin(), row.coefs.end(), [](gf::Element e) { return e != 0; }));
    hist[row.indices.size()] += 1.0 / static_cast<double>(rows.size());
    mean += static_cast<double>(row.indices.size()) / static_cast<double>(rows.size());
  }
  double tv = 0;
  for (std::int64_t d = 1; d <= 40; ++d) {
    tv += std::abs(hist[static_cast<std::size_t>(d)] - dist(d));
  }
  CHECK(tv / 2 < 0.01);
  CHECK(mean == doctest::Approx(dist.mean_degree()).epsilon(0.01));
}

TEST_CASE("peeling identity rows") {
  const auto &f = gf::Field::get(8);
  std::vector<LtRow> rows;
  for (std::uint32_t i = 0; i < 20; ++i) {
    rows.push_back(LtRow{{i}, {static_cast<gf::Element>(i + 1)}});
  }
  const auto rep = inactivation_decode(rows, 20, f);
  CHECK(rep.success);
  CHECK(rep.inactivations == 0);
  rows.pop_back();
  CHECK_FALSE(inactivation_decode(rows, 20, f).success);
}

TEST_CASE("decoder agrees with the rank oracle and recovers the data") {
  const auto &f = gf::Field::get(8);
  const std::int64_t m = 50;
  const auto dist = design_code(m, 0.2, 0.1).dist;
  Rng rng(123);
  int successes = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto count = static_cast<std::int64_t>(m - 2 + static_cast<std::int64_t>(rng.uniform_below(25)));
    const auto rows = lt_encode(rng, dist, count, f);
    std::vector<std::vector<gf::Element>> x(m, std::vector<gf::Element>(3));
    for (auto &v : x) {
      for (auto &e : v) {
        e = static_cast<gf::Element>(rng.uniform_below(256));
      }
    }
    const auto rep = inactivation_decode(rows, m, f, encode_values(f, rows, x));
    const bool full_rank = gf::rank(f, dense(rows, m)) == static_cast<std::size_t>(m);
    REQUIRE(rep.success == full_rank);
    REQUIRE(lt_rank(rows, m, f) == static_cast<std::int64_t>(gf::rank(f, dense(rows, m))));
    if (rep.success) {
      ++successes;
      REQUIRE(rep.values == x);
      REQUIRE(rep.ops.additions >= 0);
      REQUIRE(rep.ops.multiplications >= 0);
    }
  }
  CHECK(successes > 50);
  CHECK(successes < 300);
}

TEST_CASE("g simulation") {
  // Six servers, two partitions within the lossless limit: an MDS code
  // always decodes from the first q servers.
  const auto p = fixtures::small_example();
  const auto pp = partition(p, 2);
  const auto P = heuristic_assign(pp);
  LtDesign mds;
  mds.m = pp.decode_threshold();
  Rng rng(3);
  const auto g = simulate_g_distribution(pp, mds, P, rng, 500, DecodabilityModel::mds);
  CHECK(g.g.pmf[4] == 1.0);

  // Six servers hold 33 rows of a partition and 33 < floor(24 (1 + 0.45)), so at
  // least seven are needed.
  const auto f = fixtures::reference();
  const auto fp = partition(f, 250);
  const auto design = design_code(24, 0.45, 0.1);
  Rng rng2(4);
  const auto sim = simulate_g_distribution(fp, design, heuristic_assign(fp), rng2, 500);
  CHECK(sim.g.pmf[6] == 0.0);
  CHECK(sim.g_mean() > 6.0);

  // mean g is stable across seeds
  const auto dz = design_code(24, 0.3, 0.1);
  Rng s1(10);
  Rng s2(11);
  const double g1 = simulate_g_distribution(fp, dz, heuristic_assign(fp), s1, 10000).g_mean();
  const double g2 = simulate_g_distribution(fp, dz, heuristic_assign(fp), s2, 10000).g_mean();
  CHECK(std::abs(g1 - g2) / g1 < 0.01);
}

TEST_CASE("symbols needed distribution") {
  const auto d = design_code(100, 0.3, 0.1);
  const auto pmf = symbols_needed_pmf(d, 160);
  double s = 0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    REQUIRE(pmf[k] >= 0);
    if (k < 130) {
      REQUIRE(pmf[k] == 0.0);
    }
    s += pmf[k];
  }
  CHECK(s == doctest::Approx(1.0));
  CHECK(pmf[130] == doctest::Approx(1.0 - d.bound_at_min));
}

TEST_CASE("LT scheme delay") {
  const auto p = fixtures::reference();
  const auto d = design_code(24, 0.3, 0.1);
  const Complexity ops{100, 50};
  const auto g = GDistribution::point(p.K, p.q);
  const auto delay = lt_scheme_delay(p, d, 250, g, ops);
  CHECK(delay.map == doctest::Approx(map_delay(p, map_complexity(p).as_sigma(p), g)));
  const double r = static_cast<double>(p.r);
  const double enc = encode_complexity(d.dist.mean_degree() * r, r, p.n).as_sigma(p);
  CHECK(delay.encode == doctest::Approx(encode_delay(p, enc, std::nullopt)));
  CHECK(delay.reduce == doctest::Approx(reduce_delay(p, 6000.0 * 250 * ops.as_sigma(p))));

  // identical codes per partition: any server set holds the same number of
  // rows of every partition under the all-ones assignment
  const auto pp = partition(p, 250);
  const auto P = heuristic_assign(pp);
  const auto masks = batch_masks(p.K, p.etaq);
  Rng rng(2);
  for (int k = 0; k < 100; ++k) {
    const auto G = static_cast<ServerSet>(rng.uniform_below(512));
    const auto rows = stored_rows_per_partition(P, masks, G);
    REQUIRE(std::all_of(rows.begin(), rows.end(), [&](std::int64_t v) { return v == rows.front(); }));
  }
}
