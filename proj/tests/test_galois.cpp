#include <doctest.h>

#include <cstdint>
#include <vector>

#include "codedmm/combinatorics.hpp"
#include "codedmm/errors.hpp"
#include "codedmm/galois.hpp"
#include "codedmm/random.hpp"

using namespace codedmm;
using namespace codedmm::gf;

namespace {

// Shift-and-add multiplication, reducing by the field polynomial.
Element slow_mul(Element a, Element b, std::uint64_t poly, int bits) {
  std::uint64_t x = a;
  std::uint64_t r = 0;
  while (b != 0) {
    if (b & 1U) {
      r ^= x;
    }
    b >>= 1;
    x <<= 1;
    if ((x >> bits) & 1U) {
      x ^= poly;
    }
  }
  return static_cast<Element>(r);
}

Matrix random_matrix(Rng &rng, const Field &f, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      m.at(i, j) = static_cast<Element>(rng.uniform_below(f.size()));
    }
  }
  return m;
}

} // namespace

TEST_CASE("multiplication identities") {
  for (int bits : {1, 4, 8, 14, 20}) {
    const auto &f = Field::get(bits);
    Rng rng(static_cast<std::uint64_t>(bits));
    for (int k = 0; k < 200; ++k) {
      const auto a = static_cast<Element>(rng.uniform_below(f.size()));
      CHECK(f.mul(a, 1) == a);
      CHECK(f.mul(a, 0) == 0);
    }
  }
}

TEST_CASE("reference product in GF(2^8)") {
  const auto &f = Field::get(8);
  CHECK(f.polynomial() == 0x11D);
  CHECK(f.mul(0x53, 0xCA) == 0x8F);
  CHECK(slow_mul(0x53, 0xCA, 0x11D, 8) == 0x8F);
}

TEST_CASE("table multiplication agrees with shift-and-add") {
  for (int bits : {2, 5, 8, 12, 16, 17, 24, 32}) {
    const auto &f = Field::get(bits);
    Rng rng(100 + static_cast<std::uint64_t>(bits));
    for (int k = 0; k < 2000; ++k) {
      const auto a = static_cast<Element>(rng.uniform_below(f.size()));
      const auto b = static_cast<Element>(rng.uniform_below(f.size()));
      REQUIRE(f.mul(a, b) == slow_mul(a, b, f.polynomial(), bits));
    }
  }
}

TEST_CASE("field axioms hold exhaustively for l = 4") {
  const auto &f = Field::get(4);
  const Element n = 16;
  for (Element a = 0; a < n; ++a) {
    if (a != 0) {
      REQUIRE(f.mul(a, f.inv(a)) == 1);
    }
    for (Element b = 0; b < n; ++b) {
      REQUIRE(f.mul(a, b) == f.mul(b, a));
      for (Element c = 0; c < n; ++c) {
        REQUIRE(f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c)));
        REQUIRE(f.mul(a, Field::add(b, c)) == Field::add(f.mul(a, b), f.mul(a, c)));
      }
    }
  }
}

TEST_CASE("randomized field axioms for larger l") {
  for (int bits : {16, 20, 31}) {
    const auto &f = Field::get(bits);
    Rng rng(7 * static_cast<std::uint64_t>(bits));
    for (int k = 0; k < 5000; ++k) {
      const auto a = static_cast<Element>(1 + rng.uniform_below(f.size() - 1));
      const auto b = static_cast<Element>(rng.uniform_below(f.size()));
      const auto c = static_cast<Element>(rng.uniform_below(f.size()));
      REQUIRE(f.mul(a, f.inv(a)) == 1);
      REQUIRE(f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c)));
      REQUIRE(f.mul(a, Field::add(b, c)) == Field::add(f.mul(a, b), f.mul(a, c)));
    }
  }
}

TEST_CASE("inverse of zero is an error") { CHECK_THROWS_AS(Field::get(8).inv(0), RangeError); }

TEST_CASE("the generator has full multiplicative order") {
  for (int bits : {3, 8, 10}) {
    const auto &f = Field::get(bits);
    const std::uint64_t order = f.size() - 1;
    Element x = 1;
    for (std::uint64_t k = 1; k < order; ++k) {
      x = f.mul(x, f.generator());
      REQUIRE(x != 1);
    }
    CHECK(f.mul(x, f.generator()) == 1);
  }
}

TEST_CASE("solve with the identity returns the right-hand side") {
  const auto &f = Field::get(8);
  Rng rng(3);
  const auto b = random_matrix(rng, f, 4, 3);
  CHECK(solve(f, Matrix::identity(4), b) == b);
}

TEST_CASE("1x1 solve uses the field inverse") {
  const auto &f = Field::get(8);
  Matrix a(1, 1);
  Matrix b(1, 1);
  a.at(0, 0) = 0x37;
  b.at(0, 0) = 0xA1;
  const auto x = solve(f, a, b);
  CHECK(f.mul(x.at(0, 0), 0x37) == 0xA1);
}

TEST_CASE("random nonsingular systems round-trip") {
  const auto &f = Field::get(8);
  Rng rng(11);
  int solved = 0;
  for (int k = 0; k < 50; ++k) {
    const auto a = random_matrix(rng, f, 5, 5);
    const auto b = random_matrix(rng, f, 5, 2);
    if (rank(f, a) < 5) {
      CHECK_THROWS_AS(solve(f, a, b), SingularMatrix);
      continue;
    }
    CHECK(multiply(f, a, solve(f, a, b)) == b);
    ++solved;
  }
  CHECK(solved > 40);
}

TEST_CASE("singular systems are detected") {
  const auto &f = Field::get(8);
  Matrix a(2, 2);
  a.at(0, 0) = 3;
  a.at(0, 1) = 5;
  a.at(1, 0) = f.mul(7, 3);
  a.at(1, 1) = f.mul(7, 5);
  CHECK(rank(f, a) == 1);
  CHECK_THROWS_AS(solve(f, a, Matrix::identity(2)), SingularMatrix);
}

namespace {

bool all_submatrices_nonsingular(const Field &f, const Matrix &g, std::size_t k) {
  auto c = first_combination(static_cast<std::uint32_t>(k));
  do {
    std::vector<std::size_t> idx(c.begin(), c.end());
    if (rank(f, g.select_rows(idx)) != k) {
      return false;
    }
  } while (next_combination(c, static_cast<std::uint32_t>(g.rows())));
  return true;
}

} // namespace

TEST_CASE("MDS encoder shapes") {
  const auto &f1 = Field::get(1);
  const auto g1 = mds_encoder(f1, 1, 1);
  CHECK(g1.rows() == 1);
  CHECK(g1.at(0, 0) == 1);

  const auto &f2 = Field::get(2);
  const auto g2 = mds_encoder(f2, 2, 3);
  CHECK(all_submatrices_nonsingular(f2, g2, 2));

  // rows per partition and decoding threshold of the six-server example
  const auto &f5 = Field::get(5);
  const auto g = mds_encoder(f5, 4, 6);
  CHECK(g.rows() == 6);
  CHECK(g.cols() == 4);
  CHECK(all_submatrices_nonsingular(f5, g, 4));
}

TEST_CASE("MDS encoder needs r_out + 1 field elements") {
  CHECK_THROWS_AS(mds_encoder(Field::get(2), 2, 4), FieldTooSmall);
  CHECK_NOTHROW(mds_encoder(Field::get(3), 2, 7));
}

TEST_CASE("random row subsets of a larger MDS generator are nonsingular") {
  const auto &f = Field::get(8);
  const std::size_t k = 12;
  const std::size_t r_out = 40;
  const auto g = mds_encoder(f, k, r_out);
  Rng rng(5);
  std::vector<std::size_t> all(r_out);
  for (std::size_t i = 0; i < r_out; ++i) {
    all[i] = i;
  }
  for (int trial = 0; trial < 1000; ++trial) {
    rng.shuffle(all);
    std::vector<std::size_t> idx(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    REQUIRE(rank(f, g.select_rows(idx)) == k);
  }
}
