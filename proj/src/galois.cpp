#include "codedmm/galois.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "codedmm/errors.hpp"

namespace codedmm::gf {

namespace {

constexpr std::array<std::uint64_t, 33> kPolys = {
    0x0,        0x3,        0x7,        0xB,        0x13,        0x25,       0x43,
    0x83,       0x11D,      0x211,      0x409,      0x805,       0x1053,     0x201B,
    0x4443,     0x8003,     0x1100B,    0x20009,    0x40081,     0x80027,    0x100009,
    0x200005,   0x400003,   0x800021,   0x1000087,  0x2000009,   0x4000047,  0x8000027,
    0x10000009, 0x20000005, 0x40800007, 0x80000009, 0x100400007,
};

constexpr int kTableLimit = 16;

} // namespace

std::uint64_t primitive_polynomial(int bits) {
  if (bits < 1 || bits > 32) {
    throw RangeError("field_bits must lie in [1, 32], got " + std::to_string(bits));
  }
  return kPolys[static_cast<std::size_t>(bits)];
}

Field::Field(int bits) : bits_(bits), poly_(primitive_polynomial(bits)) {
  if (bits_ > kTableLimit) {
    return;
  }
  const std::uint64_t order = size() - 1;
  log_.assign(size(), 0);
  exp_.assign(2 * order, 0);
  std::uint64_t x = 1;
  for (std::uint64_t i = 0; i < order; ++i) {
    exp_[i] = static_cast<Element>(x);
    exp_[i + order] = static_cast<Element>(x);
    log_[x] = static_cast<std::uint32_t>(i);
    x <<= 1;
    if (x & size()) {
      x ^= poly_;
    }
  }
}

const Field &Field::get(int bits) {
  static std::array<std::unique_ptr<Field>, 33> cache;
  static std::mutex mu;
  primitive_polynomial(bits);
  const std::lock_guard lock(mu);
  auto &slot = cache[static_cast<std::size_t>(bits)];
  if (!slot) {
    slot = std::make_unique<Field>(bits);
  }
  return *slot;
}

Element Field::mul_slow(Element a, Element b) const noexcept {
  std::uint64_t acc = 0;
  std::uint64_t x = a;
  for (std::uint64_t y = b; y != 0; y >>= 1) {
    if (y & 1) {
      acc ^= x;
    }
    x <<= 1;
    if (x & size()) {
      x ^= poly_;
    }
  }
  return static_cast<Element>(acc);
}

Element Field::mul(Element a, Element b) const noexcept {
  if (a == 0 || b == 0) {
    return 0;
  }
  if (exp_.empty()) {
    return mul_slow(a, b);
  }
  return exp_[log_[a] + log_[b]];
}

Element Field::inv(Element a) const {
  if (a == 0) {
    throw RangeError("inverse of zero in GF(2^l)");
  }
  const std::uint64_t order = size() - 1;
  if (!exp_.empty()) {
    return exp_[(order - log_[a]) % order];
  }
  return pow(a, order - 1);
}

Element Field::pow(Element a, std::uint64_t e) const noexcept {
  Element result = 1;
  Element base = a;
  while (e != 0) {
    if (e & 1) {
      result = mul(result, base);
    }
    base = mul(base, base);
    e >>= 1;
  }
  return result;
}

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0) {
  if (rows == 0 || cols == 0) {
    throw RangeError("matrix dimensions must be positive");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m.at(i, i) = 1;
  }
  return m;
}

Matrix Matrix::select_rows(const std::vector<std::size_t> &idx) const {
  Matrix out(idx.size(), cols_);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(row(idx[i]), cols_, out.row(i));
  }
  return out;
}

Matrix multiply(const Field &f, const Matrix &a, const Matrix &b) {
  if (a.cols() != b.rows()) {
    throw RangeError("matrix shapes do not conform");
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Element aik = a.at(i, k);
      if (aik == 0) {
        continue;
      }
      for (std::size_t j = 0; j < b.cols(); ++j) {
        c.at(i, j) ^= f.mul(aik, b.at(k, j));
      }
    }
  }
  return c;
}

namespace {

// Reduces [a | b] to reduced row echelon form in place; returns the rank of a.
std::size_t eliminate(const Field &f, Matrix &a, Matrix *b) {
  std::size_t rank = 0;
  for (std::size_t col = 0; col < a.cols() && rank < a.rows(); ++col) {
    std::size_t pivot = rank;
    while (pivot < a.rows() && a.at(pivot, col) == 0) {
      ++pivot;
    }
    if (pivot == a.rows()) {
      continue;
    }
    if (pivot != rank) {
      std::swap_ranges(a.row(pivot), a.row(pivot) + a.cols(), a.row(rank));
      if (b) {
        std::swap_ranges(b->row(pivot), b->row(pivot) + b->cols(), b->row(rank));
      }
    }
    const Element s = f.inv(a.at(rank, col));
    for (std::size_t j = 0; j < a.cols(); ++j) {
      a.at(rank, j) = f.mul(a.at(rank, j), s);
    }
    if (b) {
      for (std::size_t j = 0; j < b->cols(); ++j) {
        b->at(rank, j) = f.mul(b->at(rank, j), s);
      }
    }
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const Element c = a.at(i, col);
      if (i == rank || c == 0) {
        continue;
      }
      for (std::size_t j = 0; j < a.cols(); ++j) {
        a.at(i, j) ^= f.mul(c, a.at(rank, j));
      }
      if (b) {
        for (std::size_t j = 0; j < b->cols(); ++j) {
          b->at(i, j) ^= f.mul(c, b->at(rank, j));
        }
      }
    }
    ++rank;
  }
  return rank;
}

} // namespace

std::size_t rank(const Field &f, Matrix a) { return eliminate(f, a, nullptr); }

Matrix solve(const Field &f, const Matrix &a, const Matrix &b) {
  if (a.rows() != a.cols()) {
    throw RangeError("solve requires a square coefficient matrix");
  }
  if (b.rows() != a.rows()) {
    throw RangeError("right-hand side row count does not match");
  }
  Matrix work = a;
  Matrix x = b;
  const std::size_t r = eliminate(f, work, &x);
  if (r != a.rows()) {
    throw SingularMatrix("matrix is singular (rank " + std::to_string(r) + " of " +
                         std::to_string(a.rows()) + ")");
  }
  return x;
}

Matrix mds_encoder(const Field &f, std::size_t k, std::size_t r_out) {
  if (k == 0 || r_out < k) {
    throw RangeError("mds_encoder requires 1 <= k <= r_out");
  }
  if (f.size() < r_out + 1) {
    throw FieldTooSmall("GF(2^" + std::to_string(f.bits()) + ") has fewer than r_out + 1 = " +
                        std::to_string(r_out + 1) + " elements");
  }
  Matrix g(r_out, k);
  Element x = 1;
  for (std::size_t i = 0; i < r_out; ++i) {
    Element v = 1;
    for (std::size_t j = 0; j < k; ++j) {
      g.at(i, j) = v;
      v = f.mul(v, x);
    }
    x = f.mul(x, f.generator());
  }
  return g;
}

} // namespace codedmm::gf
