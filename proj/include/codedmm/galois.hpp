#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace codedmm::gf {

/// Field element of GF(2^l), stored as the coefficient bits of a polynomial
/// over GF(2).
using Element = std::uint32_t;

/// Primitive polynomial used for GF(2^l), bit l set. Fixed per l so that
/// encodings are reproducible.
std::uint64_t primitive_polynomial(int bits);

/// GF(2^l) for 1 <= l <= 32. Log/antilog tables for l <= 16, carry-less
/// multiplication with reduction above.
class Field {
public:
  explicit Field(int bits);

  /// Shared immutable instance per l.
  static const Field &get(int bits);

  int bits() const noexcept { return bits_; }
  std::uint64_t size() const noexcept { return std::uint64_t{1} << bits_; }
  std::uint64_t polynomial() const noexcept { return poly_; }
  bool contains(std::uint64_t v) const noexcept { return v < size(); }

  static Element add(Element a, Element b) noexcept { return a ^ b; }
  Element mul(Element a, Element b) const noexcept;
  Element inv(Element a) const; ///< throws RangeError for 0
  Element div(Element a, Element b) const { return mul(a, inv(b)); }
  Element pow(Element a, std::uint64_t e) const noexcept;
  /// Generator of the multiplicative group (the class x).
  Element generator() const noexcept { return bits_ == 1 ? 1 : 2; }

private:
  int bits_;
  std::uint64_t poly_;
  std::vector<std::uint32_t> log_;
  std::vector<Element> exp_;

  Element mul_slow(Element a, Element b) const noexcept;
};

/// Dense row-major matrix over GF(2^l).
class Matrix {
public:
  Matrix(std::size_t rows, std::size_t cols);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  Element &at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  Element at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  Element *row(std::size_t i) noexcept { return data_.data() + i * cols_; }
  const Element *row(std::size_t i) const noexcept { return data_.data() + i * cols_; }

  /// Rows `idx` of this matrix, in order.
  Matrix select_rows(const std::vector<std::size_t> &idx) const;

  friend bool operator==(const Matrix &, const Matrix &) = default;

private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Element> data_;
};

Matrix multiply(const Field &f, const Matrix &a, const Matrix &b);

/// Rank by Gaussian elimination.
std::size_t rank(const Field &f, Matrix a);

/// Solves A X = B for square nonsingular A; throws SingularMatrix otherwise.
Matrix solve(const Field &f, const Matrix &a, const Matrix &b);

/// r_out x k Vandermonde generator with evaluation points g^0 .. g^(r_out-1).
/// Every k x k row submatrix is nonsingular. Throws FieldTooSmall when
/// 2^l < r_out + 1.
Matrix mds_encoder(const Field &f, std::size_t k, std::size_t r_out);

} // namespace codedmm::gf
