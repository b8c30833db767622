#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "nmforge/real.hpp"

namespace nmforge {

using RationalVector = std::vector<Rational>;

// Small dense exact matrices. Only the handful of operations the fiber and
// pullback code needs: rank, solve, inverse.
class RationalMatrix {
 public:
  RationalMatrix() = default;
  RationalMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  static RationalMatrix from_rows(const std::vector<RationalVector>& rows);
  static RationalMatrix from_columns(const std::vector<RationalVector>& cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Rational& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Rational& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  RationalVector apply(const RationalVector& x) const;
  RationalMatrix transpose() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Rational> data_;
};

std::size_t rank(RationalMatrix m);

/// Some x with m x = b, or nullopt when the system is inconsistent.
std::optional<RationalVector> solve(const RationalMatrix& m, const RationalVector& b);

/// Inverse of a square matrix, nullopt when singular.
std::optional<RationalMatrix> inverse(const RationalMatrix& m);

RationalVector to_rational(const std::vector<Real>& v);
std::vector<Real> to_real(const RationalVector& v);

}  // namespace nmforge
