#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cveval::prob {

// Dense row-major matrix. Only what the CAR machinery and the tests need.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  Matrix transpose() const;
  double frobenius_norm() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
std::vector<double> operator*(const Matrix& a, std::span<const double> x);

// Symmetric matrix holding the packed lower triangle. Symmetry holds by
// construction: (i, j) and (j, i) address the same entry.
class SymMatrix {
 public:
  explicit SymMatrix(std::size_t n);

  static SymMatrix identity(std::size_t n);
  static SymMatrix diagonal(std::span<const double> d);
  // Lower triangle of `dense` is kept; throws ArgumentError when the matrix is
  // not square or not symmetric within `tolerance`.
  static SymMatrix from_dense(const Matrix& dense, double tolerance = 0.0);

  std::size_t size() const noexcept { return n_; }

  double operator()(std::size_t i, std::size_t j) const { return packed_[index(i, j)]; }
  double& at(std::size_t i, std::size_t j) { return packed_[index(i, j)]; }

  double trace() const;
  Matrix to_dense() const;

 private:
  static std::size_t index(std::size_t i, std::size_t j) noexcept {
    return i >= j ? i * (i + 1) / 2 + j : j * (j + 1) / 2 + i;
  }

  std::size_t n_;
  std::vector<double> packed_;
};

// Lower-triangular L with L L^T = a. Throws DecompositionError naming the
// first non-positive pivot.
Matrix cholesky(const SymMatrix& a);

// log det(a) from its Cholesky factor.
double cholesky_log_det(const Matrix& lower);

// Solves L y = b (forward) and L^T x = y (backward).
std::vector<double> forward_substitute(const Matrix& lower, std::span<const double> b);
std::vector<double> backward_substitute_transpose(const Matrix& lower, std::span<const double> y);

// Eigenvalues in ascending order by cyclic Jacobi rotation. Stops when the
// off-diagonal Frobenius norm drops below 1e-12 (relative to the Frobenius
// norm of the input); NumericalError after 100 sweeps.
std::vector<double> sym_eigenvalues(const SymMatrix& a);

}  // namespace cveval::prob
