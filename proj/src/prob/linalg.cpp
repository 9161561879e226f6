#include "cveval/prob/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cveval/error.hpp"

namespace cveval::prob {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::frobenius_norm() const {
  double acc = 0.0;
  for (double v : data_) acc += v * v;
  return std::sqrt(acc);
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ArgumentError("matrix product: dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ArgumentError("matrix difference: dimension mismatch");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

std::vector<double> operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw ArgumentError("matrix-vector product: dimension mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

SymMatrix::SymMatrix(std::size_t n) : n_(n), packed_(n * (n + 1) / 2, 0.0) {
  if (n == 0) throw ArgumentError("SymMatrix: dimension must be at least 1");
}

SymMatrix SymMatrix::identity(std::size_t n) {
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> d) {
  SymMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m.at(i, i) = d[i];
  return m;
}

SymMatrix SymMatrix::from_dense(const Matrix& dense, double tolerance) {
  if (dense.rows() != dense.cols()) throw ArgumentError("SymMatrix: matrix is not square");
  SymMatrix m(dense.rows());
  for (std::size_t i = 0; i < dense.rows(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      if (std::fabs(dense(i, j) - dense(j, i)) > tolerance)
        throw ArgumentError("SymMatrix: matrix is not symmetric at (" + std::to_string(i) +
                            ", " + std::to_string(j) + ")");
      m.at(i, j) = dense(i, j);
    }
  return m;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
  return t;
}

Matrix SymMatrix::to_dense() const {
  Matrix d(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) d(i, j) = (*this)(i, j);
  return d;
}

Matrix cholesky(const SymMatrix& a) {
  const std::size_t n = a.size();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag))
      throw DecompositionError("cholesky: matrix is not positive definite", j);
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / ljj;
    }
  }
  return l;
}

double cholesky_log_det(const Matrix& lower) {
  double acc = 0.0;
  for (std::size_t i = 0; i < lower.rows(); ++i) acc += std::log(lower(i, i));
  return 2.0 * acc;
}

std::vector<double> forward_substitute(const Matrix& lower, std::span<const double> b) {
  const std::size_t n = lower.rows();
  if (b.size() != n) throw ArgumentError("forward_substitute: dimension mismatch");
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= lower(i, k) * y[k];
    y[i] = v / lower(i, i);
  }
  return y;
}

std::vector<double> backward_substitute_transpose(const Matrix& lower,
                                                  std::span<const double> y) {
  const std::size_t n = lower.rows();
  if (y.size() != n) throw ArgumentError("backward_substitute_transpose: dimension mismatch");
  std::vector<double> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double v = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) v -= lower(k, ii) * x[k];
    x[ii] = v / lower(ii, ii);
  }
  return x;
}

std::vector<double> sym_eigenvalues(const SymMatrix& input) {
  constexpr double kThreshold = 1e-12;
  constexpr int kMaxSweeps = 100;
  const std::size_t n = input.size();
  Matrix a = input.to_dense();
  const double scale = std::max(1.0, a.frobenius_norm());

  auto off_norm = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) acc += a(i, j) * a(i, j);
    return std::sqrt(acc);
  };

  int sweep = 0;
  while (off_norm() > kThreshold * scale) {
    if (++sweep > kMaxSweeps)
      throw NumericalError("sym_eigenvalues: Jacobi iteration did not converge in 100 sweeps");
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

}  // namespace cveval::prob
