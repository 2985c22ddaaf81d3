#pragma once

#include "enlarge/scalar.hpp"

#include <algorithm>
#include <vector>

namespace enlarge {

template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, T(0)) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  T& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
  const T& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> a_;
};

template <typename T>
struct LeastSquaresResult {
  std::vector<T> x;
  T residual = T(0);  // max_i |(A x - b)_i|
  int rank = 0;
};

namespace detail {

// Indices of a maximal independent subset of rows of `m`, via row echelon
// reduction with partial pivoting. Pivots below `cutoff * scale` count as 0.
template <typename T>
std::vector<int> independent_rows(Matrix<T> m, double cutoff) {
  const int rows = m.rows(), cols = m.cols();
  std::vector<int> order(rows);
  for (int i = 0; i < rows; ++i) order[i] = i;
  double scale = 0.0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) scale = std::max(scale, to_double(abs_value(m(i, j))));
  const double thresh = cutoff * scale;
  std::vector<int> picked;
  int r = 0;
  for (int j = 0; j < cols && r < rows; ++j) {
    int best = -1;
    T best_abs = T(0);
    for (int i = r; i < rows; ++i) {
      T v = abs_value(m(i, j));
      if (best == -1 || v > best_abs) {
        best = i;
        best_abs = v;
      }
    }
    if (best == -1 || ScalarTraits<T>::is_zero(best_abs, thresh) || best_abs == 0) continue;
    if (best != r) {
      for (int k = 0; k < cols; ++k) std::swap(m(r, k), m(best, k));
      std::swap(order[r], order[best]);
    }
    for (int i = r + 1; i < rows; ++i) {
      if (m(i, j) == 0) continue;
      T f = m(i, j) / m(r, j);
      for (int k = j; k < cols; ++k) m(i, k) -= f * m(r, k);
    }
    picked.push_back(order[r]);
    ++r;
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

// Solves a nonsingular square system by Gaussian elimination.
template <typename T>
std::vector<T> solve_square(Matrix<T> m, std::vector<T> b) {
  const int n = m.rows();
  for (int j = 0; j < n; ++j) {
    int best = j;
    for (int i = j + 1; i < n; ++i)
      if (abs_value(m(i, j)) > abs_value(m(best, j))) best = i;
    if (best != j) {
      for (int k = 0; k < n; ++k) std::swap(m(j, k), m(best, k));
      std::swap(b[j], b[best]);
    }
    for (int i = j + 1; i < n; ++i) {
      if (m(i, j) == 0) continue;
      T f = m(i, j) / m(j, j);
      for (int k = j; k < n; ++k) m(i, k) -= f * m(j, k);
      b[i] -= f * b[j];
    }
  }
  std::vector<T> x(n, T(0));
  for (int i = n - 1; i >= 0; --i) {
    T s = b[i];
    for (int k = i + 1; k < n; ++k) s -= m(i, k) * x[k];
    x[i] = s / m(i, i);
  }
  return x;
}

}  // namespace detail

// Minimum-norm least-squares solution of A x = b: the minimum-norm solution of
// the normal equations A^T A x = A^T b. Residual is measured on A x = b.
template <typename T>
LeastSquaresResult<T> min_norm_least_squares(const Matrix<T>& a, const std::vector<T>& b,
                                             double cutoff = 1e-12) {
  const int m = a.rows(), n = a.cols();
  LeastSquaresResult<T> out;
  out.x.assign(n, T(0));
  Matrix<T> g(n, n);
  std::vector<T> rhs(n, T(0));
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      T s = T(0);
      for (int k = 0; k < m; ++k) s += a(k, i) * a(k, j);
      g(i, j) = s;
      g(j, i) = s;
    }
    T s = T(0);
    for (int k = 0; k < m; ++k) s += a(k, i) * b[k];
    rhs[i] = s;
  }
  const std::vector<int> rows = detail::independent_rows(g, cutoff);
  out.rank = static_cast<int>(rows.size());
  if (!rows.empty()) {
    const int r = out.rank;
    Matrix<T> k(r, r);
    std::vector<T> kr(r);
    for (int i = 0; i < r; ++i) {
      kr[i] = rhs[rows[i]];
      for (int j = 0; j < r; ++j) {
        T s = T(0);
        for (int c = 0; c < n; ++c) s += g(rows[i], c) * g(rows[j], c);
        k(i, j) = s;
      }
    }
    const std::vector<T> y = detail::solve_square(std::move(k), std::move(kr));
    for (int c = 0; c < n; ++c) {
      T s = T(0);
      for (int i = 0; i < r; ++i) s += g(rows[i], c) * y[i];
      out.x[c] = s;
    }
  }
  for (int i = 0; i < m; ++i) {
    T s = -b[i];
    for (int j = 0; j < n; ++j) s += a(i, j) * out.x[j];
    T v = abs_value(s);
    if (v > out.residual) out.residual = v;
  }
  return out;
}

}  // namespace enlarge
