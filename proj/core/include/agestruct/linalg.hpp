#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace agestruct {

/// Small dense row-major matrix. Sized for Jacobians and normal equations (n <= ~20).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double trace() const;
  double max_abs() const;

  friend Matrix operator-(const Matrix& a, const Matrix& b);
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Determinant by partial-pivot LU.
double determinant(Matrix m);

/// Solves A x = b for symmetric positive definite A by Cholesky.
/// Throws SingularFitError when a pivot falls below rel_pivot_tol * max diagonal.
std::vector<double> cholesky_solve(const Matrix& a, std::span<const double> b,
                                   double rel_pivot_tol = 1e-13);

}  // namespace agestruct
