#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vaknh {

/// Dense row-major matrix for the small (≤ 20×20) systems of the dynamics.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> data() const { return data_; }

  double max_abs() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::vector<double> operator*(const Matrix& a, std::span<const double> x);

/// LU factorization with partial pivoting.
class LU {
public:
  explicit LU(Matrix a);

  double determinant() const;
  bool singular() const { return singular_; }

  /// Throws SingularMatrixError if a zero pivot was met.
  std::vector<double> solve(std::span<const double> b) const;

private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
  int sign_ = 1;
  bool singular_ = false;
};

double determinant(const Matrix& a);

/// Relative invertibility test |det| > 1e-12 · (max|a_ij|)^n.
bool numerically_invertible(const Matrix& a, double det);

}  // namespace vaknh
