#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "poslab/error.hpp"

namespace poslab {

using Vector = std::vector<double>;

/// Dense row-major real matrix. A default-constructed Matrix is the empty
/// 0x0 placeholder; every other instance has at least one row and column.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix from_columns(const std::vector<Vector>& columns);
  static Matrix column(const Vector& v);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  Vector col(std::size_t c) const;
  void set_col(std::size_t c, std::span<const double> v);

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  Matrix transpose() const;
  /// Columns [first, first + count).
  Matrix cols_range(std::size_t first, std::size_t count) const;
  Matrix select_cols(std::span<const std::size_t> idx) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> v);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
/// aᵀ·v without forming the transpose.
Vector mul_transpose(const Matrix& a, std::span<const double> v);
/// aᵀ·b without forming the transpose.
Matrix mul_transpose(const Matrix& a, const Matrix& b);
Matrix hstack(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
bool all_finite(const Matrix& a);
/// ‖aᵀa − I‖_F
double orthonormality_defect(const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double sq_norm(std::span<const double> a);
double distance(std::span<const double> a, std::span<const double> b);
Vector add(std::span<const double> a, std::span<const double> b);
Vector sub(std::span<const double> a, std::span<const double> b);
Vector scale(double s, std::span<const double> a);
/// y += s·x
void axpy(double s, std::span<const double> x, std::span<double> y);
bool all_finite(std::span<const double> a);

/// |x − y| ≤ atol + rtol·|y|
bool near(double x, double y, double atol = 1e-12, double rtol = 1e-9);

// Decompositions -------------------------------------------------------------

struct QR {
  Matrix q;  ///< n×k, orthonormal columns
  Matrix r;  ///< k×k, upper triangular with nonnegative diagonal
};

/// Thin Householder QR of a full-column-rank n×k matrix (n ≥ k).
/// Throws RankDeficient when min|R_ii| < 1e-12·max|R_ii|.
QR qr_orthonormal(const Matrix& a);

/// Orthonormal basis of the column span (thin Q of qr_orthonormal).
Matrix orthonormal_basis(const Matrix& a);

struct SVD {
  Matrix u;  ///< m×p, p = min(m, n), orthonormal columns
  Vector s;  ///< p singular values, nonincreasing
  Matrix v;  ///< n×p, orthonormal columns
};

inline constexpr int kSvdMaxSweeps = 60;

/// One-sided Jacobi SVD. Throws NoConvergence after kSvdMaxSweeps sweeps.
SVD svd(const Matrix& a);
Vector singular_values(const Matrix& a);
/// Number of singular values above rel_tol·σ_max.
std::size_t numerical_rank(const Matrix& a, double rel_tol = 1e-9);

/// argmin_x ‖Ax − b‖₂ for full-column-rank A.
Vector least_squares(const Matrix& a, std::span<const double> b);

/// For full-column-rank n×k D with k < n, returns F ((n−k)×n) with
/// orthonormal rows spanning span(D)^⊥, so F·D = 0.
Matrix left_annihilator(const Matrix& d);

/// Principal angles (radians, nondecreasing, in [0, π/2]) between the
/// spans of two orthonormal bases. min(k_a, k_b) angles are returned.
Vector principal_angles(const Matrix& a, const Matrix& b);

/// Solves A·X = B for square nonsingular A (partial-pivot LU).
Matrix solve(const Matrix& a, const Matrix& b);

}  // namespace poslab
