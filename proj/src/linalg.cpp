#include "poslab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace poslab {

namespace {

void require(bool ok, Errc code, const char* what) {
  if (!ok) throw Error(code, what);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  require(rows >= 1 && cols >= 1, Errc::InvalidArgument, "matrix dimensions must be at least 1x1");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  require(rows >= 1 && cols >= 1, Errc::InvalidArgument, "matrix dimensions must be at least 1x1");
  require(data_.size() == rows * cols, Errc::DimensionMismatch, "row-major data size != rows*cols");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  require(r >= 1, Errc::InvalidArgument, "from_rows: no rows");
  const std::size_t c = rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    require(row.size() == c, Errc::DimensionMismatch, "from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::from_columns(const std::vector<Vector>& columns) {
  require(!columns.empty(), Errc::InvalidArgument, "from_columns: no columns");
  Matrix m(columns.front().size(), columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) m.set_col(j, columns[j]);
  return m;
}

Matrix Matrix::column(const Vector& v) { return Matrix(v.size(), 1, v); }

Vector Matrix::col(std::size_t c) const {
  Vector v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, c);
  return v;
}

void Matrix::set_col(std::size_t c, std::span<const double> v) {
  require(v.size() == rows_, Errc::DimensionMismatch, "set_col: length != rows");
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, c) = v[i];
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::cols_range(std::size_t first, std::size_t count) const {
  require(first + count <= cols_ && count >= 1, Errc::InvalidArgument, "cols_range out of bounds");
  Matrix m(rows_, count);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < count; ++j) m(i, j) = (*this)(i, first + j);
  return m;
}

Matrix Matrix::select_cols(std::span<const std::size_t> idx) const {
  require(!idx.empty(), Errc::InvalidArgument, "select_cols: empty index set");
  Matrix m(rows_, idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    require(idx[j] < cols_, Errc::InvalidArgument, "select_cols: index out of range");
    for (std::size_t i = 0; i < rows_; ++i) m(i, j) = (*this)(i, idx[j]);
  }
  return m;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), Errc::DimensionMismatch, "matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Vector operator*(const Matrix& a, std::span<const double> v) {
  require(a.cols() == v.size(), Errc::DimensionMismatch, "matvec: dimension mismatch");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), v);
  return y;
}

Vector mul_transpose(const Matrix& a, std::span<const double> v) {
  require(a.rows() == v.size(), Errc::DimensionMismatch, "matvec(T): dimension mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) axpy(v[i], a.row(i), y);
  return y;
}

Matrix mul_transpose(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), Errc::DimensionMismatch, "matmul(T): row counts differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto ak = a.row(k);
    const auto bk = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      if (ak[i] == 0.0) continue;
      auto ci = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += ak[i] * bk[j];
    }
  }
  return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), Errc::DimensionMismatch, "add: shapes differ");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), Errc::DimensionMismatch, "sub: shapes differ");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (double& x : c.data()) x *= s;
  return c;
}

Matrix hstack(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), Errc::DimensionMismatch, "hstack: row counts differ");
  Matrix c(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::copy(a.row(i).begin(), a.row(i).end(), c.row(i).begin());
    std::copy(b.row(i).begin(), b.row(i).end(), c.row(i).begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return c;
}

double frobenius_norm(const Matrix& a) { return norm(a.data()); }

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double x : a.data()) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(const Matrix& a) { return all_finite(std::span<const double>(a.data())); }

double orthonormality_defect(const Matrix& a) {
  Matrix g = mul_transpose(a, a);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return frobenius_norm(g);
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), Errc::DimensionMismatch, "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sq_norm(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}

double norm(std::span<const double> a) {
  // scaled to avoid overflow for large entries
  double scale = 0.0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double x : a) s += (x / scale) * (x / scale);
  return scale * std::sqrt(s);
}

double distance(std::span<const double> a, std::span<const double> b) { return norm(sub(a, b)); }

Vector add(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), Errc::DimensionMismatch, "add: length mismatch");
  Vector c(a.begin(), a.end());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  return c;
}

Vector sub(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), Errc::DimensionMismatch, "sub: length mismatch");
  Vector c(a.begin(), a.end());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
  return c;
}

Vector scale(double s, std::span<const double> a) {
  Vector c(a.begin(), a.end());
  for (double& x : c) x *= s;
  return c;
}

void axpy(double s, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), Errc::DimensionMismatch, "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

bool near(double x, double y, double atol, double rtol) {
  return std::abs(x - y) <= atol + rtol * std::abs(y);
}

// Householder ---------------------------------------------------------------

namespace {

struct Householder {
  std::vector<Vector> reflectors;  // v_j acts on rows j..n-1, unit norm (or zero)
  Matrix r;                        // n×k, upper part is R
};

Householder householder(const Matrix& a) {
  const std::size_t n = a.rows();
  const std::size_t k = a.cols();
  Householder h{{}, a};
  Matrix& r = h.r;
  for (std::size_t j = 0; j < std::min(k, n); ++j) {
    Vector v(n - j);
    for (std::size_t i = j; i < n; ++i) v[i - j] = r(i, j);
    const double xnorm = norm(v);
    if (xnorm == 0.0) {
      h.reflectors.emplace_back(n - j, 0.0);
      continue;
    }
    const double alpha = v[0] >= 0.0 ? -xnorm : xnorm;
    v[0] -= alpha;
    const double vnorm = norm(v);
    for (double& x : v) x /= vnorm;
    for (std::size_t c = j; c < k; ++c) {
      double proj = 0.0;
      for (std::size_t i = j; i < n; ++i) proj += v[i - j] * r(i, c);
      for (std::size_t i = j; i < n; ++i) r(i, c) -= 2.0 * proj * v[i - j];
    }
    h.reflectors.push_back(std::move(v));
  }
  return h;
}

/// First `count` columns of H_0 H_1 ... H_{m-1}.
Matrix form_q(const Householder& h, std::size_t n, std::size_t count) {
  Matrix q(n, count);
  for (std::size_t c = 0; c < count; ++c) q(c, c) = 1.0;
  for (std::size_t jj = h.reflectors.size(); jj-- > 0;) {
    const Vector& v = h.reflectors[jj];
    for (std::size_t c = 0; c < count; ++c) {
      double proj = 0.0;
      for (std::size_t i = jj; i < n; ++i) proj += v[i - jj] * q(i, c);
      if (proj == 0.0) continue;
      for (std::size_t i = jj; i < n; ++i) q(i, c) -= 2.0 * proj * v[i - jj];
    }
  }
  return q;
}

void check_full_rank(const Matrix& r, std::size_t k) {
  double dmax = 0.0;
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    dmax = std::max(dmax, std::abs(r(j, j)));
    dmin = std::min(dmin, std::abs(r(j, j)));
  }
  if (dmax == 0.0 || dmin < 1e-12 * dmax)
    throw Error(Errc::RankDeficient, "matrix is numerically rank deficient (min|R_ii|/max|R_ii| < 1e-12)");
}

}  // namespace

QR qr_orthonormal(const Matrix& a) {
  require(!a.empty() && all_finite(a), Errc::InvalidArgument, "qr: empty or non-finite input");
  const std::size_t n = a.rows();
  const std::size_t k = a.cols();
  if (k > n) throw Error(Errc::RankDeficient, "qr: more columns than rows cannot have full column rank");
  Householder h = householder(a);
  check_full_rank(h.r, k);
  QR out{form_q(h, n, k), Matrix(k, k)};
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) out.r(i, j) = h.r(i, j);
  // positive diagonal makes the factorization unique
  for (std::size_t i = 0; i < k; ++i) {
    if (out.r(i, i) < 0.0) {
      for (std::size_t j = i; j < k; ++j) out.r(i, j) = -out.r(i, j);
      for (std::size_t r = 0; r < n; ++r) out.q(r, i) = -out.q(r, i);
    }
  }
  return out;
}

Matrix orthonormal_basis(const Matrix& a) { return qr_orthonormal(a).q; }

Matrix left_annihilator(const Matrix& d) {
  require(!d.empty() && all_finite(d), Errc::InvalidArgument, "left_annihilator: empty or non-finite input");
  const std::size_t n = d.rows();
  const std::size_t k = d.cols();
  if (k == n) throw Error(Errc::NoComplement, "left_annihilator: span(D) is the whole space");
  if (k > n) throw Error(Errc::RankDeficient, "left_annihilator: more columns than rows");
  Householder h = householder(d);
  check_full_rank(h.r, k);
  Matrix q = form_q(h, n, n);
  Matrix f(n - k, n);
  for (std::size_t i = 0; i < n - k; ++i)
    for (std::size_t c = 0; c < n; ++c) f(i, c) = q(c, k + i);
  return f;
}

Vector least_squares(const Matrix& a, std::span<const double> b) {
  require(a.rows() == b.size(), Errc::DimensionMismatch, "least_squares: rows(A) != len(b)");
  QR f = qr_orthonormal(a);
  Vector y = mul_transpose(f.q, b);
  const std::size_t k = a.cols();
  Vector x(k);
  for (std::size_t ii = k; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t j = ii + 1; j < k; ++j) s -= f.r(ii, j) * x[j];
    x[ii] = s / f.r(ii, ii);
  }
  return x;
}

// Jacobi SVD ----------------------------------------------------------------

namespace {

// Orthonormal completion: fill zero columns so that all columns are orthonormal.
void complete_orthonormal(std::vector<Vector>& cols, const std::vector<bool>& valid) {
  const std::size_t m = cols.empty() ? 0 : cols.front().size();
  std::size_t probe = 0;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (valid[c]) continue;
    for (; probe < m; ++probe) {
      Vector e(m, 0.0);
      e[probe] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t o = 0; o < cols.size(); ++o) {
          if (o == c || (!valid[o] && o > c)) continue;
          axpy(-dot(cols[o], e), cols[o], e);
        }
      }
      const double en = norm(e);
      if (en > 1e-8) {
        for (double& x : e) x /= en;
        cols[c] = std::move(e);
        ++probe;
        break;
      }
    }
  }
}

SVD svd_tall(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  std::vector<Vector> u(n, Vector(m));
  std::vector<Vector> v(n, Vector(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) u[j][i] = a(i, j);
    v[j][j] = 1.0;
  }
  const double fro = frobenius_norm(a);
  const double abs_floor = (1e-14 * fro) * (1e-14 * fro);

  bool converged = false;
  for (int sweep = 0; sweep < kSvdMaxSweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = sq_norm(u[p]);
        const double beta = sq_norm(u[q]);
        const double gamma = dot(u[p], u[q]);
        if (std::abs(gamma) <= std::max(1e-15 * std::sqrt(alpha * beta), abs_floor)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double up = u[p][i];
          const double uq = u[q][i];
          u[p][i] = c * up - s * uq;
          u[q][i] = s * up + c * uq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v[p][i];
          const double vq = v[q][i];
          v[p][i] = c * vp - s * vq;
          v[q][i] = s * vp + c * vq;
        }
      }
    }
    converged = !rotated;
  }
  if (!converged) throw Error(Errc::NoConvergence, "svd: Jacobi sweeps exceeded cap of 60");

  Vector sv(n);
  for (std::size_t j = 0; j < n; ++j) sv[j] = norm(u[j]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sv[x] > sv[y]; });

  const double smax = n > 0 ? sv[order[0]] : 0.0;
  std::vector<Vector> ucols(n);
  std::vector<bool> valid(n);
  SVD out{Matrix(m, n), Vector(n), Matrix(n, n)};
  for (std::size_t jj = 0; jj < n; ++jj) {
    const std::size_t j = order[jj];
    out.s[jj] = sv[j];
    valid[jj] = sv[j] > 0.0 && sv[j] > 1e-300 && sv[j] >= 1e-15 * smax;
    ucols[jj] = valid[jj] ? scale(1.0 / sv[j], u[j]) : Vector(m, 0.0);
    out.v.set_col(jj, v[j]);
  }
  complete_orthonormal(ucols, valid);
  for (std::size_t jj = 0; jj < n; ++jj) out.u.set_col(jj, ucols[jj]);
  return out;
}

}  // namespace

SVD svd(const Matrix& a) {
  require(!a.empty() && all_finite(a), Errc::InvalidArgument, "svd: empty or non-finite input");
  if (a.rows() >= a.cols()) return svd_tall(a);
  SVD t = svd_tall(a.transpose());
  return SVD{std::move(t.v), std::move(t.s), std::move(t.u)};
}

Vector singular_values(const Matrix& a) { return svd(a).s; }

std::size_t numerical_rank(const Matrix& a, double rel_tol) {
  const Vector s = singular_values(a);
  if (s.empty() || s.front() == 0.0) return 0;
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [&](double x) { return x > rel_tol * s.front(); }));
}

Vector principal_angles(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), Errc::DimensionMismatch, "principal_angles: ambient dimensions differ");
  if (orthonormality_defect(a) > 1e-8 || orthonormality_defect(b) > 1e-8)
    throw Error(Errc::NotOrthonormal, "principal_angles: inputs must be orthonormal bases");
  // angles are symmetric; put the smaller basis second
  const Matrix& big = a.cols() >= b.cols() ? a : b;
  const Matrix& small = a.cols() >= b.cols() ? b : a;
  const Matrix cross = mul_transpose(big, small);  // k_big × k_small
  const Vector cosines = singular_values(cross);
  const Matrix resid = small - big * cross;
  Vector sines = singular_values(resid);
  std::reverse(sines.begin(), sines.end());
  Vector angles(cosines.size());
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double c = std::clamp(cosines[i], 0.0, 1.0);
    const double s = std::clamp(sines[i], 0.0, 1.0);
    angles[i] = c * c >= 0.5 ? std::asin(s) : std::acos(c);
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

Matrix solve(const Matrix& a, const Matrix& b) {
  require(a.rows() == a.cols(), Errc::InvalidArgument, "solve: matrix must be square");
  require(a.rows() == b.rows(), Errc::DimensionMismatch, "solve: right-hand side rows differ");
  const std::size_t n = a.rows();
  Matrix lu = a;
  Matrix x = b;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (lu(piv, k) == 0.0) throw Error(Errc::RankDeficient, "solve: singular matrix");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      for (std::size_t j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(piv, j));
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) lu(i, j) -= f * lu(k, j);
      for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) -= f * x(k, j);
    }
  }
  for (std::size_t kk = n; kk-- > 0;) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double s = x(kk, j);
      for (std::size_t c = kk + 1; c < n; ++c) s -= lu(kk, c) * x(c, j);
      x(kk, j) = s / lu(kk, kk);
    }
  }
  return x;
}

}  // namespace poslab
