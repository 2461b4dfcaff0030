#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "poslab/dictionary.hpp"
#include "poslab/rng.hpp"

using namespace poslab;

namespace {

Matrix gaussian(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

// exhaustive per-support eigen oracle
double ric_oracle(const Matrix& a, std::size_t k) {
  const std::size_t n = a.cols();
  double best = 0;
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(k), true);
  do {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) idx.push_back(i);
    Eigen::MatrixXd g(k, k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        double s = 0;
        for (std::size_t r = 0; r < a.rows(); ++r) s += a(r, idx[i]) * a(r, idx[j]);
        g(i, j) = s;
      }
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues();
    best = std::max({best, ev.maxCoeff() - 1.0, 1.0 - ev.minCoeff()});
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

}  // namespace

TEST(Coherence, Examples) {
  EXPECT_NEAR(mutual_coherence(Dictionary(Matrix::identity(3))), 0.0, 1e-15);
  EXPECT_NEAR(mutual_coherence(Dictionary(Matrix::from_rows({{1, 1}, {2, 2}}))), 1.0, 1e-15);
  EXPECT_NEAR(mutual_coherence(Dictionary(Matrix::from_rows({{1, 1}, {0, 1}}))), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_THROW(mutual_coherence(Dictionary(Matrix::from_rows({{1}, {0}}))), Error);
}

TEST(Coherence, InvariantUnderSignFlipsAndPermutation) {
  const Matrix a = gaussian(5, 7, 1);
  const double mu = mutual_coherence(Dictionary(a));
  EXPECT_GE(mu, 0.0);
  EXPECT_LE(mu, 1.0);
  Matrix b(5, 7);
  for (std::size_t j = 0; j < 7; ++j) {
    const std::size_t src = (j * 3) % 7;
    for (std::size_t i = 0; i < 5; ++i) b(i, j) = (j % 2 ? -1.0 : 1.0) * a(i, src);
  }
  EXPECT_NEAR(mutual_coherence(Dictionary(b)), mu, 1e-14);
}

TEST(Ric, Examples) {
  EXPECT_NEAR(ric(Dictionary(Matrix::identity(4)), 2), 0.0, 1e-14);
  EXPECT_NEAR(ric(Dictionary(Matrix::identity(4)), 4), 0.0, 1e-14);
  EXPECT_NEAR(ric(Dictionary(Matrix::from_rows({{1, 1}, {0, 0}})), 2), 1.0, 1e-14);
}

TEST(Ric, MatchesExhaustiveEigenOracle) {
  const Dictionary d(gaussian(4, 8, 2));
  for (std::size_t k = 1; k <= 3; ++k) {
    EXPECT_NEAR(ric(d, k), ric_oracle(d.atoms(), k), 1e-10);
    EXPECT_NEAR(serial::ric(d, k), ric(d, k), 1e-14);
  }
}

TEST(Ric, NondecreasingInK) {
  const Dictionary d(gaussian(6, 9, 3));
  double prev = 0;
  for (std::size_t k = 1; k <= 5; ++k) {
    const double v = ric(d, k);
    EXPECT_GE(v, prev - 1e-14);
    prev = v;
  }
}

TEST(Ric, SampledSphereAgrees) {
  const Dictionary d(gaussian(4, 6, 4));
  const std::size_t k = 2;
  Rng rng(5);
  double worst = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t i = rng.uniform_int(0, 5);
    std::size_t j = rng.uniform_int(0, 4);
    if (j >= i) ++j;
    const double a = rng.normal(), b = rng.normal();
    const double len = std::hypot(a, b);
    Vector x(4, 0.0);
    for (std::size_t r = 0; r < 4; ++r) x[r] = (a * d.atoms()(r, i) + b * d.atoms()(r, j)) / len;
    worst = std::max(worst, std::abs(sq_norm(x) - 1.0));
  }
  EXPECT_LE(worst, ric(d, k) + 1e-12);
  EXPECT_GE(worst, ric(d, k) - 0.05);
}

TEST(Ric, EnumerationCap) {
  const Dictionary d(gaussian(3, 40, 6));
  try {
    ric(d, 20);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EnumerationTooLarge);
  }
}

TEST(Roc, Examples) {
  const Matrix e1 = Matrix::from_rows({{1}, {0}}), e2 = Matrix::from_rows({{0}, {1}});
  EXPECT_NEAR(roc(e1, e2), 0.0, 1e-15);
  EXPECT_NEAR(roc(e1, e1), 1.0, 1e-15);
  const double a = 0.7;
  EXPECT_NEAR(roc(e1, Matrix::from_rows({{std::cos(a)}, {std::sin(a)}})), std::cos(a), 1e-15);
  EXPECT_THROW(roc(e1, Matrix::from_rows({{1}, {0}, {0}})), Error);
}

TEST(Roc, SymmetricAndBoundedByPrincipalAngle) {
  const Matrix a = orthonormal_basis(gaussian(6, 2, 7));
  const Matrix b = orthonormal_basis(gaussian(6, 3, 8));
  EXPECT_NEAR(roc(a, b), roc(b, a), 1e-14);
  EXPECT_NEAR(roc(a, b), std::cos(principal_angles(a, b)[0]), 1e-12);
}

TEST(Secant, Examples) {
  const Dictionary orth(Matrix::from_rows({{1, 0}, {0, 1}, {0, 0}}));
  EXPECT_EQ(secant_kmax(orth), 2u);
  EXPECT_TRUE(uniqueness_ok(orth, 3));
  const Dictionary same(Matrix::from_rows({{1, 1}, {0, 0}, {0, 0}}));
  EXPECT_EQ(secant_kmax(same), 1u);
  const Dictionary planes(Matrix::from_rows({{1, 0, 0, 0}, {0, 1, 1, 0}, {0, 0, 0, 1}}), {{0, 1}, {2, 3}});
  EXPECT_EQ(secant_kmax(planes), 3u);
  const Dictionary r2(Matrix::from_rows({{1, 0, 1, 1}, {0, 1, 1, -1}}), {{0, 1}, {2, 3}});
  EXPECT_EQ(secant_kmax(r2), 2u);
  EXPECT_TRUE(uniqueness_ok(r2, 2));
  const Dictionary one(Matrix::identity(2), {{0, 1}});
  EXPECT_THROW(secant_kmax(one), Error);
}

TEST(Report, MatchesLibraryCalls) {
  const Dictionary d(gaussian(4, 8, 9), {{0, 1, 2, 3}, {4, 5, 6, 7}});
  const json r = diagnostics_report(d, {2});
  EXPECT_EQ(r["mu"].get<double>(), mutual_coherence(d));
  EXPECT_EQ(r["delta_k"]["2"].get<double>(), ric(d, 2));
  EXPECT_EQ(r["theta"][0][1].get<double>(), roc(d.block(0), d.block(1)));
  EXPECT_EQ(r["k_max"].get<std::size_t>(), secant_kmax(d));
  EXPECT_EQ(r["uniqueness"].get<bool>(), uniqueness_ok(d, 4));
}

TEST(Dictionary, NormalizesAndValidates) {
  const Dictionary d(Matrix::from_rows({{3, 0}, {4, 2}}));
  EXPECT_NEAR(d.atoms()(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(d.atoms()(1, 1), 1.0, 1e-15);
  EXPECT_THROW(Dictionary(Matrix::from_rows({{0, 1}, {0, 0}})), Error);
  EXPECT_THROW(Dictionary(Matrix::identity(3), {{0, 1}}), Error);
}
