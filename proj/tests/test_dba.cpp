#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "poslab/dba.hpp"
#include "poslab/gradcheck.hpp"

using namespace poslab;

namespace {

Matrix gaussian(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

Matrix reversed(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) std::copy(m.row(r).begin(), m.row(r).end(), out.row(m.rows() - 1 - r).begin());
  return out;
}

Matrix permuted(const Matrix& m, const std::vector<std::size_t>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) std::copy(m.row(perm[r]).begin(), m.row(perm[r]).end(), out.row(r).begin());
  return out;
}

Dataset two_lines(std::uint64_t seed) {
  Rng rng(77);
  const Matrix q = orthonormal_basis(gaussian(4, 2, rng));
  return gen_union(SyntheticSpec{4, {{q.cols_range(0, 1), 32}, {q.cols_range(1, 1), 32}}, 0.1, seed});
}

}  // namespace

TEST(FeatureMap, Examples) {
  const Matrix z = feature_map(Matrix(2, 3));
  for (double x : z.data()) EXPECT_EQ(x, 1.0);
  const Matrix pos = feature_map(Matrix::from_rows({{0.5, 2.0}}));
  EXPECT_EQ(pos(0, 0), 1.5);
  EXPECT_EQ(pos(0, 1), 3.0);
  const Matrix neg = feature_map(Matrix::from_rows({{-30.0, -700.0}}));
  EXPECT_GT(neg(0, 0), 0.0);
  EXPECT_LT(neg(0, 0), 1e-12);
  EXPECT_GE(neg(0, 1), 0.0);
}

TEST(Intersection, ConvexCombinationOfRows) {
  Rng rng(1);
  const Matrix mi = feature_map(gaussian(6, 3, rng)), mj = feature_map(gaussian(6, 3, rng));
  const auto [sbi, sbj] = dba_intersection(mi, mj);
  for (std::size_t c = 0; c < 3; ++c) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t r = 0; r < 6; ++r) {
      lo = std::min(lo, mi(r, c));
      hi = std::max(hi, mi(r, c));
    }
    for (std::size_t r = 0; r < 6; ++r) {
      EXPECT_GE(sbi(r, c), lo - 1e-12);
      EXPECT_LE(sbi(r, c), hi + 1e-12);
    }
  }
  EXPECT_EQ(sbj.rows(), 6u);
}

TEST(Intersection, SingleTokenReducesToInput) {
  const Matrix si = Matrix::from_rows({{0.3, 1.2, 2.0}});
  const Matrix sj = Matrix::from_rows({{1.5, 0.2, 0.7}});
  const auto [sbi, sbj] = dba_intersection(si, sj);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(sbi(0, c), si(0, c), 1e-14);
    EXPECT_NEAR(sbj(0, c), sj(0, c), 1e-14);
  }
}

TEST(Intersection, TokenPermutationEquivariant) {
  Rng rng(2);
  const Matrix mi = feature_map(gaussian(5, 3, rng)), mj = feature_map(gaussian(5, 3, rng));
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  const auto a = dba_intersection(mi, mj);
  const auto b = dba_intersection(permuted(mi, perm), permuted(mj, perm));
  EXPECT_LT(max_abs(b.first - permuted(a.first, perm)), 1e-12);
  EXPECT_LT(max_abs(b.second - permuted(a.second, perm)), 1e-12);
}

TEST(Intersection, DegenerateNormalizer) {
  try {
    dba_intersection(Matrix(2, 2), Matrix(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateNormalizer);
  }
}

TEST(Residuals, Definition) {
  Rng rng(3);
  const Matrix si = gaussian(4, 3, rng), sj = gaussian(4, 3, rng);
  const auto [ri, rj] = dba_residuals(si, sj, si, sj);
  EXPECT_EQ(max_abs(ri), 0.0);
  const Matrix sb = gaussian(4, 3, rng);
  const auto [r2, r3] = dba_residuals(si, sj, sb, sb);
  EXPECT_LT(max_abs(r2 + sb - si), 1e-15);
}

TEST(OrthLoss, Examples) {
  EXPECT_EQ(orth_loss(Matrix::from_rows({{1, 0}}), Matrix::from_rows({{0, 1}})), 0.0);
  EXPECT_NEAR(orth_loss(Matrix::from_rows({{1, 2}}), Matrix::from_rows({{1, 2}})), 1.0, 1e-15);
  EXPECT_EQ(orth_loss(Matrix::from_rows({{0, 0}}), Matrix::from_rows({{1, 2}})), 0.0);
  Rng rng(4);
  const std::size_t c = 5;
  const Matrix a = gaussian(20000, c, rng), b = gaussian(20000, c, rng);
  EXPECT_NEAR(orth_loss(a, b), 1.0 / c, 0.01);
  const double v = orth_loss(a.cols_range(0, 3), b.cols_range(0, 3));
  EXPECT_NEAR(orth_loss(3.0 * a.cols_range(0, 3), 0.2 * b.cols_range(0, 3)), v, 1e-12);
}

TEST(TokenNorm, ZeroMeanUnitVariance) {
  Rng rng(5);
  const Matrix y = token_norm(gaussian(6, 4, rng));
  for (std::size_t r = 0; r < 6; ++r) {
    double m = 0, v = 0;
    for (double x : y.row(r)) m += x / 4;
    for (double x : y.row(r)) v += (x - m) * (x - m) / 4;
    EXPECT_NEAR(m, 0.0, 1e-9);
    EXPECT_NEAR(v, 1.0, 1e-9);
  }
}

TEST(Block, ZeroFfnIsNormOnly) {
  DBAConfig cfg;
  cfg.seed = 6;
  DBAParams p = DBAParams::init(cfg);
  p.ffn_w2 = Matrix(cfg.hidden, cfg.channels);
  Rng rng(7);
  const Matrix s = gaussian(cfg.tokens, cfg.channels, rng);
  const BlockOutput out = block_forward(p, s, 0.0);
  EXPECT_LT(max_abs(out.s_next - token_norm(s)), 1e-15);
  EXPECT_EQ(out.s_next.rows(), s.rows());
  EXPECT_EQ(out.s_next.cols(), s.cols());
  EXPECT_GE(out.j_orth, 0.0);
  EXPECT_LE(out.j_orth, 1.0);
  EXPECT_THROW(block_forward(p, gaussian(4, 3, rng), 0.0), Error);
}

TEST(Block, ReversalEquivariantWithSymmetricGate) {
  DBAConfig cfg;
  cfg.seed = 8;
  const DBAParams p = DBAParams::init(cfg);
  Rng rng(9);
  const Matrix s = gaussian(cfg.tokens, cfg.channels, rng);
  const BlockOutput a = block_forward(p, s, 1.0);
  const BlockOutput b = block_forward(p, reversed(s), 1.0);
  EXPECT_LT(max_abs(b.s_next - reversed(a.s_next)), 1e-12);
  EXPECT_NEAR(a.j_orth, b.j_orth, 1e-14);
}

TEST(Block, GradientMatchesFiniteDifferences) {
  Rng rng(10);
  for (int point = 0; point < 5; ++point) {
    DBAConfig cfg;
    cfg.seed = 100 + static_cast<std::uint64_t>(point);
    DBAParams p = DBAParams::init(cfg);
    p.gate_local = {0.2 + 0.1 * rng.uniform(), 0.5, 0.3 * rng.uniform()};
    const Matrix s = gaussian(cfg.tokens, cfg.channels, rng);
    const Matrix target = token_norm(gaussian(cfg.tokens, cfg.channels, rng));
    const double lambda = 0.5 + rng.uniform();
    const auto [loss, g] = block_loss_grad(p, s, target, lambda);
    EXPECT_NEAR(loss, block_loss(p, s, target, lambda), 1e-12);
    const Vector num = central_difference(
        [&](std::span<const double> th) {
          DBAParams q = p;
          q.set_flat(th);
          return block_loss(q, s, target, lambda);
        },
        p.flat());
    EXPECT_LT(max_rel_error(g, num), 1e-4);
  }
}

TEST(Params, FlatRoundTrip) {
  const DBAParams p = DBAParams::init(DBAConfig{});
  DBAParams q = DBAParams::init(DBAConfig{8, 4, 8, 0.0, 99});
  q.set_flat(p.flat());
  EXPECT_EQ(q.flat(), p.flat());
  EXPECT_THROW(q.set_flat(Vector(3, 0.0)), Error);
  EXPECT_THROW(DBAParams::init(DBAConfig{1, 4, 8, 0.0, 0}), Error);
}

TEST(ToySequences, ShapesAndTargets) {
  const Dataset d = two_lines(1);
  const ToySequences seqs = make_toy_sequences(d, 8, 3);
  ASSERT_EQ(seqs.inputs.size(), 8u);
  for (const auto& t : seqs.targets) {
    EXPECT_EQ(t.rows(), 8u);
    EXPECT_LT(max_abs(token_norm(t) - t), 1e-9);
  }
}

TEST(TrainToy, OrthPenaltyDrivesJDown) {
  DBAConfig cfg;
  cfg.lambda_orth = 1.0;
  cfg.seed = 2;
  const DBAHistory h = train_toy(cfg, two_lines(2), 300, 0.05);
  EXPECT_EQ(h.loss.size(), 300u);
  EXPECT_EQ(h.j_orth.size(), 301u);
  EXPECT_LT(h.j_orth.back(), h.j_orth.front());
}

TEST(TrainToy, DoublingLambdaNeverRaisesFinalJ) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    DBAConfig cfg;
    cfg.seed = seed;
    cfg.lambda_orth = 1.0;
    const double j1 = train_toy(cfg, two_lines(seed), 400, 0.05).j_orth.back();
    cfg.lambda_orth = 2.0;
    const double j2 = train_toy(cfg, two_lines(seed), 400, 0.05).j_orth.back();
    EXPECT_LE(j2, j1) << "seed " << seed;
  }
}

TEST(TrainToy, ZeroStepsKeepInit) {
  DBAConfig cfg;
  cfg.seed = 4;
  const DBAHistory h = train_toy(cfg, two_lines(4), 0, 0.05);
  EXPECT_EQ(h.final_params.flat(), DBAParams::init(cfg).flat());
  EXPECT_EQ(h.j_orth.size(), 1u);
}
