#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "poslab/autoenc.hpp"

using namespace poslab;

namespace {

Matrix gaussian(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

Dataset random_batch(std::size_t n, std::size_t count, Rng& rng) {
  Dataset d;
  for (std::size_t i = 0; i < count; ++i) {
    Vector v(n);
    for (double& x : v) x = rng.normal();
    d.samples.push_back(v);
    d.labels.push_back(0);
  }
  return d;
}

Matrix ray(double angle) { return Matrix::from_rows({{std::cos(angle)}, {std::sin(angle)}}); }

}  // namespace

TEST(Forward, Examples) {
  const AEParams id(Matrix::identity(3), Matrix::identity(3));
  const Vector s{1, -2, 3};
  EXPECT_EQ(forward(id, s).recon, s);
  const AEParams zero(Matrix(2, 3), Matrix(3, 2), Activation::Linear, Skip::Subtract);
  EXPECT_EQ(forward(zero, s).recon, s);
  Rng rng(1);
  const AEParams relu(gaussian(4, 3, rng), gaussian(3, 4, rng), Activation::Relu);
  for (int t = 0; t < 20; ++t)
    for (double z : forward(relu, random_batch(3, 1, rng).samples[0]).latent) EXPECT_GE(z, 0.0);
  EXPECT_THROW(forward(id, Vector{1, 2}), Error);
}

TEST(ReluSelection, Examples) {
  const Vector d1{1, 0};
  const Vector d2{-0.5, std::sqrt(3.0) / 2};
  const ReluSelection r = relu_selection_demo(d1, d2, scale(2.0, d1));
  EXPECT_NEAR(r.coeffs_pre[0], 2.0, 1e-15);
  EXPECT_NEAR(r.coeffs_pre[1], -1.0, 1e-15);
  EXPECT_EQ(r.coeffs_post[1], 0.0);
  EXPECT_LT(distance(r.recon, scale(2.0, d1)), 1e-15);

  const Vector d60{0.5, std::sqrt(3.0) / 2};
  const ReluSelection j = relu_selection_demo(d1, d60, scale(2.0, d1));
  EXPECT_NEAR(j.coeffs_post[0], 2.0, 1e-15);
  EXPECT_NEAR(j.coeffs_post[1], 1.0, 1e-15);

  const ReluSelection sym = relu_selection_demo(d1, d2, scale(3.0, d2));
  EXPECT_LT(sym.coeffs_pre[0], 0.0);
  EXPECT_EQ(sym.coeffs_post[0], 0.0);
}

TEST(Loss, Examples) {
  const Dataset batch{{{1, 0, 0}, {0, 2, 0}}, {0, 0}};
  const AEParams id(Matrix::identity(3), Matrix::identity(3));
  EXPECT_EQ(ae_loss(id, PlainObjective{}, batch, Rng(0)), 0.0);

  Rng rng(2);
  const AEParams p(gaussian(2, 3, rng), gaussian(3, 2, rng));
  const double plain = ae_loss(p, PlainObjective{}, batch, Rng(0));
  EXPECT_NEAR(ae_loss(p, PushPullObjective{2.5, 0.0, 0.0, 1.0}, batch, Rng(0)), 2.5 * plain, 1e-12);
  EXPECT_THROW(ae_loss(p, PushPullObjective{1, 1, 1, 0.0}, batch, Rng(0)), Error);
  EXPECT_THROW(ae_loss(p, MaskedObjective{2, 1}, batch, Rng(0)), Error);
}

TEST(Loss, MaskedExceedsPlainForConvergedModel) {
  // on σ=0 single-line data the exact projector has zero plain loss
  const Matrix b = ray(0.4);
  const AEParams p(b.transpose(), b);
  SyntheticSpec spec{2, {{b, 200}}, 0.0, 3};
  const Dataset d = gen_union(spec);
  const double plain = ae_loss(p, PlainObjective{}, d, Rng(1));
  double masked = 0;
  for (std::uint64_t s = 0; s < 20; ++s) masked += ae_loss(p, MaskedObjective{1, 1}, d, Rng(s)) / 20.0;
  EXPECT_LT(plain, 1e-25);
  EXPECT_GT(masked, plain);
}

TEST(Gradient, FiniteDifferencesAllObjectives) {
  Rng rng(3);
  const std::vector<Objective> objectives{PlainObjective{}, MaskedObjective{1, 3}, PushPullObjective{1.0, 0.7, 0.3, 1.2}};
  for (const Objective& obj : objectives)
    for (bool tied : {false, true})
      for (Activation act : {Activation::Linear, Activation::Relu})
        for (Skip skip : {Skip::None, Skip::Subtract})
          for (int point = 0; point < 3; ++point) {
            const Dataset batch = random_batch(6, 5, rng);
            const AEParams p = tied ? AEParams(gaussian(3, 6, rng), act, skip)
                                    : AEParams(gaussian(3, 6, rng), gaussian(6, 3, rng), act, skip);
            const Rng masks(rng.uniform_int(0, 1u << 30));
            ASSERT_GT(ae_min_abs_preactivation(p, obj, batch, masks), 1e-8);
            EXPECT_LT(ae_grad_check(p, obj, batch, masks), 1e-5);
          }
}

TEST(Gradient, ZeroAtPerfectReconstruction) {
  const Dataset batch{{{1, 2}, {-3, 0.5}}, {0, 0}};
  const AEGrad g = ae_grad(AEParams(Matrix::identity(2), Matrix::identity(2)), PlainObjective{}, batch, Rng(0));
  EXPECT_EQ(max_abs(g.enc), 0.0);
  EXPECT_EQ(max_abs(g.dec), 0.0);
}

TEST(Gradient, TiedIsSumOfUntiedParts) {
  Rng rng(4);
  const Matrix e = gaussian(3, 5, rng);
  const Dataset batch = random_batch(5, 4, rng);
  for (Activation act : {Activation::Linear, Activation::Relu}) {
    const AEGrad tied = ae_grad(AEParams(e, act), PlainObjective{}, batch, Rng(0));
    const AEGrad untied = ae_grad(AEParams(e, e.transpose(), act), PlainObjective{}, batch, Rng(0));
    EXPECT_TRUE(tied.dec.empty());
    EXPECT_LT(frobenius_norm(tied.enc - (untied.enc + untied.dec.transpose())), 1e-12);
  }
}

TEST(Train, LineConverges) {
  SyntheticSpec spec{3, {{Matrix::from_rows({{1}, {0}, {0}}), 50}}, 0.0, 5};
  const Dataset d = gen_union(spec);
  Rng rng(6);
  const AEParams init = AEParams::init(3, 1, false, Activation::Linear, Skip::None, rng);
  TrainConfig cfg;
  cfg.step_size = 0.1;
  cfg.steps = 500;
  const TrainReport rep = train(init, cfg, d);
  EXPECT_LT(rep.loss_history.back(), 1e-6);
  EXPECT_EQ(rep.loss_history.size(), 500u);
  EXPECT_LT(rep.grad_check_max_rel_err, 1e-5);
}

TEST(Train, ZeroStepSizeKeepsParams) {
  Rng rng(7);
  const Dataset d = random_batch(4, 10, rng);
  const AEParams init = AEParams::init(4, 2, false, Activation::Relu, Skip::None, rng);
  TrainConfig cfg;
  cfg.step_size = 0.0;
  cfg.steps = 5;
  EXPECT_EQ(train(init, cfg, d).final_params.flat(), init.flat());
}

TEST(Train, DeterministicPerSeed) {
  Rng rng(8);
  const Dataset d = random_batch(5, 30, rng);
  const AEParams init = AEParams::init(5, 2, true, Activation::Relu, Skip::None, rng);
  TrainConfig cfg;
  cfg.steps = 50;
  cfg.batch = 8;
  cfg.objective = MaskedObjective{1, 2};
  cfg.seed = 9;
  cfg.momentum = 0.9;
  const TrainReport a = train(init, cfg, d), b = train(init, cfg, d);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(a.final_params.flat(), b.final_params.flat());
}

TEST(Train, InvalidConfigAndDivergence) {
  Rng rng(10);
  const Dataset d = random_batch(3, 5, rng);
  const AEParams init = AEParams::init(3, 2, false, Activation::Linear, Skip::None, rng);
  TrainConfig cfg;
  cfg.step_size = 2.0;
  EXPECT_THROW(train(init, cfg, d), Error);
  cfg.step_size = 1.0;
  cfg.steps = 200;
  const Dataset big{{{1e3, 1e3, 1e3}}, {0}};
  try {
    train(init, cfg, big);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Diverged);
  }
}

TEST(Train, LinearTiedBottleneckIsProjector) {
  Matrix basis(5, 2);
  basis(0, 0) = 1;
  basis(1, 1) = 1;
  SyntheticSpec spec{5, {{basis, 100}}, 0.01, 11};
  const Dataset d = gen_union(spec);
  Rng rng(12);
  TrainConfig cfg;
  cfg.step_size = 0.05;
  cfg.steps = 2000;
  cfg.momentum = 0.9;
  const TrainReport rep = train(AEParams::init(5, 2, true, Activation::Linear, Skip::None, rng), cfg, d);
  const Matrix& e = rep.final_params.enc();
  const Matrix p = e.transpose() * e;
  EXPECT_LT(max_abs(p * p - p), 1e-3);
}

TEST(Train, PushPullSeparatesLatents) {
  const std::size_t n = 16;
  Matrix q(n, 4);
  q(2, 0) = q(6, 1) = q(10, 2) = q(14, 3) = 1;
  SyntheticSpec spec{n, {{q.cols_range(0, 2), 60}, {q.cols_range(2, 2), 60}}, 0.05, 1, true};
  const Dataset d = gen_union(spec);
  double gap[2];
  for (int run = 0; run < 2; ++run) {
    Rng rng(11);
    TrainConfig cfg;
    cfg.step_size = 0.01;
    cfg.steps = 1500;
    cfg.momentum = 0.9;
    cfg.objective = PushPullObjective{10.0, 1.0, run ? 2.5 : 0.0, 1.0};
    const TrainReport rep = train(AEParams::init(n, 8, true, Activation::Relu, Skip::Subtract, rng), cfg, d);
    gap[run] = 0;
    for (const auto& s : d.samples)
      gap[run] += distance(forward(rep.final_params, s).latent, forward(rep.final_params, blur1d(s, 1.0)).latent);
  }
  EXPECT_GT(gap[1], gap[0]);
}

TEST(InitFromData, FarthestPointRows) {
  const Dataset d{{{2, 0}, {1.9, 0.1}, {0, 3}, {-1, 0}}, {0, 0, 1, 1}};
  const AEParams p = AEParams::init_from_data(3, false, Activation::Relu, Skip::None, d);
  EXPECT_NEAR(p.enc()(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(p.enc()(1, 0), -1.0, 1e-15);
  EXPECT_NEAR(p.enc()(2, 1), 1.0, 1e-15);
  EXPECT_EQ(p.dec(), p.enc().transpose());
  EXPECT_THROW(AEParams::init_from_data(5, false, Activation::Relu, Skip::None, d), Error);
}

TEST(Leakage, OneDimensionalEqualityCase) {
  const double alpha = 0.9, xs = 1.7;
  const Matrix di = Matrix::from_rows({{1}, {0}});
  const Matrix dj = Matrix::from_rows({{std::cos(alpha)}, {std::sin(alpha)}});
  const LeakageResult r = leakage_check(di, dj, Vector{xs, 0}, Vector{xs}, 0.0);
  EXPECT_NEAR(r.measured, std::cos(alpha) * xs, 1e-15);
  EXPECT_NEAR(r.bound, r.measured, 1e-15);
}

TEST(Leakage, OrthogonalBlocks) {
  const Matrix di = Matrix::from_rows({{1}, {0}, {0}});
  const Matrix dj = Matrix::from_rows({{0}, {1}, {0}});
  const Vector s = leakage_sample(di, dj, Vector{2.0}, Vector{0.5}, Vector{0.0});
  const LeakageResult r = leakage_check(di, dj, s, Vector{2.0}, 0.0);
  EXPECT_NEAR(r.measured, 0.0, 1e-15);
  EXPECT_NEAR(r.bound, 0.0, 1e-15);
}

TEST(Leakage, BasesAreOrthogonalComplements) {
  Rng rng(13);
  const Matrix di = gaussian(6, 2, rng), dj = gaussian(6, 2, rng);
  const LeakageBases b = leakage_bases(di, dj);
  ASSERT_EQ(b.shared.rows(), 2u);
  ASSERT_EQ(b.residual.rows(), 2u);
  EXPECT_LT(max_abs(b.shared * hstack(di, dj)), 1e-10);
  EXPECT_LT(max_abs(b.residual * di), 1e-10);
  EXPECT_LT(max_abs(b.residual * b.shared.transpose()), 1e-10);
}

TEST(Leakage, DeltaTooLarge) {
  const Matrix di = Matrix::from_rows({{1, 1}, {0, 0.1}, {0, 0}});
  try {
    leakage_check(di, Matrix::from_rows({{0}, {0}, {1}}), Vector{1, 0, 0}, Vector{1, 0}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DeltaTooLarge);
  }
}

TEST(Metrics, AurocAndF1) {
  EXPECT_NEAR(auroc(Vector{1, 2}, Vector{3, 1.5}), 0.75, 1e-15);
  EXPECT_NEAR(auroc(Vector{1, 2}, Vector{1, 2}), 0.5, 1e-15);
  const Threshold t = best_f1_threshold(Vector{0.1, 0.2, 0.3}, Vector{0.9, 0.8});
  EXPECT_NEAR(t.f1, 1.0, 1e-15);
  EXPECT_NEAR(f1_at(Vector{0.1, 0.2, 0.3}, Vector{0.9, 0.8}, t.threshold), 1.0, 1e-15);
  EXPECT_NEAR(f1_at(Vector{0.1, 0.9}, Vector{0.8}, 0.5), 2.0 / 3.0, 1e-15);
}

TEST(Metrics, RandomScoresGiveHalf) {
  Rng rng(14);
  double mean = 0;
  for (int t = 0; t < 1000; ++t) {
    Vector a(50), b(50);
    for (double& x : a) x = rng.uniform();
    for (double& x : b) x = rng.uniform();
    mean += auroc(a, b) / 1000.0;
  }
  EXPECT_NEAR(mean, 0.5, 0.05);
}

TEST(Metrics, PerfectUnionModel) {
  const double a = 2 * std::numbers::pi / 3;
  const Matrix d1 = ray(0), d2 = ray(a);
  SyntheticSpec spec{2, {{d1, 40}, {d2, 40}}, 0.0, 15, true};
  const Dataset d = gen_union(spec);
  const AEParams relu(hstack(d1, d2).transpose(), hstack(d1, d2), Activation::Relu);
  const CompactnessReport rep = compactness_metrics(relu, d, UnionProjector({d1, d2}));
  EXPECT_LT(rep.mean_off_union, 1e-12);
  EXPECT_EQ(rep.assignment_accuracy, 1.0);
}

TEST(Metrics, LinearBottleneckMissesOnPlaneAnomalies) {
  Matrix e(3, 2);
  e(0, 0) = e(1, 1) = 1;
  const Matrix d1 = Matrix::from_rows({{1}, {0}, {0}});
  const Matrix d2 = Matrix::from_rows({{-0.5}, {std::sqrt(3.0) / 2}, {0}});
  SyntheticSpec spec{3, {{d1, 40}, {d2, 40}}, 0.0, 16};
  const Dataset d = gen_union(spec);
  Dataset anomalies;
  Rng rng(17);
  for (int i = 0; i < 40; ++i) {
    anomalies.samples.push_back({rng.normal(), rng.normal(), 0.0});
    anomalies.labels.push_back(0);
  }
  const AEParams lin(e.transpose(), e);
  const CompactnessReport rep = compactness_metrics(lin, d, UnionProjector({d1, d2}), &anomalies);
  double worst = 0;
  for (const auto& s : anomalies.samples) {
    worst = std::max(worst, distance(forward(lin, s).recon, s));
    EXPECT_GT(project_union(UnionProjector({d1, d2}), forward(lin, s).recon).distance, 0.0);
  }
  EXPECT_LT(worst, 1e-12);
  ASSERT_TRUE(rep.anomaly_auroc.has_value());
  EXPECT_NEAR(*rep.anomaly_auroc, 0.5, 0.1);
}

TEST(Checkpoint, JsonRoundTrip) {
  Rng rng(18);
  const AEParams p(gaussian(2, 4, rng), gaussian(4, 2, rng), Activation::Relu, Skip::Subtract);
  const AEParams q = ae_from_json(json::parse(ae_to_json(p).dump()));
  EXPECT_EQ(q.flat(), p.flat());
  EXPECT_EQ(q.activation(), Activation::Relu);
  EXPECT_EQ(q.skip(), Skip::Subtract);
  const AEParams t(gaussian(2, 4, rng));
  EXPECT_TRUE(ae_from_json(ae_to_json(t)).tied());
}
