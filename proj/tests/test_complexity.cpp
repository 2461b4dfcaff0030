#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "poslab/complexity.hpp"

using namespace poslab;

namespace {

bool every_point_covered(const Dataset& d, const std::vector<std::size_t>& centers, double eps) {
  for (const auto& p : d.samples) {
    bool ok = false;
    for (auto c : centers)
      if (sq_norm(sub(p, d.samples[c])) <= eps * eps) ok = true;
    if (!ok) return false;
  }
  return true;
}

Dataset plane_points(const Matrix& basis, std::size_t count, std::uint64_t seed) {
  return gen_union(SyntheticSpec{3, {{basis, count}}, 0.0, seed});
}

}  // namespace

TEST(Calculators, Examples) {
  EXPECT_EQ(n_classical(ComplexitySpec{100, 10, {}, 1}), 100u);
  EXPECT_EQ(n_dnn(ComplexitySpec{100, 10, {}, 1}), 100u);
  EXPECT_EQ(n_classical(ComplexitySpec{100, 10, {10, 10}, 2}), 10000u);
  EXPECT_EQ(n_dnn(ComplexitySpec{100, 10, {10, 10}, 2}), 300u);
  EXPECT_EQ(n_classical(ComplexitySpec{37, 3, {1}, 1}), 37u);
}

TEST(Calculators, OverflowAndInvalid) {
  const std::uint64_t big = std::numeric_limits<std::uint64_t>::max() / 2;
  try {
    n_classical(ComplexitySpec{big, 1, {3}, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Overflow);
  }
  EXPECT_THROW(n_dnn(ComplexitySpec{big, big, {2}, 1}), Error);
  EXPECT_THROW(n_classical(ComplexitySpec{0, 1, {}, 1}), Error);
  EXPECT_THROW(n_dnn(ComplexitySpec{1, 1, {0}, 1}), Error);
}

TEST(Calculators, DnnBelowClassicalWhenConditionHolds) {
  for (std::uint64_t c : {5u, 50u, 500u})
    for (std::uint64_t g : {2u, 4u, 8u})
      for (std::uint64_t mi : {1u, 10u, 100u}) {
        const ComplexitySpec s{c, mi, {g, g, g}, 2};
        const double prod = static_cast<double>(g * g * g), sum = 3.0 * static_cast<double>(g);
        if (static_cast<double>(mi) <= static_cast<double>(c) * (prod - 1) / sum) EXPECT_LE(n_dnn(s), n_classical(s));
      }
}

TEST(Cover, Examples) {
  Dataset same{{{1, 1}, {1, 1}, {1, 1}}, {0, 0, 0}};
  EXPECT_EQ(covering_number(same, 0.1), 1u);
  const Dataset circle = gen_circle(50, 0.0, 0);
  EXPECT_EQ(covering_number(circle, 2.0), 1u);
  const Dataset big = gen_circle(10000, 0.0, 0);
  const double c = static_cast<double>(covering_number(big, 0.1));
  EXPECT_NEAR(c, std::numbers::pi / 0.1, 0.1 * std::numbers::pi / 0.1);
}

TEST(Cover, CoversEveryPointAndMatchesSerial) {
  const Dataset d = gen_union(SyntheticSpec{3, {{Matrix::from_rows({{1, 0}, {0, 1}, {0, 0}}), 800}}, 0.0, 2});
  for (double eps : {0.2, 0.5, 1.0}) {
    const auto a = cover_centers(d, eps);
    EXPECT_EQ(a, serial::cover_centers(d, eps));
    EXPECT_TRUE(every_point_covered(d, a, eps));
  }
}

TEST(Cover, MonotoneInEpsilon) {
  const Dataset d = gen_circle(2000, 0.05, 3);
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  for (double eps : {0.02, 0.05, 0.1, 0.2, 0.4, 0.8}) {
    const std::size_t c = covering_number(d, eps);
    EXPECT_LE(c, prev);
    prev = c;
  }
}

TEST(ReachBound, HandEvaluation) {
  const ReachSpec s{2 * std::numbers::pi, 1, 1.0, 0.1};
  const double want = 2 * std::numbers::pi / (std::cos(std::asin(0.0125)) * 0.2);
  EXPECT_NEAR(niyogi_bound(s), want, 1e-12);
  EXPECT_NEAR(niyogi_bound(s), 31.4, 0.1);
}

TEST(ReachBound, MonotoneTowardReachAndScaling) {
  double prev = 0;
  for (double tau : {10.0, 2.0, 1.0, 0.5, 0.21}) {
    const double b = niyogi_bound(ReachSpec{1.0, 2, tau, 0.2});
    EXPECT_GT(b, prev);
    prev = b;
  }
  for (std::size_t k : {1u, 2u, 3u}) {
    const double r = niyogi_bound(ReachSpec{1.0, k, 1.0, 0.01}) / niyogi_bound(ReachSpec{1.0, k, 1.0, 0.02});
    EXPECT_NEAR(r, std::pow(2.0, static_cast<double>(k)), 0.05 * std::pow(2.0, static_cast<double>(k)));
  }
  try {
    niyogi_bound(ReachSpec{1.0, 1, 0.1, 0.2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EpsilonExceedsReach);
  }
}

TEST(BallVolume, KnownValues) {
  EXPECT_NEAR(ball_volume(1, 0.5), 1.0, 1e-15);
  EXPECT_NEAR(ball_volume(2, 1.0), std::numbers::pi, 1e-14);
  EXPECT_NEAR(ball_volume(3, 2.0), 4.0 / 3.0 * std::numbers::pi * 8, 1e-12);
}

TEST(UnionAudit, Examples) {
  Dataset a = gen_circle(200, 0.0, 0);
  Dataset b = a;
  for (auto& p : b.samples) p[0] += 100.0;
  const CoverAudit far = union_cover_audit({a, b}, 0.3);
  EXPECT_EQ(far.lhs, far.rhs);
  const CoverAudit same = union_cover_audit({a, a}, 0.3);
  EXPECT_EQ(same.lhs, covering_number(a, 0.3));
  EXPECT_EQ(same.rhs, 2 * same.lhs);
}

TEST(UnionAudit, OverlappingPlanes) {
  const Matrix p1 = Matrix::from_rows({{1, 0}, {0, 1}, {0, 0}});
  const Matrix p2 = Matrix::from_rows({{1, 0}, {0, 0}, {0, 1}});
  for (std::uint64_t t = 0; t < 100; ++t) {
    const CoverAudit c = union_cover_audit({plane_points(p1, 60, t), plane_points(p2, 60, 1000 + t)}, 0.8);
    EXPECT_LE(c.lhs, c.rhs + 2);
  }
}

TEST(Report, Layout) {
  const json r = complexity_report(ComplexitySpec{100, 10, {10, 10}, 2}, 0.1, 31, 31.4);
  EXPECT_EQ(r["classical"].get<std::uint64_t>(), 10000u);
  EXPECT_EQ(r["dnn"].get<std::uint64_t>(), 300u);
  ASSERT_EQ(r["layers"].size(), 2u);
  EXPECT_EQ(r["layers"][0]["classical"].get<std::uint64_t>(), 1000u);
  EXPECT_EQ(r["layers"][0]["dnn"].get<std::uint64_t>(), 200u);
  EXPECT_TRUE(r.contains("bound_note"));
  EXPECT_TRUE(complexity_report(ComplexitySpec{1, 1, {}, 1}, 0.1, 1, std::nullopt)["bound"].is_null());
}
