#include "poslab/complexity.hpp"

#include <cmath>
#include <numbers>
#include <queue>

namespace poslab {

void ComplexitySpec::validate() const {
  if (cover_M == 0 || cover_Mi == 0 || num_components == 0)
    throw Error(Errc::InvalidSpec, "covering numbers and component count must be positive");
  for (auto g : group_sizes)
    if (g == 0) throw Error(Errc::InvalidSpec, "group sizes must be positive");
}

void ReachSpec::validate() const {
  if (!(volume > 0.0) || !(reach > 0.0) || !(epsilon > 0.0) || intrinsic_dim == 0)
    throw Error(Errc::InvalidSpec, "reach spec needs positive volume, dimension, reach and epsilon");
  if (!(epsilon < reach)) throw Error(Errc::EpsilonExceedsReach, "epsilon must be below the reach");
}

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) throw Error(Errc::Overflow, "sample-complexity product overflows 64 bits");
  return r;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) throw Error(Errc::Overflow, "sample-complexity sum overflows 64 bits");
  return r;
}

}  // namespace

std::uint64_t n_classical(const ComplexitySpec& spec) {
  spec.validate();
  std::uint64_t n = spec.cover_M;
  for (auto g : spec.group_sizes) n = checked_mul(n, g);
  return n;
}

std::uint64_t n_dnn(const ComplexitySpec& spec) {
  spec.validate();
  std::uint64_t n = spec.cover_M;
  for (auto g : spec.group_sizes) n = checked_add(n, checked_mul(g, spec.cover_Mi));
  return n;
}

namespace {

using Neighbors = std::vector<std::vector<std::uint32_t>>;

void check_points(const Dataset& points, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(Errc::InvalidArgument, "epsilon must be positive");
  points.validate();
  if (points.size() > UINT32_MAX) throw Error(Errc::InvalidArgument, "too many points");
}

bool within(std::span<const double> a, std::span<const double> b, double eps2) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
    if (acc > eps2) return false;
  }
  return true;
}

std::vector<std::uint32_t> row_neighbors(const Dataset& points, std::size_t i, double eps2) {
  std::vector<std::uint32_t> out;
  for (std::size_t j = 0; j < points.size(); ++j)
    if (within(points.samples[i], points.samples[j], eps2)) out.push_back(static_cast<std::uint32_t>(j));
  return out;
}

std::vector<std::size_t> greedy(const Neighbors& nb) {
  const std::size_t n = nb.size();
  std::vector<char> covered(n, 0);
  // max-heap on (gain, -index); gains only shrink, so stale keys are upper bounds
  using Key = std::pair<std::size_t, std::size_t>;
  auto cmp = [](const Key& a, const Key& b) { return a.first != b.first ? a.first < b.first : a.second > b.second; };
  std::priority_queue<Key, std::vector<Key>, decltype(cmp)> heap(cmp);
  for (std::size_t i = 0; i < n; ++i) heap.push({nb[i].size(), i});
  std::vector<std::size_t> centers;
  std::size_t remaining = n;
  while (remaining > 0) {
    auto [gain, i] = heap.top();
    heap.pop();
    std::size_t fresh = 0;
    for (auto j : nb[i]) fresh += covered[j] ? 0 : 1;
    if (fresh != gain) {
      if (fresh > 0) heap.push({fresh, i});
      continue;
    }
    centers.push_back(i);
    for (auto j : nb[i]) covered[j] = 1;
    remaining -= fresh;
  }
  return centers;
}

}  // namespace

std::vector<std::size_t> cover_centers(const Dataset& points, double epsilon) {
  check_points(points, epsilon);
  const double eps2 = epsilon * epsilon;
  Neighbors nb(points.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) nb[static_cast<std::size_t>(i)] = row_neighbors(points, static_cast<std::size_t>(i), eps2);
  return greedy(nb);
}

namespace serial {
std::vector<std::size_t> cover_centers(const Dataset& points, double epsilon) {
  check_points(points, epsilon);
  const double eps2 = epsilon * epsilon;
  Neighbors nb(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) nb[i] = row_neighbors(points, i, eps2);
  return greedy(nb);
}
}  // namespace serial

std::size_t covering_number(const Dataset& points, double epsilon) { return cover_centers(points, epsilon).size(); }

double ball_volume(std::size_t k, double r) {
  const double kd = static_cast<double>(k);
  return std::pow(std::numbers::pi, kd / 2.0) / std::tgamma(kd / 2.0 + 1.0) * std::pow(r, kd);
}

double niyogi_bound(const ReachSpec& spec) {
  spec.validate();
  const double theta = std::asin(spec.epsilon / (8.0 * spec.reach));
  const double c = std::pow(std::cos(theta), static_cast<double>(spec.intrinsic_dim));
  return spec.volume / (c * ball_volume(spec.intrinsic_dim, spec.epsilon));
}

CoverAudit union_cover_audit(const std::vector<Dataset>& components, double epsilon) {
  if (components.empty()) throw Error(Errc::InvalidArgument, "union_cover_audit needs at least one component");
  CoverAudit a;
  Dataset pooled;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (components[i].dim() != components.front().dim())
      throw Error(Errc::DimensionMismatch, "components have different ambient dimensions");
    a.rhs += covering_number(components[i], epsilon);
    pooled.append(components[i], i);
  }
  a.lhs = covering_number(pooled, epsilon);
  return a;
}

json complexity_report(const ComplexitySpec& spec, double epsilon, std::size_t cover, std::optional<double> bound) {
  json layers = json::array();
  ComplexitySpec partial = spec;
  partial.group_sizes.clear();
  for (auto g : spec.group_sizes) {
    partial.group_sizes.push_back(g);
    layers.push_back({{"size", g}, {"classical", n_classical(partial)}, {"dnn", n_dnn(partial)}});
  }
  json j{{"epsilon", epsilon}, {"cover", cover}};
  j["bound"] = bound ? json(*bound) : json(nullptr);
  j["bound_note"] = "up to the absorbed constant (set to 1)";
  j["cover_note"] = "greedy cover over sample points, not the optimal cover";
  j["classical"] = n_classical(spec);
  j["dnn"] = n_dnn(spec);
  j["layers"] = std::move(layers);
  return j;
}

}  // namespace poslab
