#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "poslab/linalg.hpp"
#include "poslab/rng.hpp"

namespace poslab {

struct ComponentSpec {
  Matrix basis;  ///< n×k, full column rank, k < n
  std::size_t count = 0;
};

struct SyntheticSpec {
  std::size_t ambient_dim = 0;
  std::vector<ComponentSpec> components;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  /// Draw |N(0,1)| coefficients so each component is a cone (rays for k = 1).
  bool nonnegative_coeffs = false;

  /// Throws InvalidSpec.
  void validate() const;
};

struct Dataset {
  std::vector<Vector> samples;
  std::vector<std::size_t> labels;

  std::size_t size() const { return samples.size(); }
  std::size_t dim() const { return samples.empty() ? 0 : samples.front().size(); }
  /// Throws InvalidSpec when empty, ragged, or labels.size() != samples.size().
  void validate() const;
  /// Samples with the given label, label kept.
  Dataset subset(std::size_t label) const;
  /// Concatenation, labels of `other` shifted by `label_offset`.
  void append(const Dataset& other, std::size_t label_offset = 0);
};

struct MaskWindow {
  std::size_t start = 0;
  std::size_t length = 1;
};

/// samples of component i are basis_i·x + ε; sample j of component i uses
/// the substream Rng(seed).split(i).split(j), so the result does not depend on
/// the thread count.
Dataset gen_union(const SyntheticSpec& spec);

/// count points on the unit circle at angles 2πj/count, radius 1 + σ·N(0,1).
Dataset gen_circle(std::size_t count, double noise_sigma, std::uint64_t seed);

/// Zeroes [start, start + length). Throws WindowOutOfRange.
Vector mask(std::span<const double> v, MaskWindow w);

/// Window length uniform in [wmin, wmax], start uniform over valid offsets.
std::pair<Vector, MaskWindow> random_mask(std::span<const double> v, std::size_t wmin, std::size_t wmax,
                                          Rng& rng);

/// Normalized Gaussian kernel truncated at ceil(3σ), half-sample symmetric
/// boundary. σ = 0 returns v.
Vector blur1d(std::span<const double> v, double sigma);

/// One row per sample, trailing integer label column.
void write_csv(std::ostream& os, const Dataset& d);
Dataset read_csv(std::istream& is);

namespace serial {
Dataset gen_union(const SyntheticSpec& spec);
}

}  // namespace poslab
