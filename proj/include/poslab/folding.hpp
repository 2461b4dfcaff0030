#pragma once

#include <vector>

#include "poslab/autoenc.hpp"
#include "poslab/datagen.hpp"
#include "poslab/io.hpp"
#include "poslab/projector.hpp"

namespace poslab {

/// Orthogonal transform T(x) = R x + o with R = cayley(skew).
struct TransformParams {
  Matrix skew;  ///< n×n antisymmetric
  bool learn_offset = false;
  Vector offset;

  static TransformParams identity(std::size_t n);
  std::size_t dim() const { return skew.rows(); }
  /// Throws InvalidArgument when skew + skewᵀ ≠ 0 (1e-12) or shapes differ.
  void validate() const;
};

/// (I − K/2)⁻¹(I + K/2)
Matrix cayley(const Matrix& skew);
IsometryT to_isometry(const TransformParams& t);

struct FoldValue {
  double loss = 0.0;
  bool tie = false;
};

/// ‖T⁻¹s − P(T⁻¹s)‖²
FoldValue fold_loss(const TransformParams& t, const UnionProjector& p, std::span<const double> s);
/// ‖s − T(P(T⁻¹s))‖²
FoldValue rep_loss(const TransformParams& t, const UnionProjector& p, std::span<const double> s);

struct FoldGrad {
  Matrix skew;    ///< antisymmetric: entry (i,j) is ∂L/∂K_ij with K_ji = −K_ij tied
  Vector offset;  ///< zero unless learn_offset
};

/// Gradient of fold_loss with the selected component held fixed.
FoldGrad fold_grad(const TransformParams& t, const UnionProjector& p, std::span<const double> s);

/// Means over a dataset; `ties` counts tie-flagged samples.
struct FoldBatch {
  double loss = 0.0;
  std::size_t ties = 0;
  FoldGrad grad;
};
FoldBatch fold_batch(const TransformParams& t, const UnionProjector& p, const Dataset& data);

struct FoldReport {
  TransformParams params;
  std::vector<double> loss_history;
  double final_loss = 0.0;
};

/// Gradient descent on the skew entries (and offset when enabled). Uses
/// step_size, steps, batch, seed and momentum of cfg; the objective field
/// is ignored. Throws Diverged.
FoldReport train_fold(const TransformParams& init, const UnionProjector& p, const Dataset& data, const TrainConfig& cfg);

/// Applies T⁻¹ to every sample, labels kept.
Dataset translate(const TransformParams& t, const Dataset& samples);
/// Applies T to every sample.
Dataset translate_back(const TransformParams& t, const Dataset& samples);

struct Alignment {
  Vector aligned;
  double fold_gap = 0.0;
  TransformParams params;
};

/// Trains a fresh transform on {s} alone; aligned = T⁻¹s.
Alignment align_explain(std::span<const double> s, const UnionProjector& p, const TrainConfig& cfg);

/// Rotation angle of a 2×2 rotation matrix, in (−π, π].
double rotation_angle_2d(const Matrix& r);

json transform_to_json(const TransformParams& t);
TransformParams transform_from_json(const json& j);

}  // namespace poslab
