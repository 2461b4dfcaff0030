#pragma once

#include <vector>

#include "poslab/io.hpp"
#include "poslab/linalg.hpp"

namespace poslab {

/// Affine flat {offset + basis·y}. offset is stored as the point of the
/// flat nearest the origin, so it is orthogonal to span(basis).
struct Flat {
  Matrix basis;  ///< n×k orthonormal columns
  Vector offset; ///< length n

  Vector project(std::span<const double> s) const;
};

inline constexpr double kDefaultTieTol = 1e-8;
inline constexpr double kOrbitMergeAngle = 1e-6;

class UnionProjector {
 public:
  /// Components through the origin. Throws NotOrthonormal when a basis
  /// deviates from orthonormality by more than 1e-10.
  explicit UnionProjector(const std::vector<Matrix>& bases, double tie_tol = kDefaultTieTol);
  UnionProjector(std::vector<Flat> flats, double tie_tol);

  std::size_t ambient_dim() const { return flats_.front().basis.rows(); }
  std::size_t size() const { return flats_.size(); }
  const std::vector<Flat>& components() const { return flats_; }
  const Flat& component(std::size_t i) const { return flats_.at(i); }
  double tie_tol() const { return tie_tol_; }

 private:
  std::vector<Flat> flats_;
  double tie_tol_;
};

struct ProjectionResult {
  Vector point;
  std::size_t component_index = 0;
  double distance = 0.0;
  /// Second-best distance within tie_tol of the best: s is outside dom(P).
  bool is_tie = false;
};

/// basis·basisᵀ·s
Vector project_component(const Matrix& basis, std::span<const double> s);
ProjectionResult project_union(const UnionProjector& p, std::span<const double> s);
std::vector<ProjectionResult> project_batch(const UnionProjector& p, const std::vector<Vector>& samples);

struct IsometryT {
  Matrix rotation;  ///< n×n orthogonal
  Vector offset;    ///< length n

  /// Throws NotOrthonormal when ‖RᵀR − I‖_F > 1e-10.
  IsometryT(Matrix rotation, Vector offset = {});
  static IsometryT identity(std::size_t n);

  std::size_t dim() const { return rotation.rows(); }
  Vector apply(std::span<const double> x) const;
  Vector apply_inverse(std::span<const double> y) const;
  IsometryT inverse() const;
};

/// Projector onto T(⋃ M_i).
UnionProjector conjugate(const UnionProjector& p, const IsometryT& t);

/// Cross-domain reuse of a projector: P_j(s) = T ∘ P_i ∘ T⁻¹(s).
class Transfer {
 public:
  Transfer(UnionProjector pi, IsometryT t);
  ProjectionResult operator()(std::span<const double> s) const;

 private:
  UnionProjector pi_;
  IsometryT t_;
};

Transfer transfer(const UnionProjector& pi, const IsometryT& t);

/// Projector over {g(M_i) : g ∈ group, i}; the identity is added when
/// missing and components within kOrbitMergeAngle are merged.
UnionProjector orbit(const UnionProjector& p, const std::vector<IsometryT>& group);

/// P_B(s) + phi·(P_R(s) − P_R(P_B(s))) for single-component P_B, P_R.
Vector lemma1_decompose(const UnionProjector& p_b, const UnionProjector& p_r, const Matrix& phi,
                        std::span<const double> s);

/// For linear M = M_B + M_R with M_R transversal to M_B, the n×n map
/// W(RᵀW)⁻¹Rᵀ (W spanning M ∩ M_B^⊥) that makes lemma1_decompose equal the
/// direct projection onto M.
Matrix lemma1_linear_phi(const Matrix& base_basis, const Matrix& residual_basis);

json projector_to_json(const UnionProjector& p);
UnionProjector projector_from_json(const json& j);

namespace serial {
std::vector<ProjectionResult> project_batch(const UnionProjector& p, const std::vector<Vector>& samples);
}

}  // namespace poslab
