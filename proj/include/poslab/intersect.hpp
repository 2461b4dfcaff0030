#pragma once

#include <vector>

#include "poslab/linalg.hpp"
#include "poslab/projector.hpp"

namespace poslab {

struct BranchState {
  Vector z_i;
  Vector z_j;
  std::size_t iter = 0;
};

struct RefineConfig {
  double eps = 1e-9;
  std::size_t max_iter = 2000;
  double gap_tol = 1e-8;

  /// Throws InvalidConfig.
  void validate() const;
};

/// a·(aᵀb)/(aᵀa + eps)
Vector cross_project(std::span<const double> a, std::span<const double> b, double eps);

/// One coupled update: z_i ← P_i(cross_project(z_j, z_i)), z_j ← P_j(cross_project(z_i, z_j)).
BranchState coupled_step(const UnionProjector& pi, const UnionProjector& pj, const BranchState& state, double eps);

struct RefineResult {
  Vector z_star;
  std::vector<double> gap_history;  ///< ‖z_i − z_j‖ at iteration 0, 1, ...
  bool converged = false;
  std::vector<BranchState> trace;   ///< state after each iteration, starting with z⁰
};

/// Iterates coupled_step from z⁰ = (P_i(s), P_j(s)). The gap is checked
/// before each update, so inputs on the intersection are returned untouched.
RefineResult coupled_refine(const UnionProjector& pi, const UnionProjector& pj, std::span<const double> s,
                            const RefineConfig& cfg);

struct Decomposition {
  Vector r_i;
  Vector r_j;
  Vector s_hat;          ///< z* + r_i + r_j
  double recon_residual = 0.0;  ///< ‖s − ŝ‖
  bool degenerate = false;      ///< ‖z*‖ < 1e-12: r_i = P_i(s), r_j = P_j(s)
};

/// r_i = P_i(s) minus its component along z*/‖z*‖; r_j likewise.
Decomposition residual_decompose(std::span<const double> s, std::span<const double> z_star, const UnionProjector& pi,
                                 const UnionProjector& pj);

enum class Branch { I, J };

/// ‖s − (z* + r_i + r_j)‖² + λ·(‖r_j‖² if label = I, ‖r_i‖² if label = J)
double intersect_loss(std::span<const double> s, std::span<const double> z_star, std::span<const double> r_i,
                      std::span<const double> r_j, Branch label, double lambda);

struct IntersectGrad {
  Vector z_star;
  Vector r_i;
  Vector r_j;
};
IntersectGrad intersect_loss_grad(std::span<const double> s, std::span<const double> z_star,
                                  std::span<const double> r_i, std::span<const double> r_j, Branch label,
                                  double lambda);

struct MultiBranch {
  Matrix alphas;              ///< T×T Gram matrix α_qt = r_qᵀ r_t
  std::vector<Vector> shared; ///< r̃_q = Σ_t r_t (r_tᵀ r_q)/(r_tᵀ r_t + eps), self term included
};
MultiBranch multi_branch_step(const std::vector<Vector>& residuals, double eps = 1e-9);

/// Two-branch cross-aligned residuals: r̃_i = r_i(r_iᵀr_j)/(r_iᵀr_i + eps), r̃_j symmetric.
std::pair<Vector, Vector> pairwise_residual_step(std::span<const double> r_i, std::span<const double> r_j,
                                                 double eps = 1e-9);

}  // namespace poslab
