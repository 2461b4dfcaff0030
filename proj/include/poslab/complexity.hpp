#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "poslab/datagen.hpp"
#include "poslab/io.hpp"

namespace poslab {

struct ComplexitySpec {
  std::uint64_t cover_M = 1;                 ///< C_ε(M)
  std::uint64_t cover_Mi = 1;                ///< C_ε(M_{D_i})
  std::vector<std::uint64_t> group_sizes;    ///< |G_ℓ| or C_ε(G_ℓ) per layer
  std::uint64_t num_components = 1;

  /// Throws InvalidSpec unless every count is positive.
  void validate() const;
};

struct ReachSpec {
  double volume = 0.0;
  std::size_t intrinsic_dim = 1;
  double reach = 1.0;
  double epsilon = 0.1;

  /// Throws InvalidSpec, or EpsilonExceedsReach when epsilon >= reach.
  void validate() const;
};

/// C_ε(M)·∏ group_sizes. Throws Overflow.
std::uint64_t n_classical(const ComplexitySpec& spec);
/// C_ε(M) + Σ group_sizes·cover_Mi. Throws Overflow.
std::uint64_t n_dnn(const ComplexitySpec& spec);

/// Greedy ε-cover using the sample points as candidate centers: each round
/// picks the point whose closed ε-ball holds the most uncovered points,
/// lowest index on ties. At most a ln(N)+1 factor above the optimal
/// sample-centered cover; every point ends within ε of a center.
std::size_t covering_number(const Dataset& points, double epsilon);
/// Same, returning the chosen center indices in pick order.
std::vector<std::size_t> cover_centers(const Dataset& points, double epsilon);

/// volume / (cos^k(asin(ε/8τ))·vol_k(ε)), big-O constant fixed to 1.
double niyogi_bound(const ReachSpec& spec);

/// Volume of the Euclidean k-ball of radius r.
double ball_volume(std::size_t k, double r);

struct CoverAudit {
  std::size_t lhs = 0;  ///< cover of the pooled points
  std::size_t rhs = 0;  ///< sum of per-component covers
};
CoverAudit union_cover_audit(const std::vector<Dataset>& components, double epsilon);

/// {epsilon, cover, bound, classical, dnn, layers:[{size, classical, dnn}]}; the
/// per-layer breakdown gives running values after each layer.
json complexity_report(const ComplexitySpec& spec, double epsilon, std::size_t cover, std::optional<double> bound);

namespace serial {
std::vector<std::size_t> cover_centers(const Dataset& points, double epsilon);
}

}  // namespace poslab
