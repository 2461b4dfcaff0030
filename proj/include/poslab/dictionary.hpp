#pragma once

#include <cstdint>
#include <vector>

#include "poslab/io.hpp"
#include "poslab/linalg.hpp"

namespace poslab {

using SupportSet = std::vector<std::size_t>;

/// Atom matrix with unit columns and a partition of the atoms into groups.
class Dictionary {
 public:
  /// Columns are rescaled to unit norm (zero columns rejected). An empty
  /// group list means one group per atom.
  explicit Dictionary(const Matrix& atoms, std::vector<SupportSet> groups = {});

  const Matrix& atoms() const { return atoms_; }
  const std::vector<SupportSet>& groups() const { return groups_; }
  std::size_t ambient_dim() const { return atoms_.rows(); }
  std::size_t size() const { return atoms_.cols(); }
  Matrix block(std::size_t group) const;

 private:
  Matrix atoms_;
  std::vector<SupportSet> groups_;
};

inline constexpr std::uint64_t kRicEnumerationCap = 1'000'000;

/// max_{i≠j} |⟨d_i, d_j⟩|. Throws TooFewAtoms when N < 2.
double mutual_coherence(const Dictionary& d);

/// Exact δ_k by enumerating every support of size k. Throws
/// EnumerationTooLarge when C(N, k) exceeds kRicEnumerationCap.
double ric(const Dictionary& d, std::size_t k);

/// σ_max(D_iᵀ D_j).
double roc(const Matrix& di, const Matrix& dj);

/// max over group pairs of rank([D_Λi D_Λj]). Throws TooFewGroups.
std::size_t secant_kmax(const Dictionary& d);
bool uniqueness_ok(const Dictionary& d, std::size_t n);

/// Smallest and largest eigenvalue of D_Λᵀ D_Λ.
std::pair<double, double> gram_extremes(const Matrix& atoms, const SupportSet& support);

/// {mu, delta_k: {k: value}, theta: [[...]], k_max, uniqueness}
json diagnostics_report(const Dictionary& d, const std::vector<std::size_t>& ks);

namespace serial {
double ric(const Dictionary& d, std::size_t k);
}

}  // namespace poslab
