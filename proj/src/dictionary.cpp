#include "poslab/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <omp.h>

namespace poslab {

Dictionary::Dictionary(const Matrix& atoms, std::vector<SupportSet> groups)
    : atoms_(atoms), groups_(std::move(groups)) {
  if (atoms_.empty() || !all_finite(atoms_)) throw Error(Errc::InvalidArgument, "dictionary atoms empty or non-finite");
  for (std::size_t j = 0; j < atoms_.cols(); ++j) {
    Vector c = atoms_.col(j);
    const double len = norm(c);
    if (len == 0.0) throw Error(Errc::InvalidArgument, "dictionary atom " + std::to_string(j) + " is zero");
    atoms_.set_col(j, scale(1.0 / len, c));
  }
  const std::size_t n_atoms = atoms_.cols();
  if (groups_.empty()) {
    for (std::size_t j = 0; j < n_atoms; ++j) groups_.push_back({j});
    return;
  }
  std::vector<int> seen(n_atoms, 0);
  for (const auto& g : groups_) {
    if (g.empty()) throw Error(Errc::InvalidArgument, "empty atom group");
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] >= n_atoms) throw Error(Errc::InvalidArgument, "group index out of range");
      if (i > 0 && g[i] <= g[i - 1]) throw Error(Errc::InvalidArgument, "group indices must be strictly increasing");
      ++seen[g[i]];
    }
  }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; }))
    throw Error(Errc::InvalidArgument, "groups must partition the atom indices");
}

Matrix Dictionary::block(std::size_t group) const {
  if (group >= groups_.size()) throw Error(Errc::InvalidArgument, "group index out of range");
  return atoms_.select_cols(groups_[group]);
}

double mutual_coherence(const Dictionary& d) {
  if (d.size() < 2) throw Error(Errc::TooFewAtoms, "mutual coherence needs at least 2 atoms");
  const Matrix g = mul_transpose(d.atoms(), d.atoms());
  double mu = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = i + 1; j < g.cols(); ++j) mu = std::max(mu, std::abs(g(i, j)));
  return std::min(mu, 1.0);
}

std::pair<double, double> gram_extremes(const Matrix& atoms, const SupportSet& support) {
  const Vector s = singular_values(atoms.select_cols(support));
  const double hi = s.front() * s.front();
  // more atoms than rows: the Gram matrix is singular
  const double lo = support.size() > atoms.rows() ? 0.0 : s.back() * s.back();
  return {lo, hi};
}

namespace {

std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // r * (n - k + i) / i stays integral at each step; r <= cap keeps it in range
    const std::uint64_t next = r * (n - k + i) / i;
    if (next > cap) return cap + 1;
    r = static_cast<std::uint64_t>(next);
  }
  return r;
}

/// Lexicographic combination with the given rank.
SupportSet unrank(std::uint64_t rank, std::size_t n, std::size_t k) {
  SupportSet c;
  std::size_t x = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (;; ++x) {
      const std::uint64_t below = binomial_capped(n - x - 1, k - i - 1, kRicEnumerationCap);
      if (rank < below) break;
      rank -= below;
    }
    c.push_back(x++);
  }
  return c;
}

bool next_combination(SupportSet& c, std::size_t n) {
  const std::size_t k = c.size();
  for (std::size_t i = k; i-- > 0;) {
    if (c[i] < n - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

double support_delta(const Matrix& atoms, const SupportSet& s) {
  auto [lo, hi] = gram_extremes(atoms, s);
  return std::max(hi - 1.0, 1.0 - lo);
}

std::uint64_t check_ric_args(const Dictionary& d, std::size_t k) {
  if (k < 1 || k > d.size()) throw Error(Errc::InvalidArgument, "ric: k must lie in [1, N]");
  const std::uint64_t total = binomial_capped(d.size(), k, kRicEnumerationCap);
  if (total > kRicEnumerationCap)
    throw Error(Errc::EnumerationTooLarge, "ric: C(" + std::to_string(d.size()) + ", " + std::to_string(k) +
                                               ") supports exceeds the enumeration cap of 1e6");
  return total;
}

}  // namespace

double ric(const Dictionary& d, std::size_t k) {
  const std::uint64_t total = check_ric_args(d, k);
  double best = 0.0;
#pragma omp parallel reduction(max : best)
  {
    const auto nthreads = static_cast<std::uint64_t>(omp_get_num_threads());
    const auto tid = static_cast<std::uint64_t>(omp_get_thread_num());
    const std::uint64_t lo = total * tid / nthreads;
    const std::uint64_t hi = total * (tid + 1) / nthreads;
    if (lo < hi) {
      SupportSet c = unrank(lo, d.size(), k);
      for (std::uint64_t r = lo; r < hi; ++r) {
        best = std::max(best, support_delta(d.atoms(), c));
        next_combination(c, d.size());
      }
    }
  }
  return best;
}

double serial::ric(const Dictionary& d, std::size_t k) {
  check_ric_args(d, k);
  SupportSet c(k);
  std::iota(c.begin(), c.end(), 0);
  double best = 0.0;
  do {
    best = std::max(best, support_delta(d.atoms(), c));
  } while (next_combination(c, d.size()));
  return best;
}

double roc(const Matrix& di, const Matrix& dj) {
  if (di.rows() != dj.rows()) throw Error(Errc::DimensionMismatch, "roc: blocks have different ambient dimension");
  return singular_values(mul_transpose(di, dj)).front();
}

std::size_t secant_kmax(const Dictionary& d) {
  const auto& groups = d.groups();
  if (groups.size() < 2) throw Error(Errc::TooFewGroups, "secant_kmax needs at least 2 groups");
  std::size_t kmax = 0;
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (std::size_t j = i + 1; j < groups.size(); ++j)
      kmax = std::max(kmax, numerical_rank(hstack(d.block(i), d.block(j)), 1e-9));
  return kmax;
}

bool uniqueness_ok(const Dictionary& d, std::size_t n) { return n >= secant_kmax(d); }

json diagnostics_report(const Dictionary& d, const std::vector<std::size_t>& ks) {
  json report;
  report["mu"] = mutual_coherence(d);
  json deltas = json::object();
  for (auto k : ks) deltas[std::to_string(k)] = ric(d, k);
  report["delta_k"] = deltas;
  const std::size_t g = d.groups().size();
  json theta = json::array();
  for (std::size_t i = 0; i < g; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < g; ++j) row.push_back(i == j ? 0.0 : roc(d.block(i), d.block(j)));
    theta.push_back(row);
  }
  report["theta"] = theta;
  if (g >= 2) {
    report["k_max"] = secant_kmax(d);
    report["uniqueness"] = uniqueness_ok(d, d.ambient_dim());
  } else {
    report["k_max"] = nullptr;
    report["uniqueness"] = nullptr;
  }
  return report;
}

}  // namespace poslab
