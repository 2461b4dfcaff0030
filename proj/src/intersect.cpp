#include "poslab/intersect.hpp"

#include <cmath>

namespace poslab {

void RefineConfig::validate() const {
  if (!(eps > 0.0) || eps > 1e-6) throw Error(Errc::InvalidConfig, "eps must lie in (0, 1e-6]");
  if (!(gap_tol >= 1e-12)) throw Error(Errc::InvalidConfig, "gap_tol must be >= 1e-12");
  if (max_iter < 1) throw Error(Errc::InvalidConfig, "max_iter must be >= 1");
}

Vector cross_project(std::span<const double> a, std::span<const double> b, double eps) {
  const double denom = dot(a, a) + eps;
  if (denom == 0.0) return Vector(a.size(), 0.0);
  return scale(dot(a, b) / denom, a);
}

namespace {

void check_pair(const UnionProjector& pi, const UnionProjector& pj, std::size_t n) {
  if (pi.size() != 1 || pj.size() != 1)
    throw Error(Errc::InvalidArgument, "coupled refinement needs single-component projectors");
  if (pi.ambient_dim() != n || pj.ambient_dim() != n)
    throw Error(Errc::DimensionMismatch, "projector and sample dimensions differ");
}

}  // namespace

BranchState coupled_step(const UnionProjector& pi, const UnionProjector& pj, const BranchState& state, double eps) {
  check_pair(pi, pj, state.z_i.size());
  BranchState next;
  next.z_i = pi.component(0).project(cross_project(state.z_j, state.z_i, eps));
  next.z_j = pj.component(0).project(cross_project(state.z_i, state.z_j, eps));
  next.iter = state.iter + 1;
  return next;
}

RefineResult coupled_refine(const UnionProjector& pi, const UnionProjector& pj, std::span<const double> s,
                            const RefineConfig& cfg) {
  cfg.validate();
  check_pair(pi, pj, s.size());
  BranchState st{pi.component(0).project(s), pj.component(0).project(s), 0};
  RefineResult res;
  res.trace.push_back(st);
  for (;;) {
    const double gap = distance(st.z_i, st.z_j);
    res.gap_history.push_back(gap);
    if (gap < cfg.gap_tol) {
      res.converged = true;
      break;
    }
    if (st.iter >= cfg.max_iter) break;
    st = coupled_step(pi, pj, st, cfg.eps);
    res.trace.push_back(st);
  }
  res.z_star = scale(0.5, add(st.z_i, st.z_j));
  return res;
}

Decomposition residual_decompose(std::span<const double> s, std::span<const double> z_star, const UnionProjector& pi,
                                 const UnionProjector& pj) {
  if (z_star.size() != s.size() || pi.ambient_dim() != s.size() || pj.ambient_dim() != s.size())
    throw Error(Errc::DimensionMismatch, "residual_decompose: dimensions differ");
  Decomposition d;
  const Vector si = project_union(pi, s).point;
  const Vector sj = project_union(pj, s).point;
  const double zn = norm(z_star);
  if (zn < 1e-12) {
    d.degenerate = true;
    d.r_i = si;
    d.r_j = sj;
  } else {
    const Vector u = scale(1.0 / zn, z_star);
    d.r_i = sub(si, scale(dot(si, u), u));
    d.r_j = sub(sj, scale(dot(sj, u), u));
  }
  d.s_hat = add(add(Vector(z_star.begin(), z_star.end()), d.r_i), d.r_j);
  d.recon_residual = distance(s, d.s_hat);
  return d;
}

double intersect_loss(std::span<const double> s, std::span<const double> z_star, std::span<const double> r_i,
                      std::span<const double> r_j, Branch label, double lambda) {
  const Vector s_hat = add(add(z_star, r_i), r_j);
  const double wrong = label == Branch::I ? sq_norm(r_j) : sq_norm(r_i);
  return sq_norm(sub(s, s_hat)) + lambda * wrong;
}

IntersectGrad intersect_loss_grad(std::span<const double> s, std::span<const double> z_star,
                                  std::span<const double> r_i, std::span<const double> r_j, Branch label,
                                  double lambda) {
  const Vector e = scale(2.0, sub(add(add(z_star, r_i), r_j), s));
  IntersectGrad g{e, e, e};
  if (label == Branch::I)
    axpy(2.0 * lambda, r_j, g.r_j);
  else
    axpy(2.0 * lambda, r_i, g.r_i);
  return g;
}

MultiBranch multi_branch_step(const std::vector<Vector>& residuals, double eps) {
  const std::size_t t = residuals.size();
  if (t < 2) throw Error(Errc::InvalidArgument, "multi_branch_step needs at least 2 residuals");
  for (const auto& r : residuals)
    if (r.size() != residuals.front().size()) throw Error(Errc::DimensionMismatch, "residual dimensions differ");
  MultiBranch out{Matrix(t, t), {}};
  for (std::size_t q = 0; q < t; ++q)
    for (std::size_t k = q; k < t; ++k) out.alphas(q, k) = out.alphas(k, q) = dot(residuals[q], residuals[k]);
  for (std::size_t q = 0; q < t; ++q) {
    Vector acc(residuals[q].size(), 0.0);
    for (std::size_t k = 0; k < t; ++k) {
      const double denom = out.alphas(k, k) + eps;
      if (denom == 0.0) continue;
      axpy(out.alphas(k, q) / denom, residuals[k], acc);
    }
    out.shared.push_back(std::move(acc));
  }
  return out;
}

std::pair<Vector, Vector> pairwise_residual_step(std::span<const double> r_i, std::span<const double> r_j, double eps) {
  return {cross_project(r_i, r_j, eps), cross_project(r_j, r_i, eps)};
}

}  // namespace poslab
