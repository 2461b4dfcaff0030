#include "poslab/projector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace poslab {

namespace {

void check_orthonormal(const Matrix& b, const char* what) {
  if (b.empty() || !all_finite(b)) throw Error(Errc::InvalidArgument, std::string(what) + ": empty or non-finite basis");
  if (orthonormality_defect(b) > 1e-10) throw Error(Errc::NotOrthonormal, std::string(what) + ": basis is not orthonormal");
}

void check_dim(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got)
    throw Error(Errc::DimensionMismatch, std::string(what) + ": expected dimension " + std::to_string(expected) +
                                             ", got " + std::to_string(got));
}

Flat canonical(Matrix basis, Vector offset) {
  const std::size_t n = basis.rows();
  if (offset.empty()) offset.assign(n, 0.0);
  check_dim(n, offset.size(), "flat offset");
  // keep only the part of the offset orthogonal to the flat's directions
  const Vector along = basis * mul_transpose(basis, offset);
  return Flat{std::move(basis), sub(offset, along)};
}

bool same_flat(const Flat& a, const Flat& b) {
  if (a.basis.cols() != b.basis.cols()) return false;
  const Vector angles = principal_angles(a.basis, b.basis);
  if (angles.back() >= kOrbitMergeAngle) return false;
  const double scale = 1.0 + std::max(norm(a.offset), norm(b.offset));
  return distance(a.offset, b.offset) <= 1e-9 * scale;
}

}  // namespace

Vector Flat::project(std::span<const double> s) const {
  check_dim(basis.rows(), s.size(), "project");
  const Vector centred = sub(s, offset);
  return add(offset, basis * mul_transpose(basis, centred));
}

UnionProjector::UnionProjector(const std::vector<Matrix>& bases, double tie_tol) : tie_tol_(tie_tol) {
  if (bases.empty()) throw Error(Errc::InvalidArgument, "union projector needs at least one component");
  for (const auto& b : bases) {
    check_orthonormal(b, "union projector");
    flats_.push_back(Flat{b, Vector(b.rows(), 0.0)});
  }
  for (const auto& f : flats_) check_dim(ambient_dim(), f.basis.rows(), "union projector");
  if (!(tie_tol > 0.0)) throw Error(Errc::InvalidArgument, "tie_tol must be > 0");
}

UnionProjector::UnionProjector(std::vector<Flat> flats, double tie_tol) : tie_tol_(tie_tol) {
  if (flats.empty()) throw Error(Errc::InvalidArgument, "union projector needs at least one component");
  for (auto& f : flats) {
    check_orthonormal(f.basis, "union projector");
    flats_.push_back(canonical(std::move(f.basis), std::move(f.offset)));
  }
  for (const auto& f : flats_) check_dim(ambient_dim(), f.basis.rows(), "union projector");
  if (!(tie_tol > 0.0)) throw Error(Errc::InvalidArgument, "tie_tol must be > 0");
}

Vector project_component(const Matrix& basis, std::span<const double> s) {
  check_dim(basis.rows(), s.size(), "project_component");
  return basis * mul_transpose(basis, s);
}

ProjectionResult project_union(const UnionProjector& p, std::span<const double> s) {
  check_dim(p.ambient_dim(), s.size(), "project_union");
  ProjectionResult best;
  best.distance = std::numeric_limits<double>::infinity();
  double second = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) {
    Vector q = p.component(i).project(s);
    const double d = distance(s, q);
    if (d < best.distance) {
      second = best.distance;
      best.point = std::move(q);
      best.distance = d;
      best.component_index = i;
    } else {
      second = std::min(second, d);
    }
  }
  best.is_tie = second - best.distance <= p.tie_tol();
  return best;
}

std::vector<ProjectionResult> project_batch(const UnionProjector& p, const std::vector<Vector>& samples) {
  std::vector<ProjectionResult> out(samples.size());
  const auto count = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) out[i] = project_union(p, samples[i]);
  return out;
}

std::vector<ProjectionResult> serial::project_batch(const UnionProjector& p, const std::vector<Vector>& samples) {
  std::vector<ProjectionResult> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(project_union(p, s));
  return out;
}

IsometryT::IsometryT(Matrix r, Vector o) : rotation(std::move(r)), offset(std::move(o)) {
  if (rotation.rows() != rotation.cols()) throw Error(Errc::DimensionMismatch, "isometry rotation must be square");
  if (orthonormality_defect(rotation) > 1e-10) throw Error(Errc::NotOrthonormal, "isometry rotation is not orthogonal");
  if (offset.empty()) offset.assign(rotation.rows(), 0.0);
  check_dim(rotation.rows(), offset.size(), "isometry offset");
}

IsometryT IsometryT::identity(std::size_t n) { return IsometryT(Matrix::identity(n)); }

Vector IsometryT::apply(std::span<const double> x) const { return add(rotation * x, offset); }

Vector IsometryT::apply_inverse(std::span<const double> y) const { return mul_transpose(rotation, sub(y, offset)); }

IsometryT IsometryT::inverse() const {
  return IsometryT(rotation.transpose(), scale(-1.0, mul_transpose(rotation, offset)));
}

UnionProjector conjugate(const UnionProjector& p, const IsometryT& t) {
  check_dim(p.ambient_dim(), t.dim(), "conjugate");
  std::vector<Flat> mapped;
  for (const auto& f : p.components()) {
    Matrix b = t.rotation * f.basis;
    // re-orthonormalize to absorb rounding in the product
    b = orthonormal_basis(b);
    mapped.push_back(Flat{std::move(b), t.apply(f.offset)});
  }
  return UnionProjector(std::move(mapped), p.tie_tol());
}

Transfer::Transfer(UnionProjector pi, IsometryT t) : pi_(std::move(pi)), t_(std::move(t)) {
  check_dim(pi_.ambient_dim(), t_.dim(), "transfer");
}

ProjectionResult Transfer::operator()(std::span<const double> s) const {
  check_dim(t_.dim(), s.size(), "transfer");
  ProjectionResult r = project_union(pi_, t_.apply_inverse(s));
  r.point = t_.apply(r.point);
  return r;
}

Transfer transfer(const UnionProjector& pi, const IsometryT& t) { return Transfer(pi, t); }

UnionProjector orbit(const UnionProjector& p, const std::vector<IsometryT>& group) {
  if (group.empty()) throw Error(Errc::InvalidArgument, "orbit: group must be nonempty");
  std::vector<Flat> flats;
  auto add_images = [&](const IsometryT& g) {
    check_dim(p.ambient_dim(), g.dim(), "orbit");
    const UnionProjector image = conjugate(p, g);
    for (const auto& f : image.components()) {
      const bool dup = std::any_of(flats.begin(), flats.end(), [&](const Flat& e) { return same_flat(e, f); });
      if (!dup) flats.push_back(f);
    }
  };
  // identity first, so the original components keep their indices
  add_images(IsometryT::identity(p.ambient_dim()));
  for (const auto& g : group) add_images(g);
  return UnionProjector(std::move(flats), p.tie_tol());
}

Vector lemma1_decompose(const UnionProjector& p_b, const UnionProjector& p_r, const Matrix& phi,
                        std::span<const double> s) {
  if (p_b.size() != 1 || p_r.size() != 1)
    throw Error(Errc::InvalidArgument, "lemma1_decompose: base and residual projectors must have one component");
  check_dim(p_b.ambient_dim(), s.size(), "lemma1_decompose");
  check_dim(p_r.ambient_dim(), s.size(), "lemma1_decompose");
  check_dim(s.size(), phi.rows(), "lemma1_decompose phi");
  check_dim(s.size(), phi.cols(), "lemma1_decompose phi");
  const Vector base = p_b.component(0).project(s);
  const Vector correction = sub(p_r.component(0).project(s), p_r.component(0).project(base));
  return add(base, phi * correction);
}

Matrix lemma1_linear_phi(const Matrix& base_basis, const Matrix& residual_basis) {
  check_dim(base_basis.rows(), residual_basis.rows(), "lemma1_linear_phi");
  check_orthonormal(base_basis, "lemma1_linear_phi");
  check_orthonormal(residual_basis, "lemma1_linear_phi");
  const std::size_t n = base_basis.rows();
  // W: part of the residual directions orthogonal to the base
  const Matrix w_raw = residual_basis - base_basis * mul_transpose(base_basis, residual_basis);
  const Matrix w = orthonormal_basis(w_raw);
  const Matrix rtw = mul_transpose(residual_basis, w);
  const Matrix inv = solve(rtw, Matrix::identity(rtw.rows()));
  Matrix phi = w * inv * residual_basis.transpose();
  check_dim(n, phi.rows(), "lemma1_linear_phi");
  return phi;
}

json projector_to_json(const UnionProjector& p) {
  json comps = json::array();
  for (const auto& f : p.components())
    comps.push_back(json{{"basis", matrix_to_json(f.basis)}, {"offset", vector_to_json(f.offset)}});
  return json{{"ambient_dim", p.ambient_dim()}, {"tie_tol", p.tie_tol()}, {"components", comps}};
}

UnionProjector projector_from_json(const json& j) {
  try {
    const double tol = j.contains("tie_tol") ? j.at("tie_tol").get<double>() : kDefaultTieTol;
    std::vector<Flat> flats;
    for (const auto& c : j.at("components")) {
      if (c.is_object() && c.contains("basis")) {
        Matrix b = matrix_from_json(c.at("basis"));
        Vector o = c.contains("offset") ? vector_from_json(c.at("offset")) : Vector{};
        flats.push_back(Flat{std::move(b), std::move(o)});
      } else {
        flats.push_back(Flat{matrix_from_json(c), {}});
      }
    }
    UnionProjector p(std::move(flats), tol);
    if (j.contains("ambient_dim")) check_dim(j.at("ambient_dim").get<std::size_t>(), p.ambient_dim(), "projector json");
    return p;
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("projector: ") + e.what());
  }
}

}  // namespace poslab
