#include "poslab/folding.hpp"

#include <cmath>

namespace poslab {

TransformParams TransformParams::identity(std::size_t n) {
  return TransformParams{Matrix(n, n), false, Vector(n, 0.0)};
}

void TransformParams::validate() const {
  if (skew.empty() || skew.rows() != skew.cols()) throw Error(Errc::InvalidArgument, "skew generator must be square");
  if (!all_finite(skew)) throw Error(Errc::InvalidArgument, "skew generator has non-finite entries");
  for (std::size_t i = 0; i < skew.rows(); ++i)
    for (std::size_t j = i; j < skew.cols(); ++j)
      if (std::abs(skew(i, j) + skew(j, i)) > 1e-12) throw Error(Errc::InvalidArgument, "generator is not antisymmetric");
  if (!offset.empty() && offset.size() != skew.rows()) throw Error(Errc::DimensionMismatch, "offset length != dim");
}

Matrix cayley(const Matrix& skew) {
  const std::size_t n = skew.rows();
  const Matrix id = Matrix::identity(n);
  const Matrix half = 0.5 * skew;
  return solve(id - half, id + half);
}

namespace {

Vector offset_of(const TransformParams& t) { return t.offset.empty() ? Vector(t.dim(), 0.0) : t.offset; }

struct Folded {
  Matrix r;   // rotation
  Vector y;   // s − o
  Vector x;   // T⁻¹ s
  ProjectionResult proj;
};

Folded fold(const TransformParams& t, const UnionProjector& p, std::span<const double> s) {
  t.validate();
  if (s.size() != t.dim() || p.ambient_dim() != t.dim())
    throw Error(Errc::DimensionMismatch, "fold: transform, projector and sample dimensions differ");
  Folded f;
  f.r = cayley(t.skew);
  f.y = sub(s, offset_of(t));
  f.x = mul_transpose(f.r, f.y);
  f.proj = project_union(p, f.x);
  return f;
}

}  // namespace

IsometryT to_isometry(const TransformParams& t) {
  t.validate();
  return IsometryT(cayley(t.skew), offset_of(t));
}

FoldValue fold_loss(const TransformParams& t, const UnionProjector& p, std::span<const double> s) {
  const Folded f = fold(t, p, s);
  return FoldValue{f.proj.distance * f.proj.distance, f.proj.is_tie};
}

FoldValue rep_loss(const TransformParams& t, const UnionProjector& p, std::span<const double> s) {
  const Folded f = fold(t, p, s);
  const Vector back = add(f.r * f.proj.point, offset_of(t));
  return FoldValue{sq_norm(sub(s, back)), f.proj.is_tie};
}

FoldGrad fold_grad(const TransformParams& t, const UnionProjector& p, std::span<const double> s) {
  const Folded f = fold(t, p, s);
  const std::size_t n = t.dim();
  // x = C y with C = Rᵀ = cayley(W), W = −K, A = I − W/2 = I + K/2;
  // dC = A⁻¹ dW (I + C) / 2 and dL/dx = 2r.
  const Vector r = sub(f.x, f.proj.point);
  const Matrix a = Matrix::identity(n) + 0.5 * t.skew;
  const Matrix a_inv_t_r = solve(a.transpose(), Matrix::column(r));
  const Vector v = add(f.y, f.x);  // (I + C) y
  FoldGrad g{Matrix(n, n), Vector(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      // ∂L/∂K_ij = −(A⁻ᵀ r vᵀ)_ij; K_ji = −K_ij ties the two entries
      g.skew(i, j) = -(a_inv_t_r(i, 0) * v[j] - a_inv_t_r(j, 0) * v[i]);
    }
  if (t.learn_offset) g.offset = scale(-2.0, f.r * r);
  return g;
}

FoldBatch fold_batch(const TransformParams& t, const UnionProjector& p, const Dataset& data) {
  if (data.samples.empty()) throw Error(Errc::InvalidArgument, "fold_batch: empty dataset");
  const std::size_t n = t.dim();
  FoldBatch b{0.0, 0, FoldGrad{Matrix(n, n), Vector(n, 0.0)}};
  const double w = 1.0 / static_cast<double>(data.size());
  for (const auto& s : data.samples) {
    const FoldValue v = fold_loss(t, p, s);
    b.loss += w * v.loss;
    if (v.tie) ++b.ties;
    const FoldGrad g = fold_grad(t, p, s);
    b.grad.skew = b.grad.skew + w * g.skew;
    axpy(w, g.offset, b.grad.offset);
  }
  return b;
}

FoldReport train_fold(const TransformParams& init, const UnionProjector& p, const Dataset& data,
                      const TrainConfig& cfg) {
  init.validate();
  data.validate();
  if (!(cfg.step_size >= 0.0) || cfg.step_size > 1.0) throw Error(Errc::InvalidConfig, "step_size must lie in [0, 1]");
  if (!(cfg.momentum >= 0.0) || cfg.momentum >= 1.0) throw Error(Errc::InvalidConfig, "momentum must lie in [0, 1)");
  const std::size_t n = init.dim();
  FoldReport rep{init, {}, 0.0};
  TransformParams& t = rep.params;
  if (t.offset.empty()) t.offset.assign(n, 0.0);
  Matrix vel_k(n, n);
  Vector vel_o(n, 0.0);
  const Rng root(cfg.seed);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    Dataset batch;
    if (cfg.batch == 0 || cfg.batch >= data.size()) {
      batch = data;
    } else {
      Rng r = root.split(step);
      for (std::size_t i = 0; i < cfg.batch; ++i) {
        const auto idx = r.uniform_int(0, data.size() - 1);
        batch.samples.push_back(data.samples[idx]);
        batch.labels.push_back(data.labels[idx]);
      }
    }
    const FoldBatch b = fold_batch(t, p, batch);
    if (!std::isfinite(b.loss) || b.loss > 1e12) throw Error(Errc::Diverged, "fold training diverged at step " + std::to_string(step));
    rep.loss_history.push_back(b.loss);
    vel_k = cfg.momentum * vel_k + b.grad.skew;
    t.skew = t.skew - cfg.step_size * vel_k;
    // keep the generator exactly antisymmetric despite rounding
    for (std::size_t i = 0; i < n; ++i) {
      t.skew(i, i) = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) t.skew(j, i) = -t.skew(i, j);
    }
    if (t.learn_offset) {
      for (std::size_t i = 0; i < n; ++i) {
        vel_o[i] = cfg.momentum * vel_o[i] + b.grad.offset[i];
        t.offset[i] -= cfg.step_size * vel_o[i];
      }
    }
    if (!all_finite(t.skew)) throw Error(Errc::Diverged, "fold training produced non-finite parameters");
  }
  rep.final_loss = fold_batch(t, p, data).loss;
  return rep;
}

Dataset translate(const TransformParams& t, const Dataset& samples) {
  const IsometryT iso = to_isometry(t);
  Dataset out;
  out.labels = samples.labels;
  for (const auto& s : samples.samples) out.samples.push_back(iso.apply_inverse(s));
  return out;
}

Dataset translate_back(const TransformParams& t, const Dataset& samples) {
  const IsometryT iso = to_isometry(t);
  Dataset out;
  out.labels = samples.labels;
  for (const auto& s : samples.samples) out.samples.push_back(iso.apply(s));
  return out;
}

Alignment align_explain(std::span<const double> s, const UnionProjector& p, const TrainConfig& cfg) {
  Dataset one;
  one.samples.emplace_back(s.begin(), s.end());
  one.labels.push_back(0);
  FoldReport rep = train_fold(TransformParams::identity(s.size()), p, one, cfg);
  Alignment a;
  a.aligned = to_isometry(rep.params).apply_inverse(s);
  a.fold_gap = project_union(p, a.aligned).distance;
  a.params = std::move(rep.params);
  return a;
}

double rotation_angle_2d(const Matrix& r) {
  if (r.rows() != 2 || r.cols() != 2) throw Error(Errc::DimensionMismatch, "rotation_angle_2d needs a 2×2 matrix");
  return std::atan2(r(1, 0), r(0, 0));
}

json transform_to_json(const TransformParams& t) {
  return json{{"dim", t.dim()},
              {"skew", matrix_to_json(t.skew)},
              {"learn_offset", t.learn_offset},
              {"offset", vector_to_json(offset_of(t))}};
}

TransformParams transform_from_json(const json& j) {
  try {
    TransformParams t{matrix_from_json(j.at("skew")), j.value("learn_offset", false), {}};
    if (j.contains("offset")) t.offset = vector_from_json(j.at("offset"));
    t.validate();
    return t;
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("transform checkpoint: ") + e.what());
  }
}

}  // namespace poslab
