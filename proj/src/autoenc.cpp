#include "poslab/autoenc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "poslab/gradcheck.hpp"

namespace poslab {

AEParams::AEParams(Matrix enc, Matrix dec, Activation act, Skip skip)
    : enc_(std::move(enc)), dec_(std::move(dec)), tied_(false), act_(act), skip_(skip) {
  if (enc_.empty() || dec_.empty()) throw Error(Errc::InvalidArgument, "autoencoder weights must be nonempty");
  if (dec_.rows() != enc_.cols() || dec_.cols() != enc_.rows())
    throw Error(Errc::DimensionMismatch, "decoder must be n×N for an N×n encoder");
}

AEParams::AEParams(Matrix enc, Activation act, Skip skip)
    : enc_(std::move(enc)), tied_(true), act_(act), skip_(skip) {
  if (enc_.empty()) throw Error(Errc::InvalidArgument, "autoencoder weights must be nonempty");
}

AEParams AEParams::init(std::size_t n, std::size_t latent, bool tied, Activation act, Skip skip, Rng& rng,
                        const Dataset* orient_on) {
  if (n < 1 || latent < 1) throw Error(Errc::InvalidArgument, "autoencoder dimensions must be >= 1");
  Matrix enc(latent, n);
  if (latent <= n) {
    Matrix g(n, latent);
    for (double& x : g.data()) x = rng.normal();
    enc = orthonormal_basis(g).transpose();
  } else {
    for (std::size_t r = 0; r < latent; ++r) {
      for (double& x : enc.row(r)) x = rng.normal();
      const double len = norm(enc.row(r));
      for (double& x : enc.row(r)) x /= len;
    }
  }
  if (orient_on != nullptr && orient_on->size() > 0) {
    Vector mean(n, 0.0);
    for (const auto& s : orient_on->samples) axpy(1.0 / static_cast<double>(orient_on->size()), s, mean);
    for (std::size_t r = 0; r < latent; ++r)
      if (dot(enc.row(r), mean) < 0.0)
        for (double& x : enc.row(r)) x = -x;
  }
  if (tied) return AEParams(std::move(enc), act, skip);
  Matrix dec = enc.transpose();
  return AEParams(std::move(enc), std::move(dec), act, skip);
}

AEParams AEParams::init_from_data(std::size_t latent, bool tied, Activation act, Skip skip, const Dataset& data) {
  data.validate();
  if (latent < 1 || latent > data.size()) throw Error(Errc::InvalidArgument, "latent size must lie in [1, sample count]");
  const std::size_t n = data.dim();
  std::vector<Vector> unit;
  for (const auto& s : data.samples) {
    const double len = norm(s);
    if (len == 0.0) throw Error(Errc::InvalidArgument, "init_from_data: zero sample");
    unit.push_back(scale(1.0 / len, s));
  }
  // closest cosine to any picked row, lower is farther
  std::vector<double> nearest(unit.size(), -2.0);
  std::vector<char> taken(unit.size(), 0);
  Matrix enc(latent, n);
  std::size_t pick = 0;
  for (std::size_t r = 0; r < latent; ++r) {
    taken[pick] = 1;
    std::copy(unit[pick].begin(), unit[pick].end(), enc.row(r).begin());
    for (std::size_t i = 0; i < unit.size(); ++i) nearest[i] = std::max(nearest[i], dot(unit[i], unit[pick]));
    double best = 3.0;
    for (std::size_t i = 0; i < unit.size(); ++i)
      if (!taken[i] && nearest[i] < best) {
        best = nearest[i];
        pick = i;
      }
  }
  if (tied) return AEParams(std::move(enc), act, skip);
  Matrix dec = enc.transpose();
  return AEParams(std::move(enc), std::move(dec), act, skip);
}

Matrix& AEParams::dec_mut() {
  if (tied_) throw Error(Errc::InvalidArgument, "tied model has no separate decoder");
  return dec_;
}

Vector AEParams::flat() const {
  Vector theta = enc_.data();
  if (!tied_) theta.insert(theta.end(), dec_.data().begin(), dec_.data().end());
  return theta;
}

void AEParams::set_flat(std::span<const double> theta) {
  const std::size_t ne = enc_.data().size();
  const std::size_t total = ne + (tied_ ? 0 : dec_.data().size());
  if (theta.size() != total) throw Error(Errc::DimensionMismatch, "parameter vector has wrong length");
  std::copy(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(ne), enc_.data().begin());
  if (!tied_) std::copy(theta.begin() + static_cast<std::ptrdiff_t>(ne), theta.end(), dec_.data().begin());
}

namespace {

struct Pass {
  Vector u;
  Vector z;
  Vector h;
  Vector r;
};

Pass run(const AEParams& p, const Matrix& dec, std::span<const double> u) {
  Pass ps;
  ps.u.assign(u.begin(), u.end());
  ps.z = p.enc() * u;
  ps.h = ps.z;
  if (p.activation() == Activation::Relu)
    for (double& x : ps.h) x = std::max(x, 0.0);
  Vector dh = dec * ps.h;
  ps.r = p.skip() == Skip::Subtract ? sub(u, dh) : std::move(dh);
  return ps;
}

/// Accumulates the contribution of one pass given dL/dr and dL/dh.
void backprop(const AEParams& p, const Matrix& dec, const Pass& ps, const Vector& g_r, Vector g_h, AEGrad& g) {
  const double sign = p.skip() == Skip::Subtract ? -1.0 : 1.0;
  // r = ±D h (+ u)
  for (std::size_t i = 0; i < g.dec.rows(); ++i)
    for (std::size_t k = 0; k < g.dec.cols(); ++k) g.dec(i, k) += sign * g_r[i] * ps.h[k];
  axpy(sign, mul_transpose(dec, g_r), g_h);
  if (p.activation() == Activation::Relu)
    for (std::size_t k = 0; k < g_h.size(); ++k)
      if (ps.z[k] <= 0.0) g_h[k] = 0.0;
  for (std::size_t k = 0; k < g.enc.rows(); ++k) {
    if (g_h[k] == 0.0) continue;
    axpy(g_h[k], ps.u, g.enc.row(k));
  }
}

void check_dims(const AEParams& p, const Dataset& batch) {
  if (batch.samples.empty()) throw Error(Errc::InvalidArgument, "empty batch");
  for (const auto& s : batch.samples)
    if (s.size() != p.input_dim()) throw Error(Errc::DimensionMismatch, "sample dimension differs from encoder input");
}

void check_objective(const Objective& obj, std::size_t n) {
  if (const auto* m = std::get_if<MaskedObjective>(&obj)) {
    if (m->wmin < 1 || m->wmin > m->wmax || m->wmax > n)
      throw Error(Errc::InvalidConfig, "masked objective needs 1 <= wmin <= wmax <= input dim");
  } else if (const auto* pp = std::get_if<PushPullObjective>(&obj)) {
    if (!(pp->blur_sigma > 0.0)) throw Error(Errc::InvalidConfig, "push-pull objective needs blur_sigma > 0");
    if (!(pp->lambda1 >= 0.0) || !(pp->lambda2 >= 0.0) || !(pp->lambda3 >= 0.0))
      throw Error(Errc::InvalidConfig, "push-pull weights must be >= 0");
  }
}

/// Per-sample inputs the objective feeds through the network.
std::vector<Vector> degraded_inputs(const Objective& obj, std::span<const double> s, Rng& rng) {
  if (const auto* m = std::get_if<MaskedObjective>(&obj)) return {random_mask(s, m->wmin, m->wmax, rng).first};
  if (const auto* pp = std::get_if<PushPullObjective>(&obj)) return {Vector(s.begin(), s.end()), blur1d(s, pp->blur_sigma)};
  return {Vector(s.begin(), s.end())};
}

std::pair<double, AEGrad> evaluate(const AEParams& p, const Objective& obj, const Dataset& batch, Rng rng,
                                   bool want_grad) {
  check_dims(p, batch);
  check_objective(obj, p.input_dim());
  const Matrix dec = p.dec();
  AEGrad g{Matrix(p.latent_dim(), p.input_dim()), Matrix(p.input_dim(), p.latent_dim())};
  const double inv_m = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  const auto* pp = std::get_if<PushPullObjective>(&obj);
  for (const auto& s : batch.samples) {
    const auto inputs = degraded_inputs(obj, s, rng);
    std::vector<Pass> passes;
    for (const auto& u : inputs) passes.push_back(run(p, dec, u));
    if (pp == nullptr) {
      const Vector e = sub(passes[0].r, s);
      total += sq_norm(e);
      if (want_grad) backprop(p, dec, passes[0], scale(2.0 * inv_m, e), Vector(p.latent_dim(), 0.0), g);
      continue;
    }
    const Vector e_clean = sub(passes[0].r, s);
    const Vector e_blur = sub(passes[1].r, s);
    const Vector gap = sub(passes[0].h, passes[1].h);
    total += pp->lambda1 * sq_norm(e_clean) + pp->lambda2 * sq_norm(e_blur) - pp->lambda3 * sq_norm(gap);
    if (want_grad) {
      backprop(p, dec, passes[0], scale(2.0 * pp->lambda1 * inv_m, e_clean), scale(-2.0 * pp->lambda3 * inv_m, gap), g);
      backprop(p, dec, passes[1], scale(2.0 * pp->lambda2 * inv_m, e_blur), scale(2.0 * pp->lambda3 * inv_m, gap), g);
    }
  }
  if (want_grad && p.tied()) {
    g.enc = g.enc + g.dec.transpose();
    g.dec = Matrix();
  }
  return {total * inv_m, std::move(g)};
}

}  // namespace

Forward forward(const AEParams& p, std::span<const double> s) {
  if (s.size() != p.input_dim()) throw Error(Errc::DimensionMismatch, "forward: input dimension mismatch");
  Pass ps = run(p, p.dec(), s);
  return Forward{std::move(ps.h), std::move(ps.r)};
}

void TrainConfig::validate(std::size_t input_dim) const {
  if (!(step_size >= 0.0) || step_size > 1.0) throw Error(Errc::InvalidConfig, "step_size must lie in [0, 1]");
  if (!(momentum >= 0.0) || momentum >= 1.0) throw Error(Errc::InvalidConfig, "momentum must lie in [0, 1)");
  check_objective(objective, input_dim);
}

double ae_loss(const AEParams& p, const Objective& obj, const Dataset& batch, Rng rng) {
  return evaluate(p, obj, batch, rng, false).first;
}

AEGrad ae_grad(const AEParams& p, const Objective& obj, const Dataset& batch, Rng rng) {
  return evaluate(p, obj, batch, rng, true).second;
}

std::pair<double, AEGrad> ae_loss_and_grad(const AEParams& p, const Objective& obj, const Dataset& batch, Rng rng) {
  return evaluate(p, obj, batch, rng, true);
}

namespace {

Vector flatten(const AEParams& p, const AEGrad& g) {
  Vector v = g.enc.data();
  if (!p.tied()) v.insert(v.end(), g.dec.data().begin(), g.dec.data().end());
  return v;
}

}  // namespace

double ae_grad_check(const AEParams& p, const Objective& obj, const Dataset& batch, Rng rng, double h) {
  const Vector analytic = flatten(p, ae_grad(p, obj, batch, rng));
  const Vector numeric = central_difference(
      [&](std::span<const double> theta) {
        AEParams q = p;
        q.set_flat(theta);
        return ae_loss(q, obj, batch, rng);
      },
      p.flat(), h);
  return max_rel_error(analytic, numeric);
}

double ae_min_abs_preactivation(const AEParams& p, const Objective& obj, const Dataset& batch, Rng rng) {
  check_dims(p, batch);
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : batch.samples)
    for (const auto& u : degraded_inputs(obj, s, rng))
      for (double z : p.enc() * u) m = std::min(m, std::abs(z));
  return m;
}

namespace {

Dataset draw_batch(const Dataset& data, std::size_t batch, Rng& rng) {
  if (batch == 0 || batch >= data.size()) return data;
  Dataset b;
  for (std::size_t i = 0; i < batch; ++i) {
    const auto idx = rng.uniform_int(0, data.size() - 1);
    b.samples.push_back(data.samples[idx]);
    b.labels.push_back(data.labels[idx]);
  }
  return b;
}

}  // namespace

TrainReport train(const AEParams& init, const TrainConfig& cfg, const Dataset& data) {
  data.validate();
  cfg.validate(init.input_dim());
  check_dims(init, data);
  const Rng root(cfg.seed);
  TrainReport report{{}, init, 0.0};
  {
    // per sample, skipping ReLU kinks and samples already reconstructed exactly
    // (their gradient is rounding noise and a relative error means nothing)
    Rng r = root.split(0);
    const Dataset b = draw_batch(data, cfg.batch, r);
    double worst = std::numeric_limits<double>::quiet_NaN();
    const std::size_t checks = std::min<std::size_t>(b.size(), 32);
    for (std::size_t c = 0; c < checks; ++c) {
      const std::size_t i = c * b.size() / checks;
      const Dataset one{{b.samples[i]}, {b.labels[i]}};
      const Rng masks = r.split(i + 1);
      if (init.activation() == Activation::Relu && ae_min_abs_preactivation(init, cfg.objective, one, masks) <= 1e-4)
        continue;
      if (std::abs(ae_loss(init, cfg.objective, one, masks)) < 1e-20) continue;
      const double e = ae_grad_check(init, cfg.objective, one, masks);
      worst = std::isnan(worst) ? e : std::max(worst, e);
    }
    report.grad_check_max_rel_err = worst;
  }
  AEParams& p = report.final_params;
  Vector theta = p.flat();
  Vector velocity(theta.size(), 0.0);
  report.loss_history.reserve(cfg.steps);
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    Rng r = root.split(t);
    const Dataset b = draw_batch(data, cfg.batch, r);
    auto [loss, g] = evaluate(p, cfg.objective, b, r, true);
    if (!std::isfinite(loss) || std::abs(loss) > 1e12)
      throw Error(Errc::Diverged, "training diverged at step " + std::to_string(t));
    report.loss_history.push_back(loss);
    const Vector gv = flatten(p, g);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      velocity[i] = cfg.momentum * velocity[i] + gv[i];
      theta[i] -= cfg.step_size * velocity[i];
    }
    p.set_flat(theta);
  }
  return report;
}

ReluSelection relu_selection_demo(std::span<const double> d1, std::span<const double> d2, std::span<const double> s) {
  ReluSelection out;
  out.coeffs_pre = {dot(d1, s), dot(d2, s)};
  out.coeffs_post = {std::max(out.coeffs_pre[0], 0.0), std::max(out.coeffs_pre[1], 0.0)};
  out.recon = add(scale(out.coeffs_post[0], d1), scale(out.coeffs_post[1], d2));
  return out;
}

LeakageResult leakage_check(const Matrix& di, const Matrix& dj, std::span<const double> s,
                            std::span<const double> x_star, double c_r_norm) {
  if (di.rows() != dj.rows() || di.rows() != s.size())
    throw Error(Errc::DimensionMismatch, "leakage_check: ambient dimensions differ");
  if (x_star.size() != di.cols()) throw Error(Errc::DimensionMismatch, "leakage_check: x* length != columns of D_i");
  if (numerical_rank(di, 1e-12) != di.cols()) throw Error(Errc::RankDeficient, "leakage_check: D_i must have full column rank");
  const Vector sv = singular_values(di);
  LeakageResult r;
  r.delta = std::max(sv.front() * sv.front() - 1.0, 1.0 - sv.back() * sv.back());
  if (r.delta >= 1.0) throw Error(Errc::DeltaTooLarge, "leakage_check: restricted isometry constant of D_i is >= 1");
  r.theta = singular_values(mul_transpose(di, dj)).front();
  r.measured = norm(mul_transpose(dj, s));
  r.bound = r.theta / (1.0 - r.delta) * norm(x_star) + std::sqrt(std::max(0.0, 1.0 - r.theta * r.theta)) * c_r_norm;
  return r;
}

LeakageBases leakage_bases(const Matrix& di, const Matrix& dj) {
  if (di.rows() != dj.rows()) throw Error(Errc::DimensionMismatch, "leakage_bases: ambient dimensions differ");
  const std::size_t n = di.rows();
  const SVD joint = svd(hstack(di, dj));
  std::size_t rank = 0;
  for (double x : joint.s)
    if (x > 1e-9 * joint.s.front()) ++rank;
  LeakageBases b;
  const Matrix span_ij = joint.u.cols_range(0, rank);
  if (rank < n) b.shared = left_annihilator(span_ij);
  const Matrix qi = orthonormal_basis(di);
  const std::size_t kr = rank - di.cols();
  if (kr > 0) {
    const Matrix rest = span_ij - qi * mul_transpose(qi, span_ij);
    b.residual = svd(rest).u.cols_range(0, kr).transpose();
  }
  return b;
}

Vector leakage_sample(const Matrix& di, const Matrix& dj, std::span<const double> x_star,
                      std::span<const double> c_shared, std::span<const double> c_r) {
  if (x_star.size() != di.cols()) throw Error(Errc::DimensionMismatch, "leakage_sample: x* length != columns of D_i");
  const LeakageBases b = leakage_bases(di, dj);
  const Matrix gram = mul_transpose(di, di);
  const Matrix y = solve(gram, Matrix::column(Vector(x_star.begin(), x_star.end())));
  Vector s = di * y.col(0);
  auto add_part = [&](const Matrix& f, std::span<const double> c, const char* what) {
    const std::size_t rows = f.empty() ? 0 : f.rows();
    if (c.size() != rows) throw Error(Errc::DimensionMismatch, std::string("leakage_sample: ") + what + " has wrong length");
    if (rows > 0) axpy(1.0, mul_transpose(f, c), s);
  };
  add_part(b.shared, c_shared, "c");
  add_part(b.residual, c_r, "c_r");
  return s;
}

double auroc(std::span<const double> normal_scores, std::span<const double> anomaly_scores) {
  if (normal_scores.empty() || anomaly_scores.empty()) throw Error(Errc::InvalidArgument, "auroc needs both classes");
  struct Item {
    double score;
    bool anomaly;
  };
  std::vector<Item> items;
  for (double x : normal_scores) items.push_back({x, false});
  for (double x : anomaly_scores) items.push_back({x, true});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
  // average ranks over ties
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    while (j < items.size() && items[j].score == items[i].score) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (items[k].anomaly) rank_sum += avg;
    i = j;
  }
  const auto na = static_cast<double>(anomaly_scores.size());
  const auto nn = static_cast<double>(normal_scores.size());
  return (rank_sum - na * (na + 1.0) / 2.0) / (na * nn);
}

double f1_at(std::span<const double> normal_scores, std::span<const double> anomaly_scores, double threshold) {
  double tp = 0.0;
  double fp = 0.0;
  for (double x : anomaly_scores) tp += x >= threshold ? 1.0 : 0.0;
  for (double x : normal_scores) fp += x >= threshold ? 1.0 : 0.0;
  const double fn = static_cast<double>(anomaly_scores.size()) - tp;
  return tp == 0.0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
}

Threshold best_f1_threshold(std::span<const double> normal_scores, std::span<const double> anomaly_scores) {
  std::vector<double> candidates(normal_scores.begin(), normal_scores.end());
  candidates.insert(candidates.end(), anomaly_scores.begin(), anomaly_scores.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  Threshold best{candidates.empty() ? 0.0 : candidates.front(), -1.0};
  for (double c : candidates) {
    const double f = f1_at(normal_scores, anomaly_scores, c);
    if (f > best.f1) best = {c, f};
  }
  best.f1 = std::max(best.f1, 0.0);
  return best;
}

double masked_recon_score(const AEParams& p, std::span<const double> s, std::size_t wmin, std::size_t wmax) {
  if (wmin < 1 || wmin > wmax || wmax > s.size())
    throw Error(Errc::InvalidArgument, "masked_recon_score needs 1 <= wmin <= wmax <= input dim");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t w = wmin; w <= wmax; ++w)
    for (std::size_t start = 0; start + w <= s.size(); ++start) {
      total += distance(forward(p, mask(s, {start, w})).recon, s);
      ++count;
    }
  return total / static_cast<double>(count);
}

CompactnessReport compactness_metrics(const AEParams& p, const Dataset& data, const UnionProjector& truth,
                                      const Dataset* anomalies) {
  data.validate();
  CompactnessReport rep;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Forward f = forward(p, data.samples[i]);
    rep.recon_error.push_back(distance(f.recon, data.samples[i]));
    const ProjectionResult pr = project_union(truth, f.recon);
    rep.off_union.push_back(pr.distance);
    if (pr.component_index == data.labels[i]) ++correct;
  }
  const auto m = static_cast<double>(data.size());
  rep.mean_recon_error = std::accumulate(rep.recon_error.begin(), rep.recon_error.end(), 0.0) / m;
  rep.mean_off_union = std::accumulate(rep.off_union.begin(), rep.off_union.end(), 0.0) / m;
  rep.assignment_accuracy = static_cast<double>(correct) / m;
  if (anomalies != nullptr && anomalies->size() > 0) {
    std::vector<double> anom;
    for (const auto& s : anomalies->samples) anom.push_back(distance(forward(p, s).recon, s));
    rep.anomaly_auroc = auroc(rep.recon_error, anom);
    const std::size_t hn = rep.recon_error.size() / 2;
    const std::size_t ha = anom.size() / 2;
    if (hn > 0 && ha > 0 && hn < rep.recon_error.size() && ha < anom.size()) {
      const std::span<const double> normal(rep.recon_error);
      const std::span<const double> bad(anom);
      rep.calibrated = best_f1_threshold(normal.first(hn), bad.first(ha));
      rep.test_f1 = f1_at(normal.subspan(hn), bad.subspan(ha), rep.calibrated->threshold);
    }
  }
  return rep;
}

json ae_to_json(const AEParams& p) {
  json j{{"input_dim", p.input_dim()},
         {"latent_dim", p.latent_dim()},
         {"tied", p.tied()},
         {"activation", p.activation() == Activation::Relu ? "relu" : "linear"},
         {"skip", p.skip() == Skip::Subtract ? "subtract" : "none"},
         {"enc", matrix_to_json(p.enc())}};
  if (!p.tied()) j["dec"] = matrix_to_json(p.dec());
  return j;
}

AEParams ae_from_json(const json& j) {
  try {
    const std::string act = j.value("activation", "linear");
    const std::string skip = j.value("skip", "none");
    if (act != "linear" && act != "relu") throw Error(Errc::InvalidConfig, "activation must be linear or relu");
    if (skip != "none" && skip != "subtract") throw Error(Errc::InvalidConfig, "skip must be none or subtract");
    const Activation a = act == "relu" ? Activation::Relu : Activation::Linear;
    const Skip k = skip == "subtract" ? Skip::Subtract : Skip::None;
    Matrix enc = matrix_from_json(j.at("enc"));
    if (j.value("tied", false)) return AEParams(std::move(enc), a, k);
    return AEParams(std::move(enc), matrix_from_json(j.at("dec")), a, k);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("autoencoder checkpoint: ") + e.what());
  }
}

}  // namespace poslab
