#include "poslab/dba.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace poslab {

void DBAConfig::validate() const {
  if (tokens < 2 || channels < 2) throw Error(Errc::InvalidConfig, "DBA needs at least 2 tokens and 2 channels");
  if (hidden < 1) throw Error(Errc::InvalidConfig, "DBA hidden width must be >= 1");
  if (!(lambda_orth >= 0.0)) throw Error(Errc::InvalidConfig, "lambda_orth must be >= 0");
}

DBAParams DBAParams::init(const DBAConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::size_t c = cfg.channels;
  const std::size_t h = cfg.hidden;
  auto gaussian = [&](std::size_t rows, std::size_t cols, double sd) {
    Matrix m(rows, cols);
    for (double& x : m.data()) x = sd * rng.normal();
    return m;
  };
  const double sc = 1.0 / std::sqrt(static_cast<double>(c));
  DBAParams p;
  p.proj_i = gaussian(c, c, sc);
  p.proj_j = gaussian(c, c, sc);
  p.gate_w = gaussian(c, c, sc);
  p.gate_local = {0.25, 0.5, 0.25};
  p.ffn_w1 = gaussian(2 * c, h, 1.0 / std::sqrt(2.0 * static_cast<double>(c)));
  p.ffn_w2 = gaussian(h, c, 1.0 / std::sqrt(static_cast<double>(h)));
  return p;
}

namespace {

std::vector<const Matrix*> mats(const DBAParams& p) {
  return {&p.proj_i, &p.proj_j, &p.gate_w, &p.ffn_w1, &p.ffn_w2};
}

}  // namespace

Vector DBAParams::flat() const {
  Vector theta;
  for (const Matrix* m : mats(*this)) theta.insert(theta.end(), m->data().begin(), m->data().end());
  theta.insert(theta.end(), gate_local.begin(), gate_local.end());
  return theta;
}

void DBAParams::set_flat(std::span<const double> theta) {
  std::size_t k = 0;
  for (Matrix* m : {&proj_i, &proj_j, &gate_w, &ffn_w1, &ffn_w2}) {
    if (k + m->data().size() > theta.size()) throw Error(Errc::DimensionMismatch, "DBA parameter vector too short");
    std::copy(theta.begin() + static_cast<std::ptrdiff_t>(k),
              theta.begin() + static_cast<std::ptrdiff_t>(k + m->data().size()), m->data().begin());
    k += m->data().size();
  }
  if (k + gate_local.size() != theta.size()) throw Error(Errc::DimensionMismatch, "DBA parameter vector has wrong length");
  std::copy(theta.begin() + static_cast<std::ptrdiff_t>(k), theta.end(), gate_local.begin());
}

namespace {

Matrix hadamard(const Matrix& a, const Matrix& b) {
  Matrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] *= b.data()[i];
  return c;
}

template <class F>
Matrix map(const Matrix& a, F f) {
  Matrix c = a;
  for (double& x : c.data()) x = f(x);
  return c;
}

double elu1(double x) { return x > 0.0 ? x + 1.0 : std::exp(x); }
double elu1_prime(double x) { return x > 0.0 ? 1.0 : std::exp(x); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }
double gelu_prime(double x) {
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)) + x * pdf;
}

Matrix smooth(const Matrix& s, std::span<const double> w) {
  const std::size_t t = s.rows();
  Matrix out(t, s.cols());
  for (std::size_t r = 0; r < t; ++r) {
    axpy(w[1], s.row(r), out.row(r));
    if (r > 0) axpy(w[0], s.row(r - 1), out.row(r));
    if (r + 1 < t) axpy(w[2], s.row(r + 1), out.row(r));
  }
  return out;
}

/// Normalizer n = K 1 with K = m mᵀ, i.e. n_t = ⟨m_t, Σ_u m_u⟩.
Vector normalizer(const Matrix& m) {
  Vector colsum(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) axpy(1.0, m.row(r), colsum);
  Vector n = m * colsum;
  for (double x : n)
    if (!(x >= 1e-12)) throw Error(Errc::DegenerateNormalizer, "intersection normalizer entry below 1e-12");
  return n;
}

Matrix row_divide(const Matrix& a, const Vector& n) {
  Matrix c = a;
  for (std::size_t r = 0; r < c.rows(); ++r)
    for (double& x : c.row(r)) x /= n[r];
  return c;
}

constexpr double kNormEps = 1e-12;
constexpr double kCosGuard = 1e-12;

struct Cache {
  Matrix s, ssm, a_i, a_j, m_i, m_j, k_i, k_j, z_i, z_j, sb_i, sb_j, r_i, r_j;
  Vector n_i, n_j;
  Matrix gate, x, h_pre, h_act, f, u, y;
  Vector sigma;
  double j_orth = 0.0;
};

void check_shapes(const DBAParams& p, const Matrix& s) {
  const std::size_t c = p.channels();
  if (s.cols() != c) throw Error(Errc::DimensionMismatch, "sequence channel count differs from the block");
  if (s.rows() < 1) throw Error(Errc::DimensionMismatch, "empty sequence");
  if (p.proj_j.rows() != c || p.proj_j.cols() != c || p.gate_w.rows() != c || p.gate_w.cols() != c ||
      p.proj_i.cols() != c || p.ffn_w1.rows() != 2 * c || p.ffn_w2.rows() != p.ffn_w1.cols() || p.ffn_w2.cols() != c ||
      p.gate_local.size() != 3)
    throw Error(Errc::DimensionMismatch, "DBA parameter shapes are inconsistent");
}

Cache run(const DBAParams& p, const Matrix& s) {
  check_shapes(p, s);
  Cache c;
  const std::size_t t = s.rows();
  const std::size_t ch = s.cols();
  c.s = s;
  c.ssm = smooth(s, p.gate_local);
  c.a_i = s * p.proj_i;
  c.a_j = s * p.proj_j;
  c.m_i = map(c.a_i, elu1);
  c.m_j = map(c.a_j, elu1);
  c.k_i = c.m_i * c.m_i.transpose();
  c.k_j = c.m_j * c.m_j.transpose();
  c.n_i = normalizer(c.m_i);
  c.n_j = normalizer(c.m_j);
  c.z_i = c.k_j * c.m_i;
  c.z_j = c.k_i * c.m_j;
  c.sb_i = row_divide(c.z_i, c.n_j);
  c.sb_j = row_divide(c.z_j, c.n_i);
  c.r_i = c.m_i - c.sb_i;
  c.r_j = c.m_j - c.sb_j;
  c.j_orth = orth_loss(c.r_i, c.r_j);
  c.gate = map(c.ssm * p.gate_w, sigmoid);
  c.x = hstack(hadamard(c.r_i, c.gate), hadamard(c.r_j, c.gate));
  c.h_pre = c.x * p.ffn_w1;
  c.h_act = map(c.h_pre, gelu);
  c.f = c.h_act * p.ffn_w2;
  c.u = s + c.f;
  c.y = Matrix(t, ch);
  c.sigma.assign(t, 0.0);
  for (std::size_t r = 0; r < t; ++r) {
    const auto row = c.u.row(r);
    const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(ch);
    double var = 0.0;
    for (double x : row) var += (x - mean) * (x - mean);
    var /= static_cast<double>(ch);
    c.sigma[r] = std::sqrt(var + kNormEps);
    for (std::size_t k = 0; k < ch; ++k) c.y(r, k) = (row[k] - mean) / c.sigma[r];
  }
  return c;
}

}  // namespace

Matrix feature_map(const Matrix& x) { return map(x, elu1); }

std::pair<Matrix, Matrix> dba_intersection(const Matrix& s_i, const Matrix& s_j) {
  if (s_i.rows() != s_j.rows() || s_i.cols() != s_j.cols())
    throw Error(Errc::DimensionMismatch, "dba_intersection: branch shapes differ");
  const Vector n_i = normalizer(s_i);
  const Vector n_j = normalizer(s_j);
  Matrix sb_i = row_divide(s_j * mul_transpose(s_j, s_i), n_j);
  Matrix sb_j = row_divide(s_i * mul_transpose(s_i, s_j), n_i);
  return {std::move(sb_i), std::move(sb_j)};
}

std::pair<Matrix, Matrix> dba_residuals(const Matrix& s_i, const Matrix& s_j, const Matrix& sb_i, const Matrix& sb_j) {
  return {s_i - sb_i, s_j - sb_j};
}

double orth_loss(const Matrix& sr_i, const Matrix& sr_j) {
  if (sr_i.rows() != sr_j.rows() || sr_i.cols() != sr_j.cols())
    throw Error(Errc::DimensionMismatch, "orth_loss: residual shapes differ");
  double total = 0.0;
  for (std::size_t r = 0; r < sr_i.rows(); ++r) {
    const double na = norm(sr_i.row(r));
    const double nb = norm(sr_j.row(r));
    if (na < kCosGuard || nb < kCosGuard) continue;
    const double c = std::clamp(dot(sr_i.row(r), sr_j.row(r)) / (na * nb), -1.0, 1.0);
    total += c * c;
  }
  return total / static_cast<double>(sr_i.rows());
}

Matrix token_norm(const Matrix& u) {
  Matrix y = u;
  for (std::size_t r = 0; r < u.rows(); ++r) {
    const auto row = u.row(r);
    const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(u.cols());
    double var = 0.0;
    for (double x : row) var += (x - mean) * (x - mean);
    var /= static_cast<double>(u.cols());
    const double sd = std::sqrt(var + kNormEps);
    for (std::size_t k = 0; k < u.cols(); ++k) y(r, k) = (row[k] - mean) / sd;
  }
  return y;
}

BlockOutput block_forward(const DBAParams& p, const Matrix& s, double lambda_orth) {
  if (!(lambda_orth >= 0.0)) throw Error(Errc::InvalidArgument, "lambda_orth must be >= 0");
  Cache c = run(p, s);
  return BlockOutput{std::move(c.y), c.j_orth};
}

double block_loss(const DBAParams& p, const Matrix& s, const Matrix& target, double lambda_orth) {
  const Cache c = run(p, s);
  if (target.rows() != s.rows() || target.cols() != s.cols()) throw Error(Errc::DimensionMismatch, "target shape differs");
  return sq_norm((c.y - target).data()) / static_cast<double>(s.rows()) + lambda_orth * c.j_orth;
}

namespace {

/// Backward through sB = diag(n)⁻¹ K m_a with K = m_b m_bᵀ, n = K 1.
void intersection_backward(const Matrix& m_a, const Matrix& m_b, const Matrix& k, const Matrix& z, const Vector& n,
                           const Matrix& g_sb, Matrix& g_ma, Matrix& g_mb) {
  const std::size_t t = m_a.rows();
  Matrix g_z = row_divide(g_sb, n);
  Vector g_n(t, 0.0);
  for (std::size_t r = 0; r < t; ++r) g_n[r] = -dot(g_sb.row(r), z.row(r)) / (n[r] * n[r]);
  // Z = K m_a
  Matrix g_k = g_z * m_a.transpose();
  g_ma = g_ma + k * g_z;  // K symmetric
  // n = K 1
  for (std::size_t r = 0; r < t; ++r)
    for (std::size_t q = 0; q < t; ++q) g_k(r, q) += g_n[r];
  // K = m_b m_bᵀ
  g_mb = g_mb + (g_k + g_k.transpose()) * m_b;
}

}  // namespace

std::pair<double, Vector> block_loss_grad(const DBAParams& p, const Matrix& s, const Matrix& target,
                                          double lambda_orth) {
  const Cache c = run(p, s);
  if (target.rows() != s.rows() || target.cols() != s.cols()) throw Error(Errc::DimensionMismatch, "target shape differs");
  const std::size_t t = s.rows();
  const std::size_t ch = s.cols();
  const double inv_t = 1.0 / static_cast<double>(t);
  const Matrix diff = c.y - target;
  const double loss = sq_norm(diff.data()) * inv_t + lambda_orth * c.j_orth;

  // token norm
  Matrix g_u(t, ch);
  for (std::size_t r = 0; r < t; ++r) {
    double mean_g = 0.0;
    double mean_gy = 0.0;
    for (std::size_t k = 0; k < ch; ++k) {
      const double g = 2.0 * inv_t * diff(r, k);
      mean_g += g;
      mean_gy += g * c.y(r, k);
    }
    mean_g /= static_cast<double>(ch);
    mean_gy /= static_cast<double>(ch);
    for (std::size_t k = 0; k < ch; ++k)
      g_u(r, k) = (2.0 * inv_t * diff(r, k) - mean_g - c.y(r, k) * mean_gy) / c.sigma[r];
  }
  // U = S + F, F = GELU(X W1) W2
  const Matrix& g_f = g_u;
  const Matrix g_w2 = mul_transpose(c.h_act, g_f);
  Matrix g_h = g_f * p.ffn_w2.transpose();
  for (std::size_t i = 0; i < g_h.data().size(); ++i) g_h.data()[i] *= gelu_prime(c.h_pre.data()[i]);
  const Matrix g_w1 = mul_transpose(c.x, g_h);
  const Matrix g_x = g_h * p.ffn_w1.transpose();

  // X = [R_i ⊙ G, R_j ⊙ G]
  Matrix g_ri(t, ch);
  Matrix g_rj(t, ch);
  Matrix g_gate(t, ch);
  for (std::size_t r = 0; r < t; ++r)
    for (std::size_t k = 0; k < ch; ++k) {
      const double gl = g_x(r, k);
      const double gr = g_x(r, ch + k);
      g_ri(r, k) = gl * c.gate(r, k);
      g_rj(r, k) = gr * c.gate(r, k);
      g_gate(r, k) = gl * c.r_i(r, k) + gr * c.r_j(r, k);
    }
  // G = σ(smooth(S) W_g)
  Matrix g_q = g_gate;
  for (std::size_t i = 0; i < g_q.data().size(); ++i) {
    const double gv = c.gate.data()[i];
    g_q.data()[i] *= gv * (1.0 - gv);
  }
  const Matrix g_wg = mul_transpose(c.ssm, g_q);
  const Matrix g_ssm = g_q * p.gate_w.transpose();
  Vector g_local(3, 0.0);
  for (std::size_t r = 0; r < t; ++r) {
    g_local[1] += dot(g_ssm.row(r), s.row(r));
    if (r > 0) g_local[0] += dot(g_ssm.row(r), s.row(r - 1));
    if (r + 1 < t) g_local[2] += dot(g_ssm.row(r), s.row(r + 1));
  }

  // J_orth
  if (lambda_orth != 0.0) {
    const double w = 2.0 * lambda_orth * inv_t;
    for (std::size_t r = 0; r < t; ++r) {
      const auto a = c.r_i.row(r);
      const auto b = c.r_j.row(r);
      const double na = norm(a);
      const double nb = norm(b);
      if (na < kCosGuard || nb < kCosGuard) continue;
      const double cs = dot(a, b) / (na * nb);
      for (std::size_t k = 0; k < ch; ++k) {
        g_ri(r, k) += w * cs * (b[k] / (na * nb) - cs * a[k] / (na * na));
        g_rj(r, k) += w * cs * (a[k] / (na * nb) - cs * b[k] / (nb * nb));
      }
    }
  }

  // R = M − sB
  Matrix g_mi = g_ri;
  Matrix g_mj = g_rj;
  intersection_backward(c.m_i, c.m_j, c.k_j, c.z_i, c.n_j, -1.0 * g_ri, g_mi, g_mj);
  intersection_backward(c.m_j, c.m_i, c.k_i, c.z_j, c.n_i, -1.0 * g_rj, g_mj, g_mi);

  // M = ELU(A) + 1, A = S W
  Matrix g_ai = g_mi;
  Matrix g_aj = g_mj;
  for (std::size_t i = 0; i < g_ai.data().size(); ++i) {
    g_ai.data()[i] *= elu1_prime(c.a_i.data()[i]);
    g_aj.data()[i] *= elu1_prime(c.a_j.data()[i]);
  }
  const Matrix g_pi = mul_transpose(s, g_ai);
  const Matrix g_pj = mul_transpose(s, g_aj);

  Vector grad;
  for (const Matrix* m : {&g_pi, &g_pj, &g_wg, &g_w1, &g_w2}) grad.insert(grad.end(), m->data().begin(), m->data().end());
  grad.insert(grad.end(), g_local.begin(), g_local.end());
  return {loss, std::move(grad)};
}

ToySequences make_toy_sequences(const Dataset& data, std::size_t tokens, std::uint64_t seed) {
  data.validate();
  if (tokens < 2 || data.size() < tokens) throw Error(Errc::InvalidConfig, "not enough samples for one sequence");
  const std::size_t c = data.dim();
  std::size_t n_labels = 0;
  for (auto l : data.labels) n_labels = std::max(n_labels, l + 1);
  std::vector<Vector> means(n_labels, Vector(c, 0.0));
  std::vector<double> counts(n_labels, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    axpy(1.0, data.samples[i], means[data.labels[i]]);
    counts[data.labels[i]] += 1.0;
  }
  Matrix mean_rows(n_labels, c);
  for (std::size_t l = 0; l < n_labels; ++l)
    if (counts[l] > 0.0)
      for (std::size_t k = 0; k < c; ++k) mean_rows(l, k) = means[l][k] / counts[l];
  const Matrix normed = token_norm(mean_rows);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  ToySequences seqs;
  for (std::size_t start = 0; start + tokens <= order.size(); start += tokens) {
    Matrix in(tokens, c);
    Matrix tg(tokens, c);
    for (std::size_t r = 0; r < tokens; ++r) {
      const std::size_t idx = order[start + r];
      std::copy(data.samples[idx].begin(), data.samples[idx].end(), in.row(r).begin());
      const auto nr = normed.row(data.labels[idx]);
      std::copy(nr.begin(), nr.end(), tg.row(r).begin());
    }
    seqs.inputs.push_back(std::move(in));
    seqs.targets.push_back(std::move(tg));
  }
  return seqs;
}

DBAHistory train_toy(const DBAConfig& cfg, const Dataset& data, std::size_t steps, double step_size) {
  cfg.validate();
  if (data.dim() != cfg.channels) throw Error(Errc::DimensionMismatch, "toy data dimension differs from channels");
  if (!(step_size >= 0.0) || step_size > 1.0) throw Error(Errc::InvalidConfig, "step_size must lie in [0, 1]");
  const ToySequences seqs = make_toy_sequences(data, cfg.tokens, cfg.seed ^ 0x5eedULL);
  DBAHistory hist{{}, {}, DBAParams::init(cfg)};
  DBAParams& p = hist.final_params;
  const double w = 1.0 / static_cast<double>(seqs.inputs.size());
  auto mean_j = [&]() {
    double j = 0.0;
    for (const auto& s : seqs.inputs) j += w * block_forward(p, s, cfg.lambda_orth).j_orth;
    return j;
  };
  Vector theta = p.flat();
  for (std::size_t step = 0; step < steps; ++step) {
    double loss = 0.0;
    double j = 0.0;
    Vector grad(theta.size(), 0.0);
    for (std::size_t q = 0; q < seqs.inputs.size(); ++q) {
      auto [l, g] = block_loss_grad(p, seqs.inputs[q], seqs.targets[q], cfg.lambda_orth);
      loss += w * l;
      axpy(w, g, grad);
      j += w * block_forward(p, seqs.inputs[q], 0.0).j_orth;
    }
    if (!std::isfinite(loss) || loss > 1e12) throw Error(Errc::Diverged, "DBA training diverged at step " + std::to_string(step));
    hist.loss.push_back(loss);
    hist.j_orth.push_back(j);
    axpy(-step_size, grad, theta);
    p.set_flat(theta);
  }
  hist.j_orth.push_back(mean_j());
  return hist;
}

json dba_to_json(const DBAParams& p) {
  return json{{"channels", p.channels()},
              {"proj_i", matrix_to_json(p.proj_i)},
              {"proj_j", matrix_to_json(p.proj_j)},
              {"gate_w", matrix_to_json(p.gate_w)},
              {"gate_local", vector_to_json(p.gate_local)},
              {"ffn_w1", matrix_to_json(p.ffn_w1)},
              {"ffn_w2", matrix_to_json(p.ffn_w2)}};
}

}  // namespace poslab
