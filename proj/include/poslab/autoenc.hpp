#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "poslab/datagen.hpp"
#include "poslab/io.hpp"
#include "poslab/linalg.hpp"
#include "poslab/projector.hpp"
#include "poslab/rng.hpp"

namespace poslab {

enum class Activation { Linear, Relu };
/// Subtract: recon = s − dec·latent, i.e. the decoder learns P^⊥.
enum class Skip { None, Subtract };

/// Encoder N×n, decoder n×N. A tied model stores only the encoder and its
/// decoder is encᵀ by construction.
class AEParams {
 public:
  /// Untied.
  AEParams(Matrix enc, Matrix dec, Activation act = Activation::Linear, Skip skip = Skip::None);
  /// Tied.
  AEParams(Matrix enc, Activation act = Activation::Linear, Skip skip = Skip::None);

  /// Encoder rows are a QR-orthonormalized Gaussian draw (unit-norm
  /// Gaussian rows when N > n). When `orient_on` is given, each row's sign
  /// is chosen so that it is nonnegative on the data mean.
  static AEParams init(std::size_t n, std::size_t latent, bool tied, Activation act, Skip skip, Rng& rng,
                       const Dataset* orient_on = nullptr);
  /// Encoder rows are normalized training samples picked by farthest-point
  /// selection on cosine similarity, starting from sample 0; decoder = encᵀ.
  static AEParams init_from_data(std::size_t latent, bool tied, Activation act, Skip skip, const Dataset& data);

  const Matrix& enc() const { return enc_; }
  Matrix dec() const { return tied_ ? enc_.transpose() : dec_; }
  Matrix& enc_mut() { return enc_; }
  /// Throws InvalidArgument for tied models.
  Matrix& dec_mut();
  bool tied() const { return tied_; }
  Activation activation() const { return act_; }
  Skip skip() const { return skip_; }
  std::size_t input_dim() const { return enc_.cols(); }
  std::size_t latent_dim() const { return enc_.rows(); }

  /// Flattened trainable parameters: enc row-major, then dec when untied.
  Vector flat() const;
  void set_flat(std::span<const double> theta);

 private:
  Matrix enc_;
  Matrix dec_;
  bool tied_;
  Activation act_;
  Skip skip_;
};

struct Forward {
  Vector latent;
  Vector recon;
};

Forward forward(const AEParams& p, std::span<const double> s);

struct PlainObjective {};
struct MaskedObjective {
  std::size_t wmin = 1;
  std::size_t wmax = 1;
};
/// λ1‖ŝ − s‖² + λ2‖ŝ_b − s‖² − λ3‖x − x_b‖², b = blurred input.
struct PushPullObjective {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 0.0;
  double blur_sigma = 1.0;
};
using Objective = std::variant<PlainObjective, MaskedObjective, PushPullObjective>;

struct TrainConfig {
  double step_size = 0.01;
  std::size_t steps = 100;
  /// 0 means full batch; otherwise indices drawn with replacement per step.
  std::size_t batch = 0;
  Objective objective = PlainObjective{};
  std::uint64_t seed = 0;
  /// 0 disables momentum.
  double momentum = 0.0;

  /// Throws InvalidConfig.
  void validate(std::size_t input_dim) const;
};

struct AEGrad {
  Matrix enc;
  Matrix dec;  ///< empty for tied models
};

/// Batch-mean objective. Degradations are drawn from `rng` (taken by value,
/// so loss and ae_grad with equal rng see identical masks).
double ae_loss(const AEParams& p, const Objective& obj, const Dataset& batch, Rng rng);
AEGrad ae_grad(const AEParams& p, const Objective& obj, const Dataset& batch, Rng rng);
std::pair<double, AEGrad> ae_loss_and_grad(const AEParams& p, const Objective& obj, const Dataset& batch, Rng rng);

/// Max entrywise relative error between the analytic gradient and central
/// differences with step h. Denominator floor: 1e-3·max|numeric| + 1e-12.
double ae_grad_check(const AEParams& p, const Objective& obj, const Dataset& batch, Rng rng, double h = 1e-6);

/// Smallest |E·u| over the batch inputs, degraded copies included.
double ae_min_abs_preactivation(const AEParams& p, const Objective& obj, const Dataset& batch, Rng rng);

/// Mean of ‖s − f(mask(s))‖ over every window with length in [wmin, wmax]
/// and every start offset.
double masked_recon_score(const AEParams& p, std::span<const double> s, std::size_t wmin, std::size_t wmax);

struct TrainReport {
  std::vector<double> loss_history;
  AEParams final_params;
  double grad_check_max_rel_err = 0.0;  ///< at init, per sample; NaN when no sample qualifies
};

/// Gradient descent (optional momentum). Step t uses Rng(seed).split(t).
/// Throws Diverged when the loss is non-finite or exceeds 1e12 in magnitude.
TrainReport train(const AEParams& init, const TrainConfig& cfg, const Dataset& data);

struct ReluSelection {
  Vector coeffs_pre;
  Vector coeffs_post;
  Vector recon;  ///< post[0]·d1 + post[1]·d2
};
ReluSelection relu_selection_demo(std::span<const double> d1, std::span<const double> d2, std::span<const double> s);

struct LeakageResult {
  double measured = 0.0;
  double bound = 0.0;
  double theta = 0.0;
  double delta = 0.0;
};

/// measured = ‖D_jᵀ s‖, bound = θ/(1 − δ)‖x*‖ + √(1 − θ²)‖c_r‖ with
/// θ = σ_max(D_iᵀ D_j), δ = δ of the D_i block. Throws DeltaTooLarge.
LeakageResult leakage_check(const Matrix& di, const Matrix& dj, std::span<const double> s,
                            std::span<const double> x_star, double c_r_norm);

struct LeakageBases {
  Matrix shared;    ///< rows span span(D_i, D_j)^⊥ (F_ij); empty when that is {0}
  Matrix residual;  ///< rows span span(D_i)^⊥ ∩ span(D_i, D_j) (F_i,r)
};
LeakageBases leakage_bases(const Matrix& di, const Matrix& dj);

/// s = D_i(D_iᵀD_i)⁻¹x* + F_ijᵀc + F_i,rᵀc_r.
Vector leakage_sample(const Matrix& di, const Matrix& dj, std::span<const double> x_star,
                      std::span<const double> c_shared, std::span<const double> c_r);

/// Mann–Whitney AUROC of anomaly scores vs normal scores (ties count ½).
double auroc(std::span<const double> normal_scores, std::span<const double> anomaly_scores);

struct Threshold {
  double threshold = 0.0;
  double f1 = 0.0;
};
/// Threshold maximizing F1 for "score ≥ threshold ⇒ anomaly".
Threshold best_f1_threshold(std::span<const double> normal_scores, std::span<const double> anomaly_scores);
double f1_at(std::span<const double> normal_scores, std::span<const double> anomaly_scores, double threshold);

struct CompactnessReport {
  std::vector<double> recon_error;
  std::vector<double> off_union;
  double mean_recon_error = 0.0;
  double mean_off_union = 0.0;
  double assignment_accuracy = 0.0;
  std::optional<double> anomaly_auroc;
  std::optional<Threshold> calibrated;
  std::optional<double> test_f1;
};

/// With anomalies: AUROC over all of data vs anomalies; the F1 threshold is
/// picked on the first half of each set and evaluated on the second half.
CompactnessReport compactness_metrics(const AEParams& p, const Dataset& data, const UnionProjector& truth,
                                      const Dataset* anomalies = nullptr);

json ae_to_json(const AEParams& p);
AEParams ae_from_json(const json& j);

}  // namespace poslab
