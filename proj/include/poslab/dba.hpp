#pragma once

#include <cstdint>
#include <vector>

#include "poslab/datagen.hpp"
#include "poslab/io.hpp"
#include "poslab/linalg.hpp"

namespace poslab {

struct DBAConfig {
  std::size_t tokens = 8;    ///< T
  std::size_t channels = 4;  ///< C
  std::size_t hidden = 8;    ///< FFN width H
  double lambda_orth = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DBAParams {
  Matrix proj_i;      ///< C×C
  Matrix proj_j;      ///< C×C
  Matrix gate_w;      ///< C×C
  Vector gate_local;  ///< (w_prev, w_self, w_next), zero-padded at the ends
  Matrix ffn_w1;      ///< 2C×H
  Matrix ffn_w2;      ///< H×C

  static DBAParams init(const DBAConfig& cfg);
  std::size_t channels() const { return proj_i.rows(); }
  Vector flat() const;
  void set_flat(std::span<const double> theta);
};

/// ELU(x) + 1 elementwise.
Matrix feature_map(const Matrix& x);

/// sB_i = diag(K_j 1)⁻¹ K_j s_i with K_j = s_j s_jᵀ (the normalizer
/// s_j(s_jᵀ1) is a T-vector broadcast across channels); sB_j symmetric.
/// Throws DegenerateNormalizer when a normalizer entry is below 1e-12.
std::pair<Matrix, Matrix> dba_intersection(const Matrix& s_i, const Matrix& s_j);
std::pair<Matrix, Matrix> dba_residuals(const Matrix& s_i, const Matrix& s_j, const Matrix& sb_i, const Matrix& sb_j);

/// Mean over tokens of the squared cosine between matching rows; a row
/// pair with a zero row contributes 0.
double orth_loss(const Matrix& sr_i, const Matrix& sr_j);

/// Per-token zero mean, unit (population) variance.
Matrix token_norm(const Matrix& u);

struct BlockOutput {
  Matrix s_next;
  double j_orth = 0.0;
};

/// Norm(S + FFN([R_i ⊙ G, R_j ⊙ G])) with G = σ(smooth(S)·W_g),
/// FFN(X) = GELU(X W1) W2.
BlockOutput block_forward(const DBAParams& p, const Matrix& s, double lambda_orth);

/// Toy objective: mean_t ‖Y_t − target_t‖² + λ·J_orth for one sequence.
double block_loss(const DBAParams& p, const Matrix& s, const Matrix& target, double lambda_orth);
/// Gradient of block_loss, flattened in DBAParams::flat order.
std::pair<double, Vector> block_loss_grad(const DBAParams& p, const Matrix& s, const Matrix& target,
                                          double lambda_orth);

struct ToySequences {
  std::vector<Matrix> inputs;
  std::vector<Matrix> targets;
};

/// Shuffles the dataset (seeded) and cuts it into sequences of `tokens`
/// rows; each token's target is the token-normalized mean of its class.
ToySequences make_toy_sequences(const Dataset& data, std::size_t tokens, std::uint64_t seed);

struct DBAHistory {
  std::vector<double> loss;
  std::vector<double> j_orth;  ///< mean J_orth over sequences before each step, plus final
  DBAParams final_params;
};

/// Full-batch gradient descent on the toy objective. Throws Diverged.
DBAHistory train_toy(const DBAConfig& cfg, const Dataset& data, std::size_t steps, double step_size);

json dba_to_json(const DBAParams& p);

}  // namespace poslab
