#pragma once

#include <span>
#include <vector>

#include "angularpu/sphere.hpp"

namespace angularpu {

/// Which logit the neutral BCE sees on unlabeled points.
enum class LogitMode {
  kappa_dot,      ///< l = kappa * mu.z
  margin_scaled,  ///< l = alpha * (mu.z - m)
};

/// Whether backprop differentiates through the soft weight w(z).
enum class WeightGradient { stopped, flowing };

enum class MarginMode { fixed, learnable };

struct LossConfig {
  double kappa = 3.0;   // score scale
  double t = 2.0;       // regularizer temperature
  double lambda = 0.5;  // regularizer weight
  MarginMode margin_mode = MarginMode::learnable;
  double fixed_margin = 0.5;  // used when margin_mode == fixed
  LogitMode logit_mode = LogitMode::kappa_dot;
  WeightGradient weight_gradient = WeightGradient::stopped;

  /// Throws InvalidSpec naming the offending field.
  void validate() const;

  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

struct LossGradients {
  std::vector<double> mu;  // ambient gradient w.r.t. the prototype
  double alpha = 0.0;
  double margin = 0.0;
  Matrix pos;    // one row per positive embedding
  Matrix unlab;  // one row per unlabeled embedding
};

struct LossBreakdown {
  double l_pos = 0.0;
  double l_unlab = 0.0;
  double l_reg = 0.0;
  double total = 0.0;
  LossGradients grads;
};

double sigmoid(double x) noexcept;

/// -(kappa/|P|) sum mu.z_i
double loss_pos(std::span<const UnitVector> pos, const UnitVector& mu, double kappa);

/// sigma(alpha * (mu.z - m))
double soft_weight(const UnitVector& z, const UnitVector& mu, double alpha, double m);

/// Binary cross-entropy against target 1/2: log(2 cosh(s/2)).
double neutral_bce(double logit) noexcept;

/// w * (sigma(l) - 1/2), the derivative of w * neutral_bce(l) in l.
double grad_unlab_logit(double logit, double w) noexcept;

/// (1/|U|) sum w(z_j) neutral_bce(l_j).
double loss_unlab(std::span<const UnitVector> unlab, const UnitVector& mu, const LossConfig& config, double m,
                  double alpha);

/// log of the mean of exp(t z_i.z_j) over ordered pairs i != j. Needs |U| >= 2.
double loss_reg(std::span<const UnitVector> unlab, double t);

LossBreakdown total_loss(std::span<const UnitVector> pos, std::span<const UnitVector> unlab, const UnitVector& mu,
                         const LossConfig& config, double m, double alpha);

/// Riemannian gradient of neutral_bce(alpha (mu.z - m)) at z:
/// (alpha/2) tanh(s/2) (I - z z^T) mu.
std::vector<double> manifold_grad_unlab(const UnitVector& z, const UnitVector& mu, double alpha, double m);

// Ambient-coordinate versions. Rows and mu are used as given (no unit-norm
// check, no clamping) so they can be probed off the sphere by finite
// differences and driven by the trainer before re-projection.

LossBreakdown total_loss_ambient(const Matrix& pos, const Matrix& unlab, std::span<const double> mu,
                                 const LossConfig& config, double m, double alpha);

/// L_reg and, if grad is non-null, dL_reg/dz for every row.
double loss_reg_ambient(const Matrix& unlab, double t, Matrix* grad);

/// Euclidean-geometry objective on raw (unnormalized) embeddings v.
/// Similarity is c(v) = -||v - p||^2 and the unlabeled logit is kappa (c - m)
/// (kappa_dot) or alpha (c - m) (margin_scaled); the uniformity term acts on
/// v / ||v||. Gradients are w.r.t. the raw rows and the raw prototype p.
LossBreakdown total_loss_euclidean(const Matrix& pos, const Matrix& unlab, std::span<const double> proto,
                                   const LossConfig& config, double m, double alpha);

}  // namespace angularpu
