#include "angularpu/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "angularpu/error.hpp"

namespace angularpu {

namespace {

// Sum after sorting so the result depends only on the multiset of terms:
// permuting a batch leaves the loss bit-identical.
double ordered_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double x : terms) s += x;
  return s;
}

struct SimilarityTerms {
  double l_pos = 0.0;
  double l_unlab = 0.0;
  std::vector<double> d_pos;    // dL/dc for positives
  std::vector<double> d_unlab;  // dL/dc for unlabeled
  double d_alpha = 0.0;
  double d_margin = 0.0;
};

// Shared by both geometries once similarities c are known. When
// centered_kappa_logit is set the kappa_dot logit is kappa * (c - m).
SimilarityTerms similarity_terms(std::span<const double> pos_sim, std::span<const double> unlab_sim,
                                 const LossConfig& config, double m, double alpha, bool centered_kappa_logit) {
  SimilarityTerms out;
  const double kappa = config.kappa;
  const double np = static_cast<double>(pos_sim.size());
  const double nu = static_cast<double>(unlab_sim.size());

  std::vector<double> terms(pos_sim.begin(), pos_sim.end());
  out.l_pos = -kappa * ordered_sum(terms) / np;
  out.d_pos.assign(pos_sim.size(), -kappa / np);

  const bool flowing = config.weight_gradient == WeightGradient::flowing;
  terms.assign(unlab_sim.size(), 0.0);
  out.d_unlab.assign(unlab_sim.size(), 0.0);
  for (std::size_t j = 0; j < unlab_sim.size(); ++j) {
    const double c = unlab_sim[j];
    const double w = sigmoid(alpha * (c - m));
    double logit, dl_dc, dl_dalpha = 0.0, dl_dm = 0.0;
    if (config.logit_mode == LogitMode::kappa_dot) {
      logit = centered_kappa_logit ? kappa * (c - m) : kappa * c;
      dl_dc = kappa;
      if (centered_kappa_logit) dl_dm = -kappa;
    } else {
      logit = alpha * (c - m);
      dl_dc = alpha;
      dl_dalpha = c - m;
      dl_dm = -alpha;
    }
    const double nb = neutral_bce(logit);
    terms[j] = w * nb;
    const double g = grad_unlab_logit(logit, w);
    double dc = g * dl_dc;
    double da = g * dl_dalpha;
    double dm = g * dl_dm;
    if (flowing) {
      const double dw = w * (1.0 - w);
      dc += nb * alpha * dw;
      da += nb * (c - m) * dw;
      dm += nb * -alpha * dw;
    }
    out.d_unlab[j] = dc / nu;
    out.d_alpha += da / nu;
    out.d_margin += dm / nu;
  }
  out.l_unlab = ordered_sum(terms) / nu;
  return out;
}

void require_batches(const Matrix& pos, const Matrix& unlab, std::size_t d, const LossConfig& config) {
  if (pos.rows == 0) throw Error(ErrorCode::EmptyBatch, "positive batch is empty");
  if (unlab.rows == 0) throw Error(ErrorCode::EmptyBatch, "unlabeled batch is empty");
  if (config.lambda > 0.0 && unlab.rows < 2) {
    throw Error(ErrorCode::BatchTooSmall, "uniformity term needs at least 2 unlabeled rows");
  }
  if (pos.cols != d || unlab.cols != d) throw Error(ErrorCode::DimensionMismatch, "batch and prototype dimensions differ");
}

}  // namespace

void LossConfig::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::InvalidSpec, field + ": " + why);
  };
  if (!(kappa > 0.0) || !std::isfinite(kappa)) bad("kappa", "must be > 0");
  if (!(t > 0.0) || !std::isfinite(t)) bad("t", "must be > 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) bad("lambda", "must be >= 0");
  if (margin_mode == MarginMode::fixed && !(fixed_margin >= -1.0 && fixed_margin <= 1.0)) {
    bad("m", "fixed margin must lie in [-1, 1]");
  }
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double loss_pos(std::span<const UnitVector> pos, const UnitVector& mu, double kappa) {
  if (pos.empty()) throw Error(ErrorCode::EmptyBatch, "positive batch is empty");
  std::vector<double> c;
  c.reserve(pos.size());
  for (const auto& z : pos) c.push_back(cosine(z, mu));
  return -kappa * ordered_sum(c) / static_cast<double>(pos.size());
}

double soft_weight(const UnitVector& z, const UnitVector& mu, double alpha, double m) {
  return sigmoid(alpha * (cosine(z, mu) - m));
}

double neutral_bce(double logit) noexcept {
  const double a = std::abs(logit);
  return 0.5 * a + std::log1p(std::exp(-a));
}

double grad_unlab_logit(double logit, double w) noexcept { return w * 0.5 * std::tanh(0.5 * logit); }

double loss_unlab(std::span<const UnitVector> unlab, const UnitVector& mu, const LossConfig& config, double m,
                  double alpha) {
  if (unlab.empty()) throw Error(ErrorCode::EmptyBatch, "unlabeled batch is empty");
  std::vector<double> c;
  c.reserve(unlab.size());
  for (const auto& z : unlab) c.push_back(cosine(z, mu));
  const double dummy_pos[1] = {0.0};
  return similarity_terms(dummy_pos, c, config, m, alpha, false).l_unlab;
}

double loss_reg_ambient(const Matrix& unlab, double t, Matrix* grad) {
  const std::size_t n = unlab.rows;
  if (n < 2) throw Error(ErrorCode::BatchTooSmall, "uniformity term needs at least 2 rows, got " + std::to_string(n));
  // Gram matrix of the batch; symmetric bitwise because dot() is. Entries are
  // clamped to [-1, 1] so rounding on unit rows cannot push the value past t.
  Matrix gram(n, n);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double g = std::clamp(dot(unlab.row(i), unlab.row(j)), -1.0, 1.0);
      gram(i, j) = gram(j, i) = g;
      peak = std::max(peak, g);
    }
  }
  std::vector<double> terms;
  terms.reserve(n * (n - 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) terms.push_back(std::exp(t * (gram(i, j) - peak)));
    }
  }
  const double scaled_sum = ordered_sum(terms);
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1);
  // every scaled term is <= 1, so the log ratio is <= 0 and value <= t * peak <= t
  const double value = t * peak + std::min(0.0, std::log(scaled_sum) - std::log(pairs));

  if (grad != nullptr) {
    *grad = Matrix(n, unlab.cols);
    const double coef = 2.0 * t / scaled_sum;
    for (std::size_t k = 0; k < n; ++k) {
      auto gk = grad->row(k);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == k) continue;
        const double e = coef * std::exp(t * (gram(k, j) - peak));
        const auto uj = unlab.row(j);
        for (std::size_t c = 0; c < unlab.cols; ++c) gk[c] += e * uj[c];
      }
    }
  }
  return value;
}

double loss_reg(std::span<const UnitVector> unlab, double t) {
  if (unlab.size() < 2) throw Error(ErrorCode::BatchTooSmall, "uniformity term needs at least 2 rows");
  return loss_reg_ambient(stack_rows(unlab), t, nullptr);
}

LossBreakdown total_loss_ambient(const Matrix& pos, const Matrix& unlab, std::span<const double> mu,
                                 const LossConfig& config, double m, double alpha) {
  const std::size_t d = mu.size();
  require_batches(pos, unlab, d, config);

  std::vector<double> pos_sim(pos.rows), unlab_sim(unlab.rows);
  for (std::size_t i = 0; i < pos.rows; ++i) pos_sim[i] = dot(mu, pos.row(i));
  for (std::size_t j = 0; j < unlab.rows; ++j) unlab_sim[j] = dot(mu, unlab.row(j));
  const SimilarityTerms terms = similarity_terms(pos_sim, unlab_sim, config, m, alpha, false);

  LossBreakdown out;
  out.l_pos = terms.l_pos;
  out.l_unlab = terms.l_unlab;
  out.grads.alpha = terms.d_alpha;
  out.grads.margin = terms.d_margin;
  out.grads.mu.assign(d, 0.0);
  out.grads.pos = Matrix(pos.rows, d);
  out.grads.unlab = Matrix(unlab.rows, d);

  for (std::size_t i = 0; i < pos.rows; ++i) {
    const auto z = pos.row(i);
    auto g = out.grads.pos.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      g[c] = terms.d_pos[i] * mu[c];
      out.grads.mu[c] += terms.d_pos[i] * z[c];
    }
  }
  for (std::size_t j = 0; j < unlab.rows; ++j) {
    const auto z = unlab.row(j);
    auto g = out.grads.unlab.row(j);
    for (std::size_t c = 0; c < d; ++c) {
      g[c] = terms.d_unlab[j] * mu[c];
      out.grads.mu[c] += terms.d_unlab[j] * z[c];
    }
  }

  if (unlab.rows >= 2) {
    Matrix reg_grad;
    const bool active = config.lambda > 0.0;
    out.l_reg = loss_reg_ambient(unlab, config.t, active ? &reg_grad : nullptr);
    if (active) {
      for (std::size_t k = 0; k < out.grads.unlab.data.size(); ++k) {
        out.grads.unlab.data[k] += config.lambda * reg_grad.data[k];
      }
    }
  }
  out.total = out.l_pos + out.l_unlab + config.lambda * out.l_reg;
  return out;
}

LossBreakdown total_loss(std::span<const UnitVector> pos, std::span<const UnitVector> unlab, const UnitVector& mu,
                         const LossConfig& config, double m, double alpha) {
  if (pos.empty()) throw Error(ErrorCode::EmptyBatch, "positive batch is empty");
  if (unlab.empty()) throw Error(ErrorCode::EmptyBatch, "unlabeled batch is empty");
  return total_loss_ambient(stack_rows(pos), stack_rows(unlab), mu.coords(), config, m, alpha);
}

LossBreakdown total_loss_euclidean(const Matrix& pos, const Matrix& unlab, std::span<const double> proto,
                                   const LossConfig& config, double m, double alpha) {
  const std::size_t d = proto.size();
  require_batches(pos, unlab, d, config);

  auto similarity = [&](std::span<const double> v) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += (v[c] - proto[c]) * (v[c] - proto[c]);
    return -s;
  };
  std::vector<double> pos_sim(pos.rows), unlab_sim(unlab.rows);
  for (std::size_t i = 0; i < pos.rows; ++i) pos_sim[i] = similarity(pos.row(i));
  for (std::size_t j = 0; j < unlab.rows; ++j) unlab_sim[j] = similarity(unlab.row(j));
  const SimilarityTerms terms = similarity_terms(pos_sim, unlab_sim, config, m, alpha, true);

  LossBreakdown out;
  out.l_pos = terms.l_pos;
  out.l_unlab = terms.l_unlab;
  out.grads.alpha = terms.d_alpha;
  out.grads.margin = terms.d_margin;
  out.grads.mu.assign(d, 0.0);
  out.grads.pos = Matrix(pos.rows, d);
  out.grads.unlab = Matrix(unlab.rows, d);

  // dc/dv = -2 (v - p), dc/dp = 2 (v - p)
  auto chain = [&](const Matrix& rows, const std::vector<double>& dl_dc, Matrix& grad) {
    for (std::size_t i = 0; i < rows.rows; ++i) {
      const auto v = rows.row(i);
      auto g = grad.row(i);
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = v[c] - proto[c];
        g[c] = -2.0 * dl_dc[i] * diff;
        out.grads.mu[c] += 2.0 * dl_dc[i] * diff;
      }
    }
  };
  chain(pos, terms.d_pos, out.grads.pos);
  chain(unlab, terms.d_unlab, out.grads.unlab);

  if (unlab.rows >= 2) {
    Matrix dirs(unlab.rows, d);
    std::vector<double> norms(unlab.rows);
    for (std::size_t j = 0; j < unlab.rows; ++j) {
      norms[j] = norm(unlab.row(j));
      if (!(norms[j] > kNormEpsilon)) throw Error(ErrorCode::DegenerateEmbedding, "zero-norm euclidean embedding");
      for (std::size_t c = 0; c < d; ++c) dirs(j, c) = unlab(j, c) / norms[j];
    }
    Matrix reg_grad;
    const bool active = config.lambda > 0.0;
    out.l_reg = loss_reg_ambient(dirs, config.t, active ? &reg_grad : nullptr);
    if (active) {
      // Through u = v/||v||: dv = (I - u u^T) du / ||v||
      for (std::size_t j = 0; j < unlab.rows; ++j) {
        const auto u = dirs.row(j);
        const auto gu = reg_grad.row(j);
        const double radial = dot(u, gu);
        auto g = out.grads.unlab.row(j);
        for (std::size_t c = 0; c < d; ++c) g[c] += config.lambda * (gu[c] - radial * u[c]) / norms[j];
      }
    }
  }
  out.total = out.l_pos + out.l_unlab + config.lambda * out.l_reg;
  return out;
}

std::vector<double> manifold_grad_unlab(const UnitVector& z, const UnitVector& mu, double alpha, double m) {
  const double s = alpha * (dot(mu.coords(), z.coords()) - m);
  const double scale = 0.5 * alpha * std::tanh(0.5 * s);
  std::vector<double> g = tangent_project(z, mu.coords());
  for (auto& x : g) x *= scale;
  return g;
}

}  // namespace angularpu
