#include "angularpu/vmf_stats.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "angularpu/bessel.hpp"
#include "angularpu/error.hpp"

namespace angularpu {

namespace {

void require_dim(std::size_t d) {
  if (d < 2) throw Error(ErrorCode::InvalidDimension, "sphere dimension d must be >= 2, got " + std::to_string(d));
}

void require_kappa(double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw Error(ErrorCode::InvalidConcentration, "kappa must be positive and finite, got " + std::to_string(kappa));
  }
}

}  // namespace

VmfParams::VmfParams(UnitVector mu_in, double kappa_in) : mu(std::move(mu_in)), kappa(kappa_in) {
  require_kappa(kappa);
}

double log_norm_const(std::size_t d, double kappa) {
  require_dim(d);
  require_kappa(kappa);
  const double half = 0.5 * static_cast<double>(d);
  const double nu = half - 1.0;
  const double r = nu * std::log(kappa) - half * std::log(2.0 * std::numbers::pi) - log_bessel_i(nu, kappa);
  if (!std::isfinite(r)) throw Error(ErrorCode::NumericOverflow, "log C_d(kappa) is not finite");
  return r;
}

double log_uniform_density(std::size_t d) {
  require_dim(d);
  const double half = 0.5 * static_cast<double>(d);
  return std::lgamma(half) - std::log(2.0) - half * std::log(std::numbers::pi);
}

double mean_resultant_length(std::size_t d, double kappa) {
  require_dim(d);
  require_kappa(kappa);
  const double nu = 0.5 * static_cast<double>(d) - 1.0;
  return std::exp(log_bessel_i(nu + 1.0, kappa) - log_bessel_i(nu, kappa));
}

double vmf_log_density(const UnitVector& z, const VmfParams& params) {
  if (z.dim() != params.mu.dim()) throw Error(ErrorCode::DimensionMismatch, "vmf density dimension mismatch");
  return log_norm_const(z.dim(), params.kappa) + params.kappa * dot(params.mu.coords(), z.coords());
}

double bayes_score_threshold(std::size_t d, double kappa, double pi) {
  if (!(pi > 0.0 && pi < 1.0)) throw Error(ErrorCode::InvalidSpec, "class prior pi must lie in (0,1)");
  return -std::log(pi / (1.0 - pi)) - (log_norm_const(d, kappa) - log_uniform_density(d));
}

BayesRule bayes_threshold(std::size_t d, double kappa, double pi) {
  const double T = bayes_score_threshold(d, kappa, pi);
  if (!(T >= -kappa && T <= kappa)) {
    throw Error(ErrorCode::DegenerateThreshold, "T = " + std::to_string(T) + " lies outside [-kappa, kappa] for kappa = " +
                                                    std::to_string(kappa) + "; the optimal rule is constant");
  }
  return BayesRule{T / kappa, T, pi, d, kappa};
}

UnitVector mle_mean_direction(std::span<const UnitVector> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyBatch, "mean direction of an empty sample");
  const std::size_t d = samples.front().dim();
  std::vector<double> mean(d, 0.0);
  for (const auto& z : samples) {
    if (z.dim() != d) throw Error(ErrorCode::DimensionMismatch, "samples differ in dimension");
    for (std::size_t i = 0; i < d; ++i) mean[i] += z[i];
  }
  for (auto& x : mean) x /= static_cast<double>(samples.size());
  if (!(norm(mean) > kNormEpsilon)) throw Error(ErrorCode::DegenerateResultant, "sample mean has zero length");
  return normalize(mean);
}

}  // namespace angularpu
