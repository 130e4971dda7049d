#pragma once

#include <cstddef>
#include <span>

#include "angularpu/sphere.hpp"

namespace angularpu {

struct VmfParams {
  UnitVector mu;
  double kappa;

  VmfParams(UnitVector mu, double kappa);
};

/// Bayes rule of the vMF-positive / uniform-negative model.
/// Predict positive iff mu.z >= tau, equivalently kappa * mu.z >= T.
struct BayesRule {
  double tau;
  double T;
  double pi;
  std::size_t d;
  double kappa;
};

/// log C_d(kappa) = (d/2 - 1) log kappa - (d/2) log 2pi - log I_{d/2-1}(kappa).
double log_norm_const(std::size_t d, double kappa);

/// log of 1 / |S^{d-1}| = log Gamma(d/2) - log 2 - (d/2) log pi.
double log_uniform_density(std::size_t d);

/// A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa) = E[mu.z] under vMF(mu, kappa).
double mean_resultant_length(std::size_t d, double kappa);

double vmf_log_density(const UnitVector& z, const VmfParams& params);

/// Unchecked T = -log(pi/(1-pi)) - (log C_d(kappa) - log U_d).
double bayes_score_threshold(std::size_t d, double kappa, double pi);

/// Throws DegenerateThreshold when T falls outside [-kappa, kappa], where the
/// optimal rule is constant.
BayesRule bayes_threshold(std::size_t d, double kappa, double pi);

/// Normalized sample mean. Throws DegenerateResultant when the mean vanishes.
UnitVector mle_mean_direction(std::span<const UnitVector> samples);

}  // namespace angularpu
