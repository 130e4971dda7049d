#include "angularpu/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "angularpu/error.hpp"

namespace angularpu {

namespace {

constexpr double kSeriesCutoff = 2000.0;
constexpr double kDebyeMinOrder = 20.0;

double series(double nu, double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  double log_scale = 0.0;
  constexpr double kRescale = 1e250;
  const double log_rescale = std::log(kRescale);
  for (double k = 1.0;; k += 1.0) {
    term *= q / (k * (nu + k));
    sum += term;
    if (sum > kRescale) {
      sum /= kRescale;
      term /= kRescale;
      log_scale += log_rescale;
    }
    // Past the peak the ratio is < 1 and the tail is bounded by a geometric series.
    const double ratio = q / ((k + 1.0) * (nu + k + 1.0));
    if (ratio < 1.0 && term < 1e-17 * sum * (1.0 - ratio)) break;
  }
  return nu * std::log(0.5 * x) - std::lgamma(nu + 1.0) + std::log(sum) + log_scale;
}

double debye(double nu, double x) {
  const double z = x / nu;
  const double root = std::sqrt(1.0 + z * z);
  const double t = 1.0 / root;
  const double eta = root + std::log(z / (1.0 + root));
  const double t2 = t * t;
  const double u1 = t * (3.0 - 5.0 * t2) / 24.0;
  const double u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0;
  const double u3 = t * t2 * (30375.0 - 369603.0 * t2 + 765765.0 * t2 * t2 - 425425.0 * t2 * t2 * t2) / 414720.0;
  const double t4 = t2 * t2;
  const double u4 = t4 *
                    (4465125.0 - 94121676.0 * t2 + 349922430.0 * t4 - 446185740.0 * t4 * t2 +
                     185910725.0 * t4 * t4) /
                    39813120.0;
  const double inv = 1.0 / nu;
  const double corr = 1.0 + inv * (u1 + inv * (u2 + inv * (u3 + inv * u4)));
  return nu * eta - 0.5 * std::log(2.0 * std::numbers::pi * nu) - 0.5 * std::log(root) + std::log(corr);
}

double hankel(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  double prev_abs = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(mu - odd * odd) / (8.0 * k * x);
    const double a = std::abs(term);
    if (a > prev_abs) break;  // asymptotic series started to diverge
    sum += term;
    if (a < 1e-17 * std::abs(sum)) break;
    prev_abs = a;
  }
  return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(sum);
}

}  // namespace

double log_bessel_i(double nu, double x) {
  if (!(nu >= 0.0) || !(x > 0.0)) {
    throw Error(ErrorCode::NumericOverflow,
                "log_bessel_i needs nu >= 0 and x > 0 (nu=" + std::to_string(nu) + ", x=" + std::to_string(x) + ")");
  }
  double r;
  if (x <= std::max(kSeriesCutoff, nu)) {
    r = series(nu, x);
  } else if (nu >= kDebyeMinOrder) {
    r = debye(nu, x);
  } else {
    r = hankel(nu, x);
  }
  if (!std::isfinite(r)) {
    throw Error(ErrorCode::NumericOverflow,
                "log I_nu(x) lost precision (nu=" + std::to_string(nu) + ", x=" + std::to_string(x) + ")");
  }
  return r;
}

}  // namespace angularpu
