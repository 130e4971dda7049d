#include "angularpu/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "angularpu/error.hpp"

namespace angularpu {

UnitVector::UnitVector(std::vector<double> coords) : coords_(std::move(coords)) {
  if (coords_.size() < 2) {
    throw Error(ErrorCode::InvalidDimension, "unit vector needs d >= 2, got " + std::to_string(coords_.size()));
  }
  const double n = norm(coords_);
  if (!(std::abs(n - 1.0) <= kUnitTolerance)) {
    throw Error(ErrorCode::DegenerateVector, "coordinates are not unit norm (norm " + std::to_string(n) + ")");
  }
}

Matrix stack_rows(std::span<const UnitVector> vs) {
  if (vs.empty()) return {};
  Matrix m(vs.size(), vs.front().dim());
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (vs[i].dim() != m.cols) throw Error(ErrorCode::DimensionMismatch, "rows differ in dimension");
    std::copy(vs[i].vec().begin(), vs[i].vec().end(), m.row(i).begin());
  }
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> v) noexcept { return std::sqrt(dot(v, v)); }

UnitVector normalize(std::span<const double> v) {
  const double n = norm(v);
  if (!(n > kNormEpsilon)) throw Error(ErrorCode::DegenerateVector, "cannot normalize a vector of norm " + std::to_string(n));
  std::vector<double> out(v.begin(), v.end());
  for (auto& x : out) x /= n;
  return UnitVector(std::move(out));
}

double cosine(const UnitVector& u, const UnitVector& v) {
  if (u.dim() != v.dim()) throw Error(ErrorCode::DimensionMismatch, "cosine of vectors with different dimension");
  return std::clamp(dot(u.coords(), v.coords()), -1.0, 1.0);
}

std::vector<double> tangent_project(const UnitVector& z, std::span<const double> g) {
  if (z.dim() != g.size()) throw Error(ErrorCode::DimensionMismatch, "tangent projection dimension mismatch");
  const double radial = dot(z.coords(), g);
  std::vector<double> out(g.begin(), g.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= radial * z[i];
  return out;
}

namespace {

std::vector<double> gaussian_direction(std::size_t d, RngStream& rng) {
  std::vector<double> v(d);
  double n = 0.0;
  do {
    for (auto& x : v) x = rng.normal();
    n = norm(v);
  } while (!(n > kNormEpsilon));
  for (auto& x : v) x /= n;
  return v;
}

// Renormalizes a vector that is unit up to rounding.
UnitVector polish(std::vector<double> v) {
  const double n = norm(v);
  for (auto& x : v) x /= n;
  return UnitVector(std::move(v));
}

}  // namespace

std::vector<UnitVector> sample_uniform_sphere(std::size_t d, std::size_t n, RngStream& rng) {
  if (d < 2) throw Error(ErrorCode::InvalidDimension, "uniform sphere sampling needs d >= 2");
  std::vector<UnitVector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(polish(gaussian_direction(d, rng)));
  return out;
}

std::vector<UnitVector> sample_vmf(const UnitVector& mu, double kappa, std::size_t n, RngStream& rng) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw Error(ErrorCode::InvalidConcentration, "kappa must be positive and finite, got " + std::to_string(kappa));
  }
  const std::size_t d = mu.dim();
  const double dm1 = static_cast<double>(d - 1);
  // b written without the cancellation in (-2k + sqrt(4k^2 + (d-1)^2)) / (d-1).
  const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + dm1 * std::log1p(-x0 * x0);
  const double shape = dm1 / 2.0;

  std::vector<UnitVector> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    double w = 0.0;
    for (;;) {
      const double z = rng.beta(shape, shape);
      w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
      const double u = rng.uniform_open0();
      if (kappa * w + dm1 * std::log1p(-x0 * w) - c >= std::log(u)) break;
    }
    w = std::clamp(w, -1.0, 1.0);

    std::vector<double> v = gaussian_direction(d, rng);
    double t = 0.0;
    do {
      const double radial = dot(mu.coords(), v);
      for (std::size_t i = 0; i < d; ++i) v[i] -= radial * mu[i];
      t = norm(v);
      if (!(t > 1e-8)) v = gaussian_direction(d, rng);
    } while (!(t > 1e-8));

    const double perp = std::sqrt(std::max(0.0, 1.0 - w * w));
    std::vector<double> z(d);
    for (std::size_t i = 0; i < d; ++i) z[i] = w * mu[i] + perp * v[i] / t;
    out.push_back(polish(std::move(z)));
  }
  return out;
}

double angle_between(const UnitVector& a, const UnitVector& b) { return std::acos(cosine(a, b)); }

}  // namespace angularpu
