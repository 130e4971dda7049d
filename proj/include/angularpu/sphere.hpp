#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "angularpu/rng.hpp"

namespace angularpu {

inline constexpr double kNormEpsilon = 1e-12;
inline constexpr double kUnitTolerance = 1e-9;

/// Point on S^{d-1}, d >= 2. Construction validates the unit-norm invariant.
class UnitVector {
 public:
  /// Wraps coordinates that are already unit norm (within 1e-9).
  explicit UnitVector(std::vector<double> coords);

  std::size_t dim() const noexcept { return coords_.size(); }
  std::span<const double> coords() const noexcept { return coords_; }
  double operator[](std::size_t i) const noexcept { return coords_[i]; }
  const std::vector<double>& vec() const noexcept { return coords_; }

  friend bool operator==(const UnitVector&, const UnitVector&) = default;

 private:
  std::vector<double> coords_;
};

/// Row-major dense matrix; rows are the usual unit of access.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(std::size_t i) noexcept { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const noexcept { return {data.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data[i * cols + j]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Stacks unit vectors as matrix rows. All must share a dimension.
Matrix stack_rows(std::span<const UnitVector> vs);

/// Sequential left-to-right dot product; the fixed order makes dot(a,b) == dot(b,a) bitwise.
double dot(std::span<const double> a, std::span<const double> b) noexcept;
double norm(std::span<const double> v) noexcept;

UnitVector normalize(std::span<const double> v);

/// Dot product clamped to [-1, 1].
double cosine(const UnitVector& u, const UnitVector& v);

/// g - (z.g) z : the component of g tangent to the sphere at z.
std::vector<double> tangent_project(const UnitVector& z, std::span<const double> g);

std::vector<UnitVector> sample_uniform_sphere(std::size_t d, std::size_t n, RngStream& rng);

/// von Mises-Fisher draws: Wood's rejection sampler for w = mu.z composed with a
/// uniform direction in the tangent complement of mu.
std::vector<UnitVector> sample_vmf(const UnitVector& mu, double kappa, std::size_t n, RngStream& rng);

/// Angle between two unit vectors in radians.
double angle_between(const UnitVector& a, const UnitVector& b);

}  // namespace angularpu
