#pragma once

#include <cstdint>

#include "angularpu/data.hpp"

namespace fixture {

/// Planted vMF-uniform data behind a noisy random linear lift.
inline angularpu::DatasetManifest planted_manifest(std::size_t n, std::uint64_t data_seed, std::uint64_t split_seed,
                                                   std::size_t labeled = 500, double scale_min = 1.0,
                                                   double scale_max = 1.0) {
  angularpu::DatasetManifest m;
  auto& s = m.synthetic;
  s.d_input = 32;
  s.d_sphere = 16;
  s.n = n;
  s.pi = 0.3;
  s.kappa_true = 20.0;
  s.lift = angularpu::Lift::random_linear;
  s.noise_sigma = 0.05;
  s.scale_min = scale_min;
  s.scale_max = scale_max;
  s.seed = data_seed;
  m.split = {labeled, 0.1, 0.2, split_seed};
  return m;
}

inline angularpu::PuDataset build(const angularpu::DatasetManifest& m) {
  auto ds = angularpu::build_pu_split(angularpu::generate_synthetic(m.synthetic), m.split);
  ds.manifest = m;
  return ds;
}

}  // namespace fixture
