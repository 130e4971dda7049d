#include <cmath>
#include <tuple>

#include "doctest.h"

#include "angularpu/bessel.hpp"
#include "angularpu/error.hpp"
#include "angularpu/vmf_stats.hpp"

using namespace angularpu;

namespace {

// Reference values computed offline with 50-digit arbitrary-precision arithmetic.
struct BesselRef {
  double nu, x, log_i;
};
const BesselRef kBessel[] = {
    {0, 0.5, 0.06154971918548130},   {0, 1e-3, 2.499999843750017e-7}, {0.5, 50, 47.12504996408125},
    {2, 12, 9.675668539453823},      {0, 700, 695.8056999984434},     {63, 1000, 993.6424731259823},
    {63, 64, 31.81007698862390},     {30, 200, 194.1811274402224},    {127, 5000, 4993.209515298768},
    {1.5, 30.5, 27.83886170472105},  {7, 2000, 1995.268419701021},    {0.5, 1e4, 9994.475891280807},
    {20, 501, 496.5734606091298},    {200, 800, 770.8515690462026},   {3, 1e5, 99993.32455498409},
    {63, 3, -175.42986783912075},
};

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

UnitVector e(std::size_t d, std::size_t k) {
  std::vector<double> v(d, 0.0);
  v[k] = 1.0;
  return UnitVector(v);
}

}  // namespace

TEST_CASE("log Bessel I against high-precision reference") {
  for (const auto& r : kBessel) {
    CAPTURE(r.nu);
    CAPTURE(r.x);
    CHECK(rel_close(log_bessel_i(r.nu, r.x), r.log_i, 1e-10));
  }
}

TEST_CASE("log Bessel I is continuous across evaluation regions") {
  for (double nu : {0.0, 0.5, 3.0, 7.0, 31.0, 63.0, 127.0}) {
    double prev = log_bessel_i(nu, 0.05);
    for (double x = 0.1; x < 3000; x *= 1.02) {
      const double cur = log_bessel_i(nu, x);
      CHECK(std::isfinite(cur));
      CHECK(cur > prev);
      prev = cur;
    }
  }
}

TEST_CASE("log_uniform_density") {
  CHECK(log_uniform_density(2) == doctest::Approx(-1.8378770664093455).epsilon(1e-14));
  CHECK(log_uniform_density(3) == doctest::Approx(-2.5310242469692908).epsilon(1e-14));
  CHECK(log_uniform_density(4) == doctest::Approx(-2.9826069522587457).epsilon(1e-14));
  CHECK_THROWS_AS(log_uniform_density(1), Error);
}

TEST_CASE("log_norm_const") {
  // closed form for d=3: kappa / (4 pi sinh kappa)
  CHECK(log_norm_const(3, 2.0) == doctest::Approx(-3.1262444390235136).epsilon(1e-12));
  CHECK(log_norm_const(3, 2.0) == doctest::Approx(std::log(2.0 / (4 * M_PI * std::sinh(2.0)))).epsilon(1e-12));
  CHECK(log_norm_const(3, 1e-9) == doctest::Approx(-2.5310242469692908).epsilon(1e-9));
  CHECK(rel_close(log_norm_const(128, 3.0), 127.01830977501355, 1e-8));
  for (std::size_t d : {2u, 3u, 8u, 64u, 256u}) {
    CHECK(log_norm_const(d, 1e-8) == doctest::Approx(log_uniform_density(d)).epsilon(1e-7));
  }
  CHECK_THROWS_AS(log_norm_const(3, 0.0), Error);
  CHECK_THROWS_AS(log_norm_const(1, 1.0), Error);
}

TEST_CASE("density peak bound over a grid") {
  for (std::size_t d : {2u, 3u, 5u, 16u, 64u, 128u, 512u}) {
    for (double k : {1e-6, 0.1, 1.0, 5.0, 20.0, 100.0, 1000.0}) {
      const double lc = log_norm_const(d, k);
      const double lu = log_uniform_density(d);
      CHECK(lc <= lu + 1e-12);
      CHECK(lc + k >= lu - 1e-12);
    }
  }
}

TEST_CASE("mean_resultant_length") {
  CHECK(mean_resultant_length(3, 2.0) == doctest::Approx(0.5373147207275481).epsilon(1e-12));
  CHECK(mean_resultant_length(3, 10.0) == doctest::Approx(0.9000000041223073).epsilon(1e-12));
  const double refs[3][3] = {{0.12346931414340687, 0.49444976406364533, 0.83645675496040382},
                             {0.062284332675995445, 0.28896618957686475, 0.68709220894493633},
                             {0.015621302598621634, 0.077667851380100665, 0.28736505137601648}};
  const std::size_t ds[3] = {8, 16, 64};
  const double ks[3] = {1, 5, 20};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(mean_resultant_length(ds[i], ks[j]) == doctest::Approx(refs[i][j]).epsilon(1e-10));

  for (std::size_t d : {2u, 3u, 16u, 128u}) {
    double prev = 0.0;
    for (double k = 1e-3; k < 1e4; k *= 1.5) {
      const double a = mean_resultant_length(d, k);
      CHECK(a > prev);
      CHECK(a < 1.0);
      prev = a;
    }
    CHECK(mean_resultant_length(d, 1e-6) < 1e-5);
    CHECK(mean_resultant_length(d, 1e6) > 0.999);
  }
}

TEST_CASE("vmf_log_density") {
  auto mu = e(3, 2);
  VmfParams p(mu, 2.0);
  CHECK(vmf_log_density(mu, p) == doctest::Approx(-3.1262444390235136 + 2.0).epsilon(1e-12));
  CHECK(vmf_log_density(e(3, 0), p) == log_norm_const(3, 2.0));
  CHECK_THROWS_AS(VmfParams(mu, 0.0), Error);
  CHECK_THROWS_AS(vmf_log_density(e(4, 0), p), Error);
}

TEST_CASE("isotropic negatives only shift the log-likelihood ratio") {
  RngStream r(3, 3);
  std::vector<double> m(6);
  for (auto& x : m) x = r.normal();
  auto mu = normalize(m);
  VmfParams p(mu, 4.0);
  auto pts = sample_uniform_sphere(6, 400, r);
  // any isotropic log-density is a constant on the sphere
  const double iso = -1.2345;
  std::vector<std::size_t> by_dot(pts.size()), by_llr(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) by_dot[i] = by_llr[i] = i;
  std::sort(by_dot.begin(), by_dot.end(),
            [&](auto a, auto b) { return dot(mu.coords(), pts[a].coords()) < dot(mu.coords(), pts[b].coords()); });
  std::sort(by_llr.begin(), by_llr.end(), [&](auto a, auto b) {
    return vmf_log_density(pts[a], p) - iso < vmf_log_density(pts[b], p) - iso;
  });
  CHECK(by_dot == by_llr);
}

TEST_CASE("bayes_threshold") {
  auto rule = bayes_threshold(3, 3.0, 0.5);
  CHECK(std::abs(rule.tau - 0.40191956713432849) < 1e-10);
  CHECK(std::abs(rule.tau - (-(1.0 / 3.0) * std::log(3.0 / std::sinh(3.0)))) < 1e-12);
  CHECK(std::abs(rule.T - rule.kappa * rule.tau) <= 1e-10 * std::abs(rule.T));

  // algebraic form: T = log((1-pi)/pi) + log U_d - log C_d(kappa)
  for (std::size_t d : {3u, 10u, 64u}) {
    for (double k : {2.0, 5.0, 20.0}) {
      for (double pi : {0.2, 0.5, 0.8}) {
        const double T = std::log((1 - pi) / pi) + log_uniform_density(d) - log_norm_const(d, k);
        CHECK(bayes_score_threshold(d, k, pi) == doctest::Approx(T).epsilon(1e-10));
      }
    }
  }

  double prev = 1e9;
  for (double pi = 0.3; pi < 0.95; pi += 0.05) {
    const auto b = bayes_threshold(10, 5.0, pi);
    CHECK(b.tau < prev);
    prev = b.tau;
  }

  try {
    bayes_threshold(10, 0.1, 0.05);
    FAIL("expected DegenerateThreshold");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::DegenerateThreshold);
  }
  CHECK_THROWS_AS(bayes_threshold(10, 5.0, 0.0), Error);
  CHECK_THROWS_AS(bayes_threshold(10, 5.0, 1.0), Error);
}

TEST_CASE("mle_mean_direction") {
  auto z = normalize(std::vector<double>{0.2, -0.7, 0.4});
  std::vector<UnitVector> one{z};
  CHECK(mle_mean_direction(one) == z);
  std::vector<UnitVector> opp{e(2, 0), normalize(std::vector<double>{-1, 0})};
  try {
    mle_mean_direction(opp);
    FAIL("expected DegenerateResultant");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::DegenerateResultant);
  }
  std::vector<UnitVector> none;
  CHECK_THROWS_AS(mle_mean_direction(none), Error);

  auto mu = e(16, 5);
  RngStream r(9, 9);
  auto pts = sample_vmf(mu, 10.0, 10000, r);
  CHECK(angle_between(mle_mean_direction(pts), mu) < 0.05);
}

TEST_CASE("mle error median decreases with n") {
  auto mu = e(16, 0);
  double prev = 10.0;
  for (std::size_t n : {100u, 1000u, 10000u}) {
    std::vector<double> angles;
    for (int t = 0; t < 50; ++t) {
      RngStream r(77, n * 100 + t);
      auto pts = sample_vmf(mu, 10.0, n, r);
      angles.push_back(angle_between(mle_mean_direction(pts), mu));
    }
    std::nth_element(angles.begin(), angles.begin() + 25, angles.end());
    CHECK(angles[25] < prev);
    prev = angles[25];
  }
}
