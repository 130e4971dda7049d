#include <cmath>
#include <functional>

#include "doctest.h"
#include "json.hpp"

#include "angularpu/error.hpp"
#include "angularpu/theory.hpp"

using namespace angularpu;

namespace {

double measured(const BoundCheckReport& r, const std::string& key) {
  for (const auto& [k, v] : r.measured)
    if (k == key) return v;
  FAIL("missing measured value " << key);
  return 0.0;
}

}  // namespace

TEST_CASE("pi sensitivity bound") {
  CHECK(pi_sensitivity_bound(128, 2.0, 0.1) == doctest::Approx(0.07648017784557728).epsilon(1e-13));
  CHECK(pi_sensitivity_bound(128, 2.0, 0.0) == doctest::Approx(4.0 / 256).epsilon(1e-15));
  CHECK(pi_sensitivity_bound(128, 2.0, 1e-9) == doctest::Approx(4.0 / 256).epsilon(1e-12));
  CHECK(pi_sensitivity_bound(128, 2.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  double prev = 0;
  for (double pi = 0.05; pi < 1; pi += 0.05) {
    CHECK(pi_sensitivity_bound(64, 1.5, pi) > prev);
    prev = pi_sensitivity_bound(64, 1.5, pi);
  }
}

TEST_CASE("bayes optimality") {
  auto r = check_bayes_optimality(10, 5.0, 0.3, 40000, 1);
  CHECK(r.verdict == Verdict::pass);
  CHECK(r.slack >= 0);
  CHECK(measured(r, "gap") <= 0.01);

  auto d3 = check_bayes_optimality(3, 3.0, 0.5, 20000, 2);
  CHECK(std::abs(measured(d3, "tau") - 0.40191956713432849) < 1e-10);
  CHECK(std::abs(measured(d3, "T") - 3 * 0.40191956713432849) < 1e-9);

  auto deg = check_bayes_optimality(10, 0.1, 0.05, 1000, 3);
  CHECK(deg.verdict == Verdict::degenerate_pass);
  CHECK(deg.passed());
  CHECK(deg.note.find("DegenerateThreshold") != std::string::npos);

  auto tight = check_bayes_optimality(10, 5.0, 0.3, 40000, 1, VerifyOptions{1e6});
  CHECK(tight.verdict == Verdict::fail);
  CHECK(tight.slack < 0);
}

TEST_CASE("prototype consistency") {
  auto r = check_prototype_consistency(16, 10.0, {100, 1000, 10000}, 20, 4);
  CHECK(r.verdict == Verdict::pass);
  auto low = check_prototype_consistency(16, 0.1, {100, 1000, 10000}, 10, 5);
  CHECK(low.passed());
}

TEST_CASE("cosine concentration") {
  auto r = check_cosine_concentration({8, 64}, 50, 0.05, 100, 6);
  CHECK(r.verdict == Verdict::pass);
  CHECK(check_cosine_concentration({8, 64}, 50, 0.05, 100, 6, VerifyOptions{1e6}).verdict == Verdict::fail);
}

TEST_CASE("regularizer baseline, upper bound, and mixture") {
  CHECK(check_reg_baseline(128, 256, 2.0, 200, 7).verdict == Verdict::pass);
  CHECK(check_reg_baseline(128, 256, 0.1, 200, 8).verdict == Verdict::pass);
  CHECK(check_reg_upper_bound(500, 9).verdict == Verdict::pass);
  auto mix = check_pi_sensitivity(64, 64, 2.0, {0.1, 0.9}, 5.0, 40, 10);
  CHECK(mix.verdict == Verdict::pass);
}

TEST_CASE("neutral bce and dispersion direction") {
  CHECK(check_neutral_bce(64, 3.0, 20000, 11).verdict == Verdict::pass);
  auto disp = check_dispersion_direction(2.0, 12);
  CHECK(disp.verdict == Verdict::pass);
  CHECK(measured(disp, "lreg_identical") == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(measured(disp, "lreg_orthogonal")) < 1e-12);
  CHECK(measured(disp, "lreg_antipodal") == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("reports are deterministic JSON") {
  auto a = check_reg_upper_bound(200, 13), b = check_reg_upper_bound(200, 13);
  CHECK(a.to_json() == b.to_json());
  auto j = nlohmann::json::parse(a.to_json());
  CHECK(j.at("check_name") == "reg_upper_bound");
  CHECK(j.at("verdict") == "pass");
  CHECK(j.at("seed") == 13);
  CHECK(j.contains("slack"));
  CHECK(j.contains("trials"));
  CHECK(a.to_json().find('\n') == std::string::npos);
}

TEST_CASE("suite names") {
  const auto& names = suite_names();
  CHECK(names.size() == 8);
  auto r = run_suite("dispersion_direction", 0);
  REQUIRE(r.size() == 1);
  CHECK(r[0].check_name == "dispersion_direction");
  try {
    run_suite("no_such_check", 0);
    FAIL("expected InvalidSpec");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidSpec);
  }
}
