#include "angularpu/theory.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>

#include "angularpu/error.hpp"
#include "angularpu/losses.hpp"
#include "angularpu/rng.hpp"
#include "angularpu/sphere.hpp"
#include "angularpu/vmf_stats.hpp"
#include "json.hpp"

namespace angularpu {

namespace {

// Tracks the gated inequalities of one check.
class Gate {
 public:
  explicit Gate(const VerifyOptions& opt) : tighten_(opt.tighten) {}

  void le(double measured, double bound) { record(bound - measured, false); }
  void lt(double measured, double bound) { record(bound - measured, true); }
  void near(double measured, double target, double tol) { record(tol - std::abs(measured - target), false); }

  double slack() const noexcept { return slack_; }
  Verdict verdict() const noexcept { return ok_ ? Verdict::pass : Verdict::fail; }

 private:
  void record(double s, bool strict) {
    s -= tighten_;
    slack_ = std::min(slack_, s);
    if (std::isnan(s) || (strict ? !(s > 0.0) : !(s >= 0.0))) ok_ = false;
  }

  double tighten_;
  double slack_ = std::numeric_limits<double>::infinity();
  bool ok_ = true;
};

UnitVector basis_vector(std::size_t d) {
  std::vector<double> e(d, 0.0);
  e[0] = 1.0;
  return UnitVector(std::move(e));
}

Matrix uniform_batch(std::size_t d, std::size_t m, RngStream& rng) { return stack_rows(sample_uniform_sphere(d, m, rng)); }

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments r;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) r.mean += x;
  r.mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - r.mean) * (x - r.mean);
  var = xs.size() > 1 ? var / (n - 1.0) : 0.0;
  r.se = std::sqrt(var / n);
  return r;
}

std::string tag(const std::string& base, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s@%g", base.c_str(), v);
  return buf;
}

BoundCheckReport make_report(const std::string& name, std::uint64_t seed, std::uint64_t trials) {
  BoundCheckReport r;
  r.check_name = name;
  r.seed = seed;
  r.trials = trials;
  return r;
}

void finish(BoundCheckReport& r, const Gate& g) {
  r.slack = g.slack();
  r.verdict = g.verdict();
}

}  // namespace

std::string BoundCheckReport::to_json() const {
  nlohmann::ordered_json j;
  j["check_name"] = check_name;
  auto pairs = [](const std::vector<std::pair<std::string, double>>& v) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (const auto& [k, x] : v) o[k] = x;
    return o;
  };
  j["parameters"] = pairs(parameters);
  j["measured"] = pairs(measured);
  j["bounds"] = pairs(bounds);
  j["slack"] = slack;
  j["trials"] = trials;
  j["verdict"] = verdict == Verdict::pass ? "pass" : verdict == Verdict::fail ? "fail" : "degenerate_pass";
  j["seed"] = seed;
  if (!note.empty()) j["note"] = note;
  return j.dump();
}

double pi_sensitivity_bound(std::size_t d, double beta, double pi) {
  const double base = beta * beta / (2.0 * static_cast<double>(d));
  return base + std::log(1.0 - pi * pi + pi * pi * std::exp(beta - base));
}

BoundCheckReport check_bayes_optimality(std::size_t d, double kappa, double pi, std::size_t n, std::uint64_t seed,
                                        const VerifyOptions& opt) {
  auto r = make_report("bayes_optimality", seed, n);
  r.parameters = {{"d", double(d)}, {"kappa", kappa}, {"pi", pi}, {"n", double(n)}};
  BayesRule rule{};
  try {
    rule = bayes_threshold(d, kappa, pi);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateThreshold) throw;
    r.verdict = Verdict::degenerate_pass;
    r.measured = {{"T", bayes_score_threshold(d, kappa, pi)}};
    r.bounds = {{"T_lower", -kappa}, {"T_upper", kappa}};
    r.note = e.what();
    return r;
  }
  RngStream rng(seed, 101);
  const UnitVector mu = basis_vector(d);
  std::vector<std::pair<double, int>> pts(n);
  for (auto& [c, y] : pts) {
    y = rng.uniform() < pi ? 1 : 0;
    const UnitVector z = y ? sample_vmf(mu, kappa, 1, rng).front() : sample_uniform_sphere(d, 1, rng).front();
    c = z[0];
  }
  std::size_t correct = 0;
  for (const auto& [c, y] : pts) correct += ((c >= rule.tau) == (y == 1)) ? 1 : 0;
  // Exhaustive sweep over every observed value (plus "all negative").
  std::sort(pts.begin(), pts.end());
  std::size_t pos_total = 0;
  for (const auto& p : pts) pos_total += p.second;
  std::size_t best = n - pos_total;  // threshold above every point
  std::size_t neg_below = 0, pos_below = 0;
  for (std::size_t k = 0; k < n;) {
    // threshold = pts[k].first: points >= it predicted positive
    const std::size_t here = neg_below + (pos_total - pos_below);
    best = std::max(best, here);
    const double v = pts[k].first;
    while (k < n && pts[k].first == v) {
      (pts[k].second ? pos_below : neg_below) += 1;
      ++k;
    }
  }
  const double nd = static_cast<double>(n);
  const double acc = static_cast<double>(correct) / nd;
  const double acc_best = static_cast<double>(best) / nd;
  const double se = std::sqrt(acc_best * (1.0 - acc_best) / nd);
  r.measured = {{"tau", rule.tau}, {"T", rule.T}, {"accuracy_analytic", acc}, {"accuracy_sweep", acc_best},
                {"gap", acc_best - acc}};
  r.bounds = {{"gap_max", 2.0 * se}};
  Gate g(opt);
  g.le(acc_best - acc, 2.0 * se);
  finish(r, g);
  return r;
}

BoundCheckReport check_prototype_consistency(std::size_t d, double kappa, const std::vector<std::size_t>& n_grid,
                                             std::size_t trials, std::uint64_t seed, const VerifyOptions& opt) {
  if (n_grid.empty() || trials == 0) throw Error(ErrorCode::InvalidSpec, "n_grid and trials must be nonempty");
  for (std::size_t k = 1; k < n_grid.size(); ++k) {
    if (n_grid[k] <= n_grid[k - 1]) throw Error(ErrorCode::InvalidSpec, "n_grid must be ascending");
  }
  auto r = make_report("prototype_consistency", seed, trials);
  r.parameters = {{"d", double(d)}, {"kappa", kappa}};
  RngStream rng(seed, 102);
  const UnitVector mu = basis_vector(d);
  std::vector<double> medians;
  for (std::size_t n : n_grid) {
    std::vector<double> angles(trials);
    for (auto& a : angles) a = angle_between(mle_mean_direction(sample_vmf(mu, kappa, n, rng)), mu);
    std::sort(angles.begin(), angles.end());
    const double med = trials % 2 ? angles[trials / 2] : 0.5 * (angles[trials / 2 - 1] + angles[trials / 2]);
    medians.push_back(med);
    r.measured.emplace_back(tag("median_angle_n", double(n)), med);
  }
  Gate g(opt);
  for (std::size_t k = 1; k < medians.size(); ++k) g.lt(medians[k], medians[k - 1]);
  if (kappa >= 5.0 && n_grid.back() >= 10000) {
    g.lt(medians.back(), 0.05);
    r.bounds = {{"final_angle_max", 0.05}};
  } else {
    r.note = "low-signal or small-n regime: monotonicity only";
  }
  finish(r, g);
  return r;
}

BoundCheckReport check_cosine_concentration(const std::vector<std::size_t>& d_list, std::size_t m, double delta,
                                            std::size_t trials, std::uint64_t seed, const VerifyOptions& opt) {
  if (m < 2) throw Error(ErrorCode::BatchTooSmall, "cosine concentration needs M >= 2");
  auto r = make_report("cosine_concentration", seed, trials);
  r.parameters = {{"M", double(m)}, {"delta", delta}};
  RngStream rng(seed, 103);
  Gate g(opt);
  const double pairs = static_cast<double>(m) * static_cast<double>(m - 1) / 2.0;
  for (std::size_t d : d_list) {
    const double dd = static_cast<double>(d);
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    std::size_t count = 0, tail_hits = 0, max_violations = 0;
    const double max_bound = std::sqrt(2.0 * std::log(2.0 * pairs / delta) / dd);
    for (std::size_t t = 0; t < trials; ++t) {
      const Matrix batch = uniform_batch(d, m, rng);
      double peak = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
          const double x = dot(batch.row(i), batch.row(j));
          s1 += x;
          s2 += x * x;
          s4 += x * x * x * x;
          ++count;
          peak = std::max(peak, std::abs(x));
          if (std::abs(x) >= 0.5) ++tail_hits;
        }
      }
      if (peak > max_bound) ++max_violations;
    }
    const double k = static_cast<double>(count);
    const double mean = s1 / k;
    const double e2 = s2 / k;
    const double var = e2 - mean * mean;
    const double se_mean = std::sqrt(var / k);
    const double se_var = std::sqrt(std::max(0.0, s4 / k - e2 * e2) / k);
    const double rate = static_cast<double>(max_violations) / static_cast<double>(trials);
    const double rate_se = std::sqrt(delta * (1.0 - delta) / static_cast<double>(trials));
    const double tail = static_cast<double>(tail_hits) / k;
    const double tail_bound = std::min(1.0, 2.0 * std::exp(-dd * 0.25 / 2.0));
    const double tail_se = std::sqrt(tail_bound * (1.0 - tail_bound) / k);

    r.measured.emplace_back(tag("mean", dd), mean);
    r.measured.emplace_back(tag("variance", dd), var);
    r.measured.emplace_back(tag("max_violation_rate", dd), rate);
    r.measured.emplace_back(tag("tail_rate_t0.5", dd), tail);
    r.bounds.emplace_back(tag("mean_tol", dd), 5.0 * se_mean);
    r.bounds.emplace_back(tag("variance_target", dd), 1.0 / dd);
    r.bounds.emplace_back(tag("variance_tol", dd), 5.0 * se_var);
    r.bounds.emplace_back(tag("max_cosine_bound", dd), max_bound);
    r.bounds.emplace_back(tag("max_violation_rate_max", dd), delta + 2.0 * rate_se);
    r.bounds.emplace_back(tag("tail_bound", dd), tail_bound + 3.0 * tail_se);
    g.near(mean, 0.0, 5.0 * se_mean);
    g.near(var, 1.0 / dd, 5.0 * se_var);
    g.le(rate, delta + 2.0 * rate_se);
    g.le(tail, tail_bound + 3.0 * tail_se);
  }
  finish(r, g);
  return r;
}

BoundCheckReport check_reg_baseline(std::size_t d, std::size_t m, double beta, std::size_t trials, std::uint64_t seed,
                                    const VerifyOptions& opt) {
  if (m < 2) throw Error(ErrorCode::BatchTooSmall, "regularizer baseline needs M >= 2");
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidSpec, "beta must be > 0");
  auto r = make_report("reg_baseline", seed, trials);
  constexpr double kDelta = 0.05;
  r.parameters = {{"d", double(d)}, {"M", double(m)}, {"beta", beta}, {"delta", kDelta}};
  RngStream rng(seed, 104);
  const double dd = static_cast<double>(d);
  const double pairs = static_cast<double>(m) * static_cast<double>(m - 1) / 2.0;
  const double hp_bound = beta * std::sqrt(2.0 * std::log(2.0 * pairs / kDelta) / dd);
  std::vector<double> values(trials);
  std::size_t hp_violations = 0;
  for (auto& v : values) {
    v = loss_reg_ambient(uniform_batch(d, m, rng), beta, nullptr);
    if (v > hp_bound) ++hp_violations;
  }
  const Moments mo = moments(values);
  const double base = beta * beta / (2.0 * dd);
  const double rate = static_cast<double>(hp_violations) / static_cast<double>(trials);
  const double rate_se = std::sqrt(kDelta * (1.0 - kDelta) / static_cast<double>(trials));

  // Worst case: every row identical gives exactly beta.
  std::vector<double> row(d, 0.0);
  row[0] = 1.0;
  Matrix same(m, d);
  for (std::size_t i = 0; i < m; ++i) std::copy(row.begin(), row.end(), same.row(i).begin());
  const double worst = loss_reg_ambient(same, beta, nullptr);

  r.measured = {{"mean_lreg", mo.mean}, {"se", mo.se}, {"hp_violation_rate", rate}, {"identical_batch_lreg", worst}};
  r.bounds = {{"mean_bound", base + 3.0 * mo.se},
              {"mean_bound_sharper_d_minus_1", beta * beta / (2.0 * (dd - 1.0))},
              {"hp_bound", hp_bound},
              {"hp_violation_rate_max", kDelta + 2.0 * rate_se},
              {"global_cap", beta}};
  r.note = "identical batch excluded from the uniform statistic; sharper constant informational";
  Gate g(opt);
  g.le(mo.mean, base + 3.0 * mo.se);
  g.le(mo.mean, beta);
  g.le(-beta, mo.mean);
  g.le(rate, kDelta + 2.0 * rate_se);
  g.near(worst, beta, 1e-12);
  finish(r, g);
  return r;
}

BoundCheckReport check_reg_upper_bound(std::size_t batches, std::uint64_t seed, const VerifyOptions& opt) {
  auto r = make_report("reg_upper_bound", seed, batches);
  RngStream rng(seed, 105);
  std::size_t violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t n = 2 + rng.uniform_index(47);
    const std::size_t d = 2 + rng.uniform_index(63);
    const double t = 0.01 + 10.0 * rng.uniform();
    std::vector<UnitVector> rows;
    switch (b % 4) {
      case 0:
        rows = sample_uniform_sphere(d, n, rng);
        break;
      case 1: {
        const UnitVector mu = sample_uniform_sphere(d, 1, rng).front();
        rows = sample_vmf(mu, std::exp(8.0 * rng.uniform()), n, rng);
        break;
      }
      case 2:
        rows.assign(n, sample_uniform_sphere(d, 1, rng).front());
        break;
      default:
        rows = sample_uniform_sphere(d, n, rng);
        for (auto& z : rows) {
          if (rng.uniform() < 0.5) z = rows.front();
        }
        break;
    }
    const double v = loss_reg(rows, t);
    worst = std::max(worst, v - t);
    if (v > t) ++violations;
  }
  r.measured = {{"violations", double(violations)}, {"max_excess", worst}};
  r.bounds = {{"violations_max", 0.0}, {"excess_max", 0.0}};
  Gate g(opt);
  g.le(double(violations), 0.0);
  g.le(worst, 0.0);
  finish(r, g);
  return r;
}

BoundCheckReport check_pi_sensitivity(std::size_t d, std::size_t m, double beta, const std::vector<double>& pi_list,
                                      double kappa, std::size_t trials, std::uint64_t seed, const VerifyOptions& opt) {
  if (m < 2) throw Error(ErrorCode::BatchTooSmall, "pi sensitivity needs M >= 2");
  for (double pi : pi_list) {
    if (!(pi > 0.0 && pi < 1.0)) throw Error(ErrorCode::InvalidSpec, "pi values must lie in (0, 1)");
  }
  auto r = make_report("pi_sensitivity", seed, trials);
  r.parameters = {{"d", double(d)}, {"M", double(m)}, {"beta", beta}, {"kappa", kappa}};
  RngStream rng(seed, 106);
  const UnitVector mu = basis_vector(d);
  Gate g(opt);
  for (double pi : pi_list) {
    std::vector<double> values(trials);
    for (auto& v : values) {
      std::vector<UnitVector> rows;
      rows.reserve(m);
      for (std::size_t i = 0; i < m; ++i) {
        rows.push_back(rng.uniform() < pi ? sample_vmf(mu, kappa, 1, rng).front()
                                          : sample_uniform_sphere(d, 1, rng).front());
      }
      v = loss_reg(rows, beta);
    }
    const Moments mo = moments(values);
    const double bound = pi_sensitivity_bound(d, beta, pi);
    r.measured.emplace_back(tag("mean_lreg_pi", pi), mo.mean);
    r.bounds.emplace_back(tag("bound_pi", pi), bound + 3.0 * mo.se);
    g.le(mo.mean, bound + 3.0 * mo.se);
    g.le(mo.mean, beta);
  }
  finish(r, g);
  return r;
}

BoundCheckReport check_neutral_bce(std::size_t d, double alpha, std::size_t m, std::uint64_t seed,
                                   const VerifyOptions& opt) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidSpec, "alpha must be > 0");
  auto r = make_report("neutral_bce", seed, m);
  r.parameters = {{"d", double(d)}, {"alpha", alpha}, {"M", double(m)}};
  RngStream rng(seed, 107);
  Gate g(opt);
  const double log2 = std::log(2.0);

  // (a) pointwise bounds on s in [-50, 50], step 0.01
  std::size_t grid_violations = 0;
  for (int k = -5000; k <= 5000; ++k) {
    const double s = k / 100.0;
    const double l = neutral_bce(s);
    if (l < log2 || l > log2 + s * s / 8.0) ++grid_violations;
  }
  g.le(double(grid_violations), 0.0);

  // (b) manifold gradient vs central differences along geodesics
  double fd_err = 0.0;
  constexpr double kH = 1e-5;
  for (int rep = 0; rep < 20; ++rep) {
    const UnitVector z = sample_uniform_sphere(d, 1, rng).front();
    const UnitVector mu = sample_uniform_sphere(d, 1, rng).front();
    const double mm = 2.0 * rng.uniform() - 1.0;
    const std::vector<double> grad = manifold_grad_unlab(z, mu, alpha, mm);
    for (int dir = 0; dir < 3; ++dir) {
      std::vector<double> raw(d);
      for (auto& x : raw) x = rng.normal();
      const UnitVector v = normalize(tangent_project(z, raw));
      auto f = [&](double e) {
        double c = 0.0;
        for (std::size_t i = 0; i < d; ++i) c += mu[i] * (std::cos(e) * z[i] + std::sin(e) * v[i]);
        return neutral_bce(alpha * (c - mm));
      };
      const double fd = (f(kH) - f(-kH)) / (2.0 * kH);
      fd_err = std::max(fd_err, std::abs(fd - dot(grad, v.coords())));
    }
  }
  g.le(fd_err, 1e-5);

  // (c) uniform-batch mean, (d) mean tangent gradient
  const UnitVector mu = basis_vector(d);
  std::vector<double> losses(m);
  std::vector<double> gsum(d, 0.0), gsq(d, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const UnitVector z = sample_uniform_sphere(d, 1, rng).front();
    losses[i] = neutral_bce(alpha * z[0]);
    const std::vector<double> gz = manifold_grad_unlab(z, mu, alpha, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
      gsum[c] += gz[c];
      gsq[c] += gz[c] * gz[c];
    }
  }
  const Moments mo = moments(losses);
  const double bce_bound = log2 + alpha * alpha / (8.0 * static_cast<double>(d));
  const double md = static_cast<double>(m);
  double mean_norm2 = 0.0, se2 = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    const double mean = gsum[c] / md;
    mean_norm2 += mean * mean;
    se2 += (gsq[c] / md - mean * mean) / md;
  }
  g.le(mo.mean, bce_bound + 3.0 * mo.se);
  g.le(std::sqrt(mean_norm2), 3.0 * std::sqrt(se2));

  r.measured = {{"grid_violations", double(grid_violations)},
                {"fd_max_abs_error", fd_err},
                {"mean_bce", mo.mean},
                {"mean_tangent_grad_norm", std::sqrt(mean_norm2)}};
  r.bounds = {{"grid_violations_max", 0.0},
              {"fd_tol", 1e-5},
              {"mean_bce_bound", bce_bound + 3.0 * mo.se},
              {"tangent_grad_norm_max", 3.0 * std::sqrt(se2)}};
  finish(r, g);
  return r;
}

namespace {

// m unit rows in R^m with every pairwise cosine equal to c (Cholesky of the Gram matrix).
Matrix equiangular(std::size_t m, double c) {
  Matrix gram(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) gram(i, j) = i == j ? 1.0 : c;
  }
  Matrix l(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = gram(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = i == j ? std::sqrt(std::max(s, 0.0)) : s / l(j, j);
    }
  }
  return l;
}

}  // namespace

BoundCheckReport check_dispersion_direction(double t, std::uint64_t seed, const VerifyOptions& opt) {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidSpec, "t must be > 0");
  auto r = make_report("dispersion_direction", seed, 4);
  constexpr std::size_t kRows = 5;
  r.parameters = {{"t", t}, {"M", double(kRows)}};
  const double family[] = {-0.2, 0.0, 0.5, 0.9};
  Gate g(opt);
  double prev = -std::numeric_limits<double>::infinity();
  for (double c : family) {
    const double v = loss_reg_ambient(equiangular(kRows, c), t, nullptr);
    r.measured.emplace_back(tag("lreg_c", c), v);
    g.lt(prev, v);
    prev = v;
  }
  Matrix ident(kRows, kRows);
  for (std::size_t i = 0; i < kRows; ++i) ident(i, 0) = 1.0;
  Matrix ortho(kRows, kRows);
  for (std::size_t i = 0; i < kRows; ++i) ortho(i, i) = 1.0;
  Matrix anti(2, 2);
  anti(0, 0) = 1.0;
  anti(1, 0) = -1.0;
  const double l_ident = loss_reg_ambient(ident, t, nullptr);
  const double l_ortho = loss_reg_ambient(ortho, t, nullptr);
  const double l_anti = loss_reg_ambient(anti, t, nullptr);
  r.measured.emplace_back("lreg_identical", l_ident);
  r.measured.emplace_back("lreg_orthogonal", l_ortho);
  r.measured.emplace_back("lreg_antipodal", l_anti);
  r.bounds = {{"identical", t}, {"orthogonal", 0.0}, {"antipodal", -t}};
  g.near(l_ident, t, 1e-12);
  g.near(l_ortho, 0.0, 1e-12);
  g.near(l_anti, -t, 1e-12);
  finish(r, g);
  return r;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "bayes_optimality",  "prototype_consistency", "cosine_concentration", "reg_baseline",
      "reg_upper_bound",   "pi_sensitivity",        "neutral_bce",          "dispersion_direction"};
  return names;
}

std::vector<BoundCheckReport> run_suite(const std::string& name, std::uint64_t seed, const VerifyOptions& opt) {
  const auto& names = suite_names();
  if (name != "all" && std::find(names.begin(), names.end(), name) == names.end()) {
    throw Error(ErrorCode::InvalidSpec, "suite: unknown name '" + name + "'");
  }
  auto run_one = [seed, opt](const std::string& n) -> BoundCheckReport {
    if (n == "bayes_optimality") return check_bayes_optimality(10, 5.0, 0.3, 200000, seed, opt);
    if (n == "prototype_consistency") return check_prototype_consistency(16, 10.0, {100, 1000, 10000}, 50, seed, opt);
    if (n == "cosine_concentration") return check_cosine_concentration({8, 64, 256}, 100, 0.05, 400, seed, opt);
    if (n == "reg_baseline") return check_reg_baseline(128, 256, 2.0, 200, seed, opt);
    if (n == "reg_upper_bound") return check_reg_upper_bound(10000, seed, opt);
    if (n == "pi_sensitivity") return check_pi_sensitivity(128, 256, 2.0, {0.1, 0.3, 0.5, 0.9}, 5.0, 200, seed, opt);
    if (n == "neutral_bce") return check_neutral_bce(128, 3.0, 100000, seed, opt);
    return check_dispersion_direction(2.0, seed, opt);
  };
  std::vector<std::string> chosen = name == "all" ? names : std::vector<std::string>{name};
  std::vector<std::future<BoundCheckReport>> futures;
  for (const auto& n : chosen) futures.push_back(std::async(std::launch::async, run_one, n));
  std::vector<BoundCheckReport> out;
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

}  // namespace angularpu
