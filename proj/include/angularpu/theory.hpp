#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace angularpu {

enum class Verdict { pass, fail, degenerate_pass };

struct BoundCheckReport {
  std::string check_name;
  std::vector<std::pair<std::string, double>> parameters;
  std::vector<std::pair<std::string, double>> measured;
  std::vector<std::pair<std::string, double>> bounds;
  double slack = 0.0;  // smallest margin by which a gated inequality held; negative on failure
  std::uint64_t trials = 0;
  Verdict verdict = Verdict::fail;
  std::uint64_t seed = 0;
  std::string note;

  bool passed() const noexcept { return verdict != Verdict::fail; }
  /// One JSON object, no trailing newline.
  std::string to_json() const;
};

/// Extra margin every gated inequality must clear. Zero in normal use; a
/// positive value forces failures for exercising the failure path.
struct VerifyOptions {
  double tighten = 0.0;
};

BoundCheckReport check_bayes_optimality(std::size_t d, double kappa, double pi, std::size_t n, std::uint64_t seed,
                                        const VerifyOptions& opt = {});

BoundCheckReport check_prototype_consistency(std::size_t d, double kappa, const std::vector<std::size_t>& n_grid,
                                             std::size_t trials, std::uint64_t seed, const VerifyOptions& opt = {});

BoundCheckReport check_cosine_concentration(const std::vector<std::size_t>& d_list, std::size_t m, double delta,
                                            std::size_t trials, std::uint64_t seed, const VerifyOptions& opt = {});

BoundCheckReport check_reg_baseline(std::size_t d, std::size_t m, double beta, std::size_t trials, std::uint64_t seed,
                                    const VerifyOptions& opt = {});

/// L_reg <= t over random batches of mixed shape (uniform, clustered,
/// duplicated rows). Zero violations allowed.
BoundCheckReport check_reg_upper_bound(std::size_t batches, std::uint64_t seed, const VerifyOptions& opt = {});

BoundCheckReport check_pi_sensitivity(std::size_t d, std::size_t m, double beta, const std::vector<double>& pi_list,
                                      double kappa, std::size_t trials, std::uint64_t seed,
                                      const VerifyOptions& opt = {});

BoundCheckReport check_neutral_bce(std::size_t d, double alpha, std::size_t m, std::uint64_t seed,
                                   const VerifyOptions& opt = {});

BoundCheckReport check_dispersion_direction(double t, std::uint64_t seed, const VerifyOptions& opt = {});

/// pi-mixture bound: beta^2/(2d) + log(1 - pi^2 + pi^2 exp(beta - beta^2/(2d))).
double pi_sensitivity_bound(std::size_t d, double beta, double pi);

/// Names accepted by run_suite, in run order.
const std::vector<std::string>& suite_names();

/// Runs "all" or one named check at default parameters. Reports come back in
/// declaration order. Throws InvalidSpec for an unknown name.
std::vector<BoundCheckReport> run_suite(const std::string& name, std::uint64_t seed, const VerifyOptions& opt = {});

}  // namespace angularpu
