#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "angularpu/data.hpp"
#include "angularpu/evaluator.hpp"
#include "angularpu/model.hpp"

namespace angularpu {

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch_size = 128;
  std::size_t epochs = 15;
  double lambda = 0.5;
  double kappa = 3.0;
  double t = 2.0;
  MarginMode margin_mode = MarginMode::learnable;
  /// Fixed margin, or the initial value of a learnable one. For the euclidean
  /// geometry this is the radius R.
  double m = 0.5;
  LogitMode logit_mode = LogitMode::kappa_dot;
  WeightGradient weight_gradient = WeightGradient::stopped;
  Geometry geometry = Geometry::cosine;
  MarginParam margin_param = MarginParam::tanh;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;  // only used when the dataset has no val rows
  std::vector<std::size_t> hidden = {kDefaultHidden};
  std::size_t embed_dim = 16;
  double dropout = 0.2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  /// Throws InvalidSpec naming the field.
  void validate() const;
  LossConfig loss_config() const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

/// In-place Adam update with bias correction. The first call sizes the
/// moments; later calls must match them. Throws ShapeMismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& adam, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

/// Every trainable scalar in a fixed order: layer weights and biases, mu,
/// alpha_raw, margin_raw, proto_euclid.
std::vector<double> flatten_params(const ModelState& s);
std::vector<double> flatten_grads(const ModelGradients& g);
void unflatten_params(std::span<const double> flat, ModelState& s);

struct EpochRecord {
  std::size_t epoch = 0;
  double l_pos = 0.0;
  double l_unlab = 0.0;
  double l_reg = 0.0;
  double total = 0.0;
  double val_auc = 0.0;  // NaN when undefined
  double val_f1 = 0.0;
  double seconds = 0.0;

  std::string to_json() const;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  double seconds = 0.0;
  ModelState final_state;
};

/// Model initialized from (config.seed, stream_id) for this dataset's input width.
ModelState init_for(const PuDataset& ds, const TrainConfig& config, std::uint64_t stream_id = 0);

/// A copy of ds in which val_fraction of the training rows are re-tagged val.
PuDataset carve_validation(const PuDataset& ds, double val_fraction, std::uint64_t seed);

/// Gradient of the training objective for one pair of batches, as used by a
/// single optimizer step. Exposed for gradient checks.
struct StepResult {
  LossBreakdown loss;
  ModelGradients grads;
};
StepResult compute_step(const ModelState& model, const PuDataset& ds, std::span<const std::size_t> pos_rows,
                        std::span<const std::size_t> unlab_rows, bool training, RngStream& dropout_rng);

/// Joint training of encoder, mu, alpha and m. If the dataset has no val rows
/// they are carved from the training pool first. The loss settings come from
/// config, which must agree with the model's geometry. Throws InsufficientData,
/// NumericAbort, InvalidSpec.
TrainReport train(const PuDataset& ds, ModelState model, const TrainConfig& config, std::uint64_t stream_id = 0);

/// init_for + train.
TrainReport train(const PuDataset& ds, const TrainConfig& config, std::uint64_t stream_id = 0);

struct SweepGrid {
  std::vector<double> lambda;
  std::vector<double> kappa;
  std::vector<double> m;

  bool empty() const noexcept { return lambda.empty() && kappa.empty() && m.empty(); }
};

struct SweepRow {
  TrainConfig config;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricsReport metrics;
};

struct SweepTable {
  std::vector<SweepRow> runs;  // grid order, seeds inner
  std::size_t seeds_per_config = 0;
  bool any_failed() const noexcept;
  /// Run rows, then one "summary" row per config with mean+-std cells.
  std::string to_csv() const;
};

/// Configs that vary one axis at a time around base; an m value implies a
/// fixed margin. Duplicates are dropped, first occurrence wins.
std::vector<TrainConfig> expand_grid(const TrainConfig& base, const SweepGrid& grid);

/// Trains and evaluates every (config, seed). Runs execute on up to `threads`
/// workers (0 = hardware concurrency); results do not depend on scheduling.
SweepTable run_sweep(const PuDataset& ds, const TrainConfig& base, const SweepGrid& grid,
                     std::span<const std::uint64_t> seeds, unsigned threads = 0);

}  // namespace angularpu
