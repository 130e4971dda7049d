#include "angularpu/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "angularpu/error.hpp"

namespace angularpu {

namespace {

constexpr std::uint64_t kInitChild = 0;
constexpr std::uint64_t kShuffleChild = 1;
constexpr std::uint64_t kDropoutChild = 2;
constexpr std::uint64_t kCarveChild = 3;

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::InvalidSpec, field + ": " + why);
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string json_number(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) bad("lr", "must be > 0");
  if (batch_size < 2) bad("batch_size", "must be >= 2");
  if (epochs < 1) bad("epochs", "must be >= 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) bad("val_fraction", "must lie in (0, 1)");
  if (embed_dim < 2) bad("embed_dim", "must be >= 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout", "must lie in [0, 1)");
  for (auto h : hidden) {
    if (h == 0) bad("hidden", "layer widths must be positive");
  }
  if (margin_mode == MarginMode::learnable) {
    if (geometry == Geometry::euclidean || margin_param == MarginParam::softplus) {
      if (!(m > 0.0)) bad("m", "must be > 0 for a softplus margin");
    } else if (!(m > -1.0 && m < 1.0)) {
      bad("m", "must lie in (-1, 1) for a tanh margin");
    }
  }
  loss_config().validate();
}

LossConfig TrainConfig::loss_config() const {
  LossConfig lc;
  lc.kappa = kappa;
  lc.t = t;
  lc.lambda = lambda;
  lc.margin_mode = margin_mode;
  lc.fixed_margin = m;
  lc.logit_mode = logit_mode;
  lc.weight_gradient = weight_gradient;
  return lc;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& adam, double lr, double beta1,
               double beta2, double eps) {
  if (params.size() != grads.size()) throw Error(ErrorCode::ShapeMismatch, "parameter and gradient sizes differ");
  if (adam.step == 0 && adam.m.empty()) {
    adam.m.assign(params.size(), 0.0);
    adam.v.assign(params.size(), 0.0);
  }
  if (adam.m.size() != params.size() || adam.v.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "Adam moments do not match the parameter vector");
  }
  ++adam.step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    adam.m[i] = beta1 * adam.m[i] + (1.0 - beta1) * g;
    adam.v[i] = beta2 * adam.v[i] + (1.0 - beta2) * g * g;
    const double mhat = adam.m[i] / bc1;
    const double vhat = adam.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

std::vector<double> flatten_params(const ModelState& s) {
  std::vector<double> flat;
  for (const auto& layer : s.encoder.layers) {
    flat.insert(flat.end(), layer.weight.begin(), layer.weight.end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  flat.insert(flat.end(), s.mu.begin(), s.mu.end());
  flat.push_back(s.alpha_raw);
  flat.push_back(s.margin_raw);
  flat.insert(flat.end(), s.proto_euclid.begin(), s.proto_euclid.end());
  return flat;
}

std::vector<double> flatten_grads(const ModelGradients& g) {
  std::vector<double> flat;
  for (std::size_t l = 0; l < g.encoder.weight.size(); ++l) {
    flat.insert(flat.end(), g.encoder.weight[l].begin(), g.encoder.weight[l].end());
    flat.insert(flat.end(), g.encoder.bias[l].begin(), g.encoder.bias[l].end());
  }
  flat.insert(flat.end(), g.mu.begin(), g.mu.end());
  flat.push_back(g.alpha_raw);
  flat.push_back(g.margin_raw);
  flat.insert(flat.end(), g.proto_euclid.begin(), g.proto_euclid.end());
  return flat;
}

void unflatten_params(std::span<const double> flat, ModelState& s) {
  std::size_t k = 0;
  auto take = [&](std::vector<double>& dst) {
    if (k + dst.size() > flat.size()) throw Error(ErrorCode::ShapeMismatch, "flat parameter vector too short");
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(k), flat.begin() + static_cast<std::ptrdiff_t>(k + dst.size()),
              dst.begin());
    k += dst.size();
  };
  for (auto& layer : s.encoder.layers) {
    take(layer.weight);
    take(layer.bias);
  }
  take(s.mu);
  if (k + 2 > flat.size()) throw Error(ErrorCode::ShapeMismatch, "flat parameter vector too short");
  s.alpha_raw = flat[k++];
  s.margin_raw = flat[k++];
  take(s.proto_euclid);
  if (k != flat.size()) throw Error(ErrorCode::ShapeMismatch, "flat parameter vector too long");
}

std::string EpochRecord::to_json() const {
  return "{\"epoch\": " + std::to_string(epoch) + ", \"l_pos\": " + json_number(l_pos) +
         ", \"l_unlab\": " + json_number(l_unlab) + ", \"l_reg\": " + json_number(l_reg) +
         ", \"total\": " + json_number(total) + ", \"val_auc\": " + json_number(val_auc) +
         ", \"val_f1\": " + json_number(val_f1) + ", \"seconds\": " + json_number(seconds) + "}";
}

ModelState init_for(const PuDataset& ds, const TrainConfig& config, std::uint64_t stream_id) {
  config.validate();
  std::vector<std::size_t> sizes{ds.dim()};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  ModelState s = init_model(sizes, config.embed_dim, config.geometry, RngStream(config.seed, stream_id).split(kInitChild),
                            config.margin_param, config.dropout);
  s.loss_config = config.loss_config();
  if (config.margin_mode == MarginMode::learnable) {
    if (config.geometry == Geometry::euclidean || config.margin_param == MarginParam::softplus) {
      s.margin_raw = softplus_inverse(config.m);
    } else {
      s.margin_raw = std::atanh(config.m);
    }
  }
  return s;
}

PuDataset carve_validation(const PuDataset& ds, double val_fraction, std::uint64_t seed) {
  std::vector<std::size_t> pool = ds.indices(Split::train);
  RngStream rng(seed, 0);
  rng = rng.split(kCarveChild);
  shuffle(pool.begin(), pool.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(pool.size())));
  std::vector<Split> split(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) split[i] = ds.split(i);
  for (std::size_t k = 0; k < n_val; ++k) split[pool[k]] = Split::val;
  PuDataset out = ds.with_splits(std::move(split));
  return out;
}

StepResult compute_step(const ModelState& model, const PuDataset& ds, std::span<const std::size_t> pos_rows,
                        std::span<const std::size_t> unlab_rows, bool training, RngStream& dropout_rng) {
  const std::size_t d = model.encoder.embed_dim();
  const bool euclid = model.geometry == Geometry::euclidean;
  std::vector<ForwardCache> pos_cache, unlab_cache;
  Matrix pos(pos_rows.size(), d), unlab(unlab_rows.size(), d);
  auto run = [&](std::span<const std::size_t> rows, Matrix& out, std::vector<ForwardCache>& caches) {
    caches.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      EncoderOutput o = encoder_forward(ds.features(rows[k]), model, training, dropout_rng);
      const auto& src = euclid ? o.cache.raw : o.embedding.vec();
      std::copy(src.begin(), src.end(), out.row(k).begin());
      caches.push_back(std::move(o.cache));
    }
  };
  run(pos_rows, pos, pos_cache);
  run(unlab_rows, unlab, unlab_cache);

  StepResult r;
  const double m = model.margin();
  const double alpha = model.alpha();
  r.loss = euclid ? total_loss_euclidean(pos, unlab, model.proto_euclid, model.loss_config, m, alpha)
                  : total_loss_ambient(pos, unlab, model.mu, model.loss_config, m, alpha);
  r.grads = ModelGradients::zeros_like(model);
  auto backward = [&](const Matrix& g, const std::vector<ForwardCache>& caches) {
    for (std::size_t k = 0; k < caches.size(); ++k) {
      if (euclid) {
        encoder_backward_raw(g.row(k), caches[k], model, r.grads.encoder);
      } else {
        encoder_backward(g.row(k), caches[k], model, r.grads.encoder);
      }
    }
  };
  backward(r.loss.grads.pos, pos_cache);
  backward(r.loss.grads.unlab, unlab_cache);
  (euclid ? r.grads.proto_euclid : r.grads.mu) = r.loss.grads.mu;
  r.grads.alpha_raw = r.loss.grads.alpha * sigmoid(model.alpha_raw);
  r.grads.margin_raw = r.loss.grads.margin * model.margin_derivative();
  return r;
}

TrainReport train(const PuDataset& ds_in, ModelState model, const TrainConfig& config, std::uint64_t stream_id) {
  config.validate();
  if (model.geometry != config.geometry) {
    throw Error(ErrorCode::InvalidSpec, "geometry: config says " + std::string(to_string(config.geometry)) +
                                            " but the model is " + std::string(to_string(model.geometry)));
  }
  model.loss_config = config.loss_config();
  const auto t_start = std::chrono::steady_clock::now();
  const PuDataset ds = ds_in.indices(Split::val).empty() ? carve_validation(ds_in, config.val_fraction, config.seed)
                                                         : ds_in;
  if (ds.dim() != model.encoder.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset has " + std::to_string(ds.dim()) + " features, model expects " +
                                                  std::to_string(model.encoder.input_dim()));
  }
  const std::vector<std::size_t> pos_pool = ds.indices(Split::train, Supervision::P);
  std::vector<std::size_t> unlab_pool = ds.indices(Split::train, Supervision::U);
  if (pos_pool.empty()) throw Error(ErrorCode::InsufficientData, "training split has no labeled positives");
  if (unlab_pool.size() < 2) throw Error(ErrorCode::InsufficientData, "training split needs >= 2 unlabeled rows");

  RngStream root(config.seed, stream_id);
  RngStream shuffle_rng = root.split(kShuffleChild);
  RngStream dropout_rng = root.split(kDropoutChild);

  const std::size_t bsz = config.batch_size;
  const std::size_t pos_bsz = std::min(bsz, pos_pool.size());
  std::vector<std::size_t> pos_order = pos_pool;
  shuffle(pos_order.begin(), pos_order.end(), shuffle_rng);
  std::size_t pos_cursor = 0;

  AdamState adam;
  TrainReport report;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(unlab_pool.begin(), unlab_pool.end(), shuffle_rng);
    // Chunk boundaries; a one-row tail joins the previous chunk.
    std::vector<std::size_t> bounds;
    for (std::size_t b = 0; b < unlab_pool.size(); b += bsz) bounds.push_back(b);
    bounds.push_back(unlab_pool.size());
    if (bounds.size() > 2 && bounds[bounds.size() - 1] - bounds[bounds.size() - 2] == 1) {
      bounds.erase(bounds.end() - 2);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t taken = 0;
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
      if (pos_cursor + pos_bsz > pos_order.size()) {
        shuffle(pos_order.begin(), pos_order.end(), shuffle_rng);
        pos_cursor = 0;
      }
      std::span<const std::size_t> pos_rows(pos_order.data() + pos_cursor, pos_bsz);
      pos_cursor += pos_bsz;
      std::span<const std::size_t> unlab_rows(unlab_pool.data() + bounds[b], bounds[b + 1] - bounds[b]);

      const StepResult step = compute_step(model, ds, pos_rows, unlab_rows, true, dropout_rng);
      const std::vector<double> g = flatten_grads(step.grads);
      if (!std::isfinite(step.loss.total) || !all_finite(g)) {
        throw Error(ErrorCode::NumericAbort, "non-finite loss or gradient at epoch " + std::to_string(epoch) +
                                                 ", step " + std::to_string(b + 1));
      }
      std::vector<double> p = flatten_params(model);
      adam_step(p, g, adam, config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps);
      if (!all_finite(p)) {
        throw Error(ErrorCode::NumericAbort, "non-finite parameter after epoch " + std::to_string(epoch) + ", step " +
                                                 std::to_string(b + 1));
      }
      unflatten_params(p, model);
      model = reproject_prototype(std::move(model));
      ++model.version;
#ifndef NDEBUG
      if (std::abs(norm(model.mu) - 1.0) > kUnitTolerance) {
        throw Error(ErrorCode::NumericAbort, "prototype left the sphere");
      }
#endif
      rec.l_pos += step.loss.l_pos;
      rec.l_unlab += step.loss.l_unlab;
      rec.l_reg += step.loss.l_reg;
      rec.total += step.loss.total;
      ++taken;
    }
    const double k = static_cast<double>(taken);
    rec.l_pos /= k;
    rec.l_unlab /= k;
    rec.l_reg /= k;
    rec.total /= k;
    if (std::abs(norm(model.mu) - 1.0) > kUnitTolerance) {
      throw Error(ErrorCode::NumericAbort, "prototype left the sphere in epoch " + std::to_string(epoch));
    }

    const ScoredSet val = score_split(model, ds, Split::val);
    rec.val_auc = std::numeric_limits<double>::quiet_NaN();
    rec.val_f1 = std::numeric_limits<double>::quiet_NaN();
    if (val.positives() > 0 && val.positives() < val.size()) rec.val_auc = roc_auc(val);
    if (val.positives() > 0) rec.val_f1 = calibrate_threshold(val).f1;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    report.epochs.push_back(rec);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  report.final_state = std::move(model);
  return report;
}

TrainReport train(const PuDataset& ds, const TrainConfig& config, std::uint64_t stream_id) {
  return train(ds, init_for(ds, config, stream_id), config, stream_id);
}

bool SweepTable::any_failed() const noexcept {
  for (const auto& r : runs) {
    if (!r.ok) return true;
  }
  return false;
}

namespace {

bool same_config(const TrainConfig& a, const TrainConfig& b) {
  return a.lambda == b.lambda && a.kappa == b.kappa && a.m == b.m && a.margin_mode == b.margin_mode;
}

std::string fmt6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

}  // namespace

std::vector<TrainConfig> expand_grid(const TrainConfig& base, const SweepGrid& grid) {
  std::vector<TrainConfig> out;
  auto add = [&](TrainConfig c) {
    for (const auto& e : out) {
      if (same_config(e, c)) return;
    }
    out.push_back(std::move(c));
  };
  for (double v : grid.lambda) {
    TrainConfig c = base;
    c.lambda = v;
    add(c);
  }
  for (double v : grid.kappa) {
    TrainConfig c = base;
    c.kappa = v;
    add(c);
  }
  for (double v : grid.m) {
    TrainConfig c = base;
    c.m = v;
    c.margin_mode = MarginMode::fixed;
    add(c);
  }
  return out;
}

SweepTable run_sweep(const PuDataset& ds, const TrainConfig& base, const SweepGrid& grid,
                     std::span<const std::uint64_t> seeds, unsigned threads) {
  if (grid.empty()) throw Error(ErrorCode::InvalidSpec, "grid: no values to sweep");
  if (seeds.empty()) throw Error(ErrorCode::InvalidSpec, "seeds: at least one seed is required");
  const std::vector<TrainConfig> configs = expand_grid(base, grid);
  SweepTable table;
  table.seeds_per_config = seeds.size();
  // stream id = config index
  std::vector<std::uint64_t> stream_of;
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    const auto& c = configs[ci];
    for (auto s : seeds) {
      stream_of.push_back(ci);
      SweepRow row;
      row.config = c;
      row.config.seed = s;
      row.seed = s;
      table.runs.push_back(std::move(row));
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < table.runs.size(); i = next.fetch_add(1)) {
      SweepRow& row = table.runs[i];
      try {
        const TrainReport rep = train(ds, row.config, stream_of[i]);
        row.metrics = evaluate(rep.final_state, ds);
        row.ok = true;
      } catch (const Error& e) {
        row.error = e.what();
      }
    }
  };
  unsigned n = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, table.runs.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return table;
}

std::string SweepTable::to_csv() const {
  std::string out = "lambda,kappa,m,seed,auc,ap,f1,precision,recall,accuracy,tau\n";
  auto prefix = [](const TrainConfig& c) { return fmt6(c.lambda) + "," + fmt6(c.kappa) + "," + fmt6(c.m) + ","; };
  auto fields = [](const MetricsReport& r) {
    return std::vector<double>{r.auc, r.ap, r.f1, r.precision, r.recall, r.accuracy, r.tau};
  };
  for (const auto& r : runs) {
    out += prefix(r.config) + std::to_string(r.seed);
    if (r.ok) {
      for (double v : fields(r.metrics)) out += "," + fmt6(v);
    } else {
      for (int k = 0; k < 7; ++k) out += ",failed";
    }
    out += "\n";
  }
  const std::size_t k = seeds_per_config;
  for (std::size_t start = 0; k > 0 && start < runs.size(); start += k) {
    out += prefix(runs[start].config) + "summary";
    std::vector<std::vector<double>> cols(7);
    for (std::size_t i = start; i < start + k; ++i) {
      if (!runs[i].ok) continue;
      const auto f = fields(runs[i].metrics);
      for (std::size_t c = 0; c < 7; ++c) cols[c].push_back(f[c]);
    }
    for (const auto& col : cols) {
      if (col.empty()) {
        out += ",failed";
        continue;
      }
      double mean = 0.0;
      for (double v : col) mean += v;
      mean /= static_cast<double>(col.size());
      double var = 0.0;
      for (double v : col) var += (v - mean) * (v - mean);
      const double sd = col.size() > 1 ? std::sqrt(var / static_cast<double>(col.size() - 1)) : 0.0;
      out += "," + fmt6(mean) + "+-" + fmt6(sd);
    }
    out += "\n";
  }
  return out;
}

}  // namespace angularpu
