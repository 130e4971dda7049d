#include "angularpu/model.hpp"

#include <cmath>
#include <string>

#include "angularpu/error.hpp"

namespace angularpu {

std::string_view to_string(Geometry g) noexcept { return g == Geometry::cosine ? "cosine" : "euclidean"; }
std::string_view to_string(MarginParam p) noexcept { return p == MarginParam::tanh ? "tanh" : "softplus"; }
std::string_view to_string(LogitMode m) noexcept { return m == LogitMode::kappa_dot ? "kappa_dot" : "margin_scaled"; }
std::string_view to_string(WeightGradient w) noexcept { return w == WeightGradient::stopped ? "stopped" : "flowing"; }
std::string_view to_string(MarginMode m) noexcept { return m == MarginMode::fixed ? "fixed" : "learnable"; }

namespace {

[[noreturn]] void unknown(std::string_view field, std::string_view value) {
  throw Error(ErrorCode::InvalidSpec, std::string(field) + ": unknown value '" + std::string(value) + "'");
}

}  // namespace

Geometry parse_geometry(std::string_view s) {
  if (s == "cosine") return Geometry::cosine;
  if (s == "euclidean") return Geometry::euclidean;
  unknown("geometry", s);
}
MarginParam parse_margin_param(std::string_view s) {
  if (s == "tanh") return MarginParam::tanh;
  if (s == "softplus") return MarginParam::softplus;
  unknown("margin_param", s);
}
LogitMode parse_logit_mode(std::string_view s) {
  if (s == "kappa_dot") return LogitMode::kappa_dot;
  if (s == "margin_scaled") return LogitMode::margin_scaled;
  unknown("logit_mode", s);
}
WeightGradient parse_weight_gradient(std::string_view s) {
  if (s == "stopped") return WeightGradient::stopped;
  if (s == "flowing") return WeightGradient::flowing;
  unknown("weight_gradient", s);
}
MarginMode parse_margin_mode(std::string_view s) {
  if (s == "fixed") return MarginMode::fixed;
  if (s == "learnable") return MarginMode::learnable;
  unknown("margin_mode", s);
}

double softplus(double x) noexcept { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw Error(ErrorCode::InvalidSpec, "softplus inverse needs y > 0");
  return y > 30.0 ? y + std::log(-std::expm1(-y)) : std::log(std::expm1(y));
}

double ModelState::margin() const noexcept {
  const bool euclid = geometry == Geometry::euclidean;
  if (loss_config.margin_mode == MarginMode::fixed) return euclid ? -loss_config.fixed_margin : loss_config.fixed_margin;
  if (euclid) return -softplus(margin_raw);
  return margin_param == MarginParam::tanh ? std::tanh(margin_raw) : softplus(margin_raw);
}

double ModelState::margin_derivative() const noexcept {
  if (loss_config.margin_mode == MarginMode::fixed) return 0.0;
  if (geometry == Geometry::euclidean) return -sigmoid(margin_raw);
  if (margin_param == MarginParam::tanh) {
    const double th = std::tanh(margin_raw);
    return 1.0 - th * th;
  }
  return sigmoid(margin_raw);
}

bool operator==(const ModelState& a, const ModelState& b) {
  return a.encoder == b.encoder && a.mu == b.mu && a.alpha_raw == b.alpha_raw && a.margin_raw == b.margin_raw &&
         a.geometry == b.geometry && a.margin_param == b.margin_param && a.proto_euclid == b.proto_euclid &&
         a.loss_config == b.loss_config && a.init_seed == b.init_seed && a.init_stream == b.init_stream;
}

MlpGradients MlpGradients::zeros_like(const MlpParams& p) {
  MlpGradients g;
  for (const auto& layer : p.layers) {
    g.weight.emplace_back(layer.weight.size(), 0.0);
    g.bias.emplace_back(layer.bias.size(), 0.0);
  }
  return g;
}

ModelGradients ModelGradients::zeros_like(const ModelState& s) {
  ModelGradients g;
  g.encoder = MlpGradients::zeros_like(s.encoder);
  g.mu.assign(s.mu.size(), 0.0);
  g.proto_euclid.assign(s.proto_euclid.size(), 0.0);
  return g;
}

ModelState init_model(std::span<const std::size_t> layer_sizes, std::size_t d, Geometry geometry, RngStream rng,
                      MarginParam margin_param, double dropout_rate) {
  if (layer_sizes.empty()) throw Error(ErrorCode::InvalidSpec, "layer_sizes must name at least the input dimension");
  for (auto s : layer_sizes) {
    if (s == 0) throw Error(ErrorCode::InvalidSpec, "layer sizes must be positive");
  }
  if (d < 2) throw Error(ErrorCode::InvalidSpec, "embedding dimension must be >= 2");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw Error(ErrorCode::InvalidSpec, "dropout must lie in [0, 1)");

  ModelState s;
  s.init_seed = rng.seed();
  s.init_stream = rng.stream_id();
  s.geometry = geometry;
  s.margin_param = margin_param;
  s.encoder.dropout_rate = dropout_rate;

  std::vector<std::size_t> sizes(layer_sizes.begin(), layer_sizes.end());
  sizes.push_back(d);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer layer;
    layer.in = sizes[l];
    layer.out = sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    layer.weight.resize(layer.in * layer.out);
    layer.bias.resize(layer.out);
    for (auto& w : layer.weight) w = bound * (2.0 * rng.uniform() - 1.0);
    for (auto& b : layer.bias) b = bound * (2.0 * rng.uniform() - 1.0);
    s.encoder.layers.push_back(std::move(layer));
  }

  s.mu = sample_uniform_sphere(d, 1, rng).front().vec();
  s.proto_euclid = s.mu;
  s.alpha_raw = softplus_inverse(1.0);
  constexpr double kInitialMargin = 0.5;
  if (geometry == Geometry::euclidean || margin_param == MarginParam::softplus) {
    s.margin_raw = softplus_inverse(kInitialMargin);
  } else {
    s.margin_raw = std::atanh(kInitialMargin);
  }
  return s;
}

namespace {

// Runs the network to the raw (pre-normalization) output, optionally caching.
std::vector<double> run_layers(std::span<const double> x, const MlpParams& mlp, ForwardCache* cache) {
  if (mlp.layers.empty()) throw Error(ErrorCode::InvalidSpec, "encoder has no layers");
  if (x.size() != mlp.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "input has " + std::to_string(x.size()) + " features, encoder expects " +
                                                  std::to_string(mlp.input_dim()));
  }
  std::vector<double> act(x.begin(), x.end());
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const auto& layer = mlp.layers[l];
    std::vector<double> pre(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      double s = layer.bias[o];
      const double* w = layer.weight.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) s += w[i] * act[i];
      pre[o] = s;
    }
    if (cache) cache->inputs.push_back(act);
    const bool last = l + 1 == mlp.layers.size();
    act = pre;
    if (!last) {
      for (auto& a : act) a = a > 0.0 ? a : 0.0;
    }
    if (cache) cache->pre.push_back(std::move(pre));
  }
  return act;
}

void backprop_layers(std::vector<double> grad, const ForwardCache& cache, const MlpParams& mlp, MlpGradients& grads) {
  if (grads.weight.size() != mlp.layers.size()) grads = MlpGradients::zeros_like(mlp);
  for (std::size_t l = mlp.layers.size(); l-- > 0;) {
    const auto& layer = mlp.layers[l];
    const bool last = l + 1 == mlp.layers.size();
    if (!last) {
      const auto& pre = cache.pre[l];
      for (std::size_t o = 0; o < layer.out; ++o) {
        if (!(pre[o] > 0.0)) grad[o] = 0.0;
      }
    }
    const auto& input = cache.inputs[l];
    auto& gw = grads.weight[l];
    auto& gb = grads.bias[l];
    std::vector<double> grad_in(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double g = grad[o];
      if (g == 0.0) continue;
      gb[o] += g;
      double* gwo = gw.data() + o * layer.in;
      const double* w = layer.weight.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) {
        gwo[i] += g * input[i];
        grad_in[i] += g * w[i];
      }
    }
    grad = std::move(grad_in);
  }
}

void check_cache(const ForwardCache& cache, const ModelState& state, std::size_t grad_size) {
  if (cache.version != state.version || cache.inputs.size() != state.encoder.layers.size()) {
    throw Error(ErrorCode::StaleCache, "forward cache does not belong to the current parameters");
  }
  if (grad_size != state.encoder.embed_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "gradient size does not match the embedding dimension");
  }
}

}  // namespace

EncoderOutput encoder_forward(std::span<const double> x, const ModelState& state, bool training, RngStream& rng) {
  ForwardCache cache;
  cache.version = state.version;
  std::vector<double> v = run_layers(x, state.encoder, &cache);
  const double rate = state.encoder.dropout_rate;
  if (training && rate > 0.0) {
    cache.dropout_scale.resize(v.size());
    const double keep_scale = 1.0 / (1.0 - rate);
    // redraw masks that drop every unit
    bool any_kept = false;
    while (!any_kept) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        cache.dropout_scale[i] = rng.uniform() < rate ? 0.0 : keep_scale;
        any_kept = any_kept || cache.dropout_scale[i] != 0.0;
      }
    }
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= cache.dropout_scale[i];
  }
  const double n = norm(v);
  if (!(n > kNormEpsilon) || !std::isfinite(n)) {
    throw Error(ErrorCode::DegenerateEmbedding, "pre-normalization embedding norm is " + std::to_string(n));
  }
  std::vector<double> z(v);
  for (auto& c : z) c /= n;
  cache.raw = std::move(v);
  cache.raw_norm = n;
  return EncoderOutput{UnitVector(std::move(z)), std::move(cache)};
}

std::vector<double> embed_raw(std::span<const double> x, const ModelState& state) {
  return run_layers(x, state.encoder, nullptr);
}

UnitVector embed(std::span<const double> x, const ModelState& state) {
  const std::vector<double> v = embed_raw(x, state);
  const double n = norm(v);
  if (!(n > kNormEpsilon) || !std::isfinite(n)) {
    throw Error(ErrorCode::DegenerateEmbedding, "pre-normalization embedding norm is " + std::to_string(n));
  }
  return normalize(v);
}

void encoder_backward_raw(std::span<const double> grad_raw, const ForwardCache& cache, const ModelState& state,
                          MlpGradients& grads) {
  check_cache(cache, state, grad_raw.size());
  std::vector<double> g(grad_raw.begin(), grad_raw.end());
  if (!cache.dropout_scale.empty()) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= cache.dropout_scale[i];
  }
  backprop_layers(std::move(g), cache, state.encoder, grads);
}

void encoder_backward(std::span<const double> grad_embedding, const ForwardCache& cache, const ModelState& state,
                      MlpGradients& grads) {
  check_cache(cache, state, grad_embedding.size());
  // d(v/||v||)/dv = (I - u u^T) / ||v||
  const double n = cache.raw_norm;
  double radial = 0.0;
  for (std::size_t i = 0; i < grad_embedding.size(); ++i) radial += grad_embedding[i] * cache.raw[i] / n;
  std::vector<double> g(grad_embedding.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (grad_embedding[i] - radial * cache.raw[i] / n) / n;
  encoder_backward_raw(g, cache, state, grads);
}

double score(const UnitVector& z, const ModelState& state) {
  if (z.dim() != state.mu.size()) throw Error(ErrorCode::DimensionMismatch, "embedding and prototype dimensions differ");
  return state.loss_config.kappa * dot(state.mu, z.coords());
}

double score_raw(std::span<const double> v, const ModelState& state) {
  if (v.size() != state.proto_euclid.size()) {
    throw Error(ErrorCode::DimensionMismatch, "embedding and prototype dimensions differ");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += (v[i] - state.proto_euclid[i]) * (v[i] - state.proto_euclid[i]);
  return -s;
}

double score_input(std::span<const double> x, const ModelState& state) {
  if (state.geometry == Geometry::euclidean) return score_raw(embed_raw(x, state), state);
  return score(embed(x, state), state);
}

ModelState reproject_prototype(ModelState state) {
  const double n = norm(state.mu);
  if (!(n > kNormEpsilon) || !std::isfinite(n)) {
    throw Error(ErrorCode::DegeneratePrototype, "prototype norm is " + std::to_string(n));
  }
  for (auto& x : state.mu) x /= n;
  return state;
}

}  // namespace angularpu
