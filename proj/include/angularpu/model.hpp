#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "angularpu/losses.hpp"
#include "angularpu/rng.hpp"
#include "angularpu/sphere.hpp"

namespace angularpu {

enum class Geometry { cosine, euclidean };

/// How the raw margin scalar maps to m. tanh keeps m in (-1, 1); softplus is
/// the positive-margin variant used by the euclidean radius.
enum class MarginParam { tanh, softplus };

std::string_view to_string(Geometry g) noexcept;
std::string_view to_string(MarginParam p) noexcept;
std::string_view to_string(LogitMode m) noexcept;
std::string_view to_string(WeightGradient w) noexcept;
std::string_view to_string(MarginMode m) noexcept;
Geometry parse_geometry(std::string_view s);
MarginParam parse_margin_param(std::string_view s);
LogitMode parse_logit_mode(std::string_view s);
WeightGradient parse_weight_gradient(std::string_view s);
MarginMode parse_margin_mode(std::string_view s);

double softplus(double x) noexcept;
double softplus_inverse(double y);

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;  // out x in, row-major
  std::vector<double> bias;    // out

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// ReLU between layers, none after the last. Dropout applies to the final
/// layer's output before normalization.
struct MlpParams {
  std::vector<DenseLayer> layers;
  double dropout_rate = 0.2;

  std::size_t input_dim() const noexcept { return layers.empty() ? 0 : layers.front().in; }
  std::size_t embed_dim() const noexcept { return layers.empty() ? 0 : layers.back().out; }

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

struct ModelState {
  MlpParams encoder;
  std::vector<double> mu;  // unit norm after every optimizer step
  double alpha_raw = 0.0;  // alpha = softplus(alpha_raw)
  double margin_raw = 0.0;
  Geometry geometry = Geometry::cosine;
  MarginParam margin_param = MarginParam::tanh;
  std::vector<double> proto_euclid;  // euclidean prototype p (unnormalized)
  LossConfig loss_config;
  std::uint64_t init_seed = 0;
  std::uint64_t init_stream = 0;
  /// Bumped by every parameter update; forward caches record it.
  std::uint64_t version = 0;

  double alpha() const noexcept { return softplus(alpha_raw); }

  /// Margin used by the losses. Cosine: m itself. Euclidean: m = -R with the
  /// radius R = softplus(margin_raw) (or the fixed value), so that the
  /// similarity -||v - p||^2 is compared against -R.
  double margin() const noexcept;
  /// dm / d margin_raw; zero for a fixed margin.
  double margin_derivative() const noexcept;

  UnitVector prototype() const { return UnitVector(mu); }

  friend bool operator==(const ModelState& a, const ModelState& b);
};

struct ForwardCache {
  std::vector<std::vector<double>> inputs;  // input to each layer
  std::vector<std::vector<double>> pre;     // pre-activation of each layer
  std::vector<double> dropout_scale;        // empty when dropout was inactive
  std::vector<double> raw;                  // pre-normalization embedding
  double raw_norm = 0.0;
  std::uint64_t version = 0;
};

struct EncoderOutput {
  UnitVector embedding;
  ForwardCache cache;
};

struct MlpGradients {
  std::vector<std::vector<double>> weight;
  std::vector<std::vector<double>> bias;

  static MlpGradients zeros_like(const MlpParams& p);
};

/// Gradients for every trainable scalar of a ModelState, same layout.
struct ModelGradients {
  MlpGradients encoder;
  std::vector<double> mu;
  double alpha_raw = 0.0;
  double margin_raw = 0.0;
  std::vector<double> proto_euclid;

  static ModelGradients zeros_like(const ModelState& s);
};

inline constexpr std::size_t kDefaultHidden = 64;

/// layer_sizes = {input_dim, hidden...}; a final layer to d is appended.
ModelState init_model(std::span<const std::size_t> layer_sizes, std::size_t d, Geometry geometry, RngStream rng,
                      MarginParam margin_param = MarginParam::tanh, double dropout_rate = 0.2);

/// Embedding on the sphere. Inverted dropout runs only when training is true.
/// Throws DimensionMismatch, DegenerateEmbedding.
EncoderOutput encoder_forward(std::span<const double> x, const ModelState& state, bool training, RngStream& rng);

/// Inference-only embedding (no dropout, no cache).
UnitVector embed(std::span<const double> x, const ModelState& state);
/// Inference-only pre-normalization embedding.
std::vector<double> embed_raw(std::span<const double> x, const ModelState& state);

/// Backprop a gradient w.r.t. the unit embedding through the normalization
/// Jacobian (I - u u^T)/||v|| and the network; accumulates into grads.
void encoder_backward(std::span<const double> grad_embedding, const ForwardCache& cache, const ModelState& state,
                      MlpGradients& grads);

/// Same, for a gradient w.r.t. the raw pre-normalization output.
void encoder_backward_raw(std::span<const double> grad_raw, const ForwardCache& cache, const ModelState& state,
                          MlpGradients& grads);

/// Cosine: kappa * mu.z.
double score(const UnitVector& z, const ModelState& state);
/// Euclidean: -||v - p||^2.
double score_raw(std::span<const double> v, const ModelState& state);
/// Forward (inference) plus the geometry-appropriate score.
double score_input(std::span<const double> x, const ModelState& state);

/// mu <- mu / ||mu||. Throws DegeneratePrototype.
ModelState reproject_prototype(ModelState state);

std::string checkpoint_to_string(const ModelState& state);
ModelState checkpoint_from_string(const std::string& text);
void save_checkpoint(const ModelState& state, const std::filesystem::path& path);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace angularpu
