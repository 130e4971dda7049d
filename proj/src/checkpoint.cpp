#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "angularpu/error.hpp"
#include "angularpu/model.hpp"
#include "json.hpp"

namespace angularpu {

namespace {

constexpr int kFormatVersion = 1;

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void emit_array(std::ostringstream& out, const std::vector<double>& v) {
  out << '[';
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << num(v[i]);
  out << ']';
}

std::string quoted(std::string_view s) { return "\"" + std::string(s) + "\""; }

std::vector<double> read_array(const nlohmann::json& j, std::size_t expected, const char* what) {
  if (!j.is_array() || j.size() != expected) {
    throw Error(ErrorCode::FormatViolation, std::string("checkpoint: ") + what + " has the wrong length");
  }
  std::vector<double> v;
  v.reserve(expected);
  for (const auto& x : j) {
    if (!x.is_number()) throw Error(ErrorCode::FormatViolation, std::string("checkpoint: ") + what + " is not numeric");
    v.push_back(x.get<double>());
  }
  return v;
}

}  // namespace

std::string checkpoint_to_string(const ModelState& s) {
  std::ostringstream out;
  const auto& lc = s.loss_config;
  out << "{\n";
  out << "  \"format\": \"angularpu-checkpoint\",\n";
  out << "  \"version\": " << kFormatVersion << ",\n";
  out << "  \"geometry\": " << quoted(to_string(s.geometry)) << ",\n";
  out << "  \"margin_param\": " << quoted(to_string(s.margin_param)) << ",\n";
  out << "  \"init_rng\": {\"seed\": " << s.init_seed << ", \"stream_id\": " << s.init_stream << "},\n";
  out << "  \"loss_config\": {\"kappa\": " << num(lc.kappa) << ", \"t\": " << num(lc.t) << ", \"lambda\": "
      << num(lc.lambda) << ", \"margin_mode\": " << quoted(to_string(lc.margin_mode))
      << ", \"fixed_margin\": " << num(lc.fixed_margin) << ", \"logit_mode\": " << quoted(to_string(lc.logit_mode))
      << ", \"weight_gradient\": " << quoted(to_string(lc.weight_gradient)) << "},\n";
  out << "  \"dropout_rate\": " << num(s.encoder.dropout_rate) << ",\n";
  out << "  \"layers\": [\n";
  for (std::size_t l = 0; l < s.encoder.layers.size(); ++l) {
    const auto& layer = s.encoder.layers[l];
    out << "    {\"in\": " << layer.in << ", \"out\": " << layer.out << ",\n     \"weight\": ";
    emit_array(out, layer.weight);
    out << ",\n     \"bias\": ";
    emit_array(out, layer.bias);
    out << "}" << (l + 1 < s.encoder.layers.size() ? "," : "") << "\n";
  }
  out << "  ],\n";
  out << "  \"mu\": ";
  emit_array(out, s.mu);
  out << ",\n  \"alpha_raw\": " << num(s.alpha_raw) << ",\n";
  out << "  \"margin_raw\": " << num(s.margin_raw) << ",\n";
  out << "  \"proto_euclid\": ";
  emit_array(out, s.proto_euclid);
  out << "\n}\n";
  return out.str();
}

ModelState checkpoint_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatViolation, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "angularpu-checkpoint" || j.at("version") != kFormatVersion) {
      throw Error(ErrorCode::FormatViolation, "checkpoint: unrecognized format or version");
    }
    ModelState s;
    s.geometry = parse_geometry(j.at("geometry").get<std::string>());
    s.margin_param = parse_margin_param(j.at("margin_param").get<std::string>());
    s.init_seed = j.at("init_rng").at("seed").get<std::uint64_t>();
    s.init_stream = j.at("init_rng").at("stream_id").get<std::uint64_t>();
    const auto& lc = j.at("loss_config");
    s.loss_config.kappa = lc.at("kappa").get<double>();
    s.loss_config.t = lc.at("t").get<double>();
    s.loss_config.lambda = lc.at("lambda").get<double>();
    s.loss_config.margin_mode = parse_margin_mode(lc.at("margin_mode").get<std::string>());
    s.loss_config.fixed_margin = lc.at("fixed_margin").get<double>();
    s.loss_config.logit_mode = parse_logit_mode(lc.at("logit_mode").get<std::string>());
    s.loss_config.weight_gradient = parse_weight_gradient(lc.at("weight_gradient").get<std::string>());
    s.encoder.dropout_rate = j.at("dropout_rate").get<double>();
    std::size_t prev_out = 0;
    for (const auto& jl : j.at("layers")) {
      DenseLayer layer;
      layer.in = jl.at("in").get<std::size_t>();
      layer.out = jl.at("out").get<std::size_t>();
      if (layer.in == 0 || layer.out == 0 || (prev_out && prev_out != layer.in)) {
        throw Error(ErrorCode::FormatViolation, "checkpoint: layer shapes do not compose");
      }
      prev_out = layer.out;
      layer.weight = read_array(jl.at("weight"), layer.in * layer.out, "weight");
      layer.bias = read_array(jl.at("bias"), layer.out, "bias");
      s.encoder.layers.push_back(std::move(layer));
    }
    if (s.encoder.layers.empty()) throw Error(ErrorCode::FormatViolation, "checkpoint: no layers");
    const std::size_t d = s.encoder.embed_dim();
    s.mu = read_array(j.at("mu"), d, "mu");
    s.alpha_raw = j.at("alpha_raw").get<double>();
    s.margin_raw = j.at("margin_raw").get<double>();
    s.proto_euclid = read_array(j.at("proto_euclid"), d, "proto_euclid");
    s.loss_config.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatViolation, std::string("checkpoint: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidSpec) throw Error(ErrorCode::FormatViolation, "checkpoint: " + e.detail());
    throw;
  }
}

void save_checkpoint(const ModelState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << checkpoint_to_string(state);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str());
}

}  // namespace angularpu
