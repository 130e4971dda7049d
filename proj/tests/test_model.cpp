#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "angularpu/error.hpp"
#include "angularpu/model.hpp"

using namespace angularpu;

namespace {

ModelState small_model(Geometry g = Geometry::cosine, double dropout = 0.2, std::uint64_t seed = 1) {
  const std::size_t sizes[] = {5, 7, 6};
  return init_model(sizes, 4, g, RngStream(seed, 0), MarginParam::tanh, dropout);
}

std::vector<double> random_vec(std::size_t n, RngStream& r) {
  std::vector<double> v(n);
  for (auto& x : v) x = r.normal();
  return v;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidSpec;
}

}  // namespace

TEST_CASE("enum string round trip") {
  for (auto g : {Geometry::cosine, Geometry::euclidean}) CHECK(parse_geometry(to_string(g)) == g);
  for (auto p : {MarginParam::tanh, MarginParam::softplus}) CHECK(parse_margin_param(to_string(p)) == p);
  for (auto m : {LogitMode::kappa_dot, LogitMode::margin_scaled}) CHECK(parse_logit_mode(to_string(m)) == m);
  for (auto w : {WeightGradient::stopped, WeightGradient::flowing}) CHECK(parse_weight_gradient(to_string(w)) == w);
  for (auto m : {MarginMode::fixed, MarginMode::learnable}) CHECK(parse_margin_mode(to_string(m)) == m);
  CHECK(code_of([] { parse_geometry("hyperbolic"); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("softplus") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(800.0) == 800.0);
  CHECK(softplus(-800.0) >= 0.0);
  for (double y : {1e-6, 0.5, 1.0, 3.0, 50.0}) CHECK(softplus(softplus_inverse(y)) == doctest::Approx(y).epsilon(1e-12));
  CHECK(code_of([] { softplus_inverse(0.0); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("init_model") {
  auto a = small_model(), b = small_model();
  CHECK(a == b);
  CHECK(a.encoder.layers.size() == 3);
  CHECK(a.encoder.input_dim() == 5);
  CHECK(a.encoder.embed_dim() == 4);
  CHECK(std::abs(norm(a.mu) - 1.0) < 1e-12);
  CHECK(a.alpha() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(a.margin() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(!(a == small_model(Geometry::cosine, 0.2, 2)));
  for (const auto& L : a.encoder.layers) {
    const double lim = 1.0 / std::sqrt(double(L.in));
    for (double w : L.weight) CHECK(std::abs(w) <= lim);
  }
  auto e = small_model(Geometry::euclidean);
  CHECK(e.proto_euclid == e.mu);
  CHECK(e.margin() == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(code_of([] {
          const std::size_t s[] = {3};
          init_model(s, 1, Geometry::cosine, RngStream(0, 0));
        }) == ErrorCode::InvalidSpec);
}

TEST_CASE("margin parameterizations") {
  auto s = small_model();
  s.margin_raw = 0.3;
  CHECK(s.margin() == doctest::Approx(std::tanh(0.3)));
  CHECK(s.margin_derivative() == doctest::Approx(1 - std::tanh(0.3) * std::tanh(0.3)));
  s.margin_raw = 40.0;
  CHECK(s.margin() <= 1.0);
  s.margin_param = MarginParam::softplus;
  s.margin_raw = 0.3;
  CHECK(s.margin() == doctest::Approx(softplus(0.3)));
  s.loss_config.margin_mode = MarginMode::fixed;
  s.loss_config.fixed_margin = 0.7;
  CHECK(s.margin() == 0.7);
  CHECK(s.margin_derivative() == 0.0);
  auto e = small_model(Geometry::euclidean);
  e.margin_raw = 0.3;
  CHECK(e.margin() == doctest::Approx(-softplus(0.3)));
  CHECK(e.margin_derivative() == doctest::Approx(-oracle::sigmoid(0.3)));
}

TEST_CASE("forward produces unit embeddings") {
  auto s = small_model();
  RngStream r(2, 2);
  for (int i = 0; i < 200; ++i) {
    auto x = random_vec(5, r);
    for (bool training : {false, true}) {
      auto out = encoder_forward(x, s, training, r);
      CHECK(std::abs(norm(out.embedding.coords()) - 1.0) <= 1e-9);
    }
  }
  auto x = random_vec(5, r);
  RngStream r1(3, 3), r2(4, 4);
  CHECK(encoder_forward(x, s, false, r1).embedding == encoder_forward(x, s, false, r2).embedding);
  CHECK(embed(x, s) == encoder_forward(x, s, false, r1).embedding);
  CHECK(code_of([&] { embed(random_vec(4, r), s); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("single identity layer reduces to normalize") {
  ModelState s;
  s.encoder.dropout_rate = 0.0;
  s.encoder.layers.push_back({2, 2, {1, 0, 0, 1}, {0, 0}});
  s.mu = {1, 0};
  auto z = embed(std::vector<double>{3, 4}, s);
  CHECK(z[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(z[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(code_of([&] { embed(std::vector<double>{0, 0}, s); }) == ErrorCode::DegenerateEmbedding);
}

TEST_CASE("dropout masks are inverted and seeded") {
  auto s = small_model(Geometry::cosine, 0.5);
  RngStream r(5, 5);
  auto x = random_vec(5, r);
  RngStream a(6, 6), b(6, 6);
  auto oa = encoder_forward(x, s, true, a);
  auto ob = encoder_forward(x, s, true, b);
  CHECK(oa.embedding == ob.embedding);
  REQUIRE(oa.cache.dropout_scale.size() == 4);
  for (double k : oa.cache.dropout_scale) CHECK((k == 0.0 || k == 2.0));
  auto off = encoder_forward(x, s, false, a);
  CHECK(off.cache.dropout_scale.empty());
}

TEST_CASE("scaling: cosine embedding invariant, euclidean score not") {
  RngStream r(7, 7);
  auto v = random_vec(6, r);
  std::vector<double> v2 = v, v3 = v;
  for (auto& x : v2) x *= 2.0;
  for (auto& x : v3) x *= 3.0;
  CHECK(normalize(v) == normalize(v2));
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(normalize(v)[i] - normalize(v3)[i]) <= 1e-15);

  // first layer linear with zero bias and a single layer: f(c x) = c f(x)
  ModelState s;
  s.encoder.dropout_rate = 0.0;
  s.encoder.layers.push_back({3, 3, {1, 2, 0, 0, 1, -1, 2, 0, 1}, {0, 0, 0}});
  s.mu = normalize(std::vector<double>{1, 1, 0}).vec();
  s.loss_config.kappa = 3.0;
  s.proto_euclid = {0.5, 0.5, 0.0};
  std::vector<double> x{0.3, -0.2, 0.9}, x2{0.9, -0.6, 2.7};
  CHECK(score_input(x, s) == doctest::Approx(score_input(x2, s)).epsilon(1e-14));
  s.geometry = Geometry::euclidean;
  CHECK(std::abs(score_input(x, s) - score_input(x2, s)) > 1e-3);
  auto before = score_raw(embed_raw(x, s), s);
  for (auto& p : s.proto_euclid) p *= 2;
  CHECK(std::abs(score_raw(embed_raw(x, s), s) - before) > 1e-3);
}

TEST_CASE("score") {
  auto s = small_model();
  s.loss_config.kappa = 3.0;
  auto mu = s.prototype();
  CHECK(score(mu, s) == doctest::Approx(3.0).epsilon(1e-14));
  auto t = tangent_project(mu, std::vector<double>{1, 0, 0, 0});
  if (norm(t) > 1e-6) CHECK(std::abs(score(normalize(t), s)) < 1e-14);
  auto e = small_model(Geometry::euclidean);
  CHECK(score_raw(e.proto_euclid, e) == 0.0);
  RngStream r(8, 8);
  for (int i = 0; i < 50; ++i) CHECK(score_raw(random_vec(4, r), e) < 0.0);
  CHECK(code_of([&] { score_raw(random_vec(3, r), e); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("reproject_prototype") {
  auto s = small_model();
  s.mu = {0, 2, 0, 0};
  auto p = reproject_prototype(s);
  CHECK(p.mu == std::vector<double>{0, 1, 0, 0});
  auto q = reproject_prototype(p);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(q.mu[i] - p.mu[i]) <= 1e-12);
  s.mu = {0, 0, 0, 0};
  CHECK(code_of([&] { reproject_prototype(s); }) == ErrorCode::DegeneratePrototype);
}

TEST_CASE("encoder_backward trivial cases") {
  auto s = small_model();
  RngStream r(9, 9);
  auto x = random_vec(5, r);
  auto out = encoder_forward(x, s, false, r);
  auto g = MlpGradients::zeros_like(s.encoder);
  encoder_backward(out.embedding.vec(), out.cache, s, g);
  for (const auto& w : g.weight)
    for (double v : w) CHECK(std::abs(v) < 1e-14);
  auto g0 = MlpGradients::zeros_like(s.encoder);
  encoder_backward(std::vector<double>(4, 0.0), out.cache, s, g0);
  for (const auto& w : g0.weight)
    for (double v : w) CHECK(v == 0.0);
  for (const auto& b : g0.bias)
    for (double v : b) CHECK(v == 0.0);
}

TEST_CASE("encoder_backward matches finite differences") {
  for (bool training : {false, true}) {
    auto s = small_model(Geometry::cosine, training ? 0.3 : 0.0, 11);
    RngStream r(10, training);
    for (int trial = 0; trial < 5; ++trial) {
      auto x = random_vec(5, r);
      auto gy = random_vec(4, r);
      const RngStream mask = r.split(trial);
      RngStream m0 = mask;
      auto out = encoder_forward(x, s, training, m0);
      auto grads = MlpGradients::zeros_like(s.encoder);
      encoder_backward(gy, out.cache, s, grads);
      auto f = [&] {
        RngStream mm = mask;
        return dot(gy, encoder_forward(x, s, training, mm).embedding.coords());
      };
      for (std::size_t L = 0; L < s.encoder.layers.size(); ++L) {
        auto& layer = s.encoder.layers[L];
        for (std::size_t k = 0; k < layer.weight.size(); ++k)
          CHECK(oracle::grad_close(grads.weight[L][k], oracle::central_diff(f, layer.weight[k])));
        for (std::size_t k = 0; k < layer.bias.size(); ++k)
          CHECK(oracle::grad_close(grads.bias[L][k], oracle::central_diff(f, layer.bias[k])));
      }
      // raw path: d (gy . v) / d params
      auto graw = MlpGradients::zeros_like(s.encoder);
      encoder_backward_raw(gy, out.cache, s, graw);
      auto fr = [&] {
        RngStream mm = mask;
        auto o = encoder_forward(x, s, training, mm);
        return dot(gy, o.cache.raw);
      };
      auto& first = s.encoder.layers[0];
      for (std::size_t k = 0; k < first.weight.size(); ++k)
        CHECK(oracle::grad_close(graw.weight[0][k], oracle::central_diff(fr, first.weight[k])));
    }
  }
}

TEST_CASE("stale cache is rejected") {
  auto s = small_model();
  RngStream r(12, 12);
  auto out = encoder_forward(random_vec(5, r), s, false, r);
  auto g = MlpGradients::zeros_like(s.encoder);
  ++s.version;
  CHECK(code_of([&] { encoder_backward(std::vector<double>(4, 1.0), out.cache, s, g); }) == ErrorCode::StaleCache);
}

TEST_CASE("checkpoint round trip") {
  for (auto geom : {Geometry::cosine, Geometry::euclidean}) {
    auto s = small_model(geom, 0.25, 13);
    s.loss_config.kappa = 1.0 / 3.0;
    s.loss_config.logit_mode = LogitMode::margin_scaled;
    s.loss_config.weight_gradient = WeightGradient::flowing;
    s.alpha_raw = 0.1 + 1e-17;
    s.margin_raw = -0.123456789012345678;
    const auto text = checkpoint_to_string(s);
    auto back = checkpoint_from_string(text);
    CHECK(back == s);
    CHECK(checkpoint_to_string(back) == text);
    CHECK(text.find("\"" + std::string(to_string(geom)) + "\"") != std::string::npos);
  }
  auto s = small_model();
  auto path = std::filesystem::temp_directory_path() / "angularpu_test_ckpt.json";
  save_checkpoint(s, path);
  CHECK(load_checkpoint(path) == s);
  std::filesystem::remove(path);
  CHECK(code_of([&] { load_checkpoint(path); }) == ErrorCode::IoFailure);
}

TEST_CASE("malformed checkpoints") {
  auto text = checkpoint_to_string(small_model());
  CHECK(code_of([&] { checkpoint_from_string(text.substr(0, text.size() / 2)); }) == ErrorCode::FormatViolation);
  CHECK(code_of([&] { checkpoint_from_string("{}"); }) == ErrorCode::FormatViolation);
  auto bad = text;
  bad.replace(bad.find("\"cosine\""), 8, "\"conic\"");
  CHECK(code_of([&] { checkpoint_from_string(bad); }) == ErrorCode::FormatViolation);
}

TEST_CASE("dropout never removes every unit") {
  const std::size_t sizes[] = {3};
  auto s = init_model(sizes, 2, Geometry::cosine, RngStream(1, 1), MarginParam::tanh, 0.9);
  RngStream r(14, 14);
  std::vector<double> x{0.5, -1.0, 2.0};
  for (int i = 0; i < 2000; ++i) {
    auto out = encoder_forward(x, s, true, r);
    CHECK((out.cache.dropout_scale[0] != 0.0 || out.cache.dropout_scale[1] != 0.0));
    CHECK(std::abs(norm(out.embedding.coords()) - 1.0) <= 1e-9);
  }
}
