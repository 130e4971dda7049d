#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"

#include "angularpu/data.hpp"
#include "angularpu/error.hpp"
#include "angularpu/vmf_stats.hpp"

using namespace angularpu;

namespace {

ErrorCode code_of(const std::function<void()>& f, std::string* msg = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (msg) *msg = e.what();
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidSpec;
}

SyntheticSpec spec_id(std::size_t d, std::size_t n, double pi, double kappa, std::uint64_t seed) {
  SyntheticSpec s;
  s.d_input = s.d_sphere = d;
  s.n = n;
  s.pi = pi;
  s.kappa_true = kappa;
  s.seed = seed;
  return s;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("angularpu_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("spec validation names the field") {
  std::string msg;
  auto s = spec_id(4, 10, 0.0, 1.0, 0);
  CHECK(code_of([&] { s.validate(); }, &msg) == ErrorCode::InvalidSpec);
  CHECK(msg.find("pi") != std::string::npos);
  s = spec_id(4, 10, 0.3, 1.0, 0);
  s.d_input = 5;
  CHECK(code_of([&] { s.validate(); }, &msg) == ErrorCode::InvalidSpec);
  CHECK(msg.find("d_input") != std::string::npos);
  s.lift = Lift::random_linear;
  CHECK_NOTHROW(s.validate());
  s.mu_true = std::vector<double>{1, 1, 0, 0};
  CHECK(code_of([&] { s.validate(); }, &msg) == ErrorCode::InvalidSpec);
  CHECK(msg.find("mu_true") != std::string::npos);
  SplitSpec sp;
  CHECK(code_of([&] { sp.validate(); }) == ErrorCode::InsufficientPositives);
  sp.n_labeled_pos = 3;
  sp.val_fraction = 0.6;
  sp.test_fraction = 0.5;
  CHECK(code_of([&] { sp.validate(); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("generation is deterministic") {
  auto s = spec_id(5, 300, 0.4, 6.0, 12);
  s.lift = Lift::random_linear;
  s.d_input = 9;
  s.noise_sigma = 0.1;
  s.scale_min = 0.5;
  s.scale_max = 2.0;
  auto a = generate_synthetic(s), b = generate_synthetic(s);
  REQUIRE(a.size() == 300);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].features == b[i].features);
    CHECK(a[i].y_true == b[i].y_true);
    CHECK(a[i].features.size() == 9);
    CHECK(std::abs(norm(a[i].latent) - 1.0) < 1e-9);
  }
  s.seed = 13;
  auto c = generate_synthetic(s);
  CHECK(c[0].features != a[0].features);
}

TEST_CASE("pi = 1 gives only positives") {
  for (const auto& r : generate_synthetic(spec_id(4, 500, 1.0, 3.0, 1))) CHECK(r.y_true == 1);
}

TEST_CASE("positive fraction concentrates at pi") {
  auto rows = generate_synthetic(spec_id(3, 100000, 0.3, 2.0, 2));
  double pos = 0;
  for (const auto& r : rows) pos += r.y_true;
  CHECK(std::abs(pos / 1e5 - 0.3) <= 0.005);
}

TEST_CASE("identity-lift positives have mean resultant A_d(kappa)") {
  auto s = spec_id(10, 40000, 0.5, 5.0, 3);
  auto mu = resolve_mu_true(s);
  auto rows = generate_synthetic(s);
  std::vector<double> c;
  for (const auto& r : rows)
    if (r.y_true) c.push_back(dot(mu.coords(), r.features));
  double m = 0, v = 0;
  for (double x : c) m += x;
  m /= double(c.size());
  for (double x : c) v += (x - m) * (x - m);
  const double se = std::sqrt(v / double(c.size() - 1) / double(c.size()));
  CHECK(std::abs(m - mean_resultant_length(10, 5.0)) <= 3 * se);
}

TEST_CASE("negatives follow the uniform variance law") {
  auto s = spec_id(32, 100000, 0.2, 5.0, 4);
  auto mu = resolve_mu_true(s);
  auto rows = generate_synthetic(s);
  std::vector<double> c;
  for (const auto& r : rows)
    if (!r.y_true) c.push_back(dot(mu.coords(), r.latent));
  double m = 0, v = 0;
  for (double x : c) m += x;
  m /= double(c.size());
  for (double x : c) v += (x - m) * (x - m);
  v /= double(c.size() - 1);
  CHECK(std::abs(v - 1.0 / 32) <= 0.1 / 32);
}

TEST_CASE("mu_true given explicitly is used") {
  auto s = spec_id(3, 10, 0.5, 1.0, 0);
  s.mu_true = std::vector<double>{0, 0, 1};
  CHECK(resolve_mu_true(s).vec() == std::vector<double>{0, 0, 1});
  auto s2 = s;
  s2.mu_true.reset();
  CHECK(resolve_mu_true(s2) == resolve_mu_true(s2));
}

TEST_CASE("PU split structure") {
  auto rows = generate_synthetic(spec_id(4, 1000, 0.3, 4.0, 5));
  SplitSpec sp{50, 0.1, 0.2, 9};
  auto ds = build_pu_split(rows, sp);
  REQUIRE(ds.size() == 1000);
  CHECK(ds.indices(Split::test).size() == 200);
  CHECK(ds.indices(Split::val).size() == 80);
  CHECK(ds.indices(Split::train).size() == 720);
  CHECK(ds.indices(Split::train, Supervision::P).size() == 50);
  CHECK(ds.indices(Split::val, Supervision::P).empty());
  CHECK(ds.indices(Split::test, Supervision::P).empty());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(ds.features(i)[0] == rows[i].features[0]);
    if (ds.supervision(i) == Supervision::P) CHECK(ds.reveal_label(i, AuditScope::other) == 1);
  }
  CHECK(build_pu_split(rows, sp) == ds);
  sp.seed = 10;
  CHECK(!(build_pu_split(rows, sp) == ds));

  SplitSpec zero{0, 0.1, 0.2, 1};
  CHECK(code_of([&] { build_pu_split(rows, zero); }) == ErrorCode::InsufficientPositives);
  SplitSpec too_many{1000, 0.1, 0.2, 1};
  CHECK(code_of([&] { build_pu_split(rows, too_many); }) == ErrorCode::InsufficientPositives);
}

TEST_CASE("hidden positives in U match a direct recount") {
  auto rows = generate_synthetic(spec_id(4, 10000, 0.3, 4.0, 6));
  SplitSpec sp{500, 0.1, 0.2, 11};
  auto ds = build_pu_split(rows, sp);
  std::size_t pool_pos = 0, hidden = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (ds.split(i) != Split::train) continue;
    pool_pos += rows[i].y_true;
    if (ds.supervision(i) == Supervision::U) hidden += rows[i].y_true;
  }
  CHECK(hidden == pool_pos - 500);
  CHECK(std::abs(double(hidden) - (0.3 * 7200 - 500)) < 4 * std::sqrt(7200 * 0.21));

  // labeling every pool positive leaves U purely negative
  SplitSpec all{pool_pos, 0.1, 0.2, 11};
  auto pn = build_pu_split(rows, all);
  for (auto i : pn.indices(Split::train, Supervision::U)) CHECK(rows[i].y_true == 0);
}

TEST_CASE("label audit") {
  auto ds = build_pu_split(generate_synthetic(spec_id(3, 200, 0.5, 3.0, 7)), SplitSpec{10, 0.1, 0.2, 1});
  ds.reset_audit();
  auto p = ds.indices(Split::train, Supervision::P);
  ds.reveal_label(p[0], AuditScope::other);
  CHECK(ds.audit_count(AuditScope::other) == 0);
  auto u = ds.indices(Split::train, Supervision::U);
  ds.reveal_label(u[0], AuditScope::other);
  ds.reveal_label(u[1], AuditScope::evaluator);
  CHECK(ds.audit_count(AuditScope::other) == 1);
  CHECK(ds.audit_count(AuditScope::evaluator) == 1);
  auto copy = ds.with_splits(std::vector<Split>(ds.size(), Split::train));
  copy.reveal_label(u[2], AuditScope::other);
  CHECK(ds.audit_count(AuditScope::other) == 2);
  ds.reset_audit();
  CHECK(ds.audit_count(AuditScope::other) == 0);
}

TEST_CASE("csv round trip is exact") {
  auto s = spec_id(3, 400, 0.4, 3.0, 8);
  s.lift = Lift::random_linear;
  s.d_input = 5;
  s.noise_sigma = 0.3;
  auto ds = build_pu_split(generate_synthetic(s), SplitSpec{20, 0.1, 0.2, 3});
  const auto text = dataset_to_csv(ds);
  CHECK(text.rfind("f0,f1,f2,f3,f4,y_true,supervision,split\n", 0) == 0);
  auto back = dataset_from_csv(text);
  CHECK(back == ds);
  CHECK(dataset_to_csv(back) == text);
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (std::size_t c = 0; c < ds.dim(); ++c) CHECK(back.features(i)[c] == ds.features(i)[c]);

  auto dir = temp_dir("csv");
  ds.manifest = DatasetManifest{s, SplitSpec{20, 0.1, 0.2, 3}};
  save_dataset(ds, dir / "d.csv");
  CHECK(std::filesystem::exists(dir / "d.manifest.json"));
  auto loaded = load_dataset(dir / "d.csv");
  CHECK(loaded == ds);
  REQUIRE(loaded.manifest.has_value());
  CHECK(loaded.manifest->synthetic.seed == 8);
  std::filesystem::remove_all(dir);
}

TEST_CASE("csv errors") {
  auto ds = build_pu_split(generate_synthetic(spec_id(3, 50, 0.5, 3.0, 9)), SplitSpec{5, 0.1, 0.2, 3});
  const auto text = dataset_to_csv(ds);
  std::string msg;

  // cut inside the last row
  CHECK(code_of([&] { dataset_from_csv(text.substr(0, text.size() - 5)); }, &msg) == ErrorCode::FormatViolation);
  CHECK(msg.find("line 51") != std::string::npos);

  auto bad_header = "g0" + text.substr(2);
  CHECK(code_of([&] { dataset_from_csv(bad_header); }, &msg) == ErrorCode::FormatViolation);
  CHECK(msg.find("line 1") != std::string::npos);

  auto lines = text;
  auto pos = lines.find('\n', lines.find('\n') + 1);
  std::string broken = lines.substr(0, pos) + ",extra" + lines.substr(pos);
  CHECK(code_of([&] { dataset_from_csv(broken); }, &msg) == ErrorCode::FormatViolation);
  CHECK(msg.find("line 2") != std::string::npos);

  std::string bad_tag = text;
  auto at = bad_tag.find(",train\n");
  bad_tag.replace(at, 7, ",trian\n");
  CHECK(code_of([&] { dataset_from_csv(bad_tag); }) == ErrorCode::FormatViolation);

  std::string nan_row = text;
  auto second = nan_row.find('\n') + 1;
  nan_row.replace(second, nan_row.find(',', second) - second, "nan");
  CHECK(code_of([&] { dataset_from_csv(nan_row); }) == ErrorCode::FormatViolation);

  // a P row claiming y_true = 0
  std::string lie = text;
  auto p = lie.find(",1,P,");
  REQUIRE(p != std::string::npos);
  lie.replace(p, 5, ",0,P,");
  CHECK(code_of([&] { dataset_from_csv(lie); }) == ErrorCode::FormatViolation);

  CHECK(code_of([&] { load_dataset("/nonexistent/dir/x.csv"); }) == ErrorCode::IoFailure);

  // manifest row count catches a whole-line truncation
  auto dir = temp_dir("trunc");
  ds.manifest = DatasetManifest{spec_id(3, 50, 0.5, 3.0, 9), SplitSpec{5, 0.1, 0.2, 3}};
  save_dataset(ds, dir / "d.csv");
  std::ifstream in(dir / "d.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  auto full = ss.str();
  auto cut = full.substr(0, full.rfind('\n', full.size() - 2) + 1);
  std::ofstream(dir / "d.csv") << cut;
  CHECK(code_of([&] { load_dataset(dir / "d.csv"); }, &msg) == ErrorCode::FormatViolation);
  CHECK(msg.find("line") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifest round trip and strictness") {
  DatasetManifest m{spec_id(6, 100, 0.25, 7.5, 42), SplitSpec{10, 0.1, 0.2, 43}};
  m.synthetic.lift = Lift::random_linear;
  m.synthetic.d_input = 12;
  m.synthetic.noise_sigma = 0.05;
  auto text = manifest_to_string(m);
  auto back = manifest_from_string(text);
  CHECK(back.synthetic.d_input == 12);
  CHECK(back.synthetic.pi == 0.25);
  CHECK(back.synthetic.mu_true.has_value());
  CHECK(*back.synthetic.mu_true == resolve_mu_true(m.synthetic).vec());
  CHECK(back.split.seed == 43);
  CHECK(manifest_to_string(back) == text);

  std::string msg;
  auto unknown = text;
  unknown.insert(unknown.find("\"d_input\""), "\"colour\": 1, ");
  CHECK(code_of([&] { manifest_from_string(unknown); }, &msg) == ErrorCode::InvalidSpec);
  CHECK(msg.find("colour") != std::string::npos);

  auto bad_pi = text;
  bad_pi.replace(bad_pi.find("0.25"), 4, "1.50");
  CHECK(code_of([&] { manifest_from_string(bad_pi); }, &msg) == ErrorCode::InvalidSpec);
  CHECK(msg.find("pi") != std::string::npos);

  CHECK(code_of([] { manifest_from_string("{"); }) == ErrorCode::InvalidSpec);
  CHECK(manifest_path_for("a/b/data.csv") == std::filesystem::path("a/b/data.manifest.json"));
}
