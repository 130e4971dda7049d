#include "angularpu/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "angularpu/error.hpp"
#include "json.hpp"

namespace angularpu {

namespace {

// Stream ids for the independent random components of a dataset.
constexpr std::uint64_t kStreamMu = 1;
constexpr std::uint64_t kStreamLift = 2;
constexpr std::uint64_t kStreamRows = 3;
constexpr std::uint64_t kStreamSplit = 4;

[[noreturn]] void bad_spec(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::InvalidSpec, field + ": " + why);
}

[[noreturn]] void bad_line(std::size_t line, const std::string& why) {
  throw Error(ErrorCode::FormatViolation, "line " + std::to_string(line) + ": " + why);
}

std::string_view to_string(Lift l) { return l == Lift::identity ? "identity" : "random_linear"; }
std::string_view to_string(Supervision s) { return s == Supervision::P ? "P" : "U"; }
std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

void append_double(std::string& out, double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  out.append(buf, end);
}

}  // namespace

void SyntheticSpec::validate() const {
  if (d_sphere < 2) bad_spec("d_sphere", "must be >= 2");
  if (d_input < 1) bad_spec("d_input", "must be >= 1");
  if (n < 1) bad_spec("n", "must be >= 1");
  if (!(pi > 0.0 && pi <= 1.0)) bad_spec("pi", "must lie in (0, 1]");
  if (!(kappa_true > 0.0) || !std::isfinite(kappa_true)) bad_spec("kappa_true", "must be positive and finite");
  if (lift == Lift::identity && d_input != d_sphere) bad_spec("d_input", "identity lift requires d_input == d_sphere");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) bad_spec("noise_sigma", "must be >= 0");
  if (!(scale_min > 0.0 && scale_min <= scale_max) || !std::isfinite(scale_max)) {
    bad_spec("scale_min", "need 0 < scale_min <= scale_max");
  }
  if (mu_true) {
    if (mu_true->size() != d_sphere) bad_spec("mu_true", "length must equal d_sphere");
    if (std::abs(norm(*mu_true) - 1.0) > kUnitTolerance) bad_spec("mu_true", "must be unit norm");
  }
}

void SplitSpec::validate() const {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) bad_spec("val_fraction", "must lie in (0, 1)");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) bad_spec("test_fraction", "must lie in (0, 1)");
  if (!(val_fraction + test_fraction < 1.0)) bad_spec("val_fraction", "val_fraction + test_fraction must be < 1");
  if (n_labeled_pos == 0) throw Error(ErrorCode::InsufficientPositives, "n_labeled_pos must be >= 1");
}

std::string manifest_to_string(const DatasetManifest& m) {
  const auto& s = m.synthetic;
  nlohmann::ordered_json syn;
  syn["d_input"] = s.d_input;
  syn["d_sphere"] = s.d_sphere;
  syn["n"] = s.n;
  syn["pi"] = s.pi;
  syn["kappa_true"] = s.kappa_true;
  syn["mu_true"] = resolve_mu_true(s).vec();
  syn["lift"] = to_string(s.lift);
  syn["noise_sigma"] = s.noise_sigma;
  syn["scale_min"] = s.scale_min;
  syn["scale_max"] = s.scale_max;
  syn["seed"] = s.seed;
  nlohmann::ordered_json split;
  split["n_labeled_pos"] = m.split.n_labeled_pos;
  split["val_fraction"] = m.split.val_fraction;
  split["test_fraction"] = m.split.test_fraction;
  split["seed"] = m.split.seed;
  nlohmann::ordered_json j;
  j["synthetic"] = syn;
  j["split"] = split;
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("manifest is not valid JSON: ") + e.what());
  }
  DatasetManifest m;
  auto& s = m.synthetic;
  std::string field;
  try {
    for (const auto& [k, v] : j.items()) {
      if (k != "synthetic" && k != "split") bad_spec(k, "unknown manifest key");
    }
    const auto& syn = j.at("synthetic");
    static const char* known_syn[] = {"d_input", "d_sphere", "n", "pi", "kappa_true", "mu_true",
                                      "lift", "noise_sigma", "scale_min", "scale_max", "seed"};
    for (const auto& [k, v] : syn.items()) {
      bool ok = false;
      for (const char* name : known_syn) ok = ok || k == name;
      if (!ok) bad_spec(k, "unknown manifest key");
    }
    field = "d_sphere";
    s.d_sphere = syn.at("d_sphere").get<std::size_t>();
    field = "d_input";
    s.d_input = syn.contains("d_input") ? syn.at("d_input").get<std::size_t>() : s.d_sphere;
    field = "n";
    s.n = syn.at("n").get<std::size_t>();
    field = "pi";
    s.pi = syn.at("pi").get<double>();
    field = "kappa_true";
    s.kappa_true = syn.at("kappa_true").get<double>();
    field = "mu_true";
    if (syn.contains("mu_true")) s.mu_true = syn.at("mu_true").get<std::vector<double>>();
    field = "lift";
    const std::string lift = syn.value("lift", std::string("identity"));
    if (lift == "identity") {
      s.lift = Lift::identity;
    } else if (lift == "random_linear") {
      s.lift = Lift::random_linear;
    } else {
      bad_spec("lift", "unknown value '" + lift + "'");
    }
    field = "noise_sigma";
    s.noise_sigma = syn.value("noise_sigma", 0.0);
    field = "scale_min";
    s.scale_min = syn.value("scale_min", 1.0);
    field = "scale_max";
    s.scale_max = syn.value("scale_max", 1.0);
    field = "seed";
    s.seed = syn.at("seed").get<std::uint64_t>();

    const auto& sp = j.at("split");
    for (const auto& [k, v] : sp.items()) {
      if (k != "n_labeled_pos" && k != "val_fraction" && k != "test_fraction" && k != "seed") {
        bad_spec(k, "unknown manifest key");
      }
    }
    field = "n_labeled_pos";
    m.split.n_labeled_pos = sp.at("n_labeled_pos").get<std::size_t>();
    field = "val_fraction";
    m.split.val_fraction = sp.at("val_fraction").get<double>();
    field = "test_fraction";
    m.split.test_fraction = sp.at("test_fraction").get<double>();
    field = "seed";
    m.split.seed = sp.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    bad_spec(field.empty() ? "manifest" : field, std::string("missing or malformed (") + e.what() + ")");
  }
  s.validate();
  m.split.validate();
  return m;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".manifest.json");
  return p;
}

UnitVector resolve_mu_true(const SyntheticSpec& spec) {
  if (spec.mu_true) return UnitVector(*spec.mu_true);
  RngStream rng(spec.seed, kStreamMu);
  return sample_uniform_sphere(spec.d_sphere, 1, rng).front();
}

Matrix lift_matrix(const SyntheticSpec& spec) {
  Matrix a(spec.d_input, spec.d_sphere);
  RngStream rng(spec.seed, kStreamLift);
  const double sd = 1.0 / std::sqrt(static_cast<double>(spec.d_sphere));
  for (auto& x : a.data) x = sd * rng.normal();
  return a;
}

std::vector<RawRow> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const UnitVector mu = resolve_mu_true(spec);
  const Matrix a = spec.lift == Lift::random_linear ? lift_matrix(spec) : Matrix();
  RngStream rng(spec.seed, kStreamRows);
  std::vector<RawRow> rows(spec.n);
  for (auto& row : rows) {
    row.y_true = rng.uniform() < spec.pi ? 1 : 0;
    const UnitVector z = row.y_true ? sample_vmf(mu, spec.kappa_true, 1, rng).front()
                                    : sample_uniform_sphere(spec.d_sphere, 1, rng).front();
    row.latent = z.vec();
    if (spec.lift == Lift::identity) {
      row.features = z.vec();
    } else {
      row.features.assign(spec.d_input, 0.0);
      for (std::size_t i = 0; i < spec.d_input; ++i) {
        row.features[i] = dot(a.row(i), z.coords()) + spec.noise_sigma * rng.normal();
      }
    }
    if (spec.scale_min != 1.0 || spec.scale_max != 1.0) {
      const double c = spec.scale_min + (spec.scale_max - spec.scale_min) * rng.uniform();
      for (auto& f : row.features) f *= c;
    }
  }
  return rows;
}

PuDataset::PuDataset(Matrix features, std::vector<int> y_true, std::vector<Supervision> supervision,
                     std::vector<Split> split)
    : features_(std::move(features)),
      y_true_(std::move(y_true)),
      supervision_(std::move(supervision)),
      split_(std::move(split)) {
  const std::size_t n = features_.rows;
  if (y_true_.size() != n || supervision_.size() != n || split_.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "dataset columns differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (y_true_[i] != 0 && y_true_[i] != 1) throw Error(ErrorCode::FormatViolation, "y_true must be 0 or 1");
    if (supervision_[i] == Supervision::P && y_true_[i] != 1) {
      throw Error(ErrorCode::FormatViolation, "row " + std::to_string(i) + " is labeled P but y_true = 0");
    }
  }
}

int PuDataset::reveal_label(std::size_t i, AuditScope scope) const {
  if (supervision_[i] == Supervision::U) audit_->reads[static_cast<std::size_t>(scope)].fetch_add(1);
  return y_true_[i];
}

std::uint64_t PuDataset::audit_count(AuditScope scope) const noexcept {
  return audit_->reads[static_cast<std::size_t>(scope)].load();
}

void PuDataset::reset_audit() const noexcept {
  for (auto& r : audit_->reads) r.store(0);
}

std::vector<std::size_t> PuDataset::indices(Split split, std::optional<Supervision> supervision) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (split_[i] == split && (!supervision || supervision_[i] == *supervision)) out.push_back(i);
  }
  return out;
}

PuDataset PuDataset::with_splits(std::vector<Split> split) const {
  if (split.size() != size()) throw Error(ErrorCode::ShapeMismatch, "split vector length differs from row count");
  PuDataset out = *this;
  out.split_ = std::move(split);
  return out;
}

bool operator==(const PuDataset& a, const PuDataset& b) {
  return a.features_ == b.features_ && a.y_true_ == b.y_true_ && a.supervision_ == b.supervision_ &&
         a.split_ == b.split_;
}

PuDataset build_pu_split(const std::vector<RawRow>& rows, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = rows.size();
  if (n == 0) throw Error(ErrorCode::InsufficientData, "no rows to split");
  const std::size_t d = rows.front().features.size();

  RngStream rng(spec.seed, kStreamSplit);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  shuffle(order.begin(), order.end(), rng);

  const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
  const std::size_t n_pool = n - n_test;
  const auto n_val = static_cast<std::size_t>(std::llround(spec.val_fraction * static_cast<double>(n_pool)));

  std::vector<Split> split(n, Split::train);
  std::vector<Supervision> sup(n, Supervision::U);
  for (std::size_t k = 0; k < n_test; ++k) split[order[k]] = Split::test;
  for (std::size_t k = n_test; k < n_test + n_val; ++k) split[order[k]] = Split::val;

  std::vector<std::size_t> train_pos;
  for (std::size_t k = n_test + n_val; k < n; ++k) {
    if (rows[order[k]].y_true == 1) train_pos.push_back(order[k]);
  }
  if (train_pos.size() < spec.n_labeled_pos) {
    throw Error(ErrorCode::InsufficientPositives, "requested " + std::to_string(spec.n_labeled_pos) +
                                                      " labeled positives but the training pool has " +
                                                      std::to_string(train_pos.size()));
  }
  // train_pos is already in shuffled order; take a prefix.
  for (std::size_t k = 0; k < spec.n_labeled_pos; ++k) sup[train_pos[k]] = Supervision::P;

  Matrix features(n, d);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].features.size() != d) throw Error(ErrorCode::ShapeMismatch, "rows differ in feature count");
    std::copy(rows[i].features.begin(), rows[i].features.end(), features.row(i).begin());
    y[i] = rows[i].y_true;
  }
  return PuDataset(std::move(features), std::move(y), std::move(sup), std::move(split));
}

std::string dataset_to_csv(const PuDataset& ds) {
  std::string out;
  for (std::size_t j = 0; j < ds.dim(); ++j) out += "f" + std::to_string(j) + ",";
  out += "y_true,supervision,split\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double f : ds.features(i)) {
      append_double(out, f);
      out += ',';
    }
    out += std::to_string(ds.reveal_label(i, AuditScope::io));
    out += ',';
    out += to_string(ds.supervision(i));
    out += ',';
    out += to_string(ds.split(i));
    out += '\n';
  }
  return out;
}

PuDataset dataset_from_csv(const std::string& text) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    ++line_no;
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) bad_line(line_no, "truncated (no terminating newline)");
    line = std::string_view(text).substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;
    return true;
  };
  auto split_fields = [](std::string_view line) {
    std::vector<std::string_view> f;
    std::size_t start = 0;
    while (true) {
      const std::size_t c = line.find(',', start);
      f.push_back(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
      if (c == std::string_view::npos) break;
      start = c + 1;
    }
    return f;
  };

  std::string_view line;
  if (!next_line(line)) throw Error(ErrorCode::FormatViolation, "line 1: empty file");
  const auto header = split_fields(line);
  if (header.size() < 4) bad_line(1, "header needs at least one feature column");
  const std::size_t d = header.size() - 3;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "f" + std::to_string(j)) bad_line(1, "expected column f" + std::to_string(j));
  }
  if (header[d] != "y_true" || header[d + 1] != "supervision" || header[d + 2] != "split") {
    bad_line(1, "expected trailing columns y_true,supervision,split");
  }

  std::vector<double> feats;
  std::vector<int> y;
  std::vector<Supervision> sup;
  std::vector<Split> split;
  while (next_line(line)) {
    const auto fields = split_fields(line);
    if (fields.size() != d + 3) {
      bad_line(line_no, "expected " + std::to_string(d + 3) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      double x = 0.0;
      const auto f = fields[j];
      auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), x);
      if (ec != std::errc() || end != f.data() + f.size() || f.empty() || !std::isfinite(x)) {
        bad_line(line_no, "column f" + std::to_string(j) + " is not a finite number");
      }
      feats.push_back(x);
    }
    if (fields[d] == "1") {
      y.push_back(1);
    } else if (fields[d] == "0") {
      y.push_back(0);
    } else {
      bad_line(line_no, "y_true must be 0 or 1");
    }
    if (fields[d + 1] == "P") {
      sup.push_back(Supervision::P);
    } else if (fields[d + 1] == "U") {
      sup.push_back(Supervision::U);
    } else {
      bad_line(line_no, "supervision must be P or U");
    }
    if (fields[d + 2] == "train") {
      split.push_back(Split::train);
    } else if (fields[d + 2] == "val") {
      split.push_back(Split::val);
    } else if (fields[d + 2] == "test") {
      split.push_back(Split::test);
    } else {
      bad_line(line_no, "split must be train, val or test");
    }
    if (sup.back() == Supervision::P && y.back() != 1) bad_line(line_no, "supervision P requires y_true = 1");
  }
  Matrix m(y.size(), d);
  m.data = std::move(feats);
  return PuDataset(std::move(m), std::move(y), std::move(sup), std::move(split));
}

void save_dataset(const PuDataset& ds, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out << dataset_to_csv(ds);
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
  }
  if (ds.manifest) {
    const auto mpath = manifest_path_for(path);
    std::ofstream out(mpath, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + mpath.string() + " for writing");
    out << manifest_to_string(*ds.manifest);
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + mpath.string());
  }
}

PuDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  PuDataset ds = dataset_from_csv(buf.str());
  const auto mpath = manifest_path_for(path);
  if (std::filesystem::exists(mpath)) {
    std::ifstream min(mpath, std::ios::binary);
    std::ostringstream mbuf;
    mbuf << min.rdbuf();
    try {
      ds.manifest = manifest_from_string(mbuf.str());
    } catch (const Error& e) {
      throw Error(ErrorCode::FormatViolation, mpath.string() + ": " + e.detail());
    }
    if (ds.manifest->synthetic.n != ds.size()) {
      throw Error(ErrorCode::FormatViolation, "line " + std::to_string(ds.size() + 1) + ": manifest promises " +
                                                  std::to_string(ds.manifest->synthetic.n) + " rows, file has " +
                                                  std::to_string(ds.size()));
    }
  }
  return ds;
}

}  // namespace angularpu
