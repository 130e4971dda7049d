#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "angularpu/sphere.hpp"

namespace angularpu {

enum class Lift { identity, random_linear };

struct SyntheticSpec {
  std::size_t d_input = 16;
  std::size_t d_sphere = 16;
  std::size_t n = 1000;
  double pi = 0.3;  // class prior, (0, 1]
  double kappa_true = 10.0;
  std::optional<std::vector<double>> mu_true;  // drawn from the seed when absent
  Lift lift = Lift::identity;
  double noise_sigma = 0.0;  // random_linear only
  // Each row's features are multiplied by a factor drawn uniformly from
  // [scale_min, scale_max]. {1, 1} leaves them untouched.
  double scale_min = 1.0;
  double scale_max = 1.0;
  std::uint64_t seed = 0;

  /// Throws InvalidSpec naming the field.
  void validate() const;
};

struct SplitSpec {
  std::size_t n_labeled_pos = 0;
  double val_fraction = 0.1;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DatasetManifest {
  SyntheticSpec synthetic;
  SplitSpec split;
};

std::string manifest_to_string(const DatasetManifest& m);
DatasetManifest manifest_from_string(const std::string& text);
/// "data.csv" -> "data.manifest.json"
std::filesystem::path manifest_path_for(const std::filesystem::path& csv);

struct RawRow {
  std::vector<double> features;
  std::vector<double> latent;  // z on S^{d_sphere - 1}
  int y_true = 0;
};

/// mu_true as given, or a uniform draw from the spec's seed.
UnitVector resolve_mu_true(const SyntheticSpec& spec);

/// The d_input x d_sphere map used by the random_linear lift (row-major).
Matrix lift_matrix(const SyntheticSpec& spec);

std::vector<RawRow> generate_synthetic(const SyntheticSpec& spec);

enum class Supervision { P, U };
enum class Split { train, val, test };

/// Who is reading a ground-truth label. Reads of unlabeled rows are counted
/// per scope so tests can confirm training never touches them.
enum class AuditScope { evaluator, generator, io, other };

class PuDataset {
 public:
  PuDataset() = default;
  PuDataset(Matrix features, std::vector<int> y_true, std::vector<Supervision> supervision, std::vector<Split> split);

  std::size_t size() const noexcept { return features_.rows; }
  std::size_t dim() const noexcept { return features_.cols; }
  std::span<const double> features(std::size_t i) const noexcept { return features_.row(i); }
  const Matrix& feature_matrix() const noexcept { return features_; }
  Supervision supervision(std::size_t i) const noexcept { return supervision_[i]; }
  Split split(std::size_t i) const noexcept { return split_[i]; }

  /// Ground truth. Reads on supervision=U rows are tallied under scope.
  int reveal_label(std::size_t i, AuditScope scope) const;
  std::uint64_t audit_count(AuditScope scope) const noexcept;
  void reset_audit() const noexcept;

  /// Row indices with the given split (and supervision, if given), ascending.
  std::vector<std::size_t> indices(Split split, std::optional<Supervision> supervision = std::nullopt) const;

  /// Same rows and labels with new split tags; reads no labels and shares
  /// the audit counters with this dataset.
  PuDataset with_splits(std::vector<Split> split) const;

  std::optional<DatasetManifest> manifest;

  friend bool operator==(const PuDataset& a, const PuDataset& b);

 private:
  struct Audit {
    std::array<std::atomic<std::uint64_t>, 4> reads{};
  };

  Matrix features_;
  std::vector<int> y_true_;
  std::vector<Supervision> supervision_;
  std::vector<Split> split_;
  std::shared_ptr<Audit> audit_ = std::make_shared<Audit>();
};

/// Test rows first, then validation rows from the pool, then n_labeled_pos
/// positives among the remaining training rows. Everything else is U.
/// Row order of the input is preserved.
PuDataset build_pu_split(const std::vector<RawRow>& rows, const SplitSpec& split);

void save_dataset(const PuDataset& ds, const std::filesystem::path& path);
PuDataset load_dataset(const std::filesystem::path& path);

std::string dataset_to_csv(const PuDataset& ds);
PuDataset dataset_from_csv(const std::string& text);

}  // namespace angularpu
