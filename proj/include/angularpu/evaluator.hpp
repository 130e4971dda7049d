#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "angularpu/data.hpp"
#include "angularpu/model.hpp"

namespace angularpu {

struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;  // 0 or 1

  std::size_t size() const noexcept { return scores.size(); }
  std::size_t positives() const noexcept;
};

struct Calibration {
  double tau = 0.0;
  double f1 = 0.0;
};

/// Best F1 over tau in {observed scores} + {+inf} for the rule score >= tau.
/// Ties go to the smallest tau. Throws NoPositives.
Calibration calibrate_threshold(const ScoredSet& val);

struct Confusion {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

Confusion confusion_metrics(const ScoredSet& test, double tau);

/// Mann-Whitney AUC with ties counted 1/2. Throws SingleClass.
double roc_auc(const ScoredSet& s);

/// Step-integrated AP; tied scores enter as one block. Throws NoPositives.
double average_precision(const ScoredSet& s);

/// Max recall over thresholds with precision >= floor, 0 if none. Throws NoPositives.
double recall_at_precision(const ScoredSet& s, double floor);

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// One point per distinct score, descending threshold.
std::vector<PrPoint> pr_curve(const ScoredSet& s);
std::string pr_curve_csv(const std::vector<PrPoint>& curve);

struct MetricsReport {
  double tau = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  double auc = 0.0;
  double ap = 0.0;
  std::map<double, double> r_at_p;  // precision floor -> recall

  /// Single JSON object, every number at 6 decimals.
  std::string to_json() const;
};

inline constexpr double kPrecisionFloors[] = {0.90, 0.95};

/// tau from val, every metric from test.
MetricsReport evaluate_scores(const ScoredSet& val, const ScoredSet& test);

/// Scores one split of a dataset. Labels are read under AuditScope::evaluator.
ScoredSet score_split(const ModelState& model, const PuDataset& ds, Split split);

/// Throws InsufficientData if the val or test split is empty.
MetricsReport evaluate(const ModelState& model, const PuDataset& ds);

}  // namespace angularpu
