#include "angularpu/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "angularpu/error.hpp"

namespace angularpu {

namespace {

void require_shape(const ScoredSet& s) {
  if (s.scores.size() != s.labels.size()) throw Error(ErrorCode::ShapeMismatch, "scores and labels differ in length");
}

// One entry per distinct score, descending: cumulative TP and FP at "score >= threshold".
struct Group {
  double threshold;
  std::int64_t tp;
  std::int64_t fp;
};

std::vector<Group> descending_groups(const ScoredSet& s) {
  require_shape(s);
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] > s.scores[b]; });
  std::vector<Group> groups;
  std::int64_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double v = s.scores[order[k]];
    while (k < order.size() && s.scores[order[k]] == v) {
      (s.labels[order[k]] ? tp : fp) += 1;
      ++k;
    }
    groups.push_back({v, tp, fp});
  }
  return groups;
}

std::int64_t count_pos(const ScoredSet& s) {
  require_shape(s);
  std::int64_t p = 0;
  for (int y : s.labels) p += y ? 1 : 0;
  return p;
}

double ratio(std::int64_t a, std::int64_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); }

}  // namespace

std::size_t ScoredSet::positives() const noexcept {
  std::size_t p = 0;
  for (int y : labels) p += y ? 1 : 0;
  return p;
}

Calibration calibrate_threshold(const ScoredSet& val) {
  const std::int64_t p = count_pos(val);
  if (p == 0) throw Error(ErrorCode::NoPositives, "threshold calibration needs at least one positive");
  // F1 = 2 TP / (TP + FP + P); start from the +inf rule (TP = 0).
  Calibration best{std::numeric_limits<double>::infinity(), 0.0};
  std::int64_t best_num = 0, best_den = p;
  for (const auto& g : descending_groups(val)) {
    const std::int64_t num = 2 * g.tp;
    const std::int64_t den = g.tp + g.fp + p;
    if (num * best_den >= best_num * den) {
      best_num = num;
      best_den = den;
      best.tau = g.threshold;
    }
  }
  best.f1 = ratio(best_num, best_den);
  return best;
}

Confusion confusion_metrics(const ScoredSet& test, double tau) {
  require_shape(test);
  Confusion c;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const bool pred = test.scores[i] >= tau;
    if (test.labels[i]) {
      (pred ? c.tp : c.fn) += 1;
    } else {
      (pred ? c.fp : c.tn) += 1;
    }
  }
  c.precision = ratio(c.tp, c.tp + c.fp);
  c.recall = ratio(c.tp, c.tp + c.fn);
  // 2PR/(P+R) in exact counts
  c.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  c.accuracy = ratio(c.tp + c.tn, static_cast<std::int64_t>(test.size()));
  return c;
}

double roc_auc(const ScoredSet& s) {
  const std::int64_t p = count_pos(s);
  const std::int64_t n = static_cast<std::int64_t>(s.size()) - p;
  if (p == 0 || n == 0) throw Error(ErrorCode::SingleClass, "AUC needs both classes");
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });
  // Twice the positive rank sum, with tied items sharing their midrank.
  std::int64_t rank2 = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::int64_t pos_in_group = 0;
    while (j < order.size() && s.scores[order[j]] == s.scores[order[i]]) {
      pos_in_group += s.labels[order[j]] ? 1 : 0;
      ++j;
    }
    rank2 += pos_in_group * static_cast<std::int64_t>(i + 1 + j);
    i = j;
  }
  const std::int64_t num = rank2 - p * (p + 1);
  return static_cast<double>(num) / static_cast<double>(2 * p * n);
}

double average_precision(const ScoredSet& s) {
  const std::int64_t p = count_pos(s);
  if (p == 0) throw Error(ErrorCode::NoPositives, "AP needs at least one positive");
  double ap = 0.0;
  std::int64_t prev_tp = 0;
  for (const auto& g : descending_groups(s)) {
    if (g.tp != prev_tp) {
      ap += ratio(g.tp - prev_tp, p) * ratio(g.tp, g.tp + g.fp);
      prev_tp = g.tp;
    }
  }
  return ap;
}

double recall_at_precision(const ScoredSet& s, double floor) {
  if (!(floor > 0.0 && floor <= 1.0)) throw Error(ErrorCode::InvalidSpec, "precision floor must lie in (0, 1]");
  const std::int64_t p = count_pos(s);
  if (p == 0) throw Error(ErrorCode::NoPositives, "recall at precision needs at least one positive");
  double best = 0.0;
  for (const auto& g : descending_groups(s)) {
    if (ratio(g.tp, g.tp + g.fp) >= floor) best = std::max(best, ratio(g.tp, p));
  }
  return best;
}

std::vector<PrPoint> pr_curve(const ScoredSet& s) {
  const std::int64_t p = count_pos(s);
  if (p == 0) throw Error(ErrorCode::NoPositives, "PR curve needs at least one positive");
  std::vector<PrPoint> out;
  for (const auto& g : descending_groups(s)) out.push_back({g.threshold, ratio(g.tp, g.tp + g.fp), ratio(g.tp, p)});
  return out;
}

std::string pr_curve_csv(const std::vector<PrPoint>& curve) {
  std::string out = "threshold,precision,recall\n";
  char buf[128];
  for (const auto& pt : curve) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f\n", pt.threshold, pt.precision, pt.recall);
    out += buf;
  }
  return out;
}

std::string MetricsReport::to_json() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "{\"tau\": %.6f, \"precision\": %.6f, \"recall\": %.6f, \"f1\": %.6f, \"accuracy\": %.6f, "
                "\"auc\": %.6f, \"ap\": %.6f, \"r_at_p\": {",
                tau, precision, recall, f1, accuracy, auc, ap);
  std::string out = buf;
  bool first = true;
  for (const auto& [floor, rec] : r_at_p) {
    std::snprintf(buf, sizeof buf, "%s\"%.2f\": %.6f", first ? "" : ", ", floor, rec);
    out += buf;
    first = false;
  }
  out += "}}\n";
  return out;
}

MetricsReport evaluate_scores(const ScoredSet& val, const ScoredSet& test) {
  MetricsReport r;
  r.tau = calibrate_threshold(val).tau;
  const Confusion c = confusion_metrics(test, r.tau);
  r.precision = c.precision;
  r.recall = c.recall;
  r.f1 = c.f1;
  r.accuracy = c.accuracy;
  r.auc = roc_auc(test);
  r.ap = average_precision(test);
  for (double floor : kPrecisionFloors) r.r_at_p[floor] = recall_at_precision(test, floor);
  return r;
}

ScoredSet score_split(const ModelState& model, const PuDataset& ds, Split split) {
  if (ds.dim() != model.encoder.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset has " + std::to_string(ds.dim()) +
                                                  " features, model expects " +
                                                  std::to_string(model.encoder.input_dim()));
  }
  ScoredSet s;
  for (std::size_t i : ds.indices(split)) {
    s.scores.push_back(score_input(ds.features(i), model));
    s.labels.push_back(ds.reveal_label(i, AuditScope::evaluator));
  }
  return s;
}

MetricsReport evaluate(const ModelState& model, const PuDataset& ds) {
  const ScoredSet val = score_split(model, ds, Split::val);
  const ScoredSet test = score_split(model, ds, Split::test);
  if (val.size() == 0) throw Error(ErrorCode::InsufficientData, "dataset has no validation rows");
  if (test.size() == 0) throw Error(ErrorCode::InsufficientData, "dataset has no test rows");
  return evaluate_scores(val, test);
}

}  // namespace angularpu
