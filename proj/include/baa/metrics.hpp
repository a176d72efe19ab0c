#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "baa/errors.hpp"
#include "baa/grid.hpp"

namespace baa {

// Binarization, tolerance-based matching, F-beta, and the dataset-level
// ODS / OIS metrics.

enum class DistanceMetric { kChebyshev, kEuclidean };

struct ConfusionCounts {
  std::int64_t tp_pred = 0;  // predicted positives matched by some gt positive
  std::int64_t fp = 0;       // predicted positives with no gt match
  std::int64_t tp_gt = 0;    // gt positives matched by some predicted positive
  std::int64_t fn = 0;       // gt positives with no prediction match

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp_pred += o.tp_pred;
    fp += o.fp;
    tp_gt += o.tp_gt;
    fn += o.fn;
    return *this;
  }
};

struct PrecisionRecallF {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

// pred >= thr classifies as positive; the threshold itself is an edge.
inline BinaryMap binarize(const Grid& pred, double thr) {
  BinaryMap out(pred.width, pred.height);
  for (std::size_t i = 0; i < pred.size(); ++i)
    out.bits[i] = pred.data[i] >= thr ? 1 : 0;
  return out;
}

namespace detail {

// Any positive in `other` within `radius` of (x, y)?
inline bool has_neighbor(const BinaryMap& other, int x, int y, double radius,
                         DistanceMetric metric) {
  const int r = static_cast<int>(std::floor(radius));
  const double r2 = radius * radius;
  for (int dy = -r; dy <= r; ++dy) {
    const int ny = y + dy;
    if (ny < 0 || ny >= other.height) continue;
    for (int dx = -r; dx <= r; ++dx) {
      const int nx = x + dx;
      if (nx < 0 || nx >= other.width) continue;
      if (metric == DistanceMetric::kEuclidean &&
          static_cast<double>(dx) * dx + static_cast<double>(dy) * dy > r2)
        continue;
      if (other.at(nx, ny)) return true;
    }
  }
  return false;
}

}  // namespace detail

// Dilation-style independent matching: a predicted positive counts as
// matched if any gt positive lies within `radius` (and vice versa for gt
// positives). No one-to-one assignment. radius = 0 degenerates to exact
// per-pixel confusion counting.
inline ConfusionCounts match_with_tolerance(const BinaryMap& pred, const BinaryMap& gt,
                                            double radius,
                                            DistanceMetric metric = DistanceMetric::kChebyshev) {
  if (!pred.same_shape(gt)) throw DimensionError("match_with_tolerance: map shapes differ");
  if (radius < 0.0) throw std::domain_error("match_with_tolerance: radius must be >= 0");

  ConfusionCounts c;
  for (int y = 0; y < pred.height; ++y) {
    for (int x = 0; x < pred.width; ++x) {
      if (pred.at(x, y)) {
        if (detail::has_neighbor(gt, x, y, radius, metric))
          ++c.tp_pred;
        else
          ++c.fp;
      }
      if (gt.at(x, y)) {
        if (detail::has_neighbor(pred, x, y, radius, metric))
          ++c.tp_gt;
        else
          ++c.fn;
      }
    }
  }
  return c;
}

// P = tp_pred / (tp_pred + fp), R = tp_gt / (tp_gt + fn),
// F = (1 + beta^2) P R / (beta^2 P + R); degenerate denominators give 0.
inline PrecisionRecallF precision_recall_f(const ConfusionCounts& c, double beta = 1.0) {
  PrecisionRecallF out;
  const std::int64_t pred_pos = c.tp_pred + c.fp;
  const std::int64_t gt_pos = c.tp_gt + c.fn;
  out.precision = pred_pos > 0 ? static_cast<double>(c.tp_pred) / static_cast<double>(pred_pos) : 0.0;
  out.recall = gt_pos > 0 ? static_cast<double>(c.tp_gt) / static_cast<double>(gt_pos) : 0.0;
  const double b2 = beta * beta;
  const double denom = b2 * out.precision + out.recall;
  out.f = denom > 0.0 ? (1.0 + b2) * out.precision * out.recall / denom : 0.0;
  return out;
}

// One evaluation sample: a real-valued prediction map and its binary gt.
struct EvalSample {
  std::string id;
  Grid pred;
  BinaryMap gt;
};

struct MetricConfig {
  double radius = 1.0;
  DistanceMetric metric = DistanceMetric::kChebyshev;
  double beta = 1.0;
};

inline std::vector<double> threshold_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw std::domain_error("threshold_grid: need step > 0 and hi >= lo");
  const int n = static_cast<int>(std::floor((hi - lo) / step + 0.5)) + 1;
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) grid[i] = lo + i * step;
  return grid;
}

// Default evaluation grid: 99 thresholds 0.01 .. 0.99.
inline std::vector<double> default_threshold_grid() {
  return threshold_grid(0.01, 0.99, 0.01);
}

struct PerImageBest {
  std::string id;
  double best_thr = 0.0;
  double best_f = 0.0;
};

struct EvalReport {
  std::vector<double> thresholds;
  std::vector<ConfusionCounts> counts;     // dataset-aggregated, per threshold
  std::vector<PrecisionRecallF> dataset;   // from aggregated counts
  double ods_threshold = 0.0;
  double ods_f1 = 0.0;
  double ois_f1 = 0.0;
  std::vector<PerImageBest> per_image;
};

// Sweeps the threshold grid over the dataset. ODS picks the single
// threshold maximizing the count-aggregated F score (ties break to the
// smaller threshold); OIS averages each image's own best F score.
inline EvalReport evaluate_dataset(const std::vector<EvalSample>& dataset,
                                   const std::vector<double>& grid, const MetricConfig& cfg) {
  if (dataset.empty()) throw DimensionError("evaluate_dataset: empty dataset");
  if (grid.empty()) throw DimensionError("evaluate_dataset: empty threshold grid");

  EvalReport rep;
  rep.thresholds = grid;
  rep.counts.assign(grid.size(), ConfusionCounts{});
  rep.per_image.reserve(dataset.size());

  for (const EvalSample& s : dataset) {
    if (s.pred.width != s.gt.width || s.pred.height != s.gt.height)
      throw DimensionError("evaluate_dataset[" + s.id + "]: pred/gt shapes differ");
    PerImageBest best{s.id, grid.front(), -1.0};
    for (std::size_t t = 0; t < grid.size(); ++t) {
      const BinaryMap bin = binarize(s.pred, grid[t]);
      const ConfusionCounts c = match_with_tolerance(bin, s.gt, cfg.radius, cfg.metric);
      rep.counts[t] += c;
      const double f = precision_recall_f(c, cfg.beta).f;
      if (f > best.best_f) {
        best.best_f = f;
        best.best_thr = grid[t];
      }
    }
    rep.per_image.push_back(best);
  }

  rep.dataset.resize(grid.size());
  double best_f = -1.0;
  for (std::size_t t = 0; t < grid.size(); ++t) {
    rep.dataset[t] = precision_recall_f(rep.counts[t], cfg.beta);
    if (rep.dataset[t].f > best_f) {
      best_f = rep.dataset[t].f;
      rep.ods_threshold = grid[t];
      rep.ods_f1 = rep.dataset[t].f;
    }
  }

  double sum = 0.0;
  for (const PerImageBest& b : rep.per_image) sum += b.best_f;
  rep.ois_f1 = sum / static_cast<double>(rep.per_image.size());
  return rep;
}

struct OdsResult {
  double threshold = 0.0;
  double f1 = 0.0;
};

inline OdsResult ods(const std::vector<EvalSample>& dataset, const std::vector<double>& grid,
                     const MetricConfig& cfg) {
  const EvalReport rep = evaluate_dataset(dataset, grid, cfg);
  return {rep.ods_threshold, rep.ods_f1};
}

inline double ois(const std::vector<EvalSample>& dataset, const std::vector<double>& grid,
                  const MetricConfig& cfg) {
  return evaluate_dataset(dataset, grid, cfg).ois_f1;
}

// CSV layout: one row per threshold with the fixed column order below,
// then a two-line summary block.
inline std::string eval_report_csv(const EvalReport& rep) {
  std::string out = "threshold,tp_pred,fp,tp_gt,fn,precision,recall,f1\n";
  char buf[256];
  for (std::size_t t = 0; t < rep.thresholds.size(); ++t) {
    const ConfusionCounts& c = rep.counts[t];
    const PrecisionRecallF& m = rep.dataset[t];
    std::snprintf(buf, sizeof buf, "%.6g,%lld,%lld,%lld,%lld,%.6f,%.6f,%.6f\n",
                  rep.thresholds[t], static_cast<long long>(c.tp_pred),
                  static_cast<long long>(c.fp), static_cast<long long>(c.tp_gt),
                  static_cast<long long>(c.fn), m.precision, m.recall, m.f);
    out += buf;
  }
  out += "ods_thr,ods_f1,ois_f1\n";
  std::snprintf(buf, sizeof buf, "%.6g,%.6f,%.6f\n", rep.ods_threshold, rep.ods_f1, rep.ois_f1);
  out += buf;
  return out;
}

inline DistanceMetric distance_metric_from_string(const std::string& s) {
  if (s == "chebyshev") return DistanceMetric::kChebyshev;
  if (s == "euclidean") return DistanceMetric::kEuclidean;
  throw std::domain_error("unknown distance metric: " + s);
}

}  // namespace baa
