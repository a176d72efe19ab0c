#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "baa/data_io.hpp"
#include "baa/metrics.hpp"
#include "baa/train.hpp"

namespace baa {

// Self-adaptive threshold protocol: pretrain with the baseline loss,
// pick the binarization threshold on a validation split, retrain from
// scratch with the adjusted loss at that threshold.

struct SplitSpec {
  std::vector<std::string> pretrain;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

struct SplitFractions {
  double pretrain = 0.75;
  double validation = 0.25;  // remainder of the dataset becomes the test part
};

// Deterministic shuffled partition; rounded counts, validation clamped so
// the parts never exceed the dataset.
inline SplitSpec split_ids(std::vector<std::string> ids, const SplitFractions& f,
                           std::uint64_t seed) {
  if (!(f.pretrain > 0.0) || !(f.validation > 0.0) || f.pretrain + f.validation > 1.0 + 1e-12)
    throw std::domain_error("split_ids: fractions must be positive with sum <= 1");
  const std::size_t n = ids.size();
  std::size_t n_pre = static_cast<std::size_t>(std::floor(f.pretrain * n + 0.5));
  std::size_t n_val = static_cast<std::size_t>(std::floor(f.validation * n + 0.5));
  if (n_pre > n) n_pre = n;
  if (n_pre + n_val > n) n_val = n - n_pre;
  if (n_pre == 0 || n_val == 0)
    throw DimensionError("split_ids: dataset too small for non-empty pretrain and validation parts");

  std::mt19937_64 rng(seed);
  shuffle(ids, rng);
  SplitSpec s;
  s.pretrain.assign(ids.begin(), ids.begin() + n_pre);
  s.validation.assign(ids.begin() + n_pre, ids.begin() + n_pre + n_val);
  s.test.assign(ids.begin() + n_pre + n_val, ids.end());
  return s;
}

inline SplitSpec split_dataset(const std::vector<Sample>& data, const SplitFractions& f,
                               std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(data.size());
  for (const Sample& s : data) ids.push_back(s.id);
  return split_ids(std::move(ids), f, seed);
}

inline std::vector<Sample> select_samples(const std::vector<Sample>& data,
                                          const std::vector<std::string>& ids) {
  std::map<std::string, const Sample*> by_id;
  for (const Sample& s : data) by_id[s.id] = &s;
  std::vector<Sample> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DimensionError("select_samples: unknown id " + id);
    out.push_back(*it->second);
  }
  return out;
}

struct ModelSpec {
  int patch = 5;
  int hidden = 16;
};

inline std::vector<EvalSample> predict_eval_samples(const TinyModel& m,
                                                    const std::vector<Sample>& data, int patch,
                                                    int stride) {
  std::vector<EvalSample> out;
  out.reserve(data.size());
  for (const Sample& s : data)
    out.push_back({s.id, predict_tiled(m, s.image, patch, stride), binarize(s.gt, 0.5)});
  return out;
}

struct CalibrationResult {
  double thr = 0.0;
  TinyModel model;          // the pretrained model
  TrainLog log;
  EvalReport validation_report;
};

// Step 2: train on the pretrain split with the baseline loss, return the
// ODS-optimal threshold on the validation split (ties to the smaller one).
inline CalibrationResult calibrate_threshold(const std::vector<Sample>& pretrain,
                                             const std::vector<Sample>& validation,
                                             const ModelSpec& spec, const TrainConfig& train_cfg,
                                             const std::vector<double>& grid,
                                             const MetricConfig& metrics,
                                             std::uint64_t init_seed) {
  if (train_cfg.loss.baa)
    throw std::invalid_argument("calibrate_threshold: pretraining must use the baseline loss");
  if (validation.empty()) throw DimensionError("calibrate_threshold: empty validation set");

  CalibrationResult out;
  out.model = TinyModel::init(spec.patch, spec.hidden, init_seed);
  try {
    out.log = train(out.model, pretrain, train_cfg);
  } catch (const TrainingError& e) {
    throw CalibrationError(std::string("pretraining diverged: ") + e.what());
  }
  const std::vector<EvalSample> evals =
      predict_eval_samples(out.model, validation, train_cfg.infer_patch, train_cfg.infer_stride);
  out.validation_report = evaluate_dataset(evals, grid, metrics);
  out.thr = out.validation_report.ods_threshold;
  return out;
}

struct ProtocolConfig {
  SplitFractions fractions;
  ModelSpec model;
  TrainConfig pretrain_cfg;  // loss.baa must be absent
  TrainConfig final_cfg;     // loss.baa must be present; its thr is overwritten
  std::vector<double> grid = default_threshold_grid();
  MetricConfig metrics;
  std::optional<double> thr_override;  // skip calibration, use this thr
  bool warm_start = false;             // Step 3 continues from the pretrained weights
  std::uint64_t seed = 0;              // all split/init/loop seeds derive from this
};

struct ProtocolResult {
  SplitSpec split;
  std::optional<TinyModel> pretrained;  // absent when calibration was skipped
  std::optional<TrainLog> pretrain_log;
  std::optional<EvalReport> calibration_report;
  TinyModel model;  // the final (Step 3) model
  TrainLog log;
  double thr = 0.0;
  bool thr_calibrated = false;
  EvalReport report;  // evaluation on the test split
};

namespace detail {

inline void require_disjoint_usage(const TrainLog& log, const std::set<std::string>& allowed,
                                   const char* stage) {
  for (const std::string& id : log.used_ids)
    if (!allowed.count(id))
      throw std::logic_error(std::string(stage) + " touched out-of-split sample " + id);
}

}  // namespace detail

// Steps 1-3 end to end. Step 3 re-initializes and trains from scratch on
// pretrain + validation (warm_start continues from the pretrained weights
// instead) and the returned report is computed on the held-out test part.
inline ProtocolResult run_protocol(const std::vector<Sample>& data, const ProtocolConfig& cfg) {
  if (cfg.final_cfg.loss.baa == std::nullopt)
    throw std::invalid_argument("run_protocol: final training must configure BAA");

  ProtocolResult out;
  out.split = split_dataset(data, cfg.fractions, derive_seed(cfg.seed, 0));
  if (out.split.test.empty())
    throw DimensionError("run_protocol: fractions leave no test samples");

  const std::vector<Sample> pre = select_samples(data, out.split.pretrain);
  const std::vector<Sample> val = select_samples(data, out.split.validation);
  const std::vector<Sample> test = select_samples(data, out.split.test);

  if (cfg.thr_override) {
    out.thr = *cfg.thr_override;
    out.thr_calibrated = false;
  } else {
    TrainConfig pre_cfg = cfg.pretrain_cfg;
    pre_cfg.seed = derive_seed(cfg.seed, 1);
    CalibrationResult cal = calibrate_threshold(pre, val, cfg.model, pre_cfg, cfg.grid,
                                                cfg.metrics, derive_seed(cfg.seed, 2));
    out.thr = cal.thr;
    out.thr_calibrated = true;
    out.pretrained = std::move(cal.model);
    out.pretrain_log = std::move(cal.log);
    out.calibration_report = std::move(cal.validation_report);
  }

  std::vector<Sample> train_set = pre;
  train_set.insert(train_set.end(), val.begin(), val.end());

  if (cfg.warm_start && out.pretrained) {
    out.model = *out.pretrained;
  } else {
    out.model = TinyModel::init(cfg.model.patch, cfg.model.hidden, derive_seed(cfg.seed, 3));
  }
  TrainConfig final_cfg = cfg.final_cfg;
  final_cfg.seed = derive_seed(cfg.seed, 4);
  final_cfg.loss.baa->thr = out.thr;
  out.log = train(out.model, train_set, final_cfg);

  // Id-level trace: training must never see the test part.
  std::set<std::string> pre_ids(out.split.pretrain.begin(), out.split.pretrain.end());
  std::set<std::string> train_ids = pre_ids;
  train_ids.insert(out.split.validation.begin(), out.split.validation.end());
  if (out.pretrain_log) detail::require_disjoint_usage(*out.pretrain_log, pre_ids, "pretraining");
  detail::require_disjoint_usage(out.log, train_ids, "final training");

  out.report = evaluate_dataset(predict_eval_samples(out.model, test, final_cfg.infer_patch,
                                                     final_cfg.infer_stride),
                                cfg.grid, cfg.metrics);
  return out;
}

// ---------------------------------------------------------------------------
// Run directory: split manifest, calibrated-thr record, checkpoints,
// train logs and the evaluation report.

struct RunArtifacts {
  SplitSpec split;
  std::optional<TinyModel> pretrained;
  std::optional<TrainLog> pretrain_log;
  std::optional<EvalReport> calibration_report;
  TinyModel model;
  TrainLog log;
  double thr = std::numeric_limits<double>::quiet_NaN();
  std::string thr_source = "none";  // none | fixed | calibrated
  EvalReport report;
};

inline void write_run_dir(const std::filesystem::path& dir, const RunArtifacts& a) {
  std::filesystem::create_directories(dir);

  {
    std::ofstream out(dir / "split.csv", std::ios::binary);
    if (!out) throw IoError("cannot write split.csv");
    out << "id,part\n";
    for (const std::string& id : a.split.pretrain) out << id << ",pretrain\n";
    for (const std::string& id : a.split.validation) out << id << ",validation\n";
    for (const std::string& id : a.split.test) out << id << ",test\n";
  }
  {
    std::ofstream out(dir / "threshold.csv", std::ios::binary);
    if (!out) throw IoError("cannot write threshold.csv");
    out << "thr,source\n";
    char buf[64];
    if (std::isnan(a.thr))
      std::snprintf(buf, sizeof buf, ",%s\n", a.thr_source.c_str());
    else
      std::snprintf(buf, sizeof buf, "%.6g,%s\n", a.thr, a.thr_source.c_str());
    out << buf;
  }
  save_checkpoint(dir / "model.ckpt", a.model);
  if (a.pretrained) save_checkpoint(dir / "pretrained.ckpt", *a.pretrained);
  {
    std::ofstream out(dir / "trainlog.csv", std::ios::binary);
    out << trainlog_csv(a.log);
  }
  if (a.pretrain_log) {
    std::ofstream out(dir / "pretrain_trainlog.csv", std::ios::binary);
    out << trainlog_csv(*a.pretrain_log);
  }
  if (a.calibration_report) {
    std::ofstream out(dir / "calibration_eval.csv", std::ios::binary);
    out << eval_report_csv(*a.calibration_report);
  }
  {
    std::ofstream out(dir / "eval.csv", std::ios::binary);
    out << eval_report_csv(a.report);
  }
}

}  // namespace baa
