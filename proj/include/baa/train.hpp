#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "baa/adam.hpp"
#include "baa/data_io.hpp"
#include "baa/loss.hpp"
#include "baa/metrics.hpp"
#include "baa/model.hpp"

namespace baa {

// Training loop, tiled inference, and the gradient-mass diagnostic.

struct TrainConfig {
  int epochs = 30;
  int batch_size = 8;
  int crop = 32;          // random square crop size; full image if smaller
  int crop_refresh = 5;   // re-draw crop origins every N epochs
  AdamConfig adam;
  LossConfig loss;
  bool wbce_per_image = false;  // class weights per crop instead of per batch
  std::uint64_t seed = 0;
  int val_every = 0;      // epochs between validation evals; 0 = never
  std::vector<double> val_grid;        // defaults to the standard grid
  MetricConfig val_metrics;
  int infer_patch = 32;   // tiling used for validation inference
  int infer_stride = 28;
  int gradmass_bins = 0;  // > 0 records gradient-mass snapshots
  int gradmass_every = 5;
};

struct EpochRecord {
  double loss = 0.0;
  std::optional<double> ods;
  std::optional<double> ois;
};

// Gradient-mass diagnostic: how much |d loss / d pred| falls at each
// distance from the binarization threshold, split by correctness.
struct GradMassHistogram {
  std::vector<double> bin_lo;
  std::vector<double> bin_hi;
  std::vector<double> correct_mass;
  std::vector<double> wrong_mass;
};

struct GradMassSnapshot {
  int epoch = 0;
  GradMassHistogram hist;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::vector<std::string> used_ids;  // every sample id the loop touched
  std::vector<GradMassSnapshot> gradmass;
};

// One optimizer step's worth of image/gt crops.
struct TrainBatch {
  std::vector<Grid> images;
  std::vector<Grid> gts;
};

// Total loss over the batch without gradients. Class weights for WBCE are
// counted across the whole batch unless per_image is set.
inline double batch_loss(const TinyModel& m, const TrainBatch& batch, const LossConfig& cfg,
                         bool wbce_per_image = false) {
  LossConfig crop_cfg = cfg;
  if (cfg.base == BaseLoss::kWbce && !wbce_per_image && !cfg.wbce_alpha_override) {
    std::size_t pos = 0, total = 0;
    for (const Grid& gt : batch.gts) {
      for (double g : gt.data)
        if (g >= 0.5) ++pos;
      total += gt.size();
    }
    crop_cfg.wbce_alpha_override = wbce_weights(pos, total - pos).pos;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < batch.images.size(); ++i) {
    const Grid pred = forward(m, batch.images[i]);
    total += adjusted_loss(PixelBatch(pred, batch.gts[i]), crop_cfg).total;
  }
  return total;
}

// Backpropagates the configured loss through the model. Returns the batch
// total and accumulates d(total)/d(theta) into grad_out (which is zeroed).
inline double backward(const TinyModel& m, const TrainBatch& batch, const LossConfig& cfg,
                       std::vector<double>& grad_out, bool wbce_per_image = false) {
  if (batch.images.size() != batch.gts.size() || batch.images.empty())
    throw DimensionError("backward: batch images/gts mismatch");
  grad_out.assign(m.params.size(), 0.0);

  LossConfig crop_cfg = cfg;
  if (cfg.base == BaseLoss::kWbce && !wbce_per_image && !cfg.wbce_alpha_override) {
    std::size_t pos = 0, total = 0;
    for (const Grid& gt : batch.gts) {
      for (double g : gt.data)
        if (g >= 0.5) ++pos;
      total += gt.size();
    }
    crop_cfg.wbce_alpha_override = wbce_weights(pos, total - pos).pos;
  }

  const int k = m.patch;
  const int k2 = k * k;
  std::vector<double> patch_buf(k2);
  std::vector<double> act_buf(m.hidden);
  double total = 0.0;

  for (std::size_t s = 0; s < batch.images.size(); ++s) {
    const Grid& img = batch.images[s];
    const Grid pred = forward(m, img);
    const LossBreakdown lb = adjusted_loss(PixelBatch(pred, batch.gts[s]), crop_cfg);
    total += lb.total;

    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const double g = lb.grad[static_cast<std::size_t>(y) * img.width + x];
        if (g == 0.0) continue;
        const double yv = detail::forward_pixel(m, img, x, y, patch_buf, act_buf);
        const double du = g * yv * (1.0 - yv);
        grad_out[m.b2_at()] += du;
        for (int j = 0; j < m.hidden; ++j) {
          const double a = act_buf[j];
          grad_out[m.w2_at(j)] += du * a;
          const double dz = du * m.params[m.w2_at(j)] * (1.0 - a * a);
          grad_out[m.b1_at(j)] += dz;
          double* g1 = &grad_out[m.w1_at(j, 0)];
          for (int mm = 0; mm < k2; ++mm) g1[mm] += dz * patch_buf[mm];
        }
      }
    }
  }
  return total;
}

namespace detail {

inline Grid crop_grid(const Grid& g, int x0, int y0, int w, int h) {
  Grid out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = g.at(x0 + x, y0 + y);
  return out;
}

}  // namespace detail

inline std::vector<double> trainlog_losses(const TrainLog& log) {
  std::vector<double> out;
  out.reserve(log.epochs.size());
  for (const EpochRecord& e : log.epochs) out.push_back(e.loss);
  return out;
}

// Tiled full-image inference: patch x patch windows at the given stride,
// final window clamped to the image edge, overlaps resolved by averaging.
// Equals plain forward() whenever the image fits in a single patch.
inline Grid predict_tiled(const TinyModel& m, const Grid& image, int patch = 32, int stride = 28) {
  if (stride <= 0 || stride > patch)
    throw DimensionError("predict_tiled: need 0 < stride <= patch");
  if (image.width <= patch && image.height <= patch) return forward(m, image);

  const auto origins = [&](int dim) {
    std::vector<int> xs;
    if (dim <= patch) {
      xs.push_back(0);
      return xs;
    }
    for (int x = 0;; x += stride) {
      if (x + patch >= dim) {
        xs.push_back(dim - patch);
        break;
      }
      xs.push_back(x);
    }
    return xs;
  };

  Grid sum(image.width, image.height, 0.0);
  Grid count(image.width, image.height, 0.0);
  const int tw = std::min(patch, image.width);
  const int th = std::min(patch, image.height);
  for (int y0 : origins(image.height)) {
    for (int x0 : origins(image.width)) {
      const Grid tile = detail::crop_grid(image, x0, y0, tw, th);
      const Grid pred = forward(m, tile);
      for (int y = 0; y < th; ++y) {
        for (int x = 0; x < tw; ++x) {
          sum.at(x0 + x, y0 + y) += pred.at(x, y);
          count.at(x0 + x, y0 + y) += 1.0;
        }
      }
    }
  }
  Grid out(image.width, image.height);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = sum.data[i] / count.data[i];
  return out;
}

inline GradMassHistogram gradient_mass_histogram(const TinyModel& m,
                                                 const std::vector<Sample>& samples,
                                                 const LossConfig& cfg, int nbins, double thr) {
  if (nbins < 1) throw DimensionError("gradient_mass_histogram: nbins must be >= 1");
  if (samples.empty()) throw DimensionError("gradient_mass_histogram: empty batch");

  GradMassHistogram h;
  h.bin_lo.resize(nbins);
  h.bin_hi.resize(nbins);
  h.correct_mass.assign(nbins, 0.0);
  h.wrong_mass.assign(nbins, 0.0);
  for (int i = 0; i < nbins; ++i) {
    h.bin_lo[i] = static_cast<double>(i) / nbins;
    h.bin_hi[i] = static_cast<double>(i + 1) / nbins;
  }

  for (const Sample& s : samples) {
    const Grid pred = forward(m, s.image);
    const LossBreakdown lb = adjusted_loss(PixelBatch(pred, s.gt), cfg);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double dist = std::abs(pred.data[i] - thr);
      const int bin = std::min(nbins - 1, static_cast<int>(dist * nbins));
      double gt = s.gt.data[i];
      if (cfg.binarize_gt) gt = gt >= 0.5 ? 1.0 : 0.0;
      const bool correct = (pred.data[i] - thr) * (gt - thr) >= 0.0;
      (correct ? h.correct_mass : h.wrong_mass)[bin] += std::abs(lb.grad[i]);
    }
  }
  return h;
}

// Deterministic mini-batch training. Fixed seed fixes the shuffle order,
// crop positions and therefore the full parameter trajectory.
inline TrainLog train(TinyModel& model, const std::vector<Sample>& data, const TrainConfig& cfg,
                      const std::vector<Sample>* validation = nullptr) {
  if (data.empty()) throw DimensionError("train: empty dataset");
  if (cfg.batch_size < 1) throw DimensionError("train: batch_size must be >= 1");
  cfg.loss.validate();

  TrainLog log;
  for (const Sample& s : data) log.used_ids.push_back(s.id);

  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 0));
  std::mt19937_64 crop_rng(derive_seed(cfg.seed, 1));

  struct CropRect {
    int x0 = 0, y0 = 0, w = 0, h = 0;
  };
  std::vector<CropRect> crops(data.size());
  const auto refresh_crops = [&] {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Grid& img = data[i].image;
      CropRect c;
      c.w = std::min(cfg.crop, img.width);
      c.h = std::min(cfg.crop, img.height);
      c.x0 = img.width > c.w ? static_cast<int>(bounded(crop_rng, img.width - c.w + 1)) : 0;
      c.y0 = img.height > c.h ? static_cast<int>(bounded(crop_rng, img.height - c.h + 1)) : 0;
      crops[i] = c;
    }
  };

  AdamState adam(model.params.size());
  std::vector<double> grads(model.params.size());
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const int refresh = std::max(1, cfg.crop_refresh);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (epoch % refresh == 0) refresh_crops();
    shuffle(order, shuffle_rng);

    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      TrainBatch batch;
      for (std::size_t i = begin; i < end; ++i) {
        const CropRect& c = crops[order[i]];
        batch.images.push_back(detail::crop_grid(data[order[i]].image, c.x0, c.y0, c.w, c.h));
        batch.gts.push_back(detail::crop_grid(data[order[i]].gt, c.x0, c.y0, c.w, c.h));
      }
      const double total = backward(model, batch, cfg.loss, grads, cfg.wbce_per_image);
      if (!std::isfinite(total))
        throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch));
      adam_step(adam, model.params, grads, cfg.adam);
      epoch_loss += total;
    }

    EpochRecord rec;
    rec.loss = epoch_loss;
    if (validation && cfg.val_every > 0 && (epoch + 1) % cfg.val_every == 0) {
      std::vector<EvalSample> evals;
      evals.reserve(validation->size());
      for (const Sample& s : *validation)
        evals.push_back({s.id, predict_tiled(model, s.image, cfg.infer_patch, cfg.infer_stride),
                         binarize(s.gt, 0.5)});
      const std::vector<double>& grid = cfg.val_grid.empty() ? default_threshold_grid() : cfg.val_grid;
      const EvalReport rep = evaluate_dataset(evals, grid, cfg.val_metrics);
      rec.ods = rep.ods_f1;
      rec.ois = rep.ois_f1;
    }
    // Periodic gradient-mass snapshots over the full training images.
    if (cfg.gradmass_bins > 0 &&
        (epoch % std::max(1, cfg.gradmass_every) == 0 || epoch == cfg.epochs - 1)) {
      const double thr = cfg.loss.baa ? cfg.loss.baa->thr : 0.7;
      log.gradmass.push_back(
          {epoch, gradient_mass_histogram(model, data, cfg.loss, cfg.gradmass_bins, thr)});
    }

    log.epochs.push_back(rec);
  }
  return log;
}

inline std::string gradmass_csv(const GradMassHistogram& h) {
  std::string out = "bin_lo,bin_hi,correct_mass,wrong_mass\n";
  char buf[160];
  for (std::size_t i = 0; i < h.bin_lo.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.9g,%.9g\n", h.bin_lo[i], h.bin_hi[i],
                  h.correct_mass[i], h.wrong_mass[i]);
    out += buf;
  }
  return out;
}

inline std::string trainlog_csv(const TrainLog& log) {
  std::string out = "epoch,loss,ods,ois\n";
  char buf[160];
  for (std::size_t i = 0; i < log.epochs.size(); ++i) {
    const EpochRecord& e = log.epochs[i];
    std::string ods_s, ois_s;
    if (e.ods) {
      std::snprintf(buf, sizeof buf, "%.6f", *e.ods);
      ods_s = buf;
    }
    if (e.ois) {
      std::snprintf(buf, sizeof buf, "%.6f", *e.ois);
      ois_s = buf;
    }
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%s,%s\n", i, e.loss, ods_s.c_str(), ois_s.c_str());
    out += buf;
  }
  return out;
}

}  // namespace baa
