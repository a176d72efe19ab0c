#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "baa/adjuster.hpp"
#include "baa/grid.hpp"

namespace baa {

// Baseline pixel-wise losses (BCE, class-weighted BCE) and the adjusted
// loss total = sum_i (w_i + delta) * L_i, with per-element gradients.

enum class BaseLoss { kBce, kWbce };
enum class GradMode { kWeightAsConstant, kThroughWeight };

// Paired prediction / ground-truth grids. Entries must lie in [0, 1].
struct PixelBatch {
  Grid pred;
  Grid gt;

  PixelBatch(Grid pred_grid, Grid gt_grid)
      : pred(std::move(pred_grid)), gt(std::move(gt_grid)) {
    if (pred.data.empty()) throw DimensionError("PixelBatch: needs at least one element");
    require_same_shape(pred, gt, "PixelBatch");
    for (double v : pred.data)
      if (!(v >= 0.0 && v <= 1.0)) throw std::domain_error("PixelBatch: pred value outside [0, 1]");
    for (double v : gt.data)
      if (!(v >= 0.0 && v <= 1.0)) throw std::domain_error("PixelBatch: gt value outside [0, 1]");
  }
};

struct LossConfig {
  BaseLoss base = BaseLoss::kWbce;
  std::optional<BaaParams> baa;   // absent = plain baseline loss
  double delta = 1.0;             // additive weight floor
  GradMode grad_mode = GradMode::kWeightAsConstant;
  double clamp_eps = 1e-7;        // probability clamp for the log terms
  bool binarize_gt = true;        // binarize gt at 0.5 before weight computation
  // Class weighting computed elsewhere (e.g. over a multi-grid training
  // batch) and injected; when absent, counts come from the batch itself.
  std::optional<double> wbce_alpha_override;

  void validate() const {
    if (!(delta >= 0.0)) throw std::domain_error("LossConfig: delta must be >= 0");
    if (!(clamp_eps > 0.0 && clamp_eps <= 0.01))
      throw std::domain_error("LossConfig: clamp_eps must be in (0, 0.01]");
    if (baa) baa->validate();
  }
};

struct ValueGrad {
  double value = 0.0;
  double grad = 0.0;
};

// -[gt log p + (1 - gt) log(1 - p)] with p clamped to [eps, 1 - eps].
// The gradient is that of the clamped function: zero where the clamp is
// active, (p - gt) / (p (1 - p)) inside.
inline ValueGrad bce_elem(double pred, double gt, double eps = 1e-7) {
  const double p = std::clamp(pred, eps, 1.0 - eps);
  ValueGrad out;
  out.value = -(gt * std::log(p) + (1.0 - gt) * std::log1p(-p));
  out.grad = (pred < eps || pred > 1.0 - eps) ? 0.0 : (p - gt) / (p * (1.0 - p));
  return out;
}

// Class-balance weight for positive elements: the negative-class fraction.
// Degenerate single-class batches fall back to uniform weight 1.
struct WbceWeights {
  double pos = 1.0;
  double neg = 1.0;
};

inline WbceWeights wbce_weights(std::size_t pos_count, std::size_t neg_count) {
  const std::size_t total = pos_count + neg_count;
  if (pos_count == 0 || neg_count == 0 || total == 0) return {1.0, 1.0};
  const double alpha = static_cast<double>(neg_count) / static_cast<double>(total);
  return {alpha, 1.0 - alpha};
}

struct WbceResult {
  std::vector<double> loss;
  std::vector<double> grad;
  WbceWeights weights;
};

// Per-element weighted BCE; positives (gt >= 0.5) weighted by the
// negative-class fraction and vice versa, counted over this batch.
inline WbceResult wbce_batch(const PixelBatch& batch, double eps = 1e-7) {
  std::size_t pos = 0;
  for (double g : batch.gt.data)
    if (g >= 0.5) ++pos;
  const WbceWeights w = wbce_weights(pos, batch.gt.size() - pos);

  WbceResult out;
  out.weights = w;
  out.loss.resize(batch.gt.size());
  out.grad.resize(batch.gt.size());
  for (std::size_t i = 0; i < batch.gt.size(); ++i) {
    const double wi = batch.gt.data[i] >= 0.5 ? w.pos : w.neg;
    const ValueGrad vg = bce_elem(batch.pred.data[i], batch.gt.data[i], eps);
    out.loss[i] = wi * vg.value;
    out.grad[i] = wi * vg.grad;
  }
  return out;
}

struct LossBreakdown {
  double total = 0.0;
  std::vector<double> base_loss;  // L_i
  std::vector<double> weight;     // adjuster weight w_i; empty when no BAA
  std::vector<double> grad;       // d(total) / d(pred_i)
};

// Adjusted loss sum_i (w_i + delta) L_i. Without BAA the result is the
// plain sum of the base loss. In kWeightAsConstant mode the adjuster acts
// as a per-step importance weight (gradient (w_i + delta) dL_i); in
// kThroughWeight mode the term (dw_i/dpred_i) L_i is added.
inline LossBreakdown adjusted_loss(const PixelBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  const std::size_t n = batch.pred.size();

  LossBreakdown out;
  out.base_loss.resize(n);
  out.grad.resize(n);

  if (cfg.base == BaseLoss::kWbce) {
    WbceWeights w;
    if (cfg.wbce_alpha_override) {
      w = {*cfg.wbce_alpha_override, 1.0 - *cfg.wbce_alpha_override};
    } else {
      std::size_t pos = 0;
      for (double g : batch.gt.data)
        if (g >= 0.5) ++pos;
      w = wbce_weights(pos, n - pos);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = batch.gt.data[i] >= 0.5 ? w.pos : w.neg;
      const ValueGrad vg = bce_elem(batch.pred.data[i], batch.gt.data[i], cfg.clamp_eps);
      out.base_loss[i] = wi * vg.value;
      out.grad[i] = wi * vg.grad;  // base gradient; adjusted below
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const ValueGrad vg = bce_elem(batch.pred.data[i], batch.gt.data[i], cfg.clamp_eps);
      out.base_loss[i] = vg.value;
      out.grad[i] = vg.grad;
    }
  }

  if (!cfg.baa) {
    for (std::size_t i = 0; i < n; ++i) out.total += out.base_loss[i];
    return out;
  }

  out.weight.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double gt_w = batch.gt.data[i];
    if (cfg.binarize_gt) gt_w = gt_w >= 0.5 ? 1.0 : 0.0;
    const double wi = baa_weight(batch.pred.data[i], gt_w, *cfg.baa);
    out.weight[i] = wi;
    double gi = (wi + cfg.delta) * out.grad[i];
    if (cfg.grad_mode == GradMode::kThroughWeight)
      gi += baa_weight_grad(batch.pred.data[i], gt_w, *cfg.baa) * out.base_loss[i];
    out.grad[i] = gi;
    out.total += (wi + cfg.delta) * out.base_loss[i];
  }
  return out;
}

}  // namespace baa
