#pragma once

#include <cmath>
#include <stdexcept>

#include "baa/dwf.hpp"

namespace baa {

// Binarization-aware adjuster: per-element weight in [0, 1] built from a
// distance weight function applied to the masked distance. Wrong
// predictions get weight 1, confidently correct ones get 0, and correct
// predictions inside the window decay continuously between the two.

struct BaaParams {
  double thr = 0.7;  // binarization threshold, in [0, 1]
  DwfParams dwf;
  DwfKind kind = DwfKind::kExp;

  void validate() const {
    if (!(thr >= 0.0 && thr <= 1.0)) throw std::domain_error("BaaParams: thr must be in [0, 1]");
    dwf.validate();
  }
};

namespace detail {
inline void require_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::domain_error(std::string(name) + " must be in [0, 1]");
}
}  // namespace detail

// Signed distance of the prediction from the threshold, masked by the
// ground truth: positive when the prediction sits on the ground truth's
// side of thr, negative when it sits on the wrong side. Algebraically
// (pred - thr) * gt + (thr - pred) * (1 - gt) = (2 gt - 1)(pred - thr).
inline double masked_distance(double pred, double gt, double thr) {
  detail::require_unit(pred, "masked_distance: pred");
  detail::require_unit(gt, "masked_distance: gt");
  detail::require_unit(thr, "masked_distance: thr");
  return (pred - thr) * gt + (thr - pred) * (1.0 - gt);
}

inline double baa_weight(double pred, double gt, const BaaParams& p) {
  p.validate();
  return dwf_extended(masked_distance(pred, gt, p.thr), p.dwf, p.kind);
}

// d(baa_weight)/d(pred) via the chain rule; d(MD)/d(pred) = 2 gt - 1.
inline double baa_weight_grad(double pred, double gt, const BaaParams& p) {
  p.validate();
  const double md = masked_distance(pred, gt, p.thr);
  return dwf_extended_derivative(md, p.dwf, p.kind) * (2.0 * gt - 1.0);
}

// Hard binary mask: 0 when prediction and ground truth fall on the same
// side of thr (the product being exactly 0 counts as correct), else 1.
// Discontinuous; reference only.
inline double hard_adjuster(double pred, double gt, double thr) {
  detail::require_unit(pred, "hard_adjuster: pred");
  detail::require_unit(gt, "hard_adjuster: gt");
  detail::require_unit(thr, "hard_adjuster: thr");
  return (pred - thr) * (gt - thr) >= 0.0 ? 0.0 : 1.0;
}

// Discrete decision-based adjuster: the b -> +inf limit of baa_weight.
// 0 iff correct and at least thr_dev away from the threshold.
inline double limit_adjuster(double pred, double gt, double thr, double thr_dev) {
  detail::require_unit(pred, "limit_adjuster: pred");
  detail::require_unit(gt, "limit_adjuster: gt");
  detail::require_unit(thr, "limit_adjuster: thr");
  if (!(thr_dev > 0.0)) throw std::domain_error("limit_adjuster: thr_dev must be > 0");
  const bool correct = (pred - thr) * (gt - thr) >= 0.0;
  return (correct && std::abs(pred - thr) >= thr_dev) ? 0.0 : 1.0;
}

}  // namespace baa
