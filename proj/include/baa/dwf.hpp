#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace baa {

// Distance weight functions: continuous decay profiles mapping a distance
// from the binarization threshold to an optimization weight in [0, 1].
//
// A valid profile f on [0, thr_dev] is continuous, monotonically
// decreasing, concave, and satisfies f(0) = 1 and f(thr_dev) = 0.

enum class DwfKind { kExp, kLinear };

struct DwfParams {
  double b = 16.0;        // decay rate, >= 0 (0 only meaningful for kLinear)
  double thr_dev = 0.2;   // threshold window, > 0

  void validate() const {
    if (!(thr_dev > 0.0)) throw std::domain_error("DwfParams: thr_dev must be > 0");
    if (!(b >= 0.0)) throw std::domain_error("DwfParams: b must be >= 0");
  }
};

// Above this value of b * thr_dev the exponential profile is
// indistinguishable from its hard-threshold limit in double precision
// (the true value differs from the limit by < e^-700), and evaluating the
// formula directly would overflow. Saturate instead.
inline constexpr double kDwfSaturationCap = 700.0;

// Discrete limit profile: 1 below the window edge, 0 at and beyond it.
inline double dwf_hard(double x, double thr_dev) {
  return x < thr_dev ? 1.0 : 0.0;
}

// Exponential profile (e^{bx} - e^{b*thr_dev}) / (1 - e^{b*thr_dev}) on
// [0, thr_dev]. Evaluated via expm1 so that small b keeps full precision:
// numerator and denominator are differences of expm1 values.
inline double dwf_exp(double x, const DwfParams& p) {
  p.validate();
  if (!(p.b > 0.0)) throw std::domain_error("dwf_exp: b must be > 0 (use dwf_linear for b = 0)");
  if (x < 0.0 || x > p.thr_dev)
    throw std::domain_error("dwf_exp: x outside [0, thr_dev] (use dwf_extended for the full line)");
  if (p.b * p.thr_dev > kDwfSaturationCap) return dwf_hard(x, p.thr_dev);
  const double em_full = std::expm1(p.b * p.thr_dev);
  return (std::expm1(p.b * x) - em_full) / (-em_full);
}

// Linear profile 1 - x / thr_dev; the analytic b -> 0 limit of dwf_exp and
// the lower bound of every valid profile on the window.
inline double dwf_linear(double x, double thr_dev) {
  if (!(thr_dev > 0.0)) throw std::domain_error("dwf_linear: thr_dev must be > 0");
  if (x < 0.0 || x > thr_dev) throw std::domain_error("dwf_linear: x outside [0, thr_dev]");
  return 1.0 - x / thr_dev;
}

// Extension of the selected profile to the whole real line: 1 left of the
// window, the profile inside it, 0 right of it. Total and continuous.
inline double dwf_extended(double x, const DwfParams& p, DwfKind kind) {
  p.validate();
  if (x < 0.0) return 1.0;
  if (x > p.thr_dev) return 0.0;
  return kind == DwfKind::kExp ? dwf_exp(x, p) : dwf_linear(x, p.thr_dev);
}

// d/dx of dwf_extended. Zero on both flat branches; at the non-smooth
// points x = 0 and x = thr_dev returns the interior one-sided derivative,
// keeping gradient signal alive exactly on the window edges.
inline double dwf_extended_derivative(double x, const DwfParams& p, DwfKind kind) {
  p.validate();
  if (x < 0.0 || x > p.thr_dev) return 0.0;
  if (kind == DwfKind::kLinear) return -1.0 / p.thr_dev;
  if (!(p.b > 0.0)) throw std::domain_error("dwf_extended_derivative: b must be > 0 for kExp");
  if (p.b * p.thr_dev > kDwfSaturationCap) return 0.0;  // hard limit is flat a.e.
  return -p.b * std::exp(p.b * x) / std::expm1(p.b * p.thr_dev);
}

inline std::string to_string(DwfKind kind) {
  return kind == DwfKind::kExp ? "exp" : "linear";
}

inline DwfKind dwf_kind_from_string(const std::string& s) {
  if (s == "exp") return DwfKind::kExp;
  if (s == "linear") return DwfKind::kLinear;
  throw std::domain_error("unknown DWF kind: " + s);
}

}  // namespace baa
