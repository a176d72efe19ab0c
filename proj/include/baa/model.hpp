#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "baa/errors.hpp"
#include "baa/grid.hpp"
#include "baa/random.hpp"

namespace baa {

// Per-pixel MLP over a k x k patch: tanh hidden layer, sigmoid output.
// The smallest differentiable pixel classifier that makes threshold-local
// behavior observable while keeping manual backprop exactly testable.
//
// Parameter layout (flat, row-major): W1 (hidden x k^2) | b1 (hidden) |
// W2 (hidden) | b2. A flat vector keeps the optimizer and the
// finite-difference tests shape-agnostic.
struct TinyModel {
  int patch = 5;   // odd
  int hidden = 16;
  std::vector<double> params;

  static TinyModel init(int patch, int hidden, std::uint64_t seed) {
    if (patch < 1 || patch % 2 == 0) throw std::domain_error("TinyModel: patch must be odd and >= 1");
    if (hidden < 1) throw std::domain_error("TinyModel: hidden must be >= 1");
    TinyModel m;
    m.patch = patch;
    m.hidden = hidden;
    m.params.assign(m.param_count(), 0.0);
    std::mt19937_64 rng(seed);
    const int k2 = patch * patch;
    const double s1 = 1.0 / std::sqrt(static_cast<double>(k2));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    // W1 and b1 scaled by fan-in k^2, W2 and b2 by fan-in hidden.
    for (int i = 0; i < hidden * k2 + hidden; ++i) m.params[i] = uniform(rng, -s1, s1);
    for (int i = hidden * k2 + hidden; i < m.param_count(); ++i) m.params[i] = uniform(rng, -s2, s2);
    return m;
  }

  int param_count() const { return hidden * patch * patch + 2 * hidden + 1; }

  // Offsets into the flat parameter vector.
  int w1_at(int j, int m) const { return j * patch * patch + m; }
  int b1_at(int j) const { return hidden * patch * patch + j; }
  int w2_at(int j) const { return hidden * patch * patch + hidden + j; }
  int b2_at() const { return hidden * patch * patch + 2 * hidden; }
};

inline double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// Mirror reflection at the borders (… c b a | a b c … ). Keeps outputs
// defined for any patch size and reproducible bit for bit.
inline int reflect_index(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

// Sigmoid output clamped into the open interval so downstream log terms
// and the (0, 1) output invariant survive saturated pre-activations.
inline constexpr double kOutputClamp = 1e-12;

namespace detail {

// Per-pixel forward pass; fills the hidden activations and returns the
// clamped output.
inline double forward_pixel(const TinyModel& m, const Grid& img, int x, int y,
                            std::vector<double>& patch_buf, std::vector<double>& act_buf) {
  const int k = m.patch;
  const int half = k / 2;
  int idx = 0;
  for (int dy = -half; dy <= half; ++dy) {
    const int sy = reflect_index(y + dy, img.height);
    for (int dx = -half; dx <= half; ++dx) {
      const int sx = reflect_index(x + dx, img.width);
      patch_buf[idx++] = img.at(sx, sy);
    }
  }
  const int k2 = k * k;
  double u = m.params[m.b2_at()];
  for (int j = 0; j < m.hidden; ++j) {
    double z = m.params[m.b1_at(j)];
    const double* w1 = &m.params[m.w1_at(j, 0)];
    for (int mm = 0; mm < k2; ++mm) z += w1[mm] * patch_buf[mm];
    const double a = std::tanh(z);
    act_buf[j] = a;
    u += m.params[m.w2_at(j)] * a;
  }
  if (!std::isfinite(u))
    throw TrainingError("forward: non-finite pre-activation (diverged parameters)");
  return std::clamp(sigmoid(u), kOutputClamp, 1.0 - kOutputClamp);
}

}  // namespace detail

// Dense per-pixel prediction over the whole image; output dims equal
// input dims, values strictly inside (0, 1).
inline Grid forward(const TinyModel& m, const Grid& image) {
  if (image.data.empty()) throw DimensionError("forward: empty image");
  Grid out(image.width, image.height);
  std::vector<double> patch_buf(static_cast<std::size_t>(m.patch) * m.patch);
  std::vector<double> act_buf(m.hidden);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      out.at(x, y) = detail::forward_pixel(m, image, x, y, patch_buf, act_buf);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint: versioned text format, round-trip exact via %.17g.

inline constexpr const char* kCheckpointMagic = "baa-tinymodel v1";

inline void save_checkpoint(const std::filesystem::path& path, const TinyModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << kCheckpointMagic << '\n';
  out << "patch " << m.patch << '\n';
  out << "hidden " << m.hidden << '\n';
  out << "params " << m.params.size() << '\n';
  char buf[64];
  for (double p : m.params) {
    std::snprintf(buf, sizeof buf, "%.17g\n", p);
    out << buf;
  }
  if (!out) throw IoError("short write to " + path.string());
}

inline TinyModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic)
    throw ParseError("not a tinymodel checkpoint: " + path.string(), 0);

  TinyModel m;
  std::string key;
  std::size_t count = 0;
  if (!(in >> key >> m.patch) || key != "patch")
    throw ParseError("checkpoint: expected 'patch'", 0);
  if (!(in >> key >> m.hidden) || key != "hidden")
    throw ParseError("checkpoint: expected 'hidden'", 0);
  if (!(in >> key >> count) || key != "params")
    throw ParseError("checkpoint: expected 'params'", 0);
  if (m.patch < 1 || m.patch % 2 == 0 || m.hidden < 1)
    throw ParseError("checkpoint: invalid dims", 0);
  if (count != static_cast<std::size_t>(m.param_count()))
    throw ParseError("checkpoint: parameter count mismatch", 0);
  m.params.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    if (!(in >> m.params[i])) throw ParseError("checkpoint: truncated parameters", 0);
  return m;
}

}  // namespace baa
