#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "baa/errors.hpp"
#include "baa/grid.hpp"
#include "baa/random.hpp"

namespace baa {

// Synthetic dataset generation and on-disk formats: PGM (P2/P5) images,
// binary {0, 255} ground-truth maps, and CSV manifests tying them together.

struct Sample {
  std::string id;
  Grid image;  // grayscale, values in [0, 1]
  Grid gt;     // strictly binary {0, 1}, same dims
};

// ---------------------------------------------------------------------------
// PGM

namespace detail {

class PgmReader {
 public:
  explicit PgmReader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::size_t offset() const { return pos_; }
  bool eof() const { return pos_ >= bytes_.size(); }

  // Skips whitespace and '#' comment lines.
  void skip_space() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string token() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      ++pos_;
    if (pos_ == start) throw ParseError("unexpected end of PGM header", pos_);
    return bytes_.substr(start, pos_ - start);
  }

  long integer(const char* what) {
    const std::size_t at = pos_;
    const std::string t = token();
    for (char c : t)
      if (!std::isdigit(static_cast<unsigned char>(c)))
        throw ParseError(std::string("expected integer for ") + what + ", got '" + t + "'", at);
    return std::stol(t);
  }

  // One whitespace byte separates the maxval from a P5 payload.
  void expect_single_space() {
    if (eof() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      throw ParseError("expected whitespace before PGM payload", pos_);
    ++pos_;
  }

  const std::string& bytes() const { return bytes_; }
  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// Loads a P2 (ASCII) or P5 (binary) PGM and maps intensities linearly to
// [0, 1]. Supports maxval up to 65535 (two big-endian bytes per pixel).
inline Grid load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  detail::PgmReader r(std::move(bytes));
  const std::string magic = r.token();
  if (magic != "P2" && magic != "P5")
    throw ParseError("unsupported PGM magic '" + magic + "'", 0);

  const long width = r.integer("width");
  const long height = r.integer("height");
  const long maxval = r.integer("maxval");
  if (width < 1 || height < 1) throw ParseError("PGM dimensions must be >= 1", r.offset());
  if (maxval < 1 || maxval > 65535) throw ParseError("PGM maxval must be in [1, 65535]", r.offset());

  Grid g(static_cast<int>(width), static_cast<int>(height));
  const std::size_t n = g.size();
  const double scale = 1.0 / static_cast<double>(maxval);

  if (magic == "P2") {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t at = r.offset();
      const long v = r.integer("pixel");
      if (v < 0 || v > maxval) throw ParseError("PGM pixel out of range", at);
      g.data[i] = static_cast<double>(v) * scale;
    }
  } else {
    r.expect_single_space();
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    if (r.pos() + n * bpp > r.bytes().size())
      throw ParseError("truncated PGM payload", r.bytes().size());
    const unsigned char* p = reinterpret_cast<const unsigned char*>(r.bytes().data()) + r.pos();
    for (std::size_t i = 0; i < n; ++i) {
      const long v = bpp == 1 ? p[i] : (static_cast<long>(p[2 * i]) << 8) | p[2 * i + 1];
      if (v > maxval) throw ParseError("PGM pixel out of range", r.pos() + i * bpp);
      g.data[i] = static_cast<double>(v) * scale;
    }
  }
  return g;
}

// Writes a PGM, quantizing with round-to-nearest (error <= 1/(2*maxval)).
// P5 by default; maxval 65535 stores two big-endian bytes per pixel.
inline void save_pgm(const std::filesystem::path& path, const Grid& g, int maxval = 255,
                     bool ascii = false) {
  if (maxval < 1 || maxval > 65535) throw std::domain_error("save_pgm: maxval must be in [1, 65535]");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());

  char header[64];
  std::snprintf(header, sizeof header, "%s\n%d %d\n%d\n", ascii ? "P2" : "P5", g.width, g.height,
                maxval);
  out << header;

  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = std::clamp(g.data[i], 0.0, 1.0);
    const long q = std::lround(v * maxval);
    if (ascii) {
      out << q << (i % 10 == 9 ? '\n' : ' ');  // keeps lines under 70 chars
    } else if (maxval > 255) {
      const char two[2] = {static_cast<char>((q >> 8) & 0xFF), static_cast<char>(q & 0xFF)};
      out.write(two, 2);
    } else {
      const char one = static_cast<char>(q & 0xFF);
      out.write(&one, 1);
    }
  }
  if (ascii && g.size() % 10 != 0) out << '\n';
  if (!out) throw IoError("short write to " + path.string());
}

// ---------------------------------------------------------------------------
// Manifest

struct ManifestEntry {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path gt;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
};

inline constexpr const char* kManifestHeader = "id,image,gt";

// CSV with exact header "id,image,gt". Relative paths resolve against the
// manifest's directory; every referenced file must exist.
inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const std::filesystem::path base = path.parent_path();

  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header in " + path.string(), 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader)
    throw ParseError("manifest header must be '" + std::string(kManifestHeader) + "'", 0);

  Manifest m;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw ParseError("manifest row needs 3 fields: " + line, 0);
    ManifestEntry e;
    e.id = line.substr(0, c1);
    std::filesystem::path img = line.substr(c1 + 1, c2 - c1 - 1);
    std::filesystem::path gt = line.substr(c2 + 1);
    e.image = img.is_absolute() ? img : base / img;
    e.gt = gt.is_absolute() ? gt : base / gt;
    if (!seen.insert(e.id).second) throw IoError("duplicate manifest id: " + e.id);
    if (!std::filesystem::exists(e.image)) throw IoError("manifest image missing: " + e.image.string());
    if (!std::filesystem::exists(e.gt)) throw IoError("manifest gt missing: " + e.gt.string());
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline void save_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << kManifestHeader << '\n';
  for (const ManifestEntry& e : m.entries)
    out << e.id << ',' << e.image.generic_string() << ',' << e.gt.generic_string() << '\n';
}

// Loads every sample referenced by the manifest. Ground truths are
// binarized at 0.5 so gt grids are strictly {0, 1} afterwards.
inline std::vector<Sample> load_samples(const Manifest& m) {
  std::vector<Sample> out;
  out.reserve(m.entries.size());
  for (const ManifestEntry& e : m.entries) {
    Sample s;
    s.id = e.id;
    s.image = load_pgm(e.image);
    s.gt = load_pgm(e.gt);
    require_same_shape(s.image, s.gt, "sample " + e.id);
    for (double& v : s.gt.data) v = v >= 0.5 ? 1.0 : 0.0;
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generator

struct ShapeConfig {
  int min_shapes = 1;
  int max_shapes = 4;
  int rect_min = 5;    // rectangle side lengths
  int rect_max = 12;
  int circle_rmin = 3;
  int circle_rmax = 6;
  double circle_prob = 0.5;           // probability a shape is a circle
  double bg_lo = 0.05, bg_hi = 0.30;  // background intensity range
  double fg_lo = 0.55, fg_hi = 0.95;  // shape intensity range
  double noise_sigma = 0.05;          // additive Gaussian noise, clamped to [0, 1]

  void validate(int size) const {
    if (min_shapes < 1 || max_shapes < min_shapes)
      throw std::domain_error("ShapeConfig: need 1 <= min_shapes <= max_shapes");
    // Shapes keep a 1-pixel border margin so every drawn boundary is a
    // region boundary, never an image-edge artifact.
    if (rect_min < 2 || rect_max < rect_min || rect_max > size - 2)
      throw std::domain_error("ShapeConfig: bad rectangle size range");
    if (circle_rmin < 1 || circle_rmax < circle_rmin || 2 * circle_rmax + 1 > size - 2)
      throw std::domain_error("ShapeConfig: bad circle radius range");
    if (!(circle_prob >= 0.0 && circle_prob <= 1.0))
      throw std::domain_error("ShapeConfig: circle_prob must be in [0, 1]");
    if (!(noise_sigma >= 0.0)) throw std::domain_error("ShapeConfig: noise_sigma must be >= 0");
  }
};

// Renders count images of filled rectangles and circles over a flat
// background, plus Gaussian pixel noise. A ground-truth pixel is set where
// a shape pixel has a 4-neighbor belonging to a different region, so a
// noiseless single rectangle yields exactly its 1-pixel perimeter.
inline std::vector<Sample> gen_synthetic(std::uint64_t seed, int count, int size,
                                         const ShapeConfig& cfg = {}) {
  if (count < 1) throw std::domain_error("gen_synthetic: count must be >= 1");
  if (size < 16) throw std::domain_error("gen_synthetic: size must be >= 16");
  cfg.validate(size);

  std::mt19937_64 rng(seed);
  std::vector<Sample> out;
  out.reserve(count);

  for (int s = 0; s < count; ++s) {
    std::vector<int> label(static_cast<std::size_t>(size) * size, 0);
    std::vector<double> intensity{uniform(rng, cfg.bg_lo, cfg.bg_hi)};

    const int nshapes =
        cfg.min_shapes + static_cast<int>(bounded(rng, cfg.max_shapes - cfg.min_shapes + 1));
    for (int i = 1; i <= nshapes; ++i) {
      intensity.push_back(uniform(rng, cfg.fg_lo, cfg.fg_hi));
      if (uniform01(rng) >= cfg.circle_prob) {
        const int w = cfg.rect_min + static_cast<int>(bounded(rng, cfg.rect_max - cfg.rect_min + 1));
        const int h = cfg.rect_min + static_cast<int>(bounded(rng, cfg.rect_max - cfg.rect_min + 1));
        const int x0 = 1 + static_cast<int>(bounded(rng, size - w - 1));
        const int y0 = 1 + static_cast<int>(bounded(rng, size - h - 1));
        for (int y = y0; y < y0 + h; ++y)
          for (int x = x0; x < x0 + w; ++x) label[static_cast<std::size_t>(y) * size + x] = i;
      } else {
        const int r = cfg.circle_rmin + static_cast<int>(bounded(rng, cfg.circle_rmax - cfg.circle_rmin + 1));
        const int cx = r + 1 + static_cast<int>(bounded(rng, size - 2 * r - 2));
        const int cy = r + 1 + static_cast<int>(bounded(rng, size - 2 * r - 2));
        for (int y = cy - r; y <= cy + r; ++y)
          for (int x = cx - r; x <= cx + r; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r)
              label[static_cast<std::size_t>(y) * size + x] = i;
      }
    }

    Sample sample;
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "synth-%04d", s);
    sample.id = idbuf;
    sample.image = Grid(size, size);
    sample.gt = Grid(size, size);

    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const int l = label[static_cast<std::size_t>(y) * size + x];
        if (l != 0) {
          const bool edge =
              (x > 0 && label[static_cast<std::size_t>(y) * size + x - 1] != l) ||
              (x + 1 < size && label[static_cast<std::size_t>(y) * size + x + 1] != l) ||
              (y > 0 && label[static_cast<std::size_t>(y - 1) * size + x] != l) ||
              (y + 1 < size && label[static_cast<std::size_t>(y + 1) * size + x] != l);
          if (edge) sample.gt.at(x, y) = 1.0;
        }
        double v = intensity[l];
        if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * gaussian(rng);
        sample.image.at(x, y) = std::clamp(v, 0.0, 1.0);
      }
    }
    out.push_back(std::move(sample));
  }
  return out;
}

// Writes images/, gt/ and manifest.csv under dir. Ground truths are stored
// as {0, 255} PGMs.
inline Manifest save_dataset(const std::filesystem::path& dir, const std::vector<Sample>& samples,
                             int image_maxval = 255) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "gt");
  Manifest m;
  for (const Sample& s : samples) {
    const auto img_rel = std::filesystem::path("images") / (s.id + ".pgm");
    const auto gt_rel = std::filesystem::path("gt") / (s.id + ".pgm");
    save_pgm(dir / img_rel, s.image, image_maxval);
    save_pgm(dir / gt_rel, s.gt, 255);
    ManifestEntry e;
    e.id = s.id;
    e.image = img_rel;
    e.gt = gt_rel;
    m.entries.push_back(std::move(e));
  }
  save_manifest(dir / "manifest.csv", m);
  return m;
}

}  // namespace baa
