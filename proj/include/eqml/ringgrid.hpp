#pragma once

// Polygonal ring sampling of raster images.
//
// Angles are measured counterclockwise from the +column axis; a positive
// angle moves a vertex up the image (row decreases with sin).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "eqml/error.hpp"
#include "eqml/statevec.hpp"

namespace eqml {

struct RingGrid {
  int n_rad = 0;
  int n_orb = 0;
  int height = 0;
  int width = 0;
  double center_row = 0.0;
  double center_col = 0.0;
  std::vector<double> radii;
  std::vector<double> angles;

  std::size_t n_r() const noexcept { return std::size_t{1} << n_rad; }
  std::size_t n_phi() const noexcept { return std::size_t{1} << n_orb; }

  /// Nearest pixel (row, col) of vertex (r, phi), clamped to the image.
  std::pair<int, int> vertex_pixel(std::size_t r, std::size_t phi) const {
    const double row = center_row - radii[r] * std::sin(angles[phi]);
    const double col = center_col + radii[r] * std::cos(angles[phi]);
    const int ri = std::clamp(static_cast<int>(std::round(row)), 0, height - 1);
    const int ci = std::clamp(static_cast<int>(std::round(col)), 0, width - 1);
    return {ri, ci};
  }
};

inline RingGrid build_grid(int n_rad, int n_orb, int height, int width) {
  require(n_rad >= 1 && n_orb >= 1, ErrorCode::InvalidDims, "need at least one radial and one orbital qubit");
  require(n_rad + n_orb <= 30, ErrorCode::InvalidDims, "register too large");
  require(height >= 2 && width >= 2, ErrorCode::InvalidDims, "image must be at least 2x2");
  RingGrid g;
  g.n_rad = n_rad;
  g.n_orb = n_orb;
  g.height = height;
  g.width = width;
  g.center_row = (height - 1) / 2.0;
  g.center_col = (width - 1) / 2.0;
  const double r_max = (std::min(height, width) - 1) / 2.0;
  const std::size_t n_r = g.n_r();
  const std::size_t n_phi = g.n_phi();
  g.radii.resize(n_r);
  for (std::size_t k = 0; k < n_r; ++k) g.radii[k] = static_cast<double>(k + 1) * r_max / static_cast<double>(n_r);
  g.angles.resize(n_phi);
  for (std::size_t p = 0; p < n_phi; ++p)
    g.angles[p] = 2.0 * std::numbers::pi * static_cast<double>(p) / static_cast<double>(n_phi);
  return g;
}

/// Grayscale raster, row-major, values clamped to [0, 1].
class Image {
 public:
  Image() = default;

  Image(int height, int width, double fill = 0.0)
      : height_(height), width_(width), pixels_(static_cast<std::size_t>(height) * width, clamp01(fill)) {
    require(height >= 1 && width >= 1, ErrorCode::InvalidDims, "empty image");
  }

  Image(int height, int width, std::vector<double> pixels)
      : height_(height), width_(width), pixels_(std::move(pixels)) {
    require(height >= 1 && width >= 1, ErrorCode::InvalidDims, "empty image");
    require(pixels_.size() == static_cast<std::size_t>(height) * width, ErrorCode::DimMismatch,
            "pixel count does not match dimensions");
    for (auto& p : pixels_) {
      require(std::isfinite(p), ErrorCode::InvalidArgs, "non-finite pixel");
      p = clamp01(p);
    }
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  double at(int row, int col) const { return pixels_[static_cast<std::size_t>(row) * width_ + col]; }
  void set(int row, int col, double v) { pixels_[static_cast<std::size_t>(row) * width_ + col] = clamp01(v); }
  std::span<const double> pixels() const noexcept { return pixels_; }

  bool operator==(const Image&) const = default;

 private:
  static double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> pixels_;
};

/// The N_r x N_phi matrix x_{r,phi}, row-major (flat index r * N_phi + phi).
struct SampledImage {
  int n_rad = 0;
  int n_orb = 0;
  std::vector<double> values;

  SampledImage() = default;
  SampledImage(int n_rad_, int n_orb_)
      : n_rad(n_rad_), n_orb(n_orb_), values(std::size_t{1} << (n_rad_ + n_orb_), 0.0) {}
  SampledImage(int n_rad_, int n_orb_, std::vector<double> v) : n_rad(n_rad_), n_orb(n_orb_), values(std::move(v)) {
    require(values.size() == (std::size_t{1} << (n_rad + n_orb)), ErrorCode::DimMismatch,
            "sample count must be N_r * N_phi");
  }

  std::size_t n_r() const noexcept { return std::size_t{1} << n_rad; }
  std::size_t n_phi() const noexcept { return std::size_t{1} << n_orb; }
  std::size_t size() const noexcept { return values.size(); }

  double& at(std::size_t r, std::size_t phi) { return values[r * n_phi() + phi]; }
  double at(std::size_t r, std::size_t phi) const { return values[r * n_phi() + phi]; }

  std::span<const double> ring(std::size_t r) const { return {values.data() + r * n_phi(), n_phi()}; }

  double norm() const {
    double acc = 0.0;
    for (double v : values) acc += v * v;
    return std::sqrt(acc);
  }

  bool same_shape(const SampledImage& o) const { return n_rad == o.n_rad && n_orb == o.n_orb; }
  bool operator==(const SampledImage&) const = default;
};

inline SampledImage sample_image(const Image& image, const RingGrid& grid) {
  require(image.height() == grid.height && image.width() == grid.width, ErrorCode::DimMismatch,
          "image dimensions do not match grid");
  SampledImage s(grid.n_rad, grid.n_orb);
  for (std::size_t r = 0; r < grid.n_r(); ++r)
    for (std::size_t p = 0; p < grid.n_phi(); ++p) {
      const auto [row, col] = grid.vertex_pixel(r, p);
      s.at(r, p) = image.at(row, col);
    }
  return s;
}

inline std::vector<double> ring_means(const SampledImage& s) {
  std::vector<double> means(s.n_r(), 0.0);
  for (std::size_t r = 0; r < s.n_r(); ++r) {
    double acc = 0.0;
    for (double v : s.ring(r)) acc += v;
    means[r] = acc / static_cast<double>(s.n_phi());
  }
  return means;
}

/// |psi> = x / ||x|| with amplitude index r * N_phi + phi.
inline StateVector encode_amplitudes(const SampledImage& s) {
  const double n = s.norm();
  require(n > 0.0, ErrorCode::NormZero, "cannot encode an all-zero sample");
  std::vector<cplx> amps(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) amps[i] = s.values[i] / n;
  return StateVector(s.n_rad + s.n_orb, std::move(amps));
}

/// Writes samples at their vertex pixels over a constant background.
/// Later vertices win when two vertices share a pixel.
inline Image render_encoded(const SampledImage& s, const RingGrid& grid, double background) {
  require(s.n_rad == grid.n_rad && s.n_orb == grid.n_orb, ErrorCode::DimMismatch, "sample shape does not match grid");
  Image img(grid.height, grid.width, background);
  for (std::size_t r = 0; r < grid.n_r(); ++r)
    for (std::size_t p = 0; p < grid.n_phi(); ++p) {
      const auto [row, col] = grid.vertex_pixel(r, p);
      img.set(row, col, s.at(r, p));
    }
  return img;
}

/// Group action of Z_{N_phi}: y_{r,phi} = x_{r,(phi - g) mod N_phi}.
inline SampledImage rotate_samples(const SampledImage& s, long long g) {
  const auto n_phi = static_cast<long long>(s.n_phi());
  const long long shift = ((g % n_phi) + n_phi) % n_phi;
  SampledImage out(s.n_rad, s.n_orb);
  for (std::size_t r = 0; r < s.n_r(); ++r)
    for (long long p = 0; p < n_phi; ++p)
      out.at(r, static_cast<std::size_t>((p + shift) % n_phi)) = s.at(r, static_cast<std::size_t>(p));
  return out;
}

/// True when every vertex maps to its own pixel (render/sample round trips are exact).
inline bool vertices_distinct(const RingGrid& grid) {
  std::vector<std::pair<int, int>> seen;
  for (std::size_t r = 0; r < grid.n_r(); ++r)
    for (std::size_t p = 0; p < grid.n_phi(); ++p) seen.push_back(grid.vertex_pixel(r, p));
  std::sort(seen.begin(), seen.end());
  return std::adjacent_find(seen.begin(), seen.end()) == seen.end();
}

}  // namespace eqml
