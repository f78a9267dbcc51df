#pragma once

// Datasets: synthetic ring-structured images, IDX ingestion, octant
// rotations, transformation variants and the EQDS container.

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "eqml/error.hpp"
#include "eqml/ringgrid.hpp"
#include "eqml/transforms.hpp"

namespace eqml {

/// Sampled dataset: the currency of transforms, surrogates, attacks and the model.
struct Dataset {
  int n_rad = 0;
  int n_orb = 0;
  int n_classes = 0;
  std::vector<SampledImage> samples;
  std::vector<std::size_t> labels;
  nlohmann::json meta = nlohmann::json::object();

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }

  void push(SampledImage s, std::size_t label) {
    require(s.n_rad == n_rad && s.n_orb == n_orb, ErrorCode::DimMismatch, "sample shape does not match dataset");
    require(label < static_cast<std::size_t>(n_classes), ErrorCode::LabelOutOfRange, "label out of range");
    samples.push_back(std::move(s));
    labels.push_back(label);
  }

  void record(const std::string& step, nlohmann::json detail = nlohmann::json::object()) {
    detail["step"] = step;
    meta["transforms"].push_back(std::move(detail));
  }
};

/// Raw images before ring sampling.
struct ImageDataset {
  int n_classes = 0;
  std::vector<Image> images;
  std::vector<std::size_t> labels;
  nlohmann::json meta = nlohmann::json::object();
};

inline Dataset sample_dataset(const ImageDataset& raw, const RingGrid& grid) {
  Dataset ds{grid.n_rad, grid.n_orb, raw.n_classes, {}, {}, raw.meta};
  for (std::size_t i = 0; i < raw.images.size(); ++i) ds.push(sample_image(raw.images[i], grid), raw.labels[i]);
  ds.meta["grid"] = {{"n_rad", grid.n_rad}, {"n_orb", grid.n_orb}, {"height", grid.height}, {"width", grid.width}};
  return ds;
}

// ---------------------------------------------------------------------------
// Rotation by multiples of 45 degrees

/// Bilinear rotation by k * 45 degrees counterclockwise about ((H-1)/2, (W-1)/2).
/// Reads outside the source image contribute 0. Multiples of 90 degrees use exact
/// trigonometric values, so they are pure pixel permutations on square images.
inline Image rotate_image(const Image& img, int k_octants) {
  require(k_octants >= 0 && k_octants <= 7, ErrorCode::InvalidArgs, "octant count must be in 0..7");
  if (k_octants == 0) return img;
  constexpr double h = std::numbers::sqrt2 / 2.0;
  constexpr std::array<double, 8> cos_t = {1.0, h, 0.0, -h, -1.0, -h, 0.0, h};
  constexpr std::array<double, 8> sin_t = {0.0, h, 1.0, h, 0.0, -h, -1.0, -h};
  const double c = cos_t[static_cast<std::size_t>(k_octants)];
  const double s = sin_t[static_cast<std::size_t>(k_octants)];
  const int height = img.height();
  const int width = img.width();
  const double cr = (height - 1) / 2.0;
  const double cc = (width - 1) / 2.0;
  auto pixel = [&](int r, int col) -> double {
    if (r < 0 || r >= height || col < 0 || col >= width) return 0.0;
    return img.at(r, col);
  };
  Image out(height, width, 0.0);
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) {
      // Cartesian offsets with y pointing up; the source point is R(-theta) * dest.
      const double x = j - cc;
      const double y = cr - i;
      const double sx = c * x + s * y;
      const double sy = -s * x + c * y;
      const double src_row = cr - sy;
      const double src_col = cc + sx;
      const double r0 = std::floor(src_row);
      const double c0 = std::floor(src_col);
      const double fr = src_row - r0;
      const double fc = src_col - c0;
      const int ri = static_cast<int>(r0);
      const int ci = static_cast<int>(c0);
      double v = (1.0 - fr) * (1.0 - fc) * pixel(ri, ci);
      if (fc != 0.0) v += (1.0 - fr) * fc * pixel(ri, ci + 1);
      if (fr != 0.0) v += fr * (1.0 - fc) * pixel(ri + 1, ci);
      if (fr != 0.0 && fc != 0.0) v += fr * fc * pixel(ri + 1, ci + 1);
      out.set(i, j, v);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic STM-like data

struct PrototypeSpec {
  double radial_center = 0.5;  // fraction of the maximal radius
  double radial_width = 0.18;
  double radial_amplitude = 0.3;
  int harmonic = 2;
  double texture_amplitude = 0.3;
  double texture_phase = 0.0;
  double twist = 0.0;  // phase change of the texture across the radius, radians
};

/// Per-class prototype parameters derived from the seed. Every class has its
/// own radial profile and its own angular texture (harmonic and cross-ring
/// twist), so ring means and angular correlations both carry label information.
inline std::vector<PrototypeSpec> stm_prototype_specs(int n_classes, std::uint64_t seed) {
  require(n_classes >= 2, ErrorCode::InvalidArgs, "need at least two classes");
  std::mt19937_64 rng(seed ^ 0x5354'4d50'524f'544fULL);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const int n_profiles = (n_classes + 1) / 2;
  std::vector<PrototypeSpec> specs;
  for (int c = 0; c < n_classes; ++c) {
    PrototypeSpec p;
    const double base = 0.3 + 0.45 * (n_profiles == 1 ? 0.5 : static_cast<double>(c / 2) / (n_profiles - 1));
    p.radial_center = base + (c % 2 == 0 ? -0.06 : 0.06);
    p.radial_width = 0.18;
    p.radial_amplitude = 0.30;
    p.harmonic = 1 + c % 3;
    p.texture_amplitude = 0.30;
    p.texture_phase = phase(rng);
    p.twist = (c % 2 == 0) ? 0.0 : std::numbers::pi;
    specs.push_back(p);
  }
  return specs;
}

inline Image render_prototype(const PrototypeSpec& p, int height, int width) {
  const double cr = (height - 1) / 2.0;
  const double cc = (width - 1) / 2.0;
  const double r_max = (std::min(height, width) - 1) / 2.0;
  std::vector<double> px(static_cast<std::size_t>(height) * width);
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) {
      const double x = j - cc;
      const double y = cr - i;
      const double u = std::hypot(x, y) / r_max;
      const double theta = std::atan2(y, x);
      const double z = (u - p.radial_center) / p.radial_width;
      const double bump = std::exp(-0.5 * z * z);
      const double texture = std::cos(p.harmonic * theta + p.texture_phase + p.twist * (u - p.radial_center) / p.radial_width);
      px[static_cast<std::size_t>(i) * width + j] = 0.10 + p.radial_amplitude * bump + p.texture_amplitude * bump * texture;
    }
  return Image(height, width, std::move(px));
}

/// per_class samples per label: prototype + N(0, sigma) pixel noise, then
/// rotated by (sample index mod 8) * 45 degrees.
inline ImageDataset synth_stm_like_images(int n_classes, int per_class, double noise_sigma, int height, int width,
                                          std::uint64_t seed) {
  require(n_classes >= 2, ErrorCode::InvalidArgs, "need at least two classes");
  require(per_class >= 0 && noise_sigma >= 0.0, ErrorCode::InvalidArgs, "bad sample count or noise level");
  const auto specs = stm_prototype_specs(n_classes, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  ImageDataset ds;
  ds.n_classes = n_classes;
  for (int c = 0; c < n_classes; ++c) {
    const Image proto = render_prototype(specs[static_cast<std::size_t>(c)], height, width);
    for (int k = 0; k < per_class; ++k) {
      std::vector<double> px(proto.pixels().begin(), proto.pixels().end());
      if (noise_sigma > 0.0)
        for (auto& v : px) v += noise(rng);
      ds.images.push_back(rotate_image(Image(height, width, std::move(px)), k % 8));
      ds.labels.push_back(static_cast<std::size_t>(c));
    }
  }
  ds.meta = {{"source", "synthetic_stm_like"},
             {"synthetic", true},
             {"seed", seed},
             {"n_classes", n_classes},
             {"per_class", per_class},
             {"noise_sigma", noise_sigma},
             {"transforms", nlohmann::json::array()}};
  return ds;
}

inline Dataset synth_stm_like(int n_classes, int per_class, double noise_sigma, const RingGrid& grid, std::uint64_t seed) {
  return sample_dataset(synth_stm_like_images(n_classes, per_class, noise_sigma, grid.height, grid.width, seed), grid);
}

// ---------------------------------------------------------------------------
// IDX ingestion (MNIST-style; gzip or plain)

namespace detail {

inline std::vector<unsigned char> read_maybe_gzip(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  require(f != nullptr, ErrorCode::Io, "cannot open " + path);
  std::vector<unsigned char> out;
  std::array<unsigned char, 1 << 16> buf{};
  int n = 0;
  while ((n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()))) > 0) out.insert(out.end(), buf.begin(), buf.begin() + n);
  const bool failed = n < 0;
  gzclose(f);
  require(!failed, ErrorCode::Io, "read error in " + path);
  return out;
}

inline std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  require(off + 4 <= b.size(), ErrorCode::Io, "truncated IDX header");
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) | b[off + 3];
}

}  // namespace detail

/// Drops excluded labels, remaps the rest to 0..k-1 in ascending order of the
/// original label, and keeps at most `limit` images (0 = no limit).
inline ImageDataset ingest_idx(const std::string& images_path, const std::string& labels_path,
                               const std::set<int>& exclude_labels, std::size_t limit) {
  const auto img = detail::read_maybe_gzip(images_path);
  const auto lab = detail::read_maybe_gzip(labels_path);
  require(detail::be32(img, 0) == 0x00000803, ErrorCode::BadMagic, "image file magic must be 0x00000803");
  require(detail::be32(lab, 0) == 0x00000801, ErrorCode::BadMagic, "label file magic must be 0x00000801");
  const std::size_t count = detail::be32(img, 4);
  const std::size_t rows = detail::be32(img, 8);
  const std::size_t cols = detail::be32(img, 12);
  require(detail::be32(lab, 4) == count, ErrorCode::DimMismatch, "image and label counts differ");
  require(rows >= 1 && cols >= 1, ErrorCode::DimMismatch, "empty image dimensions");
  require(img.size() >= 16 + count * rows * cols, ErrorCode::Io, "truncated IDX image payload");
  require(lab.size() >= 8 + count, ErrorCode::Io, "truncated IDX label payload");

  std::set<int> kept;
  for (std::size_t i = 0; i < count; ++i)
    if (!exclude_labels.contains(lab[8 + i])) kept.insert(lab[8 + i]);
  std::map<int, std::size_t> remap;
  for (int l : kept) remap.emplace(l, remap.size());

  ImageDataset ds;
  ds.n_classes = static_cast<int>(remap.size());
  for (std::size_t i = 0; i < count && (limit == 0 || ds.images.size() < limit); ++i) {
    const int l = lab[8 + i];
    if (exclude_labels.contains(l)) continue;
    std::vector<double> px(rows * cols);
    for (std::size_t k = 0; k < px.size(); ++k) px[k] = img[16 + i * rows * cols + k] / 255.0;
    ds.images.emplace_back(static_cast<int>(rows), static_cast<int>(cols), std::move(px));
    ds.labels.push_back(remap.at(l));
  }
  nlohmann::json label_map = nlohmann::json::object();
  for (const auto& [orig, dense] : remap) label_map[std::to_string(orig)] = dense;
  ds.meta = {{"source", "idx"},
             {"images", images_path},
             {"labels", labels_path},
             {"excluded", exclude_labels},
             {"label_map", label_map},
             {"transforms", nlohmann::json::array()}};
  return ds;
}

// ---------------------------------------------------------------------------
// Variants

enum class Variant { Clean, T1, T2, T3, Adv };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::Clean: return "clean";
    case Variant::T1: return "T1";
    case Variant::T2: return "T2";
    case Variant::T3: return "T3";
    case Variant::Adv: return "adv";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "clean") return Variant::Clean;
  if (s == "T1" || s == "t1") return Variant::T1;
  if (s == "T2" || s == "t2") return Variant::T2;
  if (s == "T3" || s == "t3") return Variant::T3;
  if (s == "adv") return Variant::Adv;
  fail(ErrorCode::InvalidArgs, "unknown variant '" + s + "'");
}

enum class KeyScope { PerImage, PerDataset };

struct VariantOptions {
  KeyScope key_scope = KeyScope::PerImage;
  std::uint64_t seed = 0;
  /// Required for Variant::Adv: maps the whole dataset to its adversarial version.
  std::function<Dataset(const Dataset&)> adversary;
};

inline Dataset apply_variant(const Dataset& ds, Variant variant, const VariantOptions& opt) {
  Dataset out = ds;
  if (variant == Variant::Clean) return out;
  if (variant == Variant::Adv) {
    require(static_cast<bool>(opt.adversary), ErrorCode::InvalidArgs, "adv variant needs an adversary");
    out = opt.adversary(ds);
    require(out.size() == ds.size() && out.labels == ds.labels, ErrorCode::InvalidArgs, "adversary changed labels");
    return out;
  }
  std::mt19937_64 rng(opt.seed);
  const CirculantKey shared_circ = sample_circulant_key(ds.n_orb, rng);
  const PermutationKey shared_perm = sample_permutation_key(ds.n_rad, ds.n_orb, rng);
  for (auto& s : out.samples) {
    switch (variant) {
      case Variant::T1:
        s = apply_t1(s, opt.key_scope == KeyScope::PerImage ? sample_circulant_key(ds.n_orb, rng) : shared_circ);
        break;
      case Variant::T2:
        s = apply_t2(s, opt.key_scope == KeyScope::PerImage ? sample_permutation_key(ds.n_rad, ds.n_orb, rng) : shared_perm);
        break;
      case Variant::T3: s = apply_t3(s); break;
      default: break;
    }
  }
  out.record(to_string(variant), {{"seed", opt.seed},
                                  {"key_scope", opt.key_scope == KeyScope::PerImage ? "per_image" : "per_dataset"}});
  return out;
}

/// Seeded split: the first n_train indices of a shuffled order go to train.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, std::size_t n_train, std::uint64_t seed) {
  require(n_train <= ds.size(), ErrorCode::InvalidArgs, "train size exceeds dataset");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  Dataset train{ds.n_rad, ds.n_orb, ds.n_classes, {}, {}, ds.meta};
  Dataset test = train;
  for (std::size_t k = 0; k < order.size(); ++k) (k < n_train ? train : test).push(ds.samples[order[k]], ds.labels[order[k]]);
  train.record("split", {{"part", "train"}, {"seed", seed}});
  test.record("split", {{"part", "test"}, {"seed", seed}});
  return {train, test};
}

// ---------------------------------------------------------------------------
// EQDS container
//
// Blob (little endian):
//   "EQDS" | version u32 | count u32 | N_r u16 | N_phi u16 | dtype u8 (1 = f32)
//   | count * N_r * N_phi f32 samples (row-major) | count u16 labels
// Manifest <blob>.json: grid, n_classes, label map, provenance, crc32 of blob.

inline constexpr std::uint32_t kEqdsVersion = 1;
inline constexpr std::uint8_t kEqdsFloat32 = 1;

namespace detail {

template <class T>
void put_le(std::vector<unsigned char>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
}

template <class T>
T get_le(const std::vector<unsigned char>& in, std::size_t& off) {
  require(off + sizeof(T) <= in.size(), ErrorCode::Io, "truncated EQDS blob");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{in[off + i]} << (8 * i);
  off += sizeof(T);
  return static_cast<T>(v);
}

inline std::uint32_t crc(const std::vector<unsigned char>& b) {
  return static_cast<std::uint32_t>(crc32(0L, b.data(), static_cast<uInt>(b.size())));
}

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

inline std::vector<unsigned char> encode_eqds(const Dataset& ds) {
  require(ds.samples.size() == ds.labels.size(), ErrorCode::DimMismatch, "sample/label count mismatch");
  std::vector<unsigned char> b = {'E', 'Q', 'D', 'S'};
  detail::put_le<std::uint32_t>(b, kEqdsVersion);
  detail::put_le<std::uint32_t>(b, static_cast<std::uint32_t>(ds.size()));
  detail::put_le<std::uint16_t>(b, static_cast<std::uint16_t>(std::size_t{1} << ds.n_rad));
  detail::put_le<std::uint16_t>(b, static_cast<std::uint16_t>(std::size_t{1} << ds.n_orb));
  detail::put_le<std::uint8_t>(b, kEqdsFloat32);
  for (const auto& s : ds.samples)
    for (double v : s.values) {
      const auto f = static_cast<float>(v);
      std::uint32_t bits = 0;
      std::memcpy(&bits, &f, sizeof bits);
      detail::put_le<std::uint32_t>(b, bits);
    }
  for (auto l : ds.labels) detail::put_le<std::uint16_t>(b, static_cast<std::uint16_t>(l));
  return b;
}

inline Dataset decode_eqds(const std::vector<unsigned char>& b, int n_classes) {
  require(b.size() >= 4 && std::memcmp(b.data(), "EQDS", 4) == 0, ErrorCode::BadMagic, "missing EQDS magic");
  std::size_t off = 4;
  const auto version = detail::get_le<std::uint32_t>(b, off);
  require(version == kEqdsVersion, ErrorCode::UnsupportedVersion,
          "EQDS version " + std::to_string(version) + " is not supported (expected " + std::to_string(kEqdsVersion) + ")");
  const auto count = detail::get_le<std::uint32_t>(b, off);
  const auto n_r = detail::get_le<std::uint16_t>(b, off);
  const auto n_phi = detail::get_le<std::uint16_t>(b, off);
  const auto dtype = detail::get_le<std::uint8_t>(b, off);
  require(dtype == kEqdsFloat32, ErrorCode::InvalidArgs, "unsupported EQDS dtype");
  require(n_r >= 2 && n_phi >= 2 && (n_r & (n_r - 1)) == 0 && (n_phi & (n_phi - 1)) == 0, ErrorCode::InvalidDims,
          "ring counts must be powers of two");
  Dataset ds;
  ds.n_rad = std::countr_zero(n_r);
  ds.n_orb = std::countr_zero(n_phi);
  ds.n_classes = n_classes;
  const std::size_t expected = off + std::size_t{count} * n_r * n_phi * 4 + std::size_t{count} * 2;
  require(b.size() == expected, ErrorCode::Io, "EQDS blob has wrong length");
  std::vector<SampledImage> samples;
  for (std::uint32_t i = 0; i < count; ++i) {
    SampledImage s(ds.n_rad, ds.n_orb);
    for (auto& v : s.values) {
      const auto bits = detail::get_le<std::uint32_t>(b, off);
      float f = 0.0f;
      std::memcpy(&f, &bits, sizeof f);
      v = f;
    }
    samples.push_back(std::move(s));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto l = detail::get_le<std::uint16_t>(b, off);
    ds.push(std::move(samples[i]), l);
  }
  return ds;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  const auto blob = encode_eqds(ds);
  {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  }
  nlohmann::json manifest = {{"format", "EQDS"},
                             {"version", kEqdsVersion},
                             {"blob", std::filesystem::path(path).filename().string()},
                             {"n_rad", ds.n_rad},
                             {"n_orb", ds.n_orb},
                             {"n_classes", ds.n_classes},
                             {"count", ds.size()},
                             {"crc32", detail::crc(blob)},
                             {"provenance", ds.meta}};
  std::ofstream out(path + ".json");
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write manifest for " + path);
  out << manifest.dump(2) << '\n';
}

inline Dataset load_dataset(const std::string& path) {
  const auto blob = detail::read_file(path);
  std::ifstream min(path + ".json");
  require(static_cast<bool>(min), ErrorCode::Io, "missing manifest " + path + ".json");
  const auto manifest = nlohmann::json::parse(min);
  require(manifest.value("format", "") == "EQDS", ErrorCode::BadMagic, "manifest is not an EQDS manifest");
  require(manifest.value("version", 0u) == kEqdsVersion, ErrorCode::UnsupportedVersion, "unsupported EQDS manifest version");
  require(manifest.at("crc32").get<std::uint32_t>() == detail::crc(blob), ErrorCode::ChecksumMismatch,
          "EQDS blob checksum does not match manifest");
  Dataset ds = decode_eqds(blob, manifest.at("n_classes").get<int>());
  require(ds.n_rad == manifest.at("n_rad").get<int>() && ds.n_orb == manifest.at("n_orb").get<int>(),
          ErrorCode::DimMismatch, "manifest grid does not match blob");
  ds.meta = manifest.at("provenance");
  return ds;
}

}  // namespace eqml
