#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqmatch/error.hpp"
#include "seqmatch/geometry.hpp"
#include "seqmatch/imgio.hpp"
#include "seqmatch/parallel.hpp"
#include "seqmatch/random.hpp"

namespace seqmatch {

/// Apparent per-frame image motion: frame k-1 coordinates map to frame k
/// coordinates by T(translation) * C * R(rotation) * S(scale) * C^-1, C being
/// the frame centre. Perspective jitter perturbs each view independently
/// (it does not accumulate).
struct MotionSpec {
  double tx = 0.0;  // px / frame
  double ty = 0.0;
  double rotation = 0.0;  // rad / frame
  double scale = 1.0;     // ratio / frame
  double perspective_jitter = 0.0;  // max |h31|, |h32| of the per-view jitter, in 1/px
};

/// Sequence generator settings beyond the motion itself.
struct SceneSpec {
  std::string name = "custom";
  int width = 640;
  int height = 480;
  int count = 300;
  MotionSpec motion{};
  // Water column: each sample becomes t * scene + (1 - t) * veil before noise.
  double transmission = 1.0;
  std::array<double, 3> veil{40.0, 110.0, 120.0};  // per channel, cycled for grey
  double noise_sigma = 0.0;
  int snow_density = 0;  // occluding ellipses per frame
  std::uint64_t seed = 0;
};

namespace detail {

inline double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Lattice of uniform values with one cell of padding on the far sides.
struct ValueLattice {
  int cell, cols, rows;
  std::vector<float> values;

  ValueLattice(int cell_size, int w, int h, std::uint64_t seed)
      : cell(cell_size), cols(w / cell_size + 2), rows(h / cell_size + 2),
        values(static_cast<std::size_t>(cols) * rows) {
    Rng rng(seed);
    for (auto& v : values) v = static_cast<float>(rng.uniform());
  }

  double sample(int x, int y) const {
    const int cx = x / cell, cy = y / cell;
    const double fx = smoothstep(static_cast<double>(x % cell) / cell);
    const double fy = smoothstep(static_cast<double>(y % cell) / cell);
    const auto v = [&](int i, int j) { return static_cast<double>(values[static_cast<std::size_t>(j) * cols + i]); };
    const double top = v(cx, cy) + fx * (v(cx + 1, cy) - v(cx, cy));
    const double bottom = v(cx, cy + 1) + fx * (v(cx + 1, cy + 1) - v(cx, cy + 1));
    return top + fy * (bottom - top);
  }
};

}  // namespace detail

/// Seeded multi-octave value noise, contrast-normalised, with a blue-green
/// cast. Octave cell sizes run from 64 px down to 2 px so FAST finds dense
/// corners at every pyramid level.
inline Frame gen_texture(std::uint64_t seed, int w, int h) {
  if (w < 128 || h < 128) throw Error(Errc::BadParams, "texture must be at least 128x128");
  static constexpr int kCells[] = {64, 32, 16, 8, 4, 2};
  static constexpr double kAmps[] = {1.0, 0.85, 0.7, 0.6, 0.5, 0.4};
  std::vector<detail::ValueLattice> octaves;
  for (int o = 0; o < 6; ++o) octaves.emplace_back(kCells[o], w, h, derive_seed(seed, static_cast<std::uint64_t>(o)));
  const detail::ValueLattice tint(96, w, h, derive_seed(seed, 100));

  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> value(n);
  double sum = 0, sum2 = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = 0;
      for (int o = 0; o < 6; ++o) v += kAmps[o] * octaves[static_cast<std::size_t>(o)].sample(x, y);
      value[static_cast<std::size_t>(y) * w + x] = v;
      sum += v;
      sum2 += v * v;
    }
  const double mean = sum / static_cast<double>(n);
  const double sd = std::sqrt(std::max(1e-12, sum2 / static_cast<double>(n) - mean * mean));

  Frame tex(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double v = 128.0 + 55.0 * (value[i] - mean) / sd;
      const double t = tint.sample(x, y) - 0.5;
      tex.data[3 * i] = clamp_u8(0.6 * v + 20.0 * t);
      tex.data[3 * i + 1] = clamp_u8(0.9 * v + 10.0);
      tex.data[3 * i + 2] = clamp_u8(0.85 * v + 30.0 - 20.0 * t);
    }
  return tex;
}

/// Ground-truth scene: a texture plus the per-frame homography h_to_base[k]
/// mapping frame-k pixel coordinates to base (frame-0) coordinates. Base
/// coordinate (u, v) reads texture pixel (u + offset_x, v + offset_y).
class SyntheticScene {
 public:
  SyntheticScene(Frame texture, SceneSpec spec) : texture_(std::move(texture)), spec_(std::move(spec)) {
    if (spec_.width < kMinSequenceDim || spec_.height < kMinSequenceDim || spec_.count < 1)
      throw Error(Errc::BadParams, "bad frame geometry");
    if (spec_.noise_sigma < 0 || spec_.snow_density < 0) throw Error(Errc::BadParams, "negative noise/snow");
    if (!(spec_.transmission > 0 && spec_.transmission <= 1)) throw Error(Errc::BadParams, "transmission must be in (0, 1]");
    if (!(spec_.motion.scale > 0)) throw Error(Errc::BadMotion, "scale must be positive");
    if (texture_.width < spec_.width || texture_.height < spec_.height)
      throw Error(Errc::BadMotion, "texture smaller than the frame");
    offset_x_ = (texture_.width - spec_.width) / 2;
    offset_y_ = (texture_.height - spec_.height) / 2;
    build_truth();
  }

  const SceneSpec& spec() const { return spec_; }
  const Frame& texture() const { return texture_; }
  const std::vector<Homography>& h_to_base() const { return h_to_base_; }

  /// Exact map from frame-a pixel coordinates to frame-b pixel coordinates.
  Homography truth(int a, int b) const {
    return (h_to_base_[static_cast<std::size_t>(b)].inverse() * h_to_base_[static_cast<std::size_t>(a)]).normalized();
  }

  /// The per-frame step M (frame k-1 -> frame k) without jitter.
  Homography step() const {
    const auto& m = spec_.motion;
    const double cx = (spec_.width - 1) / 2.0, cy = (spec_.height - 1) / 2.0;
    return Homography::translation(m.tx, m.ty) * Homography::translation(cx, cy) * Homography::rotation(m.rotation) *
           Homography::scaling(m.scale) * Homography::translation(-cx, -cy);
  }

  Frame render(int k) const {
    if (k < 0 || k >= spec_.count) throw Error(Errc::BadParams, "frame index out of range");
    const Homography& h = h_to_base_[static_cast<std::size_t>(k)];
    const int w = spec_.width, ht = spec_.height, ch = texture_.channels;
    Frame out(w, ht, ch, std::uint8_t{0}, k);
    for (int y = 0; y < ht; ++y)
      for (int x = 0; x < w; ++x) {
        const Point2 b = h.project({static_cast<double>(x), static_cast<double>(y)});
        sample_bilinear(b.x + offset_x_, b.y + offset_y_, &out.data[(static_cast<std::size_t>(y) * w + x) * ch]);
      }

    Rng rng(derive_seed(spec_.seed, static_cast<std::uint64_t>(k)));
    if (spec_.noise_sigma > 0)
      for (auto& s : out.data) s = clamp_u8(s + spec_.noise_sigma * rng.normal());
    for (int e = 0; e < spec_.snow_density; ++e) draw_snow(out, rng);
    return out;
  }

 private:
  void build_truth() {
    const Homography step_inv = step().inverse();
    const double cx = (spec_.width - 1) / 2.0, cy = (spec_.height - 1) / 2.0;
    Rng jitter_rng(derive_seed(spec_.seed, 0x6A177E5ULL));
    Homography accumulated = Homography::identity();
    for (int k = 0; k < spec_.count; ++k) {
      if (k > 0) accumulated = (accumulated * step_inv).normalized();
      Homography view = accumulated;
      if (k > 0 && spec_.motion.perspective_jitter > 0) {
        const double j = spec_.motion.perspective_jitter;
        Homography p;
        p(2, 0) = jitter_rng.uniform(-j, j);
        p(2, 1) = jitter_rng.uniform(-j, j);
        view = (accumulated * Homography::translation(cx, cy) * p * Homography::translation(-cx, -cy)).normalized();
      }
      const double det = std::fabs(view.determinant());
      if (!(det >= 0.05 && det <= 20.0)) throw Error(Errc::BadMotion, "cumulative homography ill-conditioned");
      for (Point2 c : {Point2{0, 0}, Point2{spec_.width - 1.0, 0}, Point2{spec_.width - 1.0, spec_.height - 1.0},
                       Point2{0, spec_.height - 1.0}}) {
        const auto b = view.try_project(c);
        if (!b || b->x + offset_x_ < 0 || b->y + offset_y_ < 0 || b->x + offset_x_ > texture_.width - 2 ||
            b->y + offset_y_ > texture_.height - 2)
          throw Error(Errc::BadMotion, "view of frame " + std::to_string(k) + " leaves the texture");
      }
      h_to_base_.push_back(view);
    }
  }

  void sample_bilinear(double u, double v, std::uint8_t* dst) const {
    const int x0 = static_cast<int>(std::floor(u)), y0 = static_cast<int>(std::floor(v));
    const double fx = u - x0, fy = v - y0;
    const int ch = texture_.channels;
    const int x1 = std::min(x0 + 1, texture_.width - 1), y1 = std::min(y0 + 1, texture_.height - 1);
    for (int c = 0; c < ch; ++c) {
      const double p00 = texture_.at(x0, y0, c), p10 = texture_.at(x1, y0, c);
      const double p01 = texture_.at(x0, y1, c), p11 = texture_.at(x1, y1, c);
      const double top = p00 + fx * (p10 - p00);
      const double bottom = p01 + fx * (p11 - p01);
      const double v = top + fy * (bottom - top);
      const double t = spec_.transmission;
      dst[c] = clamp_u8(t == 1.0 ? v : t * v + (1.0 - t) * spec_.veil[static_cast<std::size_t>(c % 3)]);
    }
  }

  static void draw_snow(Frame& f, Rng& rng) {
    const double cx = rng.uniform(0, f.width), cy = rng.uniform(0, f.height);
    const double a = rng.uniform(2, 8), b = rng.uniform(2, 8);
    const double phi = rng.uniform(0, std::numbers::pi);
    const auto level = static_cast<std::uint8_t>(200 + rng.below(56));
    const double c = std::cos(phi), s = std::sin(phi);
    const int r = static_cast<int>(std::ceil(std::max(a, b)));
    for (int y = static_cast<int>(cy) - r; y <= static_cast<int>(cy) + r; ++y)
      for (int x = static_cast<int>(cx) - r; x <= static_cast<int>(cx) + r; ++x) {
        if (x < 0 || y < 0 || x >= f.width || y >= f.height) continue;
        const double dx = x - cx, dy = y - cy;
        const double u = (c * dx + s * dy) / a, v = (-s * dx + c * dy) / b;
        if (u * u + v * v <= 1.0)
          for (int ch = 0; ch < f.channels; ++ch) f.at(x, y, ch) = level;
      }
  }

  Frame texture_;
  SceneSpec spec_;
  int offset_x_ = 0;
  int offset_y_ = 0;
  std::vector<Homography> h_to_base_;
};

/// Adds i.i.d. Gaussian noise to every sample (clamped), seeded per frame.
inline Frame add_gaussian_noise(const Frame& f, double sigma, std::uint64_t seed) {
  if (sigma < 0) throw Error(Errc::BadParams, "negative noise sigma");
  Frame out = f;
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(f.index)));
  for (auto& s : out.data) s = clamp_u8(s + sigma * rng.normal());
  return out;
}

/// Builds a scene over `texture`; throws BadMotion if any view leaves it.
inline SyntheticScene gen_sequence(const Frame& texture, const SceneSpec& spec) {
  return SyntheticScene(texture, spec);
}

/// Texture 4x the frame in each dimension, seeded from the scene seed.
inline SyntheticScene make_scene(const SceneSpec& spec) {
  return SyntheticScene(gen_texture(derive_seed(spec.seed, 0x7E87ULL), 4 * spec.width, 4 * spec.height), spec);
}

/// Named benchmark scenes.
inline SceneSpec named_scene(const std::string& name, std::uint64_t seed) {
  SceneSpec s;
  s.name = name;
  s.seed = seed;
  if (name == "bench-drift") {
    s.count = 300;
    s.motion.tx = 2.0;
    s.motion.rotation = 0.002;
    s.transmission = 0.36;
    s.noise_sigma = 5.0;
    s.snow_density = 20;
  } else if (name == "bench-translate") {
    s.count = 60;
    s.motion.tx = 16.0;
    s.noise_sigma = 2.0;
  } else if (name == "static") {
    s.count = 30;
  } else {
    throw Error(Errc::BadParams, "unknown scene spec '" + name + "'");
  }
  return s;
}

/// Fraction of the w x h frame covered by the frame rectangle warped by `h`
/// (Sutherland-Hodgman clipping, shoelace area).
inline double overlap_fraction(const Homography& h, double w, double ht) {
  std::vector<Point2> poly;
  for (Point2 c : {Point2{0, 0}, Point2{w, 0}, Point2{w, ht}, Point2{0, ht}}) {
    const double den = h.m[6] * c.x + h.m[7] * c.y + h.m[8];
    if (!(den > 1e-12) || !h.finite()) throw Error(Errc::DegenerateModel, "frame corner maps behind the camera");
    poly.push_back(h.project(c));
  }
  const auto clip = [](const std::vector<Point2>& in, auto inside, auto cross) {
    std::vector<Point2> out;
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Point2 cur = in[i], prev = in[(i + in.size() - 1) % in.size()];
      const bool ci = inside(cur), pi = inside(prev);
      if (ci) {
        if (!pi) out.push_back(cross(prev, cur));
        out.push_back(cur);
      } else if (pi) {
        out.push_back(cross(prev, cur));
      }
    }
    return out;
  };
  const auto at_x = [](double x0) {
    return [x0](Point2 a, Point2 b) { return Point2{x0, a.y + (b.y - a.y) * (x0 - a.x) / (b.x - a.x)}; };
  };
  const auto at_y = [](double y0) {
    return [y0](Point2 a, Point2 b) { return Point2{a.x + (b.x - a.x) * (y0 - a.y) / (b.y - a.y), y0}; };
  };
  poly = clip(poly, [](Point2 p) { return p.x >= 0; }, at_x(0));
  if (!poly.empty()) poly = clip(poly, [w](Point2 p) { return p.x <= w; }, at_x(w));
  if (!poly.empty()) poly = clip(poly, [](Point2 p) { return p.y >= 0; }, at_y(0));
  if (!poly.empty()) poly = clip(poly, [ht](Point2 p) { return p.y <= ht; }, at_y(ht));
  if (poly.size() < 3) return 0.0;
  double area = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2 a = poly[i], b = poly[(i + 1) % poly.size()];
    area += a.x * b.y - b.x * a.y;
  }
  return std::clamp(std::fabs(area) / 2.0 / (w * ht), 0.0, 1.0);
}

/// Frames on disk plus the truth homographies.
struct GroundTruthSequence {
  FrameSequence frames;
  std::vector<Homography> h_to_base;
  double noise_sigma = 0;
  int snow_density = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline double round_significant(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return std::stod(buf);
}

}  // namespace detail

inline nlohmann::ordered_json truth_json(const SyntheticScene& scene) {
  const SceneSpec& s = scene.spec();
  nlohmann::ordered_json j;
  j["spec"] = s.name;
  j["seed"] = s.seed;
  j["width"] = s.width;
  j["height"] = s.height;
  j["count"] = s.count;
  j["transmission"] = s.transmission;
  j["veil"] = s.veil;
  j["noise_sigma"] = s.noise_sigma;
  j["snow_density"] = s.snow_density;
  j["motion"] = {{"tx", s.motion.tx},
                 {"ty", s.motion.ty},
                 {"rotation", s.motion.rotation},
                 {"scale", s.motion.scale},
                 {"perspective_jitter", s.motion.perspective_jitter}};
  auto hs = nlohmann::ordered_json::array();
  for (const auto& h : scene.h_to_base()) {
    auto row = nlohmann::ordered_json::array();
    for (double v : h.m) row.push_back(detail::round_significant(v, 12));
    hs.push_back(row);
  }
  j["h_to_base"] = hs;
  return j;
}

/// Renders every frame into `out_dir` as frame_%06d.ppm and writes truth.json.
inline GroundTruthSequence write_scene(const SyntheticScene& scene, const std::filesystem::path& out_dir,
                                       int threads = 1) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + out_dir.string());
  const SceneSpec& s = scene.spec();
  GroundTruthSequence gt;
  gt.frames.directory = out_dir;
  gt.frames.extension = scene.texture().channels == 1 ? ".pgm" : ".ppm";
  gt.frames.count = s.count;
  gt.frames.width = s.width;
  gt.frames.height = s.height;
  gt.frames.channels = scene.texture().channels;
  parallel_for(static_cast<std::size_t>(s.count), threads, [&](std::size_t k) {
    save_netpbm(scene.render(static_cast<int>(k)), gt.frames.frame_path(static_cast<int>(k)));
  });
  gt.h_to_base = scene.h_to_base();
  gt.noise_sigma = s.noise_sigma;
  gt.snow_density = s.snow_density;
  gt.seed = s.seed;

  std::ofstream out(out_dir / "truth.json", std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write truth.json");
  out << truth_json(scene).dump(2) << '\n';
  return gt;
}

}  // namespace seqmatch
