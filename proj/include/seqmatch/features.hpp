#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>
#include <vector>

#include "seqmatch/detail/brief_pattern.hpp"
#include "seqmatch/error.hpp"
#include "seqmatch/imgio.hpp"

namespace seqmatch {

struct Keypoint {
  float x = 0.f;  // level-0 pixel coordinates
  float y = 0.f;
  int level = 0;
  float score = 0.f;  // Harris response (FAST score straight out of detect_fast)
  float angle = 0.f;  // radians in [0, 2*pi)
};

/// 256-bit binary descriptor. Bit i lives in word i/64 at position i%64, so the
/// little-endian byte image puts bit i in byte i/8 at position i%8.
struct Descriptor {
  std::array<std::uint64_t, 4> words{};

  bool bit(int i) const { return (words[i >> 6] >> (i & 63)) & 1u; }
  void set(int i, bool v = true) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    words[i >> 6] = v ? (words[i >> 6] | mask) : (words[i >> 6] & ~mask);
  }

  std::array<std::uint8_t, 32> to_bytes() const {
    std::array<std::uint8_t, 32> out{};
    for (int i = 0; i < 32; ++i) out[i] = static_cast<std::uint8_t>(words[i / 8] >> (8 * (i % 8)));
    return out;
  }
  static Descriptor from_bytes(const std::uint8_t* bytes) {
    Descriptor d;
    for (int i = 0; i < 32; ++i) d.words[i / 8] |= std::uint64_t{bytes[i]} << (8 * (i % 8));
    return d;
  }

  friend bool operator==(const Descriptor&, const Descriptor&) = default;
};

struct FeatureSet {
  int frame_index = 0;
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor> descriptors;

  std::size_t size() const { return keypoints.size(); }
  bool empty() const { return keypoints.empty(); }
};

/// Detector configuration. `method` other than "orb" is accepted in config for
/// table parity but detection then fails with NotImplemented.
struct DetectorParams {
  std::string method = "orb";
  int max_features = 1000;
  int n_levels = 8;
  double scale_factor = 1.2;
  int fast_threshold = 20;
  int brisk_octaves = 4;
  double kaze_threshold = 0.001;

  void validate() const {
    if (max_features < 8) throw Error(Errc::BadParams, "max_features must be >= 8");
    if (n_levels < 1) throw Error(Errc::BadParams, "n_levels must be >= 1");
    if (!(scale_factor > 1.0)) throw Error(Errc::BadParams, "scale_factor must be > 1");
    if (fast_threshold < 0) throw Error(Errc::BadParams, "fast_threshold must be >= 0");
  }
};

struct Pyramid {
  std::vector<GrayFrame> levels;
};

namespace detail {

// Source taps of one output sample under area averaging.
struct AreaTap {
  int src;
  float weight;
};

inline std::vector<std::vector<AreaTap>> area_taps(int src_len, int dst_len) {
  const double ratio = static_cast<double>(src_len) / dst_len;
  std::vector<std::vector<AreaTap>> taps(dst_len);
  for (int o = 0; o < dst_len; ++o) {
    const double lo = o * ratio, hi = (o + 1) * ratio;
    for (int s = static_cast<int>(std::floor(lo)); s < hi && s < src_len; ++s) {
      const double overlap = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
      if (overlap > 1e-12) taps[o].push_back({s, static_cast<float>(overlap / ratio)});
    }
  }
  return taps;
}

inline GrayFrame resize_area(const GrayFrame& src, int w, int h) {
  if (w == src.width && h == src.height) return src;
  const auto tx = area_taps(src.width, w);
  const auto ty = area_taps(src.height, h);
  std::vector<float> rows(static_cast<std::size_t>(src.height) * w);
  for (int y = 0; y < src.height; ++y) {
    const std::uint8_t* in = &src.data[static_cast<std::size_t>(y) * src.width];
    for (int x = 0; x < w; ++x) {
      float s = 0.f;
      for (const auto& t : tx[x]) s += t.weight * in[t.src];
      rows[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
  GrayFrame out(w, h, 0, src.index);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float s = 0.f;
      for (const auto& t : ty[y]) s += t.weight * rows[static_cast<std::size_t>(t.src) * w + x];
      out.at(x, y) = clamp_u8(s);
    }
  return out;
}

inline int level_extent(int dim, double scale_factor, int level) {
  return static_cast<int>(std::floor(dim / std::pow(scale_factor, level) + 1e-9));
}

// Bresenham circle of radius 3, clockwise from 12 o'clock.
inline constexpr std::array<std::array<int, 2>, 16> kFastCircle = {{
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
    {0, 3}, {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3},
}};

inline constexpr int kPatchRadius = 15;

// Half-widths of the circular orientation patch per row offset.
inline const std::array<int, 2 * kPatchRadius + 1>& patch_half_widths() {
  static const auto table = [] {
    std::array<int, 2 * kPatchRadius + 1> t{};
    for (int v = -kPatchRadius; v <= kPatchRadius; ++v)
      t[v + kPatchRadius] = static_cast<int>(std::floor(std::sqrt(double(kPatchRadius * kPatchRadius - v * v))));
    return t;
  }();
  return table;
}

}  // namespace detail

/// Level k has extent floor(dim / scale_factor^k); levels are area-averaged
/// from level 0.
inline Pyramid build_pyramid(const GrayFrame& img, int n_levels, double scale_factor) {
  if (n_levels < 1 || !(scale_factor > 1.0)) throw Error(Errc::BadParams, "bad pyramid parameters");
  const int top_w = detail::level_extent(img.width, scale_factor, n_levels - 1);
  const int top_h = detail::level_extent(img.height, scale_factor, n_levels - 1);
  if (std::min(top_w, top_h) < 32) throw Error(Errc::TooSmall, "top pyramid level below 32 px");
  Pyramid pyr;
  pyr.levels.push_back(img);
  for (int k = 1; k < n_levels; ++k)
    pyr.levels.push_back(detail::resize_area(img, detail::level_extent(img.width, scale_factor, k),
                                             detail::level_extent(img.height, scale_factor, k)));
  return pyr;
}

/// FAST-9 segment test on the radius-3 circle with 3x3 non-maximum
/// suppression. Suppression ranks by the sum-of-absolute-differences score;
/// equal scores keep the earlier pixel in raster order. Keypoints are returned
/// in raster order with `score` holding that value.
inline std::vector<Keypoint> detect_fast(const GrayFrame& img, int threshold) {
  std::vector<Keypoint> out;
  const int w = img.width, h = img.height;
  if (w < 7 || h < 7) return out;

  std::array<int, 16> offsets{};
  for (int i = 0; i < 16; ++i) offsets[i] = detail::kFastCircle[i][1] * w + detail::kFastCircle[i][0];

  std::vector<int> score(static_cast<std::size_t>(w) * h, 0);
  for (int y = 3; y < h - 3; ++y) {
    for (int x = 3; x < w - 3; ++x) {
      const std::uint8_t* p = &img.data[static_cast<std::size_t>(y) * w + x];
      const int c = *p;
      const int hi = c + threshold, lo = c - threshold;
      int bright_compass = 0, dark_compass = 0;
      for (int i = 0; i < 16; i += 4) {
        const int v = p[offsets[i]];
        bright_compass += v > hi;
        dark_compass += v < lo;
      }
      if (bright_compass < 2 && dark_compass < 2) continue;

      // Longest circular run of bright and of dark pixels.
      std::uint32_t bright = 0, dark = 0;
      int sad_bright = 0, sad_dark = 0;
      for (int i = 0; i < 16; ++i) {
        const int v = p[offsets[i]];
        if (v > hi) {
          bright |= 1u << i;
          sad_bright += v - c - threshold;
        } else if (v < lo) {
          dark |= 1u << i;
          sad_dark += c - v - threshold;
        }
      }
      const auto has_run9 = [](std::uint32_t mask) {
        std::uint32_t m = mask | (mask << 16);
        for (int k = 1; k < 9; ++k) m &= m >> 1;  // bit j set iff bits j..j+8 set
        return (m & 0xFFFFu) != 0;
      };
      // Every member of a qualifying set contributes at least 1, so s > 0 marks a corner.
      int s = 0;
      if (has_run9(bright)) s = std::max(s, sad_bright);
      if (has_run9(dark)) s = std::max(s, sad_dark);
      score[static_cast<std::size_t>(y) * w + x] = s;
    }
  }

  for (int y = 3; y < h - 3; ++y) {
    for (int x = 3; x < w - 3; ++x) {
      const int s = score[static_cast<std::size_t>(y) * w + x];
      if (s == 0) continue;
      bool keep = true;
      for (int dy = -1; dy <= 1 && keep; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int q = score[static_cast<std::size_t>(y + dy) * w + (x + dx)];
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (q > s || (q == s && earlier)) {
            keep = false;
            break;
          }
        }
      if (keep) out.push_back({static_cast<float>(x), static_cast<float>(y), 0, static_cast<float>(s), 0.f});
    }
  }
  return out;
}

/// Harris response det(M) - 0.04 trace(M)^2, M summed over a 7x7 window of
/// Sobel gradients (normalised to [-1, 1]) around the rounded position.
inline float harris_response(const GrayFrame& img, float fx, float fy) {
  const int cx = static_cast<int>(std::lround(fx)), cy = static_cast<int>(std::lround(fy));
  double sxx = 0, syy = 0, sxy = 0;
  for (int y = cy - 3; y <= cy + 3; ++y)
    for (int x = cx - 3; x <= cx + 3; ++x) {
      const auto I = [&](int dx, int dy) { return static_cast<int>(img.at_clamped(x + dx, y + dy)); };
      const int gx = (I(1, -1) + 2 * I(1, 0) + I(1, 1)) - (I(-1, -1) + 2 * I(-1, 0) + I(-1, 1));
      const int gy = (I(-1, 1) + 2 * I(0, 1) + I(1, 1)) - (I(-1, -1) + 2 * I(0, -1) + I(1, -1));
      const double nx = gx / 1020.0, ny = gy / 1020.0;
      sxx += nx * nx;
      syy += ny * ny;
      sxy += nx * ny;
    }
  const double det = sxx * syy - sxy * sxy;
  const double tr = sxx + syy;
  return static_cast<float>(det - 0.04 * tr * tr);
}

/// Scores each keypoint by Harris response and keeps the best `n`, ordered by
/// (score desc, y asc, x asc).
inline std::vector<Keypoint> harris_retain(const GrayFrame& img, std::vector<Keypoint> keypoints, int n) {
  if (n < 1) throw Error(Errc::BadParams, "retain count must be >= 1");
  for (auto& kp : keypoints) kp.score = harris_response(img, kp.x, kp.y);
  std::stable_sort(keypoints.begin(), keypoints.end(), [](const Keypoint& a, const Keypoint& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  if (keypoints.size() > static_cast<std::size_t>(n)) keypoints.resize(static_cast<std::size_t>(n));
  return keypoints;
}

/// Intensity-centroid orientation atan2(m01, m10) over the radius-15 disc,
/// in [0, 2*pi). Zero first moments give 0.
inline float orientation(const GrayFrame& img, const Keypoint& kp) {
  const int cx = static_cast<int>(std::lround(kp.x)), cy = static_cast<int>(std::lround(kp.y));
  const auto& half = detail::patch_half_widths();
  std::int64_t m10 = 0, m01 = 0;
  const bool inside = cx - detail::kPatchRadius >= 0 && cy - detail::kPatchRadius >= 0 &&
                      cx + detail::kPatchRadius < img.width && cy + detail::kPatchRadius < img.height;
  for (int v = -detail::kPatchRadius; v <= detail::kPatchRadius; ++v) {
    const int hw = half[v + detail::kPatchRadius];
    std::int64_t row_sum = 0;
    for (int u = -hw; u <= hw; ++u) {
      const int I = inside ? img.at(cx + u, cy + v) : img.at_clamped(cx + u, cy + v);
      m10 += static_cast<std::int64_t>(u) * I;
      row_sum += I;
    }
    m01 += static_cast<std::int64_t>(v) * row_sum;
  }
  if (m10 == 0 && m01 == 0) return 0.f;
  double a = std::atan2(static_cast<double>(m01), static_cast<double>(m10));
  if (a < 0) a += 2.0 * std::numbers::pi;
  auto angle = static_cast<float>(a);
  if (angle >= static_cast<float>(2.0 * std::numbers::pi)) angle = 0.f;
  return angle;
}

/// 5x5 mean filter with replicated border.
inline GrayFrame box_blur5(const GrayFrame& img) {
  const int w = img.width, h = img.height;
  std::vector<int> rows(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int s = 0;
      for (int d = -2; d <= 2; ++d) s += img.at_clamped(x + d, y);
      rows[static_cast<std::size_t>(y) * w + x] = s;
    }
  GrayFrame out(w, h, 0, img.index);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int s = 0;
      for (int d = -2; d <= 2; ++d) s += rows[static_cast<std::size_t>(std::clamp(y + d, 0, h - 1)) * w + x];
      out.at(x, y) = static_cast<std::uint8_t>((s + 12) / 25);
    }
  return out;
}

/// rBRIEF on an already smoothed image: each pattern pair is rotated by
/// `angle`, rounded to the pixel grid and compared; bit = I(p1) < I(p2).
inline Descriptor describe_smoothed(const GrayFrame& smoothed, float x, float y, float angle) {
  const int cx = static_cast<int>(std::lround(x)), cy = static_cast<int>(std::lround(y));
  const double c = std::cos(static_cast<double>(angle)), s = std::sin(static_cast<double>(angle));
  const auto sample = [&](int px, int py) {
    const int rx = static_cast<int>(std::lround(c * px - s * py));
    const int ry = static_cast<int>(std::lround(s * px + c * py));
    return smoothed.at_clamped(cx + rx, cy + ry);
  };
  Descriptor d;
  for (int i = 0; i < static_cast<int>(detail::kBriefPattern.size()); ++i) {
    const auto& pp = detail::kBriefPattern[static_cast<std::size_t>(i)];
    if (sample(pp.x1, pp.y1) < sample(pp.x2, pp.y2)) d.set(i);
  }
  return d;
}

/// Describes `kp` (coordinates in `img`'s own frame) after 5x5 box smoothing.
inline Descriptor describe(const GrayFrame& img, const Keypoint& kp) {
  return describe_smoothed(box_blur5(img), kp.x, kp.y, kp.angle);
}

/// Number of pyramid levels actually used for an image: the requested count,
/// truncated so that the top level keeps at least 32 px.
inline int usable_levels(int width, int height, const DetectorParams& p) {
  int levels = 0;
  while (levels < p.n_levels &&
         std::min(detail::level_extent(width, p.scale_factor, levels),
                  detail::level_extent(height, p.scale_factor, levels)) >= 32)
    ++levels;
  return levels;
}

/// Per-level keypoint quotas proportional to level area; the rounding
/// remainder goes to level 0.
inline std::vector<int> level_quotas(const Pyramid& pyr, int max_features) {
  double total = 0;
  for (const auto& l : pyr.levels) total += static_cast<double>(l.width) * l.height;
  std::vector<int> quota;
  int assigned = 0;
  for (const auto& l : pyr.levels) {
    quota.push_back(static_cast<int>(std::floor(max_features * (static_cast<double>(l.width) * l.height) / total)));
    assigned += quota.back();
  }
  quota.front() += max_features - assigned;
  return quota;
}

/// Multi-scale ORB-style extraction: FAST + Harris retention per level,
/// intensity-centroid orientation and rBRIEF on the smoothed level image.
inline FeatureSet detect_and_describe(const GrayFrame& img, const DetectorParams& p) {
  p.validate();
  if (p.method != "orb")
    throw Error(Errc::NotImplemented, "detector '" + p.method + "' is configuration-only");
  const int levels = usable_levels(img.width, img.height, p);
  if (levels == 0) throw Error(Errc::TooSmall, "image below 32 px");
  const Pyramid pyr = build_pyramid(img, levels, p.scale_factor);
  const auto quota = level_quotas(pyr, p.max_features);

  FeatureSet fs;
  fs.frame_index = img.index;
  for (int k = 0; k < levels; ++k) {
    const GrayFrame& level = pyr.levels[static_cast<std::size_t>(k)];
    if (quota[static_cast<std::size_t>(k)] < 1) continue;
    auto kps = detect_fast(level, p.fast_threshold);
    if (kps.empty()) continue;
    kps = harris_retain(level, std::move(kps), quota[static_cast<std::size_t>(k)]);
    const GrayFrame smoothed = box_blur5(level);
    const double sx = static_cast<double>(img.width) / level.width;
    const double sy = static_cast<double>(img.height) / level.height;
    for (auto kp : kps) {
      kp.angle = orientation(level, kp);
      fs.descriptors.push_back(describe_smoothed(smoothed, kp.x, kp.y, kp.angle));
      kp.level = k;
      kp.x = static_cast<float>((kp.x + 0.5) * sx - 0.5);
      kp.y = static_cast<float>((kp.y + 0.5) * sy - 0.5);
      fs.keypoints.push_back(kp);
    }
  }
  return fs;
}

// ---------------------------------------------------------------------------
// Feature cache: "FBFS", version byte, u32 count, then per keypoint
// f32 x, y, angle, score, u8 level and 32 descriptor bytes. Little-endian.

inline constexpr std::uint8_t kFeatureCacheVersion = 1;

inline std::vector<std::uint8_t> encode_feature_set(const FeatureSet& fs) {
  std::vector<std::uint8_t> out{'F', 'B', 'F', 'S', kFeatureCacheVersion};
  const auto put_u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put_u32(static_cast<std::uint32_t>(fs.size()));
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const Keypoint& kp = fs.keypoints[i];
    for (float f : {kp.x, kp.y, kp.angle, kp.score}) put_u32(std::bit_cast<std::uint32_t>(f));
    out.push_back(static_cast<std::uint8_t>(kp.level));
    const auto bytes = fs.descriptors[i].to_bytes();
    out.insert(out.end(), bytes.begin(), bytes.end());
  }
  return out;
}

inline FeatureSet decode_feature_set(const std::vector<std::uint8_t>& bytes, int frame_index = 0) {
  constexpr std::size_t kRecord = 4 * 4 + 1 + 32;
  if (bytes.size() < 9 || bytes[0] != 'F' || bytes[1] != 'B' || bytes[2] != 'F' || bytes[3] != 'S')
    throw Error(Errc::BadMagic, "not a feature cache");
  if (bytes[4] != kFeatureCacheVersion) throw Error(Errc::BadMagic, "unsupported feature cache version");
  const auto get_u32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes[at + i]} << (8 * i);
    return v;
  };
  const std::uint32_t count = get_u32(5);
  if (bytes.size() != 9 + count * kRecord) throw Error(Errc::TruncatedBody, "feature cache length mismatch");
  FeatureSet fs;
  fs.frame_index = frame_index;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = 9 + i * kRecord;
    Keypoint kp;
    kp.x = std::bit_cast<float>(get_u32(at));
    kp.y = std::bit_cast<float>(get_u32(at + 4));
    kp.angle = std::bit_cast<float>(get_u32(at + 8));
    kp.score = std::bit_cast<float>(get_u32(at + 12));
    kp.level = bytes[at + 16];
    fs.keypoints.push_back(kp);
    fs.descriptors.push_back(Descriptor::from_bytes(&bytes[at + 17]));
  }
  return fs;
}

inline void write_feature_cache(const FeatureSet& fs, const std::filesystem::path& path) {
  const auto bytes = encode_feature_set(fs);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "write failed: " + path.string());
}

inline FeatureSet read_feature_cache(const std::filesystem::path& path, int frame_index = 0) {
  return decode_feature_set(detail::read_file_bytes(path), frame_index);
}

}  // namespace seqmatch
