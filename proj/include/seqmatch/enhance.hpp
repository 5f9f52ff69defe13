#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "seqmatch/error.hpp"
#include "seqmatch/imgio.hpp"
#include "seqmatch/parallel.hpp"

namespace seqmatch {

struct ClaheParams {
  int tiles_x = 8;
  int tiles_y = 8;
  double clip_limit = 0.01;  // fraction of tile pixel count

  void validate() const {
    if (tiles_x < 1 || tiles_y < 1) throw Error(Errc::BadParams, "tile grid must be at least 1x1");
    if (!(clip_limit > 0.0)) throw Error(Errc::BadParams, "clip_limit must be positive");
  }
};

struct FusionParams {
  int pyramid_levels = 3;
  double weight_epsilon = 1e-3;
  ClaheParams contrast{};  // parameters of the contrast-enhanced input

  void validate(int width, int height) const {
    if (pyramid_levels < 2) throw Error(Errc::BadParams, "pyramid_levels must be >= 2");
    if (!(weight_epsilon > 0.0)) throw Error(Errc::BadParams, "weight_epsilon must be positive");
    if ((std::min(width, height) >> (pyramid_levels - 1)) < 2)
      throw Error(Errc::BadParams, "image too small for pyramid depth");
    contrast.validate();
  }
};

struct HeResult {
  GrayFrame image;
  bool degenerate = false;  // all pixels equal; image returned unchanged
};

using Histogram = std::array<std::uint32_t, 256>;
using Lut = std::array<std::uint8_t, 256>;

namespace detail {

/// Histogram-equalization lookup table:
///   map(v) = round(255 * (cdf(v) - cdf_min) / (N - cdf_min)),
/// cdf_min being the smallest nonzero cdf value. A single-valued histogram
/// yields the identity table.
inline Lut equalization_lut(const Histogram& hist, bool* degenerate = nullptr) {
  std::uint64_t total = 0;
  for (auto c : hist) total += c;
  std::uint64_t cdf_min = 0;
  for (auto c : hist) {
    if (c != 0) {
      cdf_min = c;
      break;
    }
  }
  Lut lut{};
  if (total == 0 || cdf_min == total) {
    for (int v = 0; v < 256; ++v) lut[v] = static_cast<std::uint8_t>(v);
    if (degenerate) *degenerate = true;
    return lut;
  }
  if (degenerate) *degenerate = false;
  const double denom = static_cast<double>(total - cdf_min);
  std::uint64_t cdf = 0;
  for (int v = 0; v < 256; ++v) {
    cdf += hist[v];
    const double num = cdf < cdf_min ? 0.0 : static_cast<double>(cdf - cdf_min);
    lut[v] = clamp_u8(255.0 * num / denom);
  }
  return lut;
}

/// Clips bins at `limit` and spreads the excess evenly; the remainder that
/// does not divide by 256 goes one count at a time to evenly strided bins.
inline void clip_histogram(Histogram& hist, std::uint32_t limit) {
  std::uint64_t excess = 0;
  for (auto& c : hist) {
    if (c > limit) {
      excess += c - limit;
      c = limit;
    }
  }
  const auto batch = static_cast<std::uint32_t>(excess / 256);
  const auto residual = static_cast<std::uint32_t>(excess % 256);
  for (auto& c : hist) c += batch;
  if (residual != 0) {
    const std::uint32_t step = std::max<std::uint32_t>(256 / residual, 1);
    for (std::uint32_t i = 0, given = 0; i < 256 && given < residual; i += step, ++given) ++hist[i];
  }
}

struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  FloatImage() = default;
  FloatImage(int w, int h, float fill = 0.f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  float at_clamped(int x, int y) const {
    return at(std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1));
  }
};

// 5-tap binomial kernel, separable, replicated border.
inline FloatImage binomial_blur(const FloatImage& src) {
  static constexpr float k[5] = {1.f / 16, 4.f / 16, 6.f / 16, 4.f / 16, 1.f / 16};
  FloatImage tmp(src.width, src.height), out(src.width, src.height);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) {
      float s = 0.f;
      for (int i = -2; i <= 2; ++i) s += k[i + 2] * src.at_clamped(x + i, y);
      tmp.at(x, y) = s;
    }
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) {
      float s = 0.f;
      for (int i = -2; i <= 2; ++i) s += k[i + 2] * tmp.at_clamped(x, y + i);
      out.at(x, y) = s;
    }
  return out;
}

inline FloatImage pyr_down(const FloatImage& src) {
  const FloatImage blurred = binomial_blur(src);
  FloatImage out((src.width + 1) / 2, (src.height + 1) / 2);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out.at(x, y) = blurred.at(2 * x, 2 * y);
  return out;
}

// Zero-insertion upsample to (w, h) followed by the binomial kernel scaled by 4.
inline FloatImage pyr_up(const FloatImage& src, int w, int h) {
  FloatImage sparse(w, h);
  for (int y = 0; y < src.height && 2 * y < h; ++y)
    for (int x = 0; x < src.width && 2 * x < w; ++x) sparse.at(2 * x, 2 * y) = 4.f * src.at(x, y);
  return binomial_blur(sparse);
}

inline std::vector<FloatImage> gaussian_pyramid(const FloatImage& img, int levels) {
  std::vector<FloatImage> pyr{img};
  for (int l = 1; l < levels; ++l) pyr.push_back(pyr_down(pyr.back()));
  return pyr;
}

inline std::vector<FloatImage> laplacian_pyramid(const FloatImage& img, int levels) {
  auto pyr = gaussian_pyramid(img, levels);
  for (int l = 0; l + 1 < levels; ++l) {
    const FloatImage up = pyr_up(pyr[l + 1], pyr[l].width, pyr[l].height);
    for (std::size_t i = 0; i < up.data.size(); ++i) pyr[l].data[i] -= up.data[i];
  }
  return pyr;
}

inline FloatImage collapse_laplacian(std::vector<FloatImage> pyr) {
  for (int l = static_cast<int>(pyr.size()) - 2; l >= 0; --l) {
    const FloatImage up = pyr_up(pyr[l + 1], pyr[l].width, pyr[l].height);
    for (std::size_t i = 0; i < up.data.size(); ++i) pyr[l].data[i] += up.data[i];
  }
  return pyr.front();
}

inline FloatImage channel_plane(const Frame& f, int c, float scale = 1.f) {
  FloatImage out(f.width, f.height);
  for (std::size_t i = 0; i < f.pixel_count(); ++i)
    out.data[i] = scale * f.data[i * f.channels + c];
  return out;
}

// Shifts all three channels by the luma change, which keeps B-Y and R-Y.
inline Frame replace_luma(const Frame& rgb, const GrayFrame& old_luma, const GrayFrame& new_luma) {
  Frame out = rgb;
  for (std::size_t i = 0; i < rgb.pixel_count(); ++i) {
    const int delta = static_cast<int>(new_luma.data[i]) - static_cast<int>(old_luma.data[i]);
    for (int c = 0; c < 3; ++c) out.data[3 * i + c] = clamp_u8(rgb.data[3 * i + c] + delta);
  }
  return out;
}

}  // namespace detail

/// Global histogram equalization through the image CDF.
inline HeResult global_he(const GrayFrame& img) {
  Histogram hist{};
  for (auto v : img.data) ++hist[v];
  HeResult result;
  const Lut lut = detail::equalization_lut(hist, &result.degenerate);
  result.image = img;
  if (result.degenerate) return result;
  for (auto& v : result.image.data) v = lut[v];
  return result;
}

namespace detail {

// Tile boundaries: tile i spans [start(i), start(i+1)).
inline int tile_start(int i, int tiles, int extent) {
  return static_cast<int>(static_cast<long long>(i) * extent / tiles);
}

// For coordinate p, the two neighbouring tile indices and the weight of the
// second one. Outside the outermost tile centres the border tile is replicated.
struct Blend {
  int lo, hi;
  double w_hi;
};

inline std::vector<Blend> tile_blend_table(int tiles, int extent) {
  std::vector<double> centre(tiles);
  for (int i = 0; i < tiles; ++i)
    centre[i] = 0.5 * (tile_start(i, tiles, extent) + tile_start(i + 1, tiles, extent) - 1);
  std::vector<Blend> table(extent);
  for (int p = 0; p < extent; ++p) {
    if (p <= centre.front()) {
      table[p] = {0, 0, 0.0};
    } else if (p >= centre.back()) {
      table[p] = {tiles - 1, tiles - 1, 0.0};
    } else {
      int i = 0;
      while (centre[i + 1] < p) ++i;
      table[p] = {i, i + 1, (p - centre[i]) / (centre[i + 1] - centre[i])};
    }
  }
  return table;
}

}  // namespace detail

/// Contrast-limited adaptive histogram equalization: clipped per-tile
/// equalization, bilinearly interpolated between tile centres.
inline GrayFrame clahe(const GrayFrame& img, const ClaheParams& p) {
  p.validate();
  if (img.width < p.tiles_x || img.height < p.tiles_y)
    throw Error(Errc::BadParams, "image smaller than tile grid");

  std::vector<Lut> luts(static_cast<std::size_t>(p.tiles_x) * p.tiles_y);
  for (int ty = 0; ty < p.tiles_y; ++ty) {
    const int y0 = detail::tile_start(ty, p.tiles_y, img.height);
    const int y1 = detail::tile_start(ty + 1, p.tiles_y, img.height);
    for (int tx = 0; tx < p.tiles_x; ++tx) {
      const int x0 = detail::tile_start(tx, p.tiles_x, img.width);
      const int x1 = detail::tile_start(tx + 1, p.tiles_x, img.width);
      Histogram hist{};
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) ++hist[img.at(x, y)];
      const double tile_pixels = static_cast<double>(x1 - x0) * (y1 - y0);
      const double limit = std::max(1.0, std::floor(p.clip_limit * tile_pixels));
      if (limit < tile_pixels) detail::clip_histogram(hist, static_cast<std::uint32_t>(limit));
      luts[static_cast<std::size_t>(ty) * p.tiles_x + tx] = detail::equalization_lut(hist);
    }
  }

  const auto bx = detail::tile_blend_table(p.tiles_x, img.width);
  const auto by = detail::tile_blend_table(p.tiles_y, img.height);
  GrayFrame out(img.width, img.height, 0, img.index);
  for (int y = 0; y < img.height; ++y) {
    const auto& rows = by[y];
    for (int x = 0; x < img.width; ++x) {
      const auto& cols = bx[x];
      const std::uint8_t v = img.at(x, y);
      const auto lut = [&](int tyy, int txx) {
        return static_cast<double>(luts[static_cast<std::size_t>(tyy) * p.tiles_x + txx][v]);
      };
      if (rows.lo == rows.hi && cols.lo == cols.hi) {
        out.at(x, y) = static_cast<std::uint8_t>(lut(rows.lo, cols.lo));
        continue;
      }
      const double top = (1.0 - cols.w_hi) * lut(rows.lo, cols.lo) + cols.w_hi * lut(rows.lo, cols.hi);
      const double bottom = (1.0 - cols.w_hi) * lut(rows.hi, cols.lo) + cols.w_hi * lut(rows.hi, cols.hi);
      out.at(x, y) = clamp_u8((1.0 - rows.w_hi) * top + rows.w_hi * bottom);
    }
  }
  return out;
}

/// Scales each channel so that all channel means meet at their common average.
inline Frame gray_world_wb(const Frame& img) {
  img.validate();
  if (img.channels != 3) throw Error(Errc::BadParams, "gray-world balance needs a 3-channel frame");
  std::array<double, 3> mean{};
  for (std::size_t i = 0; i < img.pixel_count(); ++i)
    for (int c = 0; c < 3; ++c) mean[c] += img.data[3 * i + c];
  for (auto& m : mean) m /= static_cast<double>(img.pixel_count());
  for (double m : mean)
    if (m == 0.0) throw Error(Errc::DegenerateImage, "channel mean is zero");
  const double target = (mean[0] + mean[1] + mean[2]) / 3.0;
  Frame out = img;
  for (std::size_t i = 0; i < img.pixel_count(); ++i)
    for (int c = 0; c < 3; ++c) out.data[3 * i + c] = clamp_u8(img.data[3 * i + c] * (target / mean[c]));
  return out;
}

/// Multi-scale blend: level l of the output is sum_k G_l(weight_k) * L_l(input_k).
/// Weights are used as given (callers normalise).
inline detail::FloatImage pyramid_fuse(std::span<const detail::FloatImage> inputs,
                                       std::span<const detail::FloatImage> weights, int levels) {
  if (inputs.empty() || inputs.size() != weights.size())
    throw Error(Errc::BadParams, "need one weight map per input");
  std::vector<detail::FloatImage> fused;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto lap = detail::laplacian_pyramid(inputs[k], levels);
    const auto gw = detail::gaussian_pyramid(weights[k], levels);
    if (fused.empty()) {
      fused = lap;
      for (auto& level : fused) std::fill(level.data.begin(), level.data.end(), 0.f);
    }
    for (int l = 0; l < levels; ++l)
      for (std::size_t i = 0; i < fused[l].data.size(); ++i) fused[l].data[i] += gw[l].data[i] * lap[l].data[i];
  }
  return detail::collapse_laplacian(std::move(fused));
}

/// Per-pixel weight map of one fusion input: |Laplacian| contrast, saliency
/// |L - blur(L)| and well-exposedness exp(-(L-0.5)^2 / (2*0.25^2)) on luma in [0,1].
inline detail::FloatImage fusion_weight(const Frame& input) {
  const GrayFrame luma = to_grayscale(input);
  detail::FloatImage l(luma.width, luma.height);
  for (std::size_t i = 0; i < luma.data.size(); ++i) l.data[i] = luma.data[i] / 255.f;
  const detail::FloatImage blurred = detail::binomial_blur(l);
  detail::FloatImage w(l.width, l.height);
  for (int y = 0; y < l.height; ++y)
    for (int x = 0; x < l.width; ++x) {
      const float v = l.at(x, y);
      const float lap = l.at_clamped(x - 1, y) + l.at_clamped(x + 1, y) + l.at_clamped(x, y - 1) +
                        l.at_clamped(x, y + 1) - 4.f * v;
      const float contrast = std::fabs(lap);
      const float saliency = std::fabs(v - blurred.at(x, y));
      const float exposed = std::exp(-(v - 0.5f) * (v - 0.5f) / (2.f * 0.25f * 0.25f));
      w.at(x, y) = contrast + saliency + exposed;
    }
  return w;
}

/// Fuses same-shaped frames with normalised weights (w_k + eps) / (sum_j w_j + K*eps).
inline Frame fuse_frames(std::span<const Frame> inputs, const FusionParams& p) {
  if (inputs.empty()) throw Error(Errc::BadParams, "nothing to fuse");
  const Frame& ref = inputs.front();
  for (const auto& f : inputs)
    if (!f.same_shape(ref)) throw Error(Errc::DimensionMismatch, "fusion inputs differ in shape");
  p.validate(ref.width, ref.height);

  std::vector<detail::FloatImage> weights;
  for (const auto& f : inputs) weights.push_back(fusion_weight(f));
  const auto eps = static_cast<float>(p.weight_epsilon);
  const auto k = static_cast<float>(inputs.size());
  for (std::size_t i = 0; i < ref.pixel_count(); ++i) {
    float sum = 0.f;
    for (const auto& w : weights) sum += w.data[i];
    for (auto& w : weights) w.data[i] = (w.data[i] + eps) / (sum + k * eps);
  }

  Frame out(ref.width, ref.height, ref.channels, std::uint8_t{0}, ref.index);
  for (int c = 0; c < ref.channels; ++c) {
    std::vector<detail::FloatImage> planes;
    for (const auto& f : inputs) planes.push_back(detail::channel_plane(f, c));
    const auto fused = pyramid_fuse(planes, weights, p.pyramid_levels);
    for (std::size_t i = 0; i < ref.pixel_count(); ++i)
      out.data[i * ref.channels + c] = clamp_u8(fused.data[i]);
  }
  return out;
}

/// Applies CLAHE to the luma of a colour frame; chroma differences are kept.
inline Frame clahe_luma(const Frame& img, const ClaheParams& p) {
  const GrayFrame luma = to_grayscale(img);
  GrayFrame eq = clahe(luma, p);
  if (img.channels == 1) {
    eq.index = img.index;
    return eq.to_frame();
  }
  return detail::replace_luma(img, luma, eq);
}

inline Frame global_he_luma(const Frame& img) {
  const GrayFrame luma = to_grayscale(img);
  HeResult eq = global_he(luma);
  if (img.channels == 1) {
    eq.image.index = img.index;
    return eq.image.to_frame();
  }
  if (eq.degenerate) return img;
  return detail::replace_luma(img, luma, eq.image);
}

/// Two-input fusion: a gray-world balanced version and a CLAHE contrast
/// version of it, blended with contrast/saliency/exposedness weights.
inline Frame fusion_enhance(const Frame& img, const FusionParams& p) {
  img.validate();
  if (img.channels != 3) throw Error(Errc::BadParams, "fusion needs a 3-channel frame");
  p.validate(img.width, img.height);
  const Frame balanced = gray_world_wb(img);
  const Frame contrast = clahe_luma(balanced, p.contrast);
  const std::array<Frame, 2> inputs{balanced, contrast};
  Frame out = fuse_frames(inputs, p);
  out.index = img.index;
  return out;
}

/// An enhancer chosen by name (`identity|ghe|clahe|grayworld|fusion`) with
/// key=value parameters.
struct EnhancerSpec {
  std::string name = "identity";
  std::map<std::string, std::string> params;

  static EnhancerSpec parse(const std::string& name, const std::map<std::string, std::string>& params = {}) {
    static const std::array<const char*, 5> known = {"identity", "ghe", "clahe", "grayworld", "fusion"};
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw Error(Errc::BadParams, "unknown enhancer '" + name + "'");
    EnhancerSpec spec{name, params};
    spec.clahe_params();
    spec.fusion_params();
    return spec;
  }

  ClaheParams clahe_params() const {
    ClaheParams p;
    if (auto it = params.find("tiles"); it != params.end()) {
      const auto x = it->second.find('x');
      try {
        if (x == std::string::npos) {
          p.tiles_x = p.tiles_y = std::stoi(it->second);
        } else {
          p.tiles_x = std::stoi(it->second.substr(0, x));
          p.tiles_y = std::stoi(it->second.substr(x + 1));
        }
      } catch (const std::exception&) {
        throw Error(Errc::BadParams, "tiles must look like 8x8");
      }
    }
    if (auto it = params.find("clip"); it != params.end()) p.clip_limit = to_double(it->second, "clip");
    p.validate();
    return p;
  }

  FusionParams fusion_params() const {
    FusionParams p;
    p.contrast = clahe_params();
    if (auto it = params.find("levels"); it != params.end())
      p.pyramid_levels = static_cast<int>(to_double(it->second, "levels"));
    if (auto it = params.find("eps"); it != params.end()) p.weight_epsilon = to_double(it->second, "eps");
    if (p.pyramid_levels < 2) throw Error(Errc::BadParams, "pyramid_levels must be >= 2");
    if (!(p.weight_epsilon > 0.0)) throw Error(Errc::BadParams, "weight_epsilon must be positive");
    return p;
  }

  /// Canonical label, e.g. `clahe(clip=0.01,tiles=8x8)`.
  std::string label() const {
    std::string s = name;
    if (!params.empty()) {
      s += '(';
      bool first = true;
      for (const auto& [k, v] : params) {
        if (!first) s += ',';
        s += k + '=' + v;
        first = false;
      }
      s += ')';
    }
    return s;
  }

  Frame apply(const Frame& f) const {
    Frame out;
    if (name == "identity") {
      out = f;
    } else if (name == "ghe") {
      out = global_he_luma(f);
    } else if (name == "clahe") {
      out = clahe_luma(f, clahe_params());
    } else if (name == "grayworld") {
      out = gray_world_wb(f);
    } else if (name == "fusion") {
      out = fusion_enhance(f, fusion_params());
    } else {
      throw Error(Errc::BadParams, "unknown enhancer '" + name + "'");
    }
    out.index = f.index;
    return out;
  }

 private:
  static double to_double(const std::string& s, const char* key) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(Errc::BadParams, std::string("bad value for ") + key + ": " + s);
    }
  }
};

/// Enhances every frame of `seq` into `out_dir`, keeping indices and names.
/// Output bytes do not depend on `threads`.
inline FrameSequence apply_enhancer(const FrameSequence& seq, const EnhancerSpec& enhancer,
                                    const std::filesystem::path& out_dir, int threads = 1) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + out_dir.string());
  FrameSequence out = seq;
  out.directory = out_dir;
  parallel_for(static_cast<std::size_t>(seq.count), threads, [&](std::size_t i) {
    const Frame src = seq.load(static_cast<int>(i));
    const Frame dst = enhancer.apply(src);
    if (dst.width != src.width || dst.height != src.height || dst.channels != src.channels)
      throw Error(Errc::DimensionMismatch, "enhancer changed frame shape");
    save_netpbm(dst, out.frame_path(static_cast<int>(i)));
  });
  return out;
}

}  // namespace seqmatch
