#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "seqmatch/error.hpp"
#include "seqmatch/features.hpp"
#include "seqmatch/imgio.hpp"
#include "seqmatch/matchgeom.hpp"
#include "seqmatch/parallel.hpp"

namespace seqmatch {

// ---------------------------------------------------------------------------
// Local matching stability

struct OffsetResult {
  int offset = 0;
  int n_matches = 0;
  int n_inliers = 0;
  double inlier_ratio = 0;
  double mean_reproj_error = 0;
  bool accepted = false;
};

struct StabilityProfile {
  int subject_frame = 0;
  std::vector<OffsetResult> per_offset;  // offsets 1..min(n, frames remaining)
};

/// Mean statistics at one offset over every subject frame that reaches it.
/// Reprojection error is averaged over pairs that produced a model.
struct OffsetAggregate {
  int offset = 0;
  int pairs = 0;
  double mean_inliers = 0;
  double mean_inlier_ratio = 0;
  double mean_reproj_error = 0;
  double accepted_fraction = 0;
};

struct StabilityResult {
  std::vector<StabilityProfile> profiles;
  std::vector<OffsetAggregate> curve;
};

inline OffsetResult to_offset_result(int offset, const PairMatchStats& s) {
  return {offset, s.n_matches, s.n_inliers, s.inlier_ratio, s.mean_reproj_error, s.accepted};
}

inline std::vector<OffsetAggregate> aggregate_offsets(std::span<const StabilityProfile> profiles, int n) {
  std::vector<OffsetAggregate> curve;
  for (int k = 1; k <= n; ++k) {
    OffsetAggregate agg;
    agg.offset = k;
    double inliers = 0, ratio = 0, err = 0, accepted = 0;
    int with_model = 0;
    for (const auto& p : profiles) {
      if (static_cast<int>(p.per_offset.size()) < k) continue;
      const OffsetResult& r = p.per_offset[static_cast<std::size_t>(k - 1)];
      ++agg.pairs;
      inliers += r.n_inliers;
      ratio += r.inlier_ratio;
      accepted += r.accepted ? 1 : 0;
      if (r.n_inliers > 0) {
        err += r.mean_reproj_error;
        ++with_model;
      }
    }
    if (agg.pairs == 0) break;
    agg.mean_inliers = inliers / agg.pairs;
    agg.mean_inlier_ratio = ratio / agg.pairs;
    agg.accepted_fraction = accepted / agg.pairs;
    agg.mean_reproj_error = with_model > 0 ? err / with_model : 0.0;
    curve.push_back(agg);
  }
  return curve;
}

/// Matches every subject frame against each of the next `n` frames.
/// Subjects are all frames with at least one successor.
inline StabilityResult local_stability(std::span<const FeatureSet> features, int n, const RansacParams& p,
                                       int threads = 1) {
  if (n < 1) throw Error(Errc::BadParams, "offset horizon n must be >= 1");
  if (features.size() < 2) throw Error(Errc::BadParams, "need at least two frames");
  p.validate();
  const int count = static_cast<int>(features.size());
  StabilityResult result;
  result.profiles.resize(static_cast<std::size_t>(count - 1));
  parallel_for(result.profiles.size(), threads, [&](std::size_t f) {
    StabilityProfile& prof = result.profiles[f];
    prof.subject_frame = static_cast<int>(f);
    const int last = std::min(n, count - 1 - static_cast<int>(f));
    for (int k = 1; k <= last; ++k)
      prof.per_offset.push_back(to_offset_result(k, evaluate_pair(features[f], features[f + static_cast<std::size_t>(k)], p)));
  });
  result.curve = aggregate_offsets(result.profiles, n);
  return result;
}

// ---------------------------------------------------------------------------
// Furthest matchable frame

struct FmfRecord {
  int subject_frame = 0;
  int fmf = 0;          // last offset of the accepted prefix
  bool capped = false;  // scan stopped at the horizon
};

struct FmfResult {
  std::vector<FmfRecord> records;
  double average_fmf = 0;
  int zero_count = 0;    // subjects whose offset-1 pair already fails
  int capped_count = 0;
  long long accepted_pairs = 0;
};

inline FmfResult summarize_fmf(std::vector<FmfRecord> records) {
  FmfResult r;
  r.records = std::move(records);
  long long total = 0;
  for (const auto& rec : r.records) {
    total += rec.fmf;
    r.zero_count += rec.fmf == 0;
    r.capped_count += rec.capped;
  }
  r.accepted_pairs = total;
  r.average_fmf = r.records.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(r.records.size());
  return r;
}

/// Scans offsets 1, 2, ... for every subject frame and stops at the first
/// rejected pair, the sequence end, or the horizon.
inline FmfResult furthest_matchable(std::span<const FeatureSet> features, const RansacParams& p, int horizon,
                                    int threads = 1) {
  if (horizon < 1) throw Error(Errc::BadParams, "horizon must be >= 1");
  p.validate();
  const int count = static_cast<int>(features.size());
  std::vector<FmfRecord> records(static_cast<std::size_t>(std::max(count - 1, 0)));
  parallel_for(records.size(), threads, [&](std::size_t f) {
    FmfRecord& rec = records[f];
    rec.subject_frame = static_cast<int>(f);
    for (int k = 1; k <= horizon; ++k) {
      const std::size_t other = f + static_cast<std::size_t>(k);
      if (other >= static_cast<std::size_t>(count)) break;
      if (!evaluate_pair(features[f], features[other], p).accepted) break;
      rec.fmf = k;
    }
    rec.capped = rec.fmf == horizon;
  });
  return summarize_fmf(std::move(records));
}

struct CurvePoint {
  int offset = 0;
  long long count = 0;
};

/// Point d counts (subject, offset <= d) accepted pairs; under the prefix rule
/// that is sum over subjects of min(fmf, d).
inline std::vector<CurvePoint> cumulative_distance_distribution(std::span<const FmfRecord> records, int max_offset) {
  std::vector<CurvePoint> curve;
  for (int d = 1; d <= max_offset; ++d) {
    long long c = 0;
    for (const auto& r : records) c += std::min(r.fmf, d);
    curve.push_back({d, c});
  }
  return curve;
}

/// Same curve from explicit per-pair accept decisions.
inline std::vector<CurvePoint> cumulative_distance_distribution(std::span<const StabilityProfile> profiles,
                                                                int max_offset) {
  std::vector<long long> per_offset(static_cast<std::size_t>(max_offset) + 1, 0);
  for (const auto& p : profiles)
    for (const auto& r : p.per_offset)
      if (r.accepted && r.offset <= max_offset) ++per_offset[static_cast<std::size_t>(r.offset)];
  std::vector<CurvePoint> curve;
  long long running = 0;
  for (int d = 1; d <= max_offset; ++d) {
    running += per_offset[static_cast<std::size_t>(d)];
    curve.push_back({d, running});
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Classic quality metrics

/// 10 log10(255^2 / MSE) over all samples; +inf for identical frames.
inline double psnr(const Frame& a, const Frame& b) {
  if (!a.same_shape(b)) throw Error(Errc::DimensionMismatch, "psnr inputs differ in shape");
  double sse = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    sse += d * d;
  }
  if (sse == 0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(a.data.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace detail {

inline std::array<double, 11> gaussian_window() {
  std::array<double, 11> w{};
  double s = 0;
  for (int i = 0; i < 11; ++i) {
    const double d = i - 5;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2 * 1.5 * 1.5));
    s += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= s;
  return w;
}

// Separable 11x11 filter evaluated only at valid window positions.
inline std::vector<double> filter_valid(const std::vector<double>& img, int w, int h) {
  static const auto g = gaussian_window();
  const int ow = w - 10, oh = h - 10;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < 11; ++i) s += g[static_cast<std::size_t>(i)] * img[static_cast<std::size_t>(y) * w + x + i];
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < 11; ++i) s += g[static_cast<std::size_t>(i)] * rows[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace detail

/// Mean SSIM on luma: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, L = 255, averaged over valid window positions.
inline double ssim(const Frame& a, const Frame& b) {
  if (a.width != b.width || a.height != b.height) throw Error(Errc::DimensionMismatch, "ssim inputs differ in size");
  if (a.width < 11 || a.height < 11) throw Error(Errc::DimensionMismatch, "ssim needs at least 11x11");
  const GrayFrame ga = to_grayscale(a), gb = to_grayscale(b);
  const int w = a.width, h = a.height;
  const std::size_t n = ga.data.size();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = ga.data[i];
    y[i] = gb.data[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = detail::filter_valid(x, w, h), my = detail::filter_valid(y, w, h);
  const auto sxx = detail::filter_valid(xx, w, h), syy = detail::filter_valid(yy, w, h);
  const auto sxy = detail::filter_valid(xy, w, h);
  constexpr double c1 = (0.01 * 255) * (0.01 * 255), c2 = (0.03 * 255) * (0.03 * 255);
  double total = 0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    const double num = (2 * mx[i] * my[i] + c1) * (2 * cov + c2);
    const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
    total += num / den;
  }
  return std::clamp(total / static_cast<double>(mx.size()), -1.0, 1.0);
}

struct QualityScores {
  int frame = 0;
  double psnr = 0;  // +inf for identical frames
  double ssim = 0;
};

struct QualitySummary {
  std::vector<QualityScores> frames;
  double mean_psnr = 0;  // over frames with finite psnr
  double mean_ssim = 0;
  int inf_psnr_count = 0;
};

inline QualitySummary summarize_quality(std::vector<QualityScores> frames) {
  QualitySummary s;
  s.frames = std::move(frames);
  double psum = 0, ssum = 0;
  int finite = 0;
  for (const auto& q : s.frames) {
    ssum += q.ssim;
    if (std::isinf(q.psnr)) {
      ++s.inf_psnr_count;
    } else {
      psum += q.psnr;
      ++finite;
    }
  }
  s.mean_ssim = s.frames.empty() ? 0.0 : ssum / static_cast<double>(s.frames.size());
  s.mean_psnr = finite > 0 ? psum / finite : std::numeric_limits<double>::infinity();
  return s;
}

/// Per-frame PSNR/SSIM of an enhanced sequence against its original.
inline QualitySummary sequence_quality(const FrameSequence& orig, const FrameSequence& enh, int threads = 1) {
  if (orig.count != enh.count) throw Error(Errc::LengthMismatch, "sequences differ in length");
  if (orig.width != enh.width || orig.height != enh.height || orig.channels != enh.channels)
    throw Error(Errc::DimensionMismatch, "sequences differ in frame shape");
  std::vector<QualityScores> scores(static_cast<std::size_t>(orig.count));
  parallel_for(scores.size(), threads, [&](std::size_t i) {
    const Frame a = orig.load(static_cast<int>(i)), b = enh.load(static_cast<int>(i));
    scores[i] = {static_cast<int>(i), psnr(a, b), ssim(a, b)};
  });
  return summarize_quality(std::move(scores));
}

}  // namespace seqmatch
