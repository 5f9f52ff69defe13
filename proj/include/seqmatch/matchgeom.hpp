#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqmatch/error.hpp"
#include "seqmatch/features.hpp"
#include "seqmatch/geometry.hpp"
#include "seqmatch/random.hpp"

namespace seqmatch {

/// Lowe ratio used by match_descriptors: best < 0.8 * second best.
inline constexpr double kRatioTest = 0.8;

struct Match {
  int index_a = 0;
  int index_b = 0;
  int distance = 0;

  friend bool operator==(const Match&, const Match&) = default;
};

struct Correspondence {
  Point2 src;
  Point2 dst;
};

struct RansacParams {
  double ransac_threshold = 10.0;
  double min_inlier_ratio = 0.3;
  double max_reproj_error = 20.0;
  double confidence = 0.995;
  int max_iterations = 2000;
  int min_matches = 15;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(ransac_threshold > 0) || !(max_reproj_error > 0))
      throw Error(Errc::BadParams, "thresholds must be positive");
    if (!(min_inlier_ratio > 0 && min_inlier_ratio < 1))
      throw Error(Errc::BadParams, "min_inlier_ratio must be in (0, 1)");
    if (!(confidence > 0 && confidence < 1)) throw Error(Errc::BadParams, "confidence must be in (0, 1)");
    if (max_iterations < 1) throw Error(Errc::BadParams, "max_iterations must be >= 1");
    if (min_matches < 4) throw Error(Errc::BadParams, "min_matches must be >= 4");
  }
};

enum class RejectReason { None, TooFewMatches, LowInlierRatio, HighReprojError, DegenerateModel };

constexpr std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::None: return "None";
    case RejectReason::TooFewMatches: return "TooFewMatches";
    case RejectReason::LowInlierRatio: return "LowInlierRatio";
    case RejectReason::HighReprojError: return "HighReprojError";
    case RejectReason::DegenerateModel: return "DegenerateModel";
  }
  return "None";
}

struct PairMatchStats {
  int frame_a = 0;
  int frame_b = 0;
  int n_matches = 0;
  int n_inliers = 0;
  double inlier_ratio = 0.0;       // n_inliers / n_matches
  double mean_reproj_error = 0.0;  // px, over inliers of the final model
  std::optional<Homography> homography;
  bool accepted = false;
  RejectReason reject_reason = RejectReason::TooFewMatches;
  std::vector<int> inliers;  // indices into the match list
};

inline int hamming(const Descriptor& a, const Descriptor& b) {
  return std::popcount(a.words[0] ^ b.words[0]) + std::popcount(a.words[1] ^ b.words[1]) +
         std::popcount(a.words[2] ^ b.words[2]) + std::popcount(a.words[3] ^ b.words[3]);
}

/// Brute-force mutual nearest neighbours. A pair (i, j) survives when j is
/// i's nearest neighbour in b, i is j's nearest neighbour in a, and the ratio
/// test holds in both directions (waived at distance 0, or when no second
/// neighbour exists). Nearest-neighbour ties go to the lower index. The result
/// is sorted by (distance, index_a, index_b).
inline std::vector<Match> match_descriptors(const FeatureSet& fa, const FeatureSet& fb) {
  const std::size_t na = fa.descriptors.size(), nb = fb.descriptors.size();
  std::vector<Match> out;
  if (na == 0 || nb == 0) return out;

  constexpr int kNone = std::numeric_limits<int>::max();
  struct Nearest {
    int best = kNone, second = kNone, index = -1;
    void offer(int d, int i) {
      if (d < best) {
        second = best;
        best = d;
        index = i;
      } else if (d < second) {
        second = d;
      }
    }
    bool passes_ratio() const {
      // Integer form of best < 0.8 * second.
      return best == 0 || second == kNone || 5 * best < 4 * second;
    }
  };
  std::vector<Nearest> row(na), col(nb);
  for (std::size_t i = 0; i < na; ++i) {
    const Descriptor& da = fa.descriptors[i];
    Nearest& r = row[i];
    for (std::size_t j = 0; j < nb; ++j) {
      const int d = hamming(da, fb.descriptors[j]);
      if (d < r.second) r.offer(d, static_cast<int>(j));
      if (d < col[j].second) col[j].offer(d, static_cast<int>(i));
    }
  }
  for (std::size_t i = 0; i < na; ++i) {
    const int j = row[i].index;
    if (col[static_cast<std::size_t>(j)].index != static_cast<int>(i)) continue;
    if (!row[i].passes_ratio() || !col[static_cast<std::size_t>(j)].passes_ratio()) continue;
    out.push_back({static_cast<int>(i), j, row[i].best});
  }
  std::sort(out.begin(), out.end(), [](const Match& a, const Match& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.index_a != b.index_a) return a.index_a < b.index_a;
    return a.index_b < b.index_b;
  });
  return out;
}

namespace detail {

// Similarity that moves the centroid to the origin and the RMS distance to sqrt(2).
struct Normalizer {
  double cx = 0, cy = 0, scale = 1;

  static std::optional<Normalizer> fit(std::span<const Point2> pts) {
    Normalizer n;
    for (const auto& p : pts) {
      n.cx += p.x;
      n.cy += p.y;
    }
    n.cx /= static_cast<double>(pts.size());
    n.cy /= static_cast<double>(pts.size());
    double ss = 0;
    for (const auto& p : pts) ss += (p.x - n.cx) * (p.x - n.cx) + (p.y - n.cy) * (p.y - n.cy);
    const double rms = std::sqrt(ss / static_cast<double>(pts.size()));
    if (!(rms > 0) || !std::isfinite(rms)) return std::nullopt;
    n.scale = std::sqrt(2.0) / rms;
    return n;
  }
  Point2 apply(Point2 p) const { return {(p.x - cx) * scale, (p.y - cy) * scale}; }
  Homography matrix() const { return {{scale, 0, -scale * cx, 0, scale, -scale * cy, 0, 0, 1}}; }
  Homography inverse_matrix() const { return {{1 / scale, 0, cx, 0, 1 / scale, cy, 0, 0, 1}}; }
};

inline double triangle_area(Point2 a, Point2 b, Point2 c) {
  return 0.5 * std::fabs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

// Degenerate when (normalised) points are collinear: for four points any
// collinear triple, otherwise a vanishing second moment across the direction
// of least spread.
inline bool degenerate_layout(std::span<const Point2> pts) {
  constexpr double kAreaTolerance = 1e-9;
  if (pts.size() == 4) {
    for (int skip = 0; skip < 4; ++skip) {
      Point2 t[3];
      int k = 0;
      for (int i = 0; i < 4; ++i)
        if (i != skip) t[k++] = pts[static_cast<std::size_t>(i)];
      if (triangle_area(t[0], t[1], t[2]) < kAreaTolerance) return true;
    }
    return false;
  }
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& p : pts) {
    sxx += p.x * p.x;
    syy += p.y * p.y;
    sxy += p.x * p.y;
  }
  const double n = static_cast<double>(pts.size());
  sxx /= n;
  syy /= n;
  sxy /= n;
  const double tr = sxx + syy, det = sxx * syy - sxy * sxy;
  const double smallest = 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4 * det)));
  return smallest < kAreaTolerance;
}

enum class DltStatus { Ok, Degenerate, Numerical };

struct DltOutcome {
  DltStatus status = DltStatus::Ok;
  Homography h;
};

inline DltOutcome try_dlt(std::span<const Correspondence> pairs) {
  if (pairs.size() < 4) return {DltStatus::Degenerate, {}};
  std::vector<Point2> src(pairs.size()), dst(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    src[i] = pairs[i].src;
    dst[i] = pairs[i].dst;
  }
  const auto ns = Normalizer::fit(src), nd = Normalizer::fit(dst);
  if (!ns || !nd) return {DltStatus::Degenerate, {}};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    src[i] = ns->apply(src[i]);
    dst[i] = nd->apply(dst[i]);
  }
  if (degenerate_layout(src) || degenerate_layout(dst)) return {DltStatus::Degenerate, {}};

  // Normal matrix of the 2n x 9 DLT system.
  std::array<double, 81> ata{};
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double x = src[i].x, y = src[i].y, u = dst[i].x, v = dst[i].y;
    const std::array<double, 9> r1{-x, -y, -1, 0, 0, 0, u * x, u * y, u};
    const std::array<double, 9> r2{0, 0, 0, -x, -y, -1, v * x, v * y, v};
    for (std::size_t a = 0; a < 9; ++a)
      for (std::size_t b = a; b < 9; ++b) ata[a * 9 + b] += r1[a] * r1[b] + r2[a] * r2[b];
  }
  for (std::size_t a = 0; a < 9; ++a)
    for (std::size_t b = 0; b < a; ++b) ata[a * 9 + b] = ata[b * 9 + a];

  const auto h = smallest_eigenvector<9>(ata);
  Homography hn;
  for (std::size_t i = 0; i < 9; ++i) hn.m[i] = h[i];
  Homography full = nd->inverse_matrix() * hn * ns->matrix();
  if (!full.finite() || std::fabs(full.m[8]) < 1e-12 * full.frobenius()) return {DltStatus::Numerical, {}};
  full = full.normalized();
  const double det = full.determinant();
  if (!full.finite() || !std::isfinite(det) || std::fabs(det) < 1e-12) return {DltStatus::Degenerate, {}};
  return {DltStatus::Ok, full};
}

}  // namespace detail

/// Hartley-normalised direct linear transform over >= 4 correspondences,
/// solved for the smallest eigenvector of the normal matrix.
inline Homography dlt_homography(std::span<const Correspondence> pairs) {
  if (pairs.size() < 4) throw Error(Errc::DegenerateConfiguration, "need at least 4 correspondences");
  const auto r = detail::try_dlt(pairs);
  if (r.status == detail::DltStatus::Degenerate)
    throw Error(Errc::DegenerateConfiguration, "collinear or duplicated points");
  if (r.status == detail::DltStatus::Numerical) throw Error(Errc::NumericalFailure, "h33 vanished");
  return r.h;
}

inline double reprojection_error(const Homography& h, Point2 src, Point2 dst) {
  const Point2 p = h.project(src);
  return std::hypot(dst.x - p.x, dst.y - p.y);
}

/// Seed of the RANSAC stream for the pair (a, b); independent of evaluation order.
inline std::uint64_t pair_seed(std::uint64_t global_seed, int frame_a, int frame_b) {
  return global_seed ^ (static_cast<std::uint64_t>(frame_a) * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(frame_b));
}

namespace detail {

struct Consensus {
  std::vector<int> inliers;
  double mean_error = 0;
};

inline Consensus consensus(const Homography& h, std::span<const Correspondence> pts, double threshold) {
  Consensus c;
  double sum = 0;
  const auto& m = h.m;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point2 s = pts[i].src;
    const double w = m[6] * s.x + m[7] * s.y + m[8];
    if (std::fabs(w) < 1e-12) continue;
    const double px = (m[0] * s.x + m[1] * s.y + m[2]) / w;
    const double py = (m[3] * s.x + m[4] * s.y + m[5]) / w;
    const double dx = pts[i].dst.x - px, dy = pts[i].dst.y - py;
    const double e2 = dx * dx + dy * dy;
    if (e2 < threshold * threshold) {
      c.inliers.push_back(static_cast<int>(i));
      sum += std::sqrt(e2);
    }
  }
  c.mean_error = c.inliers.empty() ? 0.0 : sum / static_cast<double>(c.inliers.size());
  return c;
}

inline std::vector<Correspondence> subset(std::span<const Correspondence> pts, const std::vector<int>& idx) {
  std::vector<Correspondence> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(pts[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace detail

/// RANSAC homography over matched level-0 keypoint positions. Acceptance is
/// decided on the final (refit) model only.
inline PairMatchStats ransac_homography(std::span<const Match> matches, std::span<const Keypoint> kpa,
                                        std::span<const Keypoint> kpb, const RansacParams& p) {
  p.validate();
  PairMatchStats st;
  st.n_matches = static_cast<int>(matches.size());
  if (st.n_matches < p.min_matches) {
    st.reject_reason = RejectReason::TooFewMatches;
    return st;
  }

  std::vector<Correspondence> pts;
  pts.reserve(matches.size());
  for (const auto& m : matches) {
    const Keypoint& a = kpa[static_cast<std::size_t>(m.index_a)];
    const Keypoint& b = kpb[static_cast<std::size_t>(m.index_b)];
    pts.push_back({{a.x, a.y}, {b.x, b.y}});
  }

  Rng rng(p.seed);
  const auto n = static_cast<std::uint64_t>(pts.size());
  std::optional<Homography> best_model;
  detail::Consensus best;
  long long bound = p.max_iterations;
  for (long long iter = 0; iter < bound; ++iter) {
    int idx[4];
    for (int k = 0; k < 4; ++k) {
      bool fresh;
      do {
        idx[k] = static_cast<int>(rng.below(n));
        fresh = true;
        for (int j = 0; j < k; ++j) fresh = fresh && idx[j] != idx[k];
      } while (!fresh);
    }
    const std::array<Correspondence, 4> sample{pts[static_cast<std::size_t>(idx[0])], pts[static_cast<std::size_t>(idx[1])],
                                               pts[static_cast<std::size_t>(idx[2])], pts[static_cast<std::size_t>(idx[3])]};
    const auto fit = detail::try_dlt(sample);
    if (fit.status != detail::DltStatus::Ok) continue;
    auto c = detail::consensus(fit.h, pts, p.ransac_threshold);
    const bool better = c.inliers.size() > best.inliers.size() ||
                        (best_model && c.inliers.size() == best.inliers.size() && c.mean_error < best.mean_error);
    if (!best_model || better) {
      best = std::move(c);
      best_model = fit.h;
      const double w = static_cast<double>(best.inliers.size()) / static_cast<double>(n);
      const double w4 = w * w * w * w;
      if (w4 >= 1.0 - 1e-15) {
        bound = iter + 1;
      } else if (w4 > 0) {
        const double needed = std::ceil(std::log(1.0 - p.confidence) / std::log(1.0 - w4));
        bound = std::min<long long>(p.max_iterations, static_cast<long long>(std::max(needed, 1.0)));
      }
    }
  }

  if (!best_model || best.inliers.size() < 4) {
    st.reject_reason = RejectReason::DegenerateModel;
    st.homography = best_model;
    return st;
  }

  // Refit on the consensus set; re-classify, and keep refining while the set
  // does not shrink.
  Homography model = *best_model;
  detail::Consensus set = best;
  for (int round = 0; round < 3; ++round) {
    const auto refit = detail::try_dlt(detail::subset(pts, set.inliers));
    if (refit.status != detail::DltStatus::Ok) break;
    auto next = detail::consensus(refit.h, pts, p.ransac_threshold);
    if (next.inliers.size() < set.inliers.size()) break;
    const bool unchanged = next.inliers == set.inliers;
    model = refit.h;
    set = std::move(next);
    if (unchanged) break;
  }

  st.homography = model;
  st.n_inliers = static_cast<int>(set.inliers.size());
  st.inlier_ratio = static_cast<double>(st.n_inliers) / st.n_matches;
  st.mean_reproj_error = set.mean_error;
  st.inliers = std::move(set.inliers);
  if (st.inlier_ratio < p.min_inlier_ratio) {
    st.reject_reason = RejectReason::LowInlierRatio;
  } else if (st.mean_reproj_error > p.max_reproj_error) {
    st.reject_reason = RejectReason::HighReprojError;
  } else {
    st.accepted = true;
    st.reject_reason = RejectReason::None;
  }
  return st;
}

/// Matches two frames and scores the pair; RANSAC is seeded per pair.
inline PairMatchStats evaluate_pair(const FeatureSet& fa, const FeatureSet& fb, const RansacParams& p) {
  const auto matches = match_descriptors(fa, fb);
  RansacParams q = p;
  q.seed = pair_seed(p.seed, fa.frame_index, fb.frame_index);
  PairMatchStats st = ransac_homography(matches, fa.keypoints, fb.keypoints, q);
  st.frame_a = fa.frame_index;
  st.frame_b = fb.frame_index;
  return st;
}

inline std::string format_fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline constexpr std::string_view kPairCsvHeader =
    "frame_a,frame_b,n_matches,n_inliers,inlier_ratio,mean_reproj_error,accepted,reject_reason";

inline std::string to_csv_row(const PairMatchStats& s) {
  return std::to_string(s.frame_a) + ',' + std::to_string(s.frame_b) + ',' + std::to_string(s.n_matches) + ',' +
         std::to_string(s.n_inliers) + ',' + format_fixed6(s.inlier_ratio) + ',' +
         format_fixed6(s.mean_reproj_error) + ',' + (s.accepted ? "1" : "0") + ',' +
         std::string(to_string(s.reject_reason));
}

}  // namespace seqmatch
