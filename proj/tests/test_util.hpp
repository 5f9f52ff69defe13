#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "seqmatch/seqmatch.hpp"

namespace testutil {

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("seqmatch_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

inline seqmatch::Frame random_frame(std::uint64_t seed, int w, int h, int channels) {
  seqmatch::Rng rng(seed);
  seqmatch::Frame f(w, h, channels, std::uint8_t{0}, 0);
  for (auto& v : f.data) v = static_cast<std::uint8_t>(rng.below(256));
  return f;
}

inline seqmatch::GrayFrame random_gray(std::uint64_t seed, int w, int h) {
  seqmatch::Rng rng(seed);
  seqmatch::GrayFrame g(w, h, 0, 0);
  for (auto& v : g.data) v = static_cast<std::uint8_t>(rng.below(256));
  return g;
}

// Random well-conditioned homography: affine part near identity, mild
// perspective, |det| in [0.1, 10], positive w over a 640x480 frame.
inline seqmatch::Homography random_homography(seqmatch::Rng& rng) {
  for (;;) {
    seqmatch::Homography h;
    h.m = {1 + rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-100, 100),
           rng.uniform(-0.3, 0.3), 1 + rng.uniform(-0.3, 0.3), rng.uniform(-100, 100),
           rng.uniform(-2e-4, 2e-4), rng.uniform(-2e-4, 2e-4), 1};
    const double det = std::fabs(h.determinant());
    bool ok = det >= 0.1 && det <= 10;
    for (seqmatch::Point2 c : {seqmatch::Point2{0, 0}, seqmatch::Point2{640, 0}, seqmatch::Point2{640, 480},
                               seqmatch::Point2{0, 480}})
      ok = ok && h.m[6] * c.x + h.m[7] * c.y + h.m[8] > 0.5;
    if (ok) return h;
  }
}

// Keypoint pairs with match i -> i. The first `inliers` destinations follow
// `truth` plus Gaussian noise; the rest are uniform over the frame.
struct PlantedMatches {
  seqmatch::Homography truth;
  std::vector<seqmatch::Keypoint> kpa, kpb;
  std::vector<seqmatch::Match> matches;
  int inliers = 0;
};

inline PlantedMatches planted_matches(std::uint64_t seed, int total, int inliers, double noise_px) {
  seqmatch::Rng rng(seed);
  PlantedMatches p;
  p.truth = random_homography(rng);
  p.inliers = inliers;
  for (int i = 0; i < total; ++i) {
    const seqmatch::Point2 a{rng.uniform(0, 640), rng.uniform(0, 480)};
    seqmatch::Point2 b;
    if (i < inliers) {
      b = p.truth.project(a);
      b.x += noise_px * rng.normal();
      b.y += noise_px * rng.normal();
    } else {
      b = {rng.uniform(0, 640), rng.uniform(0, 480)};
    }
    seqmatch::Keypoint ka, kb;
    ka.x = static_cast<float>(a.x);
    ka.y = static_cast<float>(a.y);
    kb.x = static_cast<float>(b.x);
    kb.y = static_cast<float>(b.y);
    p.kpa.push_back(ka);
    p.kpb.push_back(kb);
    p.matches.push_back({i, i, 0});
  }
  return p;
}

// Fraction of the planted inliers (indices < p.inliers) in the inlier set.
inline double planted_recall(const PlantedMatches& p, const std::vector<int>& found) {
  int hit = 0;
  for (int i : found) hit += i < p.inliers;
  return static_cast<double>(hit) / p.inliers;
}

}  // namespace testutil
