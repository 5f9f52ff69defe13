#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <thread>

#include "test_util.hpp"

using namespace seqmatch;
using testutil::planted_matches;
using testutil::planted_recall;

static Descriptor random_descriptor(Rng& rng) {
  Descriptor d;
  for (auto& w : d.words) w = rng.next_u64();
  return d;
}

// Copy of `d` with `count` distinct bits flipped.
static Descriptor flip_bits(const Descriptor& d, int count, Rng& rng) {
  std::vector<int> bits(256);
  for (int i = 0; i < 256; ++i) bits[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < count; ++i)
    std::swap(bits[static_cast<std::size_t>(i)], bits[static_cast<std::size_t>(i + static_cast<int>(rng.below(256 - i)))]);
  Descriptor out = d;
  for (int i = 0; i < count; ++i) out.set(bits[static_cast<std::size_t>(i)], !d.bit(bits[static_cast<std::size_t>(i)]));
  return out;
}

static FeatureSet descriptors_only(std::vector<Descriptor> ds, int frame = 0) {
  FeatureSet fs;
  fs.frame_index = frame;
  fs.descriptors = std::move(ds);
  fs.keypoints.resize(fs.descriptors.size());
  return fs;
}

// Features of frame `frame` of a translating scene over a fixed texture.
static FeatureSet texture_features(int frame, double tx = 0, double ty = 0) {
  SceneSpec spec;
  spec.count = frame + 1;
  spec.motion.tx = tx;
  spec.motion.ty = ty;
  const SyntheticScene scene(gen_texture(11, 1600, 1200), spec);
  FeatureSet fs = detect_and_describe(to_grayscale(scene.render(frame)), DetectorParams{});
  fs.frame_index = frame;
  return fs;
}

TEST(Hamming, Basics) {
  Rng rng(1);
  const Descriptor a = random_descriptor(rng);
  EXPECT_EQ(hamming(a, a), 0);
  Descriptor inv;
  for (std::size_t i = 0; i < 4; ++i) inv.words[i] = ~a.words[i];
  EXPECT_EQ(hamming(a, inv), 256);
  Descriptor one = a;
  one.set(77, !a.bit(77));
  EXPECT_EQ(hamming(a, one), 1);
}

TEST(Hamming, MetricProperties) {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const Descriptor a = random_descriptor(rng), b = random_descriptor(rng), c = random_descriptor(rng);
    EXPECT_EQ(hamming(a, b), hamming(b, a));
    EXPECT_LE(hamming(a, c), hamming(a, b) + hamming(b, c));
    const int k = static_cast<int>(rng.below(257));
    EXPECT_EQ(hamming(a, flip_bits(a, k, rng)), k);
  }
}

TEST(MatchDescriptors, EmptyInputs) {
  Rng rng(3);
  const FeatureSet some = descriptors_only({random_descriptor(rng), random_descriptor(rng)});
  EXPECT_TRUE(match_descriptors(FeatureSet{}, some).empty());
  EXPECT_TRUE(match_descriptors(some, FeatureSet{}).empty());
}

TEST(MatchDescriptors, SelfMatchesAtDistanceZero) {
  const FeatureSet fs = texture_features(0);
  ASSERT_GT(fs.size(), 100u);
  const auto m = match_descriptors(fs, fs);
  // Duplicate descriptors in a set break mutual uniqueness; count them out.
  std::size_t unique = 0;
  std::map<std::array<std::uint64_t, 4>, int> freq;
  for (const auto& d : fs.descriptors) ++freq[d.words];
  for (const auto& [w, n] : freq) unique += n == 1;
  EXPECT_GE(m.size(), unique);
  for (const auto& x : m) {
    EXPECT_EQ(x.distance, 0);
    EXPECT_EQ(fs.descriptors[static_cast<std::size_t>(x.index_a)].words,
              fs.descriptors[static_cast<std::size_t>(x.index_b)].words);
  }
}

TEST(MatchDescriptors, PlantedPairsAmongDecoys) {
  Rng rng(4);
  std::vector<Descriptor> a, b;
  for (int i = 0; i < 40; ++i) a.push_back(random_descriptor(rng));
  // b holds a decoy at distance 120 from every a, then the planted copies at
  // distance 5, interleaved so indices differ.
  std::vector<std::pair<int, int>> expected;
  for (int i = 0; i < 40; ++i) {
    b.push_back(flip_bits(a[static_cast<std::size_t>(i)], 120, rng));
    expected.emplace_back(i, static_cast<int>(b.size()));
    b.push_back(flip_bits(a[static_cast<std::size_t>(i)], 5, rng));
  }
  const auto m = match_descriptors(descriptors_only(a), descriptors_only(b));
  ASSERT_EQ(m.size(), expected.size());
  std::vector<std::pair<int, int>> got;
  for (const auto& x : m) {
    EXPECT_EQ(x.distance, 5);
    got.emplace_back(x.index_a, x.index_b);
  }
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, expected);
}

TEST(MatchDescriptors, RatioTestRejectsAmbiguousNeighbour) {
  Rng rng(5);
  const Descriptor base = random_descriptor(rng);
  // Best 10, second 12: 10 < 0.8 * 12 fails.
  const auto m = match_descriptors(descriptors_only({base}),
                                   descriptors_only({flip_bits(base, 10, rng), flip_bits(base, 12, rng)}));
  EXPECT_TRUE(m.empty());
  // Best 8, second 12: 8 < 9.6 holds.
  const auto ok = match_descriptors(descriptors_only({base}),
                                    descriptors_only({flip_bits(base, 8, rng), flip_bits(base, 12, rng)}));
  ASSERT_EQ(ok.size(), 1u);
  EXPECT_EQ(ok[0].index_b, 0);
}

TEST(MatchDescriptors, SortedAndSymmetricUnderSwap) {
  const FeatureSet a = texture_features(0);
  const FeatureSet b = texture_features(1, 7, 4);
  const auto ab = match_descriptors(a, b);
  const auto ba = match_descriptors(b, a);
  ASSERT_GT(ab.size(), 50u);
  EXPECT_TRUE(std::is_sorted(ab.begin(), ab.end(), [](const Match& x, const Match& y) {
    return std::tie(x.distance, x.index_a, x.index_b) < std::tie(y.distance, y.index_a, y.index_b);
  }));
  std::set<std::tuple<int, int, int>> s1, s2;
  for (const auto& x : ab) s1.insert({x.index_a, x.index_b, x.distance});
  for (const auto& x : ba) s2.insert({x.index_b, x.index_a, x.distance});
  EXPECT_EQ(s1, s2);
}

TEST(Dlt, IdentityFromFourPoints) {
  const std::vector<Correspondence> c{{{0, 0}, {0, 0}}, {{10, 0}, {10, 0}}, {{10, 10}, {10, 10}}, {{0, 10}, {0, 10}}};
  const Homography h = dlt_homography(c);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(h.m[i], Homography::identity().m[i], 1e-12);
}

TEST(Dlt, TranslationClosedForm) {
  const double tx = 13.5, ty = -7.25;
  std::vector<Correspondence> c;
  for (Point2 p : {Point2{0, 0}, Point2{100, 0}, Point2{100, 100}, Point2{0, 100}}) c.push_back({p, {p.x + tx, p.y + ty}});
  const Homography h = dlt_homography(c);
  const std::array<double, 9> want{1, 0, tx, 0, 1, ty, 0, 0, 1};
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(h.m[i], want[i], 1e-9);
}

TEST(Dlt, RecoversRandomHomographies) {
  Rng rng(6);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const Homography truth = testutil::random_homography(rng);
    std::vector<Correspondence> c;
    const int n = 4 + static_cast<int>(rng.below(20));
    for (int i = 0; i < n; ++i) {
      const Point2 p{rng.uniform(0, 640), rng.uniform(0, 480)};
      c.push_back({p, truth.project(p)});
    }
    worst = std::max(worst, relative_error(dlt_homography(c), truth));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Dlt, DegenerateInputsThrow) {
  const auto code_of = [](const std::vector<Correspondence>& c) {
    try {
      dlt_homography(c);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::BadParams;
  };
  EXPECT_EQ(code_of({{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}}), Errc::DegenerateConfiguration);
  // Three of four source points collinear.
  EXPECT_EQ(code_of({{{0, 0}, {0, 0}}, {{1, 1}, {1, 0}}, {{2, 2}, {1, 1}}, {{0, 5}, {0, 1}}}),
            Errc::DegenerateConfiguration);
  // Duplicated point.
  EXPECT_EQ(code_of({{{0, 0}, {0, 0}}, {{0, 0}, {1, 0}}, {{5, 5}, {1, 1}}, {{0, 5}, {0, 1}}}),
            Errc::DegenerateConfiguration);
}

TEST(Reprojection, ClosedForms) {
  const Homography id = Homography::identity();
  EXPECT_DOUBLE_EQ(reprojection_error(id, {5, 5}, {5, 5}), 0.0);
  EXPECT_DOUBLE_EQ(reprojection_error(id, {5, 5}, {8, 9}), 5.0);
  EXPECT_DOUBLE_EQ(reprojection_error(Homography::translation(3, 4), {5, 5}, {8, 9}), 0.0);
  Homography h;
  h.m = {1, 0, 0, 0, 1, 0, 1, 0, 0};  // w = x
  try {
    reprojection_error(h, {0, 3}, {0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PointAtInfinity);
  }
}

TEST(Ransac, AllConsistentMatches) {
  const auto p = planted_matches(10, 100, 100, 0.0);
  const auto st = ransac_homography(p.matches, p.kpa, p.kpb, RansacParams{});
  EXPECT_TRUE(st.accepted);
  EXPECT_EQ(st.n_inliers, 100);
  // Keypoints are stored as float, so exactness is limited by float rounding.
  EXPECT_LT(st.mean_reproj_error, 1e-3);
  EXPECT_EQ(st.reject_reason, RejectReason::None);
}

TEST(Ransac, SeventyPercentPlanted) {
  const auto p = planted_matches(11, 100, 70, 0.0);
  const auto st = ransac_homography(p.matches, p.kpa, p.kpb, RansacParams{});
  ASSERT_TRUE(st.accepted);
  EXPECT_GE(planted_recall(p, st.inliers), 0.95);
  ASSERT_TRUE(st.homography.has_value());
  EXPECT_LT(relative_error(*st.homography, p.truth), 1e-3);
}

TEST(Ransac, TwentyPercentRejected) {
  const auto p = planted_matches(12, 100, 20, 0.0);
  const auto st = ransac_homography(p.matches, p.kpa, p.kpb, RansacParams{});
  EXPECT_FALSE(st.accepted);
  EXPECT_EQ(st.reject_reason, RejectReason::LowInlierRatio);
}

TEST(Ransac, TooFewMatches) {
  const auto p = planted_matches(13, 14, 14, 0.0);
  const auto st = ransac_homography(p.matches, p.kpa, p.kpb, RansacParams{});
  EXPECT_FALSE(st.accepted);
  EXPECT_EQ(st.reject_reason, RejectReason::TooFewMatches);
  EXPECT_EQ(st.n_matches, 14);
  EXPECT_EQ(st.n_inliers, 0);
}

TEST(Ransac, AcceptanceImpliesDefaultsHold) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto p = planted_matches(100 + seed, 60, 15 + static_cast<int>(seed), 3.0);
    const auto st = ransac_homography(p.matches, p.kpa, p.kpb, RansacParams{});
    if (st.accepted) {
      EXPECT_GE(st.inlier_ratio, 0.3);
      EXPECT_LE(st.mean_reproj_error, 20.0);
    }
  }
}

TEST(Ransac, DeterministicForFixedSeed) {
  const auto p = planted_matches(14, 200, 90, 1.5);
  RansacParams rp;
  rp.seed = 99;
  const auto a = ransac_homography(p.matches, p.kpa, p.kpb, rp);
  const auto b = ransac_homography(p.matches, p.kpa, p.kpb, rp);
  EXPECT_EQ(a.inliers, b.inliers);
  EXPECT_EQ(a.homography->m, b.homography->m);
  EXPECT_EQ(a.mean_reproj_error, b.mean_reproj_error);

  // Same result when evaluated on another thread.
  PairMatchStats c;
  std::thread t([&] { c = ransac_homography(p.matches, p.kpa, p.kpb, rp); });
  t.join();
  EXPECT_EQ(a.inliers, c.inliers);
  EXPECT_EQ(a.homography->m, c.homography->m);
}

TEST(Ransac, LargerThresholdNeverLosesInliers) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = planted_matches(200 + seed, 150, 80, 2.0);
    int previous = 0;
    for (double thr : {1.0, 2.0, 4.0, 8.0, 16.0}) {
      RansacParams rp;
      rp.ransac_threshold = thr;
      const auto st = ransac_homography(p.matches, p.kpa, p.kpb, rp);
      EXPECT_GE(st.n_inliers, previous) << "seed " << seed << " threshold " << thr;
      previous = st.n_inliers;
    }
  }
}

TEST(Ransac, PairSeedDependsOnOrderedPair) {
  EXPECT_NE(pair_seed(0, 1, 2), pair_seed(0, 2, 1));
  EXPECT_EQ(pair_seed(7, 3, 4), pair_seed(7, 3, 4));
  EXPECT_EQ(pair_seed(0, 0, 5) ^ 9u, pair_seed(9, 0, 5));
}

TEST(EvaluatePair, IdenticalFrames) {
  const FeatureSet fs = texture_features(3);
  FeatureSet other = fs;
  other.frame_index = 4;
  const auto st = evaluate_pair(fs, other, RansacParams{});
  EXPECT_TRUE(st.accepted);
  EXPECT_GT(st.inlier_ratio, 0.99);
  EXPECT_EQ(st.frame_a, 3);
  EXPECT_EQ(st.frame_b, 4);
}

TEST(EvaluatePair, ConstantImageHasNoMatches) {
  const FeatureSet fs = texture_features(0);
  FeatureSet flat = detect_and_describe(GrayFrame(640, 480, 90), DetectorParams{});
  flat.frame_index = 1;
  const auto st = evaluate_pair(fs, flat, RansacParams{});
  EXPECT_FALSE(st.accepted);
  EXPECT_EQ(st.reject_reason, RejectReason::TooFewMatches);
  EXPECT_EQ(st.n_matches, 0);
}

TEST(EvaluatePair, PlantedWarpWithImageNoise) {
  SceneSpec spec;
  spec.count = 2;
  spec.motion = {6.0, -4.0, 0.01, 1.01, 0.0};
  spec.noise_sigma = 2.0;
  spec.seed = 5;
  const SyntheticScene scene(gen_texture(21, 1600, 1200), spec);
  FeatureSet a = detect_and_describe(to_grayscale(scene.render(0)), DetectorParams{});
  FeatureSet b = detect_and_describe(to_grayscale(scene.render(1)), DetectorParams{});
  a.frame_index = 0;
  b.frame_index = 1;
  const auto st = evaluate_pair(a, b, RansacParams{});
  ASSERT_TRUE(st.accepted);
  EXPECT_LT(corner_transfer_error(*st.homography, scene.truth(0, 1), 640, 480), 2.0);
}

TEST(PairCsv, RowFormat) {
  PairMatchStats s;
  s.frame_a = 3;
  s.frame_b = 7;
  s.n_matches = 120;
  s.n_inliers = 90;
  s.inlier_ratio = 0.75;
  s.mean_reproj_error = 1.0 / 3.0;
  s.accepted = true;
  s.reject_reason = RejectReason::None;
  EXPECT_EQ(to_csv_row(s), "3,7,120,90,0.750000,0.333333,1,None");
  s.accepted = false;
  s.reject_reason = RejectReason::LowInlierRatio;
  EXPECT_EQ(to_csv_row(s), "3,7,120,90,0.750000,0.333333,0,LowInlierRatio");
  EXPECT_EQ(kPairCsvHeader,
            "frame_a,frame_b,n_matches,n_inliers,inlier_ratio,mean_reproj_error,accepted,reject_reason");
}
