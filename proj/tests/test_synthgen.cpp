#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <functional>

#include <nlohmann/json.hpp>

#include "test_util.hpp"

using namespace seqmatch;
using testutil::TempDir;

static SceneSpec small_spec(int count) {
  SceneSpec s;
  s.width = 160;
  s.height = 120;
  s.count = count;
  return s;
}

static double bilinear(const Frame& f, double x, double y, int c) {
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  const double top = f.at(x0, y0, c) + fx * (f.at(x0 + 1, y0, c) - f.at(x0, y0, c));
  const double bottom = f.at(x0, y0 + 1, c) + fx * (f.at(x0 + 1, y0 + 1, c) - f.at(x0, y0 + 1, c));
  return top + fy * (bottom - top);
}

static Errc error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::NotImplemented;
}

TEST(Texture, DeterministicPerSeed) {
  const Frame a = gen_texture(5, 256, 192), b = gen_texture(5, 256, 192), c = gen_texture(6, 256, 192);
  EXPECT_EQ(a.data, b.data);
  EXPECT_NE(a.data, c.data);
  EXPECT_EQ(a.channels, 3);
  EXPECT_EQ(error_of([] { gen_texture(1, 100, 300); }), Errc::BadParams);
}

TEST(Texture, DefaultTextureIsFeatureRich) {
  const auto fs = detect_and_describe(to_grayscale(gen_texture(0, 640, 480)), DetectorParams{});
  EXPECT_GE(fs.size(), 500u);
}

TEST(Scene, IdentitySpecRendersTheCrop) {
  const Frame tex = gen_texture(3, 400, 300);
  const SyntheticScene scene(tex, small_spec(4));
  const int ox = (400 - 160) / 2, oy = (300 - 120) / 2;
  for (int k = 0; k < 4; ++k) {
    const Frame f = scene.render(k);
    bool same = true;
    for (int y = 0; y < 120 && same; ++y)
      for (int x = 0; x < 160 && same; ++x)
        for (int c = 0; c < 3; ++c) same = same && f.at(x, y, c) == tex.at(x + ox, y + oy, c);
    EXPECT_TRUE(same) << "frame " << k;
    EXPECT_EQ(f.index, k);
  }
}

TEST(Scene, TransmissionBlendsTowardsVeil) {
  SceneSpec s = small_spec(1);
  s.transmission = 0.25;
  s.veil = {40, 110, 120};
  const SyntheticScene scene(Frame(400, 300, 3, std::uint8_t{200}), s);
  const Frame f = scene.render(0);
  EXPECT_EQ(f.at(10, 10, 0), 80);     // 0.25*200 + 0.75*40
  EXPECT_EQ(f.at(10, 10, 1), 133);    // 50 + 82.5, rounded half away from zero
  EXPECT_EQ(f.at(50, 70, 2), 140);    // 50 + 90
  s.transmission = 0.0;
  EXPECT_EQ(error_of([&] { SyntheticScene(Frame(400, 300, 3), s); }), Errc::BadParams);
}

TEST(Scene, TranslationTruth) {
  SceneSpec s = small_spec(6);
  s.motion.tx = 3.0;
  s.motion.ty = -2.0;
  const SyntheticScene scene(gen_texture(4, 640, 480), s);
  const Homography t = scene.truth(1, 5);
  const std::array<double, 9> want{1, 0, 12, 0, 1, -8, 0, 0, 1};
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(t.m[i], want[i], 1e-9);
  // Frame k shows base pixel (x - 3k, y + 2k) at (x, y).
  const Frame f0 = scene.render(0), f5 = scene.render(5);
  for (int y = 20; y < 100; y += 7)
    for (int x = 30; x < 140; x += 9) EXPECT_EQ(f5.at(x + 15, y - 10, 1), f0.at(x, y, 1));
}

TEST(Scene, TruthMapsPointsOntoTheSameTexture) {
  SceneSpec s;
  s.count = 40;
  s.motion = {2.0, 1.0, 0.004, 1.002, 0.0};
  s.seed = 9;
  const SyntheticScene scene(gen_texture(8, 2560, 1920), s);
  const Frame a = scene.render(3), b = scene.render(37);
  const Homography h = scene.truth(3, 37);
  Rng rng(1);
  int checked = 0;
  double err = 0, shifted = 0;
  while (checked < 100) {
    const Point2 p{static_cast<double>(rng.below(640)), static_cast<double>(rng.below(480))};
    const Point2 q = h.project(p);
    if (q.x < 2 || q.y < 2 || q.x > 636 || q.y > 476) continue;
    ++checked;
    for (int c = 0; c < 3; ++c) {
      const double ref = a.at(static_cast<int>(p.x), static_cast<int>(p.y), c);
      err += std::fabs(bilinear(b, q.x, q.y, c) - ref);
      shifted += std::fabs(bilinear(b, q.x + 1.0, q.y, c) - ref);
    }
  }
  // Resampling twice costs about a grey level; a one-pixel displacement costs far more.
  EXPECT_LT(err / 300, 2.0);
  EXPECT_GT(shifted / 300, 3 * err / 300);

  // Composition and the base-frame round trip agree.
  for (int i = 0; i < 100; ++i) {
    const Point2 p{rng.uniform(0, 640), rng.uniform(0, 480)};
    const Point2 via_base = scene.h_to_base()[37].inverse().project(scene.h_to_base()[3].project(p));
    const Point2 direct = h.project(p);
    EXPECT_LT(std::hypot(via_base.x - direct.x, via_base.y - direct.y), 0.5);
  }
}

TEST(Scene, RenderIsDeterministic) {
  SceneSpec s = named_scene("bench-drift", 3);
  s.count = 5;
  const SyntheticScene a = make_scene(s), b = make_scene(s);
  EXPECT_EQ(a.render(4).data, b.render(4).data);
  EXPECT_NE(a.render(3).data, a.render(4).data);
  s.seed = 4;
  EXPECT_NE(make_scene(s).render(4).data, a.render(4).data);
}

TEST(Scene, BadMotion) {
  const Frame tex = gen_texture(1, 320, 240);
  SceneSpec s = small_spec(50);
  s.motion.tx = 10.0;
  EXPECT_EQ(error_of([&] { SyntheticScene(tex, s); }), Errc::BadMotion);
  s.motion.tx = 0;
  s.motion.scale = 0;
  EXPECT_EQ(error_of([&] { SyntheticScene(tex, s); }), Errc::BadMotion);
  s.motion.scale = 1;
  s.width = 400;
  EXPECT_EQ(error_of([&] { SyntheticScene(tex, s); }), Errc::BadMotion);
  EXPECT_EQ(error_of([] { named_scene("bench-nowhere", 0); }), Errc::BadParams);
}

TEST(Scene, NamedScenes) {
  const SceneSpec d = named_scene("bench-drift", 2);
  EXPECT_EQ(d.count, 300);
  EXPECT_EQ(d.width, 640);
  EXPECT_EQ(d.height, 480);
  EXPECT_DOUBLE_EQ(d.motion.tx, 2.0);
  EXPECT_DOUBLE_EQ(d.motion.rotation, 0.002);
  EXPECT_DOUBLE_EQ(d.noise_sigma, 5.0);
  EXPECT_EQ(d.snow_density, 20);
  EXPECT_DOUBLE_EQ(d.transmission, 0.36);
  EXPECT_DOUBLE_EQ(named_scene("bench-translate", 0).transmission, 1.0);
  EXPECT_EQ(d.seed, 2u);
  EXPECT_EQ(named_scene("static", 0).count, 30);
}

TEST(Overlap, ClosedForms) {
  EXPECT_DOUBLE_EQ(overlap_fraction(Homography::identity(), 640, 480), 1.0);
  EXPECT_NEAR(overlap_fraction(Homography::translation(320, 0), 640, 480), 0.5, 1e-12);
  EXPECT_NEAR(overlap_fraction(Homography::translation(160, 120), 640, 480), 0.75 * 0.75, 1e-12);
  EXPECT_DOUBLE_EQ(overlap_fraction(Homography::translation(640, 0), 640, 480), 0.0);
  EXPECT_DOUBLE_EQ(overlap_fraction(Homography::translation(0, -900), 640, 480), 0.0);
}

TEST(Overlap, ShrinksAlongADrift) {
  SceneSpec s = named_scene("bench-drift", 0);
  const SyntheticScene scene(gen_texture(0, 2560, 1920), s);
  double previous = 1.0;
  for (int k = 1; k < 300; k += 7) {
    const double o = overlap_fraction(scene.truth(0, k), 640, 480);
    EXPECT_LE(o, previous + 1e-12);
    previous = o;
  }
  EXPECT_LT(previous, 0.3);
}

TEST(Noise, AddGaussianNoise) {
  const Frame flat(200, 200, 3, std::uint8_t{128}, 7);
  EXPECT_EQ(add_gaussian_noise(flat, 0.0, 1).data, flat.data);
  const Frame a = add_gaussian_noise(flat, 10.0, 1), b = add_gaussian_noise(flat, 10.0, 1);
  EXPECT_EQ(a.data, b.data);
  EXPECT_NE(add_gaussian_noise(flat, 10.0, 2).data, a.data);
  double sum = 0, sum2 = 0;
  for (auto v : a.data) {
    sum += v - 128.0;
    sum2 += (v - 128.0) * (v - 128.0);
  }
  const double n = static_cast<double>(a.data.size());
  EXPECT_NEAR(sum / n, 0.0, 0.2);
  EXPECT_NEAR(std::sqrt(sum2 / n), 10.0, 0.2);
  EXPECT_EQ(error_of([&] { add_gaussian_noise(flat, -1.0, 0); }), Errc::BadParams);
}

TEST(WriteScene, FramesAndTruthJson) {
  TempDir dir("synth");
  SceneSpec s = small_spec(3);
  s.name = "tiny";
  s.motion.rotation = 0.01;
  s.motion.tx = 1.0 / 3.0;
  const SyntheticScene scene(gen_texture(2, 400, 300), s);
  const GroundTruthSequence gt = write_scene(scene, dir.path(), 2);
  const FrameSequence seq = open_sequence(dir.path());
  EXPECT_EQ(seq.count, 3);
  EXPECT_EQ(seq.load(2).data, scene.render(2).data);
  EXPECT_EQ(gt.h_to_base.size(), 3u);

  std::ifstream in(dir / "truth.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["spec"], "tiny");
  EXPECT_EQ(j["count"], 3);
  ASSERT_EQ(j["h_to_base"].size(), 3u);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < 9; ++i) {
      const double stored = j["h_to_base"][k][i];
      const double exact = scene.h_to_base()[k].m[i];
      EXPECT_LE(std::fabs(stored - exact), 1e-11 * std::max(1.0, std::fabs(exact)));
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.12g", exact);
      EXPECT_EQ(stored, std::stod(buf));
    }
}
