// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Usage: acceptance <work_dir>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <sys/wait.h>

#include "test_util.hpp"

using namespace seqmatch;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + SEQMATCH_CLI + "\" " + args + " >>\"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<FeatureSet> features_of(const SyntheticScene& scene, const std::function<Frame(Frame)>& variant) {
  std::vector<FeatureSet> out(static_cast<std::size_t>(scene.spec().count));
  parallel_for(out.size(), default_thread_count(), [&](std::size_t k) {
    out[k] = detect_and_describe(to_grayscale(variant(scene.render(static_cast<int>(k)))), DetectorParams{});
    out[k].frame_index = static_cast<int>(k);
  });
  return out;
}

Outcome homography_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
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
  const double secs = seconds_since(t0);
  return {worst < 1e-6 && secs < 10.0, fmt("worst relative error %.3g over 1000 H, %.2f s", worst, secs)};
}

Outcome ransac_recovery() {
  const auto good = testutil::planted_matches(70, 200, 140, 0.5);
  const auto st = ransac_homography(good.matches, good.kpa, good.kpb, RansacParams{});
  const double recall = testutil::planted_recall(good, st.inliers);
  const double corner = st.homography ? corner_transfer_error(*st.homography, good.truth, 640, 480) : 1e9;
  const auto bad = testutil::planted_matches(20, 200, 40, 0.5);
  const auto sb = ransac_homography(bad.matches, bad.kpa, bad.kpb, RansacParams{});
  const bool rejected = !sb.accepted && sb.reject_reason == RejectReason::LowInlierRatio;
  return {st.accepted && recall >= 0.95 && corner < 1.0 && rejected,
          fmt("70%%: recall %.3f, corner transfer %.3f px; 20%%: %s (%s)", recall, corner,
              rejected ? "rejected" : "not rejected", std::string(to_string(sb.reject_reason)).c_str())};
}

Outcome cross_consistency(std::span<const FeatureSet> clean, const FmfResult& fmf) {
  const auto lms = local_stability(clean, 10, RansacParams{}, default_thread_count());
  bool monotone = true;
  std::string curve;
  for (std::size_t i = 0; i < lms.curve.size(); ++i) {
    curve += fmt("%s%.1f", i ? " " : "", lms.curve[i].mean_inliers);
    if (i > 0 && lms.curve[i].mean_inliers > 1.05 * lms.curve[i - 1].mean_inliers) monotone = false;
  }
  long long total = 0;
  for (const auto& r : fmf.records) total += r.fmf;
  const auto cum = cumulative_distance_distribution(fmf.records, 200);
  const bool plateau = cum.back().count == total;
  return {monotone && plateau && lms.curve.size() == 10,
          fmt("mean inliers [%s]; plateau %lld vs sum fmf %lld", curve.c_str(), cum.back().count, total)};
}

Outcome fmf_prediction() {
  const SceneSpec spec = named_scene("bench-translate", 1);
  const SyntheticScene scene = make_scene(spec);
  const auto fs = features_of(scene, [](Frame f) { return f; });
  const RansacParams p;
  const int count = spec.count;
  // Matches per unit overlap at offset 1; the pair is lost once overlap falls
  // below min_matches / support.
  double support = 0;
  for (int f = 0; f + 1 < count; ++f)
    support += evaluate_pair(fs[f], fs[f + 1], p).n_matches /
               overlap_fraction(scene.truth(f, f + 1), spec.width, spec.height);
  support /= count - 1;
  int k_star = 0;
  for (int k = 1; k < count; ++k)
    if (overlap_fraction(scene.truth(0, k), spec.width, spec.height) * support >= p.min_matches) k_star = k;
  double predicted = 0;
  for (int f = 0; f + 1 < count; ++f) predicted += std::min({k_star, count - 1 - f, 200});
  predicted /= count - 1;
  const double measured = furthest_matchable(fs, p, 200, default_thread_count()).average_fmf;
  return {std::fabs(measured - predicted) <= 2.0,
          fmt("k* %d, predicted average %.2f, measured %.2f", k_star, predicted, measured)};
}

Outcome closed_form_quality() {
  const Frame a(64, 48, 3, std::uint8_t{100}), b(64, 48, 3, std::uint8_t{116});
  const double p = psnr(a, b);
  const Frame tex = gen_texture(0, 256, 256);
  const double self = ssim(tex, tex);
  std::vector<double> s;
  for (double sigma : {5.0, 10.0, 20.0}) s.push_back(ssim(tex, add_gaussian_noise(tex, sigma, 3)));
  const bool decreasing = s[0] < 1.0 && s[1] < s[0] && s[2] < s[1];
  return {std::fabs(p - 24.0824) <= 0.001 && self == 1.0 && decreasing,
          fmt("psnr %.4f dB (required 24.0824 +- 0.001); ssim self %.17g; ssim sigma 5/10/20 %.4f %.4f %.4f", p,
              self, s[0], s[1], s[2])};
}

Outcome enhancer_contracts() {
  int clahe_same = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GrayFrame g = testutil::random_gray(seed, 40 + static_cast<int>(seed), 30);
    clahe_same += clahe(g, {1, 1, 1.0}).data == global_he(g).image.data;
  }
  int monotone = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    GrayFrame g(32, 24);
    const int lo = static_cast<int>(rng.below(128)), span = 1 + static_cast<int>(rng.below(128));
    for (auto& v : g.data) v = static_cast<std::uint8_t>(lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(span))));
    const GrayFrame out = global_he(g).image;
    std::array<int, 256> map;
    map.fill(-1);
    bool ok = true;
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      ok = ok && (map[g.data[i]] < 0 || map[g.data[i]] == out.data[i]);
      map[g.data[i]] = out.data[i];
    }
    int prev = -1;
    for (int m : map)
      if (m >= 0) {
        ok = ok && m >= prev;
        prev = m;
      }
    monotone += ok;
  }
  const Frame f = testutil::random_frame(5, 64, 48, 3);
  const std::array<Frame, 3> inputs{f, f, f};
  const Frame fused = fuse_frames(inputs, FusionParams{});
  int worst = 0;
  for (std::size_t i = 0; i < f.data.size(); ++i) worst = std::max(worst, std::abs(fused.data[i] - f.data[i]));
  return {clahe_same == 20 && monotone == 100 && worst <= 1,
          fmt("clahe 1x1 == global_he on %d/20; monotone on %d/100; fusion max deviation %d", clahe_same, monotone,
              worst)};
}

Outcome directional(double clean_fmf, const SyntheticScene& scene) {
  const int threads = default_thread_count();
  const auto noisy = features_of(scene, [](Frame f) { return add_gaussian_noise(f, 10.0, 1); });
  const double noisy_fmf = furthest_matchable(noisy, RansacParams{}, 200, threads).average_fmf;
  const auto ghe = features_of(scene, [](Frame f) { return global_he_luma(f); });
  const double ghe_fmf = furthest_matchable(ghe, RansacParams{}, 200, threads).average_fmf;
  const double delta = ghe_fmf - clean_fmf;
  return {noisy_fmf < clean_fmf && delta != 0.0,
          fmt("average fmf clean %.3f, noise sigma 10 %.3f; global_he %.3f (delta %+.3f)", clean_fmf, noisy_fmf,
              ghe_fmf, delta)};
}

Outcome determinism(const fs::path& work) {
  const fs::path log = work / "cli.log";
  const auto pipeline = [&](const std::string& tag, const std::string& threads) -> std::string {
    const fs::path seq = work / ("seq_" + tag), run = work / ("run_" + tag);
    const std::string t = " --threads " + threads;
    const std::string s = seq.string(), r = run.string();
    if (cli("gen --spec bench-drift --seed 1 --out " + s + t, log) != 0 || cli("features --in " + s + t, log) != 0 ||
        cli("lms --in " + s + " --n 10 --out " + r + "/lms.csv" + t, log) != 0 ||
        cli("fmf --in " + s + " --horizon 200 --out " + r + "/fmf.csv" + t, log) != 0 ||
        cli("report --runs " + r + " --out " + r + "/report", log) != 0)
      return "";
    std::string bytes;
    for (const fs::path& dir : {seq, run}) {
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir));
      std::sort(files.begin(), files.end());
      for (const auto& f : files) bytes += f.string() + "\n" + slurp(dir / f);
    }
    return bytes;
  };
  const auto t0 = std::chrono::steady_clock::now();
  const std::string first = pipeline("a", "8");
  const double secs = seconds_since(t0);
  const std::string second = pipeline("b", "8");
  const std::string single = pipeline("c", "1");
  const bool ok = !first.empty() && first == second && first == single;
  return {ok && secs < 300.0, fmt("%s; first run %.1f s on %d core(s)", ok ? "byte-identical across runs and threads 1/8"
                                                                           : "outputs differ or a stage failed",
                                  secs, static_cast<int>(std::thread::hardware_concurrency()))};
}

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "seqmatch_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  int failures = 0;
  const auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  };

  report(1, "homography oracle", homography_oracle);
  report(2, "ransac recovery", ransac_recovery);

  const SyntheticScene drift = make_scene(named_scene("bench-drift", 1));
  const auto clean = features_of(drift, [](Frame f) { return f; });
  const FmfResult clean_fmf = furthest_matchable(clean, RansacParams{}, 200, default_thread_count());
  report(3, "metric cross-consistency", [&] { return cross_consistency(clean, clean_fmf); });
  report(4, "fmf geometry prediction", fmf_prediction);
  report(5, "closed-form quality", closed_form_quality);
  report(6, "enhancer contracts", enhancer_contracts);
  report(7, "directional end-to-end", [&] { return directional(clean_fmf.average_fmf, drift); });
  report(8, "determinism and performance", [&] { return determinism(work); });

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
