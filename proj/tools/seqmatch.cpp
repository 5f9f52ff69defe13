#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqmatch/seqmatch.hpp"

namespace {

using namespace seqmatch;

// Flags whose values override config-file keys; stored as text and applied
// only when present on the command line.
struct Overrides {
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    options.emplace_back(key, app->add_option(flag, values[key], help));
  }

  ConfigMap given() const {
    ConfigMap out;
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) out[key] = values.at(key);
    return out;
  }
};

struct Common {
  std::string config;
  std::string threads;
  std::string timestamp;
};

void add_common(CLI::App* app, Common& c, Overrides& o) {
  app->add_option("--config", c.config, "key=value file overriding defaults");
  o.add(app, "--threads", "threads", "worker threads (default: all cores)");
  app->add_option("--timestamp", c.timestamp, "timestamp recorded in the run manifest");
}

void add_detector(CLI::App* app, Overrides& o) {
  o.add(app, "--max-features", "max_features", "feature cap per frame");
  o.add(app, "--levels", "n_levels", "pyramid levels");
  o.add(app, "--scale-factor", "scale_factor", "pyramid scale factor");
  o.add(app, "--fast-threshold", "fast_threshold", "FAST intensity threshold");
  o.add(app, "--detector", "method", "detector name");
}

void add_ransac(CLI::App* app, Overrides& o) {
  o.add(app, "--ransac-threshold", "ransac_threshold", "inlier threshold in px");
  o.add(app, "--inlier-ratio", "min_inlier_ratio", "minimum inlier ratio");
  o.add(app, "--max-reproj", "max_reproj_error", "maximum mean reprojection error in px");
  o.add(app, "--confidence", "confidence", "RANSAC confidence");
  o.add(app, "--max-iterations", "max_iterations", "RANSAC iteration cap");
  o.add(app, "--min-matches", "min_matches", "minimum matches to attempt a fit");
  o.add(app, "--seed", "seed", "global RANSAC seed");
}

Settings resolve(const Common& c, const Overrides& o) {
  Settings s;
  if (!c.config.empty()) s.apply(load_config(c.config));
  s.apply(o.given());
  s.detector.validate();
  s.ransac.validate();
  return s;
}

std::string resolve_timestamp(const Common& c) {
  if (!c.timestamp.empty()) return c.timestamp;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) return std::string("epoch:") + epoch;
  return "unspecified";
}

fs::path cache_dir_for(const std::string& flag, const fs::path& in) {
  return flag.empty() ? default_cache_dir(in) : fs::path(flag);
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(file.parent_path(), ec);
    if (ec) throw Error(Errc::IoFailure, "cannot create " + file.parent_path().string());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frame matching benchmark toolkit"};
  app.require_subcommand(1);

  Common common;
  Overrides over;
  std::string in_dir, out_path, cache, method = "clahe", orig_dir, enh_dir, spec_name = "bench-drift";
  std::string tiles, clip, plevels, eps, count, noise;
  std::uint64_t gen_seed = 0;
  std::vector<std::string> runs;

  auto* gen = app.add_subcommand("gen", "render a synthetic benchmark sequence");
  gen->add_option("--spec", spec_name, "bench-drift | bench-translate | static");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", out_path, "output directory")->required();
  gen->add_option("--count", count, "override the frame count");
  gen->add_option("--noise-sigma", noise, "override the noise sigma");
  add_common(gen, common, over);

  auto* enh = app.add_subcommand("enhance", "apply an enhancer to every frame");
  enh->add_option("--in", in_dir, "input sequence directory")->required();
  enh->add_option("--method", method, "identity | ghe | clahe | grayworld | fusion");
  enh->add_option("--tiles", tiles, "CLAHE tile grid, e.g. 8x8");
  over.add(enh, "--clip", "clip_limit", "CLAHE clip limit (fraction of tile pixels)");
  over.add(enh, "--pyramid-levels", "pyramid_levels", "fusion pyramid levels");
  over.add(enh, "--eps", "weight_epsilon", "fusion weight epsilon");
  enh->add_option("--out", out_path, "output directory")->required();
  add_common(enh, common, over);

  auto* feat = app.add_subcommand("features", "extract and cache features");
  feat->add_option("--in", in_dir, "sequence directory")->required();
  feat->add_option("--cache", cache, "cache directory (default: <in>/features)");
  add_detector(feat, over);
  add_common(feat, common, over);

  auto* lms = app.add_subcommand("lms", "local matching stability");
  lms->add_option("--in", in_dir, "sequence directory")->required();
  lms->add_option("--cache", cache, "feature cache directory (default: <in>/features)");
  over.add(lms, "--n", "n", "offset horizon");
  lms->add_option("--out", out_path, "lms.csv path")->required();
  add_detector(lms, over);
  add_ransac(lms, over);
  add_common(lms, common, over);

  auto* fmf = app.add_subcommand("fmf", "furthest matchable frame");
  fmf->add_option("--in", in_dir, "sequence directory")->required();
  fmf->add_option("--cache", cache, "feature cache directory (default: <in>/features)");
  over.add(fmf, "--horizon", "horizon", "largest offset scanned");
  fmf->add_option("--out", out_path, "fmf.csv path")->required();
  add_detector(fmf, over);
  add_ransac(fmf, over);
  add_common(fmf, common, over);

  auto* qual = app.add_subcommand("quality", "PSNR and SSIM against the original");
  qual->add_option("--orig", orig_dir, "original sequence")->required();
  qual->add_option("--enh", enh_dir, "enhanced sequence")->required();
  qual->add_option("--out", out_path, "quality.csv path")->required();
  add_common(qual, common, over);

  auto* rep = app.add_subcommand("report", "tables and curves from run directories");
  rep->add_option("--runs", runs, "run directories holding lms.csv, fmf.csv, summary.json")->required();
  rep->add_option("--out", out_path, "report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (!tiles.empty()) {
      const auto x = tiles.find('x');
      if (x == std::string::npos) throw Error(Errc::BadParams, "--tiles expects WxH, e.g. 8x8");
      over.values["tiles_x"] = tiles.substr(0, x);
      over.values["tiles_y"] = tiles.substr(x + 1);
    }
    Settings s = resolve(common, over);
    if (!tiles.empty()) s.apply({{"tiles_x", over.values["tiles_x"]}, {"tiles_y", over.values["tiles_y"]}});
    const int threads = s.thread_count();

    if (gen->parsed()) {
      SceneSpec spec = named_scene(spec_name, gen_seed);
      if (!count.empty()) spec.count = static_cast<int>(detail::config_int("count", count));
      if (!noise.empty()) spec.noise_sigma = detail::config_real("noise_sigma", noise);
      const auto gt = generate_benchmark(spec, out_path, threads);
      std::printf("wrote %d frames to %s\n", gt.frames.count, out_path.c_str());
    } else if (enh->parsed()) {
      const auto out = enhance_sequence(in_dir, s.enhancer(method), out_path, threads);
      std::printf("enhanced %d frames into %s\n", out.count, out_path.c_str());
    } else if (feat->parsed()) {
      const auto seq = open_sequence(in_dir);
      const auto dir = cache_dir_for(cache, in_dir);
      const auto features = build_feature_cache(seq, s.detector, dir, threads);
      std::size_t total = 0;
      for (const auto& f : features) total += f.size();
      std::printf("cached %zu keypoints over %d frames in %s\n", total, seq.count, dir.string().c_str());
    } else if (lms->parsed() || fmf->parsed()) {
      const auto seq = open_sequence(in_dir);
      std::string note;
      const auto features = load_features(seq, s.detector, cache_dir_for(cache, in_dir), threads, &note);
      if (!note.empty()) std::fprintf(stderr, "note: %s; extracting features\n", note.c_str());
      const RunManifest m = manifest_for(in_dir, s.detector, s.ransac, resolve_timestamp(common));
      const fs::path out(out_path);
      ensure_parent(out);
      const fs::path summary = (out.has_parent_path() ? out.parent_path() : fs::path(".")) / "summary.json";
      if (lms->parsed()) {
        const auto r = local_stability(features, s.n, s.ransac, threads);
        write_text_file(out, lms_csv(r, m, s.n));
        update_summary(summary, m, "lms", lms_summary(r, s.n));
        for (const auto& a : r.curve)
          std::printf("offset %d: mean_inliers=%.2f inlier_ratio=%.4f\n", a.offset, a.mean_inliers,
                      a.mean_inlier_ratio);
      } else {
        const auto r = furthest_matchable(features, s.ransac, s.horizon, threads);
        write_text_file(out, fmf_csv(r, m, s.horizon));
        update_summary(summary, m, "fmf", fmf_summary(r, s.horizon));
        std::printf("average_fmf=%.2f zero=%d capped=%d\n", r.average_fmf, r.zero_count, r.capped_count);
      }
    } else if (qual->parsed()) {
      const auto a = open_sequence(orig_dir), b = open_sequence(enh_dir);
      const auto q = sequence_quality(a, b, threads);
      const std::string hash = quality_manifest_hash(read_sequence_info(orig_dir), read_sequence_info(enh_dir));
      const fs::path out(out_path);
      ensure_parent(out);
      write_text_file(out, quality_csv(q, hash));
      auto section = quality_summary(q);
      section["manifest_hash"] = hash;
      update_summary((out.has_parent_path() ? out.parent_path() : fs::path(".")) / "summary.json", std::nullopt,
                     "quality", section);
      std::printf("mean_psnr=%s mean_ssim=%.4f inf_psnr_frames=%d\n", format_real(q.mean_psnr).c_str(), q.mean_ssim,
                  q.inf_psnr_count);
    } else if (rep->parsed()) {
      std::vector<fs::path> dirs(runs.begin(), runs.end());
      for (const auto& p : run_report(dirs, out_path)) std::printf("%s\n", p.string().c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "seqmatch: %s: %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return e.is_io() ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "seqmatch: %s\n", e.what());
    return 1;
  }
  return 0;
}
