#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqmatch/enhance.hpp"
#include "seqmatch/error.hpp"
#include "seqmatch/features.hpp"
#include "seqmatch/imgio.hpp"
#include "seqmatch/matchgeom.hpp"
#include "seqmatch/metrics.hpp"
#include "seqmatch/parallel.hpp"
#include "seqmatch/report.hpp"
#include "seqmatch/synthgen.hpp"

namespace seqmatch {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Small file helpers

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string hash_file(const fs::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  return hex64(fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size())));
}

inline nlohmann::ordered_json read_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::TruncatedBody, path.string() + ": " + e.what());
  }
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// ---------------------------------------------------------------------------
// Sequence metadata (`sequence.json` next to the frames)

struct SequenceInfo {
  std::string sequence_id;
  std::string enhancer = "identity";
};

inline SequenceInfo read_sequence_info(const fs::path& dir) {
  SequenceInfo info;
  const fs::path p = dir / "sequence.json";
  if (!fs::exists(p)) {
    info.sequence_id = fs::absolute(dir).lexically_normal().filename().string();
    return info;
  }
  const auto j = read_json_file(p);
  info.sequence_id = j.value("sequence_id", std::string());
  info.enhancer = j.value("enhancer", std::string("identity"));
  return info;
}

inline void write_sequence_info(const FrameSequence& seq, const SequenceInfo& info) {
  nlohmann::ordered_json j{{"sequence_id", info.sequence_id}, {"enhancer", info.enhancer},
                           {"count", seq.count},             {"width", seq.width},
                           {"height", seq.height},           {"channels", seq.channels},
                           {"fps", seq.fps}};
  write_text_file(seq.directory / "sequence.json", j.dump(2) + "\n");
}

/// Renders a named benchmark scene into `out_dir` with its metadata.
inline GroundTruthSequence generate_benchmark(const SceneSpec& spec, const fs::path& out_dir, int threads) {
  const SyntheticScene scene = make_scene(spec);
  GroundTruthSequence gt = write_scene(scene, out_dir, threads);
  write_sequence_info(gt.frames, {spec.name + "-seed" + std::to_string(spec.seed), "identity"});
  return gt;
}

/// Enhances a sequence and records the enhancer chain in the output metadata.
inline FrameSequence enhance_sequence(const fs::path& in_dir, const EnhancerSpec& enhancer, const fs::path& out_dir,
                                      int threads) {
  const FrameSequence seq = open_sequence(in_dir);
  SequenceInfo info = read_sequence_info(in_dir);
  FrameSequence out = apply_enhancer(seq, enhancer, out_dir, threads);
  info.enhancer = info.enhancer == "identity" ? enhancer.label() : info.enhancer + "+" + enhancer.label();
  write_sequence_info(out, info);
  return out;
}

// ---------------------------------------------------------------------------
// Feature cache: one FBFS file per frame plus manifest.json with the hashes
// that make it valid for a given sequence and detector configuration.

inline std::string detector_hash(const DetectorParams& p) { return hex64(fnv1a64(params_json(p).dump())); }

inline fs::path default_cache_dir(const fs::path& seq_dir) { return seq_dir / "features"; }

inline std::string cache_file_name(int frame) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06d.fbfs", frame);
  return buf;
}

inline FeatureSet extract_frame(const FrameSequence& seq, int k, const DetectorParams& p) {
  FeatureSet fs = detect_and_describe(to_grayscale(seq.load(k)), p);
  fs.frame_index = k;
  return fs;
}

inline std::vector<FeatureSet> extract_features(const FrameSequence& seq, const DetectorParams& p, int threads) {
  p.validate();
  std::vector<FeatureSet> out(static_cast<std::size_t>(seq.count));
  parallel_for(out.size(), threads, [&](std::size_t k) { out[k] = extract_frame(seq, static_cast<int>(k), p); });
  return out;
}

inline std::vector<FeatureSet> build_feature_cache(const FrameSequence& seq, const DetectorParams& p,
                                                   const fs::path& cache_dir, int threads) {
  std::error_code ec;
  fs::create_directories(cache_dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + cache_dir.string());
  auto features = extract_features(seq, p, threads);
  std::vector<std::string> image_hashes(features.size()), cache_hashes(features.size());
  parallel_for(features.size(), threads, [&](std::size_t k) {
    const fs::path path = cache_dir / cache_file_name(static_cast<int>(k));
    write_feature_cache(features[k], path);
    image_hashes[k] = hash_file(seq.frame_path(static_cast<int>(k)));
    cache_hashes[k] = hash_file(path);
  });
  auto frames = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < features.size(); ++k)
    frames.push_back({{"frame", k}, {"image_hash", image_hashes[k]}, {"features_hash", cache_hashes[k]}});
  nlohmann::ordered_json manifest{{"detector", params_json(p)},
                                  {"detector_hash", detector_hash(p)},
                                  {"count", seq.count},
                                  {"frames", frames}};
  write_text_file(cache_dir / "manifest.json", manifest.dump(2) + "\n");
  return features;
}

/// Loads cached features when the cache matches the sequence and detector
/// exactly; otherwise extracts them. `note` receives the reason for a miss.
inline std::vector<FeatureSet> load_features(const FrameSequence& seq, const DetectorParams& p,
                                             const fs::path& cache_dir, int threads, std::string* note = nullptr) {
  const auto miss = [&](const std::string& why) {
    if (note) *note = why;
    return extract_features(seq, p, threads);
  };
  const fs::path manifest_path = cache_dir / "manifest.json";
  if (!fs::exists(manifest_path)) return miss("no feature cache");
  nlohmann::ordered_json manifest;
  try {
    manifest = read_json_file(manifest_path);
  } catch (const Error&) {
    return miss("unreadable feature cache manifest");
  }
  if (manifest.value("detector_hash", std::string()) != detector_hash(p)) return miss("detector settings changed");
  if (manifest.value("count", -1) != seq.count || !manifest.contains("frames") ||
      manifest["frames"].size() != static_cast<std::size_t>(seq.count))
    return miss("frame count changed");

  std::vector<FeatureSet> out(static_cast<std::size_t>(seq.count));
  std::vector<char> valid(out.size(), 0);
  parallel_for(out.size(), threads, [&](std::size_t k) {
    const auto& entry = manifest["frames"][k];
    const fs::path path = cache_dir / cache_file_name(static_cast<int>(k));
    if (!fs::exists(path)) return;
    if (entry.value("image_hash", std::string()) != hash_file(seq.frame_path(static_cast<int>(k)))) return;
    if (entry.value("features_hash", std::string()) != hash_file(path)) return;
    try {
      out[k] = read_feature_cache(path, static_cast<int>(k));
      valid[k] = 1;
    } catch (const Error&) {
    }
  });
  for (char v : valid)
    if (!v) return miss("feature cache does not match frames");
  if (note) note->clear();
  return out;
}

// ---------------------------------------------------------------------------
// CSV artifacts

inline std::string format_real(double v) { return std::isinf(v) ? std::string("inf") : format_fixed6(v); }

inline std::string csv_preamble(const RunManifest& m) {
  return "# manifest_hash=" + m.hash() + "\n# sequence_id=" + m.sequence_id + "\n# enhancer=" + m.enhancer +
         "\n# detector=" + m.detector.method + "\n# ratio_test=0.8\n# detect_on=luma\n# reproj_mean_over=inliers\n";
}

inline std::string lms_csv(const StabilityResult& r, const RunManifest& m, int n) {
  std::string out = csv_preamble(m) + "# n=" + std::to_string(n) + "\n";
  out += "subject,offset,n_inliers,inlier_ratio,mean_reproj_error,accepted\n";
  for (const auto& p : r.profiles)
    for (const auto& o : p.per_offset)
      out += std::to_string(p.subject_frame) + ',' + std::to_string(o.offset) + ',' + std::to_string(o.n_inliers) +
             ',' + format_fixed6(o.inlier_ratio) + ',' + format_fixed6(o.mean_reproj_error) + ',' +
             (o.accepted ? "1" : "0") + '\n';
  return out;
}

inline std::string fmf_csv(const FmfResult& r, const RunManifest& m, int horizon) {
  std::string out = csv_preamble(m) + "# horizon=" + std::to_string(horizon) + "\n";
  out += "subject,fmf,capped\n";
  for (const auto& rec : r.records)
    out += std::to_string(rec.subject_frame) + ',' + std::to_string(rec.fmf) + ',' + (rec.capped ? "1" : "0") + '\n';
  return out;
}

inline std::string quality_manifest_hash(const SequenceInfo& orig, const SequenceInfo& enh) {
  nlohmann::ordered_json j{{"orig", orig.sequence_id}, {"orig_enhancer", orig.enhancer},
                           {"enh", enh.sequence_id},   {"enh_enhancer", enh.enhancer},
                           {"version", kToolkitVersion}};
  return hex64(fnv1a64(j.dump()));
}

inline std::string quality_csv(const QualitySummary& q, const std::string& manifest_hash) {
  std::string out = "# manifest_hash=" + manifest_hash + "\n# ssim_on=luma\nframe,psnr,ssim\n";
  for (const auto& f : q.frames)
    out += std::to_string(f.frame) + ',' + format_real(f.psnr) + ',' + format_fixed6(f.ssim) + '\n';
  return out;
}

/// Parsed CSV: `# key=value` comment lines plus data rows under a header.
struct CsvDocument {
  std::map<std::string, std::string> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string meta_value(const std::string& key, const std::string& fallback = "") const {
    const auto it = meta.find(key);
    return it == meta.end() ? fallback : it->second;
  }
};

inline CsvDocument parse_csv(const std::string& text, const std::string& expected_header) {
  CsvDocument doc;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string::npos) doc.meta[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    if (!have_header) {
      if (line != expected_header) throw Error(Errc::BadMagic, "unexpected CSV header: " + line);
      doc.header = split(line, ',');
      have_header = true;
      continue;
    }
    auto cells = split(line, ',');
    if (cells.size() != doc.header.size()) throw Error(Errc::TruncatedBody, "ragged CSV row: " + line);
    doc.rows.push_back(std::move(cells));
  }
  if (!have_header) throw Error(Errc::TruncatedBody, "CSV has no header");
  return doc;
}

inline int parse_int(const std::string& s) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(Errc::TruncatedBody, "bad integer in CSV: " + s);
}

inline double parse_real(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(Errc::TruncatedBody, "bad number in CSV: " + s);
}

inline std::vector<StabilityProfile> parse_lms_rows(const CsvDocument& doc) {
  std::vector<StabilityProfile> profiles;
  for (const auto& r : doc.rows) {
    const int subject = parse_int(r[0]);
    if (profiles.empty() || profiles.back().subject_frame != subject) profiles.push_back({subject, {}});
    OffsetResult o;
    o.offset = parse_int(r[1]);
    o.n_inliers = parse_int(r[2]);
    o.inlier_ratio = parse_real(r[3]);
    o.mean_reproj_error = parse_real(r[4]);
    o.accepted = r[5] == "1";
    profiles.back().per_offset.push_back(o);
  }
  return profiles;
}

inline std::vector<FmfRecord> parse_fmf_rows(const CsvDocument& doc) {
  std::vector<FmfRecord> records;
  for (const auto& r : doc.rows) records.push_back({parse_int(r[0]), parse_int(r[1]), r[2] == "1"});
  return records;
}

inline constexpr const char* kLmsHeader = "subject,offset,n_inliers,inlier_ratio,mean_reproj_error,accepted";
inline constexpr const char* kFmfHeader = "subject,fmf,capped";

// ---------------------------------------------------------------------------
// summary.json: one per run directory, rewritten section by section in a
// fixed key order.

inline void update_summary(const fs::path& path, const std::optional<RunManifest>& manifest, const std::string& section,
                           const nlohmann::ordered_json& content) {
  nlohmann::ordered_json old = nlohmann::ordered_json::object();
  if (fs::exists(path)) {
    try {
      old = read_json_file(path);
    } catch (const Error&) {
      old = nlohmann::ordered_json::object();
    }
  }
  if (manifest) {
    // Matching results from another configuration no longer belong here.
    if (old.value("manifest_hash", std::string()) != manifest->hash()) {
      old.erase("lms");
      old.erase("fmf");
    }
    old["manifest_hash"] = manifest->hash();
    old["manifest"] = manifest->to_json();
  }
  old[section] = content;
  nlohmann::ordered_json out;
  for (const char* key : {"manifest_hash", "manifest", "conventions", "lms", "fmf", "quality"}) {
    if (std::string(key) == "conventions") {
      out[key] = {{"ratio_test", kRatioTest}, {"detect_on", "luma"}, {"reproj_mean_over", "inliers"}};
    } else if (old.contains(key)) {
      out[key] = old[key];
    }
  }
  write_text_file(path, out.dump(2) + "\n");
}

inline nlohmann::ordered_json lms_summary(const StabilityResult& r, int n) {
  auto offsets = nlohmann::ordered_json::array();
  for (const auto& a : r.curve)
    offsets.push_back({{"offset", a.offset},
                       {"pairs", a.pairs},
                       {"mean_inliers", a.mean_inliers},
                       {"mean_inlier_ratio", a.mean_inlier_ratio},
                       {"mean_reproj_error", a.mean_reproj_error},
                       {"accepted_fraction", a.accepted_fraction}});
  return {{"n", n}, {"subjects", r.profiles.size()}, {"offsets", offsets}};
}

inline nlohmann::ordered_json fmf_summary(const FmfResult& r, int horizon) {
  return {{"horizon", horizon},
          {"subjects", r.records.size()},
          {"average_fmf", r.average_fmf},
          {"zero_count", r.zero_count},
          {"capped_count", r.capped_count},
          {"accepted_pairs", r.accepted_pairs}};
}

inline nlohmann::ordered_json quality_summary(const QualitySummary& q) {
  nlohmann::ordered_json j{{"frames", q.frames.size()}, {"mean_ssim", q.mean_ssim}, {"inf_psnr_count", q.inf_psnr_count}};
  if (std::isinf(q.mean_psnr))
    j["mean_psnr"] = "inf";
  else
    j["mean_psnr"] = q.mean_psnr;
  return j;
}

// ---------------------------------------------------------------------------
// Runs as seen by the report stage

inline RunManifest manifest_for(const fs::path& seq_dir, const DetectorParams& d, const RansacParams& r,
                                const std::string& timestamp) {
  const SequenceInfo info = read_sequence_info(seq_dir);
  RunManifest m;
  m.sequence_id = info.sequence_id;
  m.enhancer = info.enhancer;
  m.detector = d;
  m.ransac = r;
  m.timestamp = timestamp;
  return m;
}

/// Builds a RunResult from `lms.csv` and `fmf.csv` in `run_dir`; labels come
/// from `summary.json`.
inline RunResult load_run(const fs::path& run_dir) {
  const auto summary = read_json_file(run_dir / "summary.json");
  if (!summary.contains("manifest")) throw Error(Errc::TruncatedBody, "summary.json lacks a manifest");
  const RunManifest m = RunManifest::from_json(summary["manifest"]);
  const CsvDocument lms = parse_csv(read_text_file(run_dir / "lms.csv"), kLmsHeader);
  const CsvDocument fmf = parse_csv(read_text_file(run_dir / "fmf.csv"), kFmfHeader);
  const std::string hash = m.hash();
  if (lms.meta_value("manifest_hash") != hash || fmf.meta_value("manifest_hash") != hash)
    throw Error(Errc::BadParams, run_dir.string() + ": lms.csv and fmf.csv come from different configurations");

  RunResult r;
  r.enhancer = m.enhancer;
  r.detector = m.detector.method;
  r.manifest_hash = hash;
  const int n = parse_int(lms.meta_value("n", "10"));
  for (const auto& a : aggregate_offsets(parse_lms_rows(lms), n)) r.mean_inliers.push_back(a.mean_inliers);
  const auto records = parse_fmf_rows(fmf);
  r.average_fmf = summarize_fmf(records).average_fmf;
  const int horizon = parse_int(fmf.meta_value("horizon", "200"));
  r.cumulative = cumulative_distance_distribution(std::span<const FmfRecord>(records), horizon);
  return r;
}

/// Tables and curves for a set of run directories.
inline std::vector<fs::path> run_report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  if (run_dirs.empty()) throw Error(Errc::BadParams, "report needs at least one run directory");
  std::vector<RunResult> runs;
  for (const auto& d : run_dirs) runs.push_back(load_run(d));
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + out_dir.string());
  const Table ft = fmf_table(runs), dt = decay_table(runs);
  std::vector<fs::path> written;
  const auto put = [&](const std::string& name, const std::string& text) {
    write_text_file(out_dir / name, text);
    written.push_back(out_dir / name);
  };
  put("fmf_table.csv", ft.to_csv());
  put("fmf_table.txt", ft.to_text());
  put("decay_table.csv", dt.to_csv());
  put("decay_table.txt", dt.to_text());
  for (auto& p : emit_curves(runs, out_dir / "curves")) written.push_back(p);
  return written;
}

// ---------------------------------------------------------------------------
// key=value configuration files

using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_config_text(const std::string& text) {
  ConfigMap cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::BadParams, "config line " + std::to_string(lineno) + " is not key=value");
    cfg[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return cfg;
}

inline ConfigMap load_config(const fs::path& path) { return parse_config_text(read_text_file(path)); }

namespace detail {

inline double config_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(Errc::BadParams, "config " + key + " expects a number, got '" + v + "'");
}

inline long long config_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(Errc::BadParams, "config " + key + " expects an integer, got '" + v + "'");
}

inline std::uint64_t config_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long d = std::stoull(v, &used);
    if (used == v.size() && v.find('-') == std::string::npos) return d;
  } catch (const std::exception&) {
  }
  throw Error(Errc::BadParams, "config " + key + " expects an unsigned integer, got '" + v + "'");
}

}  // namespace detail

/// Every configurable value, keyed by its snake-case field name.
struct Settings {
  DetectorParams detector;
  RansacParams ransac;
  ClaheParams clahe;
  int pyramid_levels = 3;
  double weight_epsilon = 1e-3;
  int n = 10;
  int horizon = 200;
  int threads = 0;  // 0: all cores

  void apply(const ConfigMap& cfg) {
    using detail::config_int;
    using detail::config_real;
    for (const auto& [k, v] : cfg) {
      if (k == "method") detector.method = v;
      else if (k == "max_features") detector.max_features = static_cast<int>(config_int(k, v));
      else if (k == "n_levels") detector.n_levels = static_cast<int>(config_int(k, v));
      else if (k == "scale_factor") detector.scale_factor = config_real(k, v);
      else if (k == "fast_threshold") detector.fast_threshold = static_cast<int>(config_int(k, v));
      else if (k == "brisk_octaves") detector.brisk_octaves = static_cast<int>(config_int(k, v));
      else if (k == "kaze_threshold") detector.kaze_threshold = config_real(k, v);
      else if (k == "ransac_threshold") ransac.ransac_threshold = config_real(k, v);
      else if (k == "min_inlier_ratio") ransac.min_inlier_ratio = config_real(k, v);
      else if (k == "max_reproj_error") ransac.max_reproj_error = config_real(k, v);
      else if (k == "confidence") ransac.confidence = config_real(k, v);
      else if (k == "max_iterations") ransac.max_iterations = static_cast<int>(config_int(k, v));
      else if (k == "min_matches") ransac.min_matches = static_cast<int>(config_int(k, v));
      else if (k == "seed") ransac.seed = detail::config_u64(k, v);
      else if (k == "tiles_x") clahe.tiles_x = static_cast<int>(config_int(k, v));
      else if (k == "tiles_y") clahe.tiles_y = static_cast<int>(config_int(k, v));
      else if (k == "clip_limit") clahe.clip_limit = config_real(k, v);
      else if (k == "pyramid_levels") pyramid_levels = static_cast<int>(config_int(k, v));
      else if (k == "weight_epsilon") weight_epsilon = config_real(k, v);
      else if (k == "n") n = static_cast<int>(config_int(k, v));
      else if (k == "horizon") horizon = static_cast<int>(config_int(k, v));
      else if (k == "threads") threads = static_cast<int>(config_int(k, v));
      else throw Error(Errc::BadParams, "unknown config key '" + k + "'");
    }
  }

  int thread_count() const { return threads > 0 ? threads : default_thread_count(); }

  EnhancerSpec enhancer(const std::string& name) const {
    char clip[32];
    std::snprintf(clip, sizeof clip, "%g", clahe.clip_limit);
    std::map<std::string, std::string> params;
    if (name == "clahe" || name == "fusion") {
      params["tiles"] = std::to_string(clahe.tiles_x) + "x" + std::to_string(clahe.tiles_y);
      params["clip"] = clip;
    }
    if (name == "fusion") {
      char eps[32];
      std::snprintf(eps, sizeof eps, "%g", weight_epsilon);
      params["levels"] = std::to_string(pyramid_levels);
      params["eps"] = eps;
    }
    return EnhancerSpec::parse(name, params);
  }
};

}  // namespace seqmatch
