#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqmatch/error.hpp"
#include "seqmatch/features.hpp"
#include "seqmatch/matchgeom.hpp"
#include "seqmatch/metrics.hpp"

namespace seqmatch {

inline constexpr const char* kToolkitVersion = "0.1.0";

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline nlohmann::ordered_json params_json(const DetectorParams& p) {
  return {{"method", p.method},           {"max_features", p.max_features},     {"n_levels", p.n_levels},
          {"scale_factor", p.scale_factor}, {"fast_threshold", p.fast_threshold}, {"brisk_octaves", p.brisk_octaves},
          {"kaze_threshold", p.kaze_threshold}};
}

inline nlohmann::ordered_json params_json(const RansacParams& p) {
  return {{"ransac_threshold", p.ransac_threshold}, {"min_inlier_ratio", p.min_inlier_ratio},
          {"max_reproj_error", p.max_reproj_error}, {"confidence", p.confidence},
          {"max_iterations", p.max_iterations},     {"min_matches", p.min_matches},
          {"seed", p.seed}};
}

/// Identity of one benchmark run. The timestamp is informational and does not
/// enter the hash, so identical configurations hash identically.
struct RunManifest {
  std::string sequence_id;
  std::string enhancer = "identity";
  DetectorParams detector;
  RansacParams ransac;
  std::string version = kToolkitVersion;
  std::string timestamp = "unspecified";

  nlohmann::ordered_json identity_json() const {
    return {{"sequence_id", sequence_id}, {"enhancer", enhancer}, {"detector", params_json(detector)},
            {"ransac", params_json(ransac)},  {"seed", ransac.seed},   {"version", version}};
  }

  std::string hash() const { return hex64(fnv1a64(identity_json().dump())); }

  nlohmann::ordered_json to_json() const {
    auto j = identity_json();
    j["timestamp"] = timestamp;
    j["hash"] = hash();
    return j;
  }

  static RunManifest from_json(const nlohmann::json& j) {
    try {
      RunManifest m;
      m.sequence_id = j.at("sequence_id").get<std::string>();
      m.enhancer = j.at("enhancer").get<std::string>();
      const auto& d = j.at("detector");
      m.detector.method = d.at("method").get<std::string>();
      m.detector.max_features = d.at("max_features").get<int>();
      m.detector.n_levels = d.at("n_levels").get<int>();
      m.detector.scale_factor = d.at("scale_factor").get<double>();
      m.detector.fast_threshold = d.at("fast_threshold").get<int>();
      m.detector.brisk_octaves = d.at("brisk_octaves").get<int>();
      m.detector.kaze_threshold = d.at("kaze_threshold").get<double>();
      const auto& r = j.at("ransac");
      m.ransac.ransac_threshold = r.at("ransac_threshold").get<double>();
      m.ransac.min_inlier_ratio = r.at("min_inlier_ratio").get<double>();
      m.ransac.max_reproj_error = r.at("max_reproj_error").get<double>();
      m.ransac.confidence = r.at("confidence").get<double>();
      m.ransac.max_iterations = r.at("max_iterations").get<int>();
      m.ransac.min_matches = r.at("min_matches").get<int>();
      m.ransac.seed = r.at("seed").get<std::uint64_t>();
      m.version = j.at("version").get<std::string>();
      m.timestamp = j.value("timestamp", std::string("unspecified"));
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::TruncatedBody, std::string("malformed manifest: ") + e.what());
    }
  }
};

/// What the report stage needs from one run.
struct RunResult {
  std::string enhancer;
  std::string detector;
  std::string manifest_hash;
  double average_fmf = 0;
  std::vector<double> mean_inliers;  // offsets 1..n
  std::vector<CurvePoint> cumulative;
};

inline std::string format_fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

/// Rows x columns of reals with the best value of each column flagged.
struct Table {
  std::string corner;
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<std::vector<std::optional<double>>> cells;
  std::vector<std::string> provenance;  // "label manifest=<hash>" per contributing run

  bool is_best(std::size_t r, std::size_t c) const {
    if (!cells[r][c]) return false;
    for (const auto& row : cells)
      if (row[c] && *row[c] > *cells[r][c]) return false;
    return true;
  }

  std::string cell_text(std::size_t r, std::size_t c) const {
    if (!cells[r][c]) return "-";
    return format_fixed2(*cells[r][c]) + (is_best(r, c) ? "*" : "");
  }

  std::string to_csv() const {
    std::string out;
    for (const auto& p : provenance) out += "# " + p + "\n";
    out += corner;
    for (const auto& c : columns) out += "," + c;
    out += '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out += rows[r];
      for (std::size_t c = 0; c < columns.size(); ++c) out += "," + cell_text(r, c);
      out += '\n';
    }
    return out;
  }

  std::string to_text() const {
    std::vector<std::size_t> width(columns.size() + 1, 0);
    width[0] = corner.size();
    for (const auto& r : rows) width[0] = std::max(width[0], r.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
      width[c + 1] = columns[c].size();
      for (std::size_t r = 0; r < rows.size(); ++r) width[c + 1] = std::max(width[c + 1], cell_text(r, c).size());
    }
    const auto pad = [](const std::string& s, std::size_t w, bool right) {
      const std::string fill(w - s.size(), ' ');
      return right ? fill + s : s + fill;
    };
    std::string out;
    out += pad(corner, width[0], false);
    for (std::size_t c = 0; c < columns.size(); ++c) out += " | " + pad(columns[c], width[c + 1], true);
    out += '\n' + std::string(width[0], '-');
    for (std::size_t c = 0; c < columns.size(); ++c) out += "-|-" + std::string(width[c + 1], '-');
    out += '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out += pad(rows[r], width[0], false);
      for (std::size_t c = 0; c < columns.size(); ++c) out += " | " + pad(cell_text(r, c), width[c + 1], true);
      out += '\n';
    }
    for (const auto& p : provenance) out += "# " + p + "\n";
    return out;
  }
};

namespace detail {

inline std::vector<RunResult> sorted_runs(std::span<const RunResult> runs) {
  std::vector<RunResult> v(runs.begin(), runs.end());
  std::stable_sort(v.begin(), v.end(), [](const RunResult& a, const RunResult& b) {
    if (a.enhancer != b.enhancer) return a.enhancer < b.enhancer;
    if (a.detector != b.detector) return a.detector < b.detector;
    return a.manifest_hash < b.manifest_hash;
  });
  return v;
}

inline std::string run_label(const RunResult& r) { return r.enhancer + " x " + r.detector; }

inline std::size_t index_of(std::vector<std::string>& names, const std::string& name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it != names.end()) return static_cast<std::size_t>(it - names.begin());
  names.push_back(name);
  return names.size() - 1;
}

}  // namespace detail

/// Average FMF with enhancers as rows and detectors as columns.
inline Table fmf_table(std::span<const RunResult> runs) {
  if (runs.empty()) throw Error(Errc::BadParams, "fmf_table needs at least one run");
  const auto sorted = detail::sorted_runs(runs);
  Table t;
  t.corner = "enhancer";
  for (const auto& r : sorted) {
    detail::index_of(t.rows, r.enhancer);
    detail::index_of(t.columns, r.detector);
  }
  std::sort(t.columns.begin(), t.columns.end());
  t.cells.assign(t.rows.size(), std::vector<std::optional<double>>(t.columns.size()));
  for (const auto& r : sorted) {
    const std::size_t row = detail::index_of(t.rows, r.enhancer), col = detail::index_of(t.columns, r.detector);
    if (t.cells[row][col]) throw Error(Errc::BadParams, "duplicate run for " + detail::run_label(r));
    t.cells[row][col] = r.average_fmf;
    t.provenance.push_back(detail::run_label(r) + " manifest=" + r.manifest_hash);
  }
  return t;
}

/// Mean inliers per offset, one row per run.
inline Table decay_table(std::span<const RunResult> runs) {
  if (runs.empty()) throw Error(Errc::BadParams, "decay_table needs at least one run");
  const auto sorted = detail::sorted_runs(runs);
  bool single_detector = true;
  for (const auto& r : sorted) single_detector = single_detector && r.detector == sorted.front().detector;
  std::size_t n = 0;
  for (const auto& r : sorted) n = std::max(n, r.mean_inliers.size());
  Table t;
  t.corner = "enhancer";
  for (std::size_t k = 1; k <= n; ++k) t.columns.push_back(std::to_string(k));
  for (const auto& r : sorted) {
    const std::string label = single_detector ? r.enhancer : detail::run_label(r);
    if (std::find(t.rows.begin(), t.rows.end(), label) != t.rows.end())
      throw Error(Errc::BadParams, "duplicate run for " + label);
    t.rows.push_back(label);
    std::vector<std::optional<double>> row(n);
    for (std::size_t k = 0; k < r.mean_inliers.size(); ++k) row[k] = r.mean_inliers[k];
    t.cells.push_back(std::move(row));
    t.provenance.push_back(detail::run_label(r) + " manifest=" + r.manifest_hash);
  }
  return t;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::IoFailure, "write failed: " + path.string());
}

inline std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.';
    if (keep) {
      out += c;
    } else if (out.empty() || out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

/// Writes `<run>_inliers.dat` and `<run>_cumulative.dat` per run plus
/// `series.json` listing the labels. Returns the list of written files.
inline std::vector<std::filesystem::path> emit_curves(std::span<const RunResult> runs,
                                                      const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + out_dir.string());
  const auto sorted = detail::sorted_runs(runs);
  std::vector<std::filesystem::path> written;
  auto series = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const RunResult& r = sorted[i];
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "run%02zu_", i);
    const std::string base = prefix + slug(r.enhancer + "_" + r.detector);
    const std::string header = "# series=" + detail::run_label(r) + " manifest=" + r.manifest_hash + "\n";

    std::string inl = header + "# offset mean_inliers\n";
    for (std::size_t k = 0; k < r.mean_inliers.size(); ++k)
      inl += std::to_string(k + 1) + " " + format_fixed6(r.mean_inliers[k]) + "\n";
    std::string cum = header + "# offset cumulative_accepted_pairs\n";
    for (const auto& p : r.cumulative) cum += std::to_string(p.offset) + " " + std::to_string(p.count) + "\n";

    const auto inl_path = out_dir / (base + "_inliers.dat");
    const auto cum_path = out_dir / (base + "_cumulative.dat");
    write_text_file(inl_path, inl);
    write_text_file(cum_path, cum);
    written.push_back(inl_path);
    written.push_back(cum_path);
    series.push_back({{"label", detail::run_label(r)},
                      {"enhancer", r.enhancer},
                      {"detector", r.detector},
                      {"manifest_hash", r.manifest_hash},
                      {"inliers", inl_path.filename().string()},
                      {"cumulative", cum_path.filename().string()}});
  }
  const auto manifest_path = out_dir / "series.json";
  write_text_file(manifest_path, nlohmann::ordered_json{{"series", series}}.dump(2) + "\n");
  written.push_back(manifest_path);
  return written;
}

}  // namespace seqmatch
