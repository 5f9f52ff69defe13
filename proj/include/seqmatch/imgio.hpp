#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "seqmatch/error.hpp"

namespace seqmatch {

/// Smallest width/height accepted into a frame sequence.
inline constexpr int kMinSequenceDim = 16;

/// Interleaved 8-bit raster, 1 (gray) or 3 (RGB) channels.
struct Frame {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;
  int index = 0;

  Frame() = default;
  Frame(int w, int h, int ch, std::uint8_t fill = 0, int idx = 0)
      : width(w), height(h), channels(ch),
        data(static_cast<std::size_t>(w) * h * ch, fill), index(idx) {
    validate();
  }
  Frame(int w, int h, int ch, std::vector<std::uint8_t> samples, int idx = 0)
      : width(w), height(h), channels(ch), data(std::move(samples)), index(idx) {
    validate();
  }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  std::uint8_t& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  void validate() const {
    if (channels != 1 && channels != 3)
      throw Error(Errc::InvalidFrame, "channels must be 1 or 3");
    if (width < 1 || height < 1) throw Error(Errc::InvalidFrame, "empty frame");
    if (data.size() != pixel_count() * static_cast<std::size_t>(channels))
      throw Error(Errc::InvalidFrame, "sample count does not match dimensions");
  }

  bool same_shape(const Frame& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }

  friend bool operator==(const Frame& a, const Frame& b) {
    return a.same_shape(b) && a.data == b.data;
  }
};

/// Single-channel raster; the input type of every detector and descriptor stage.
struct GrayFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;
  int index = 0;

  GrayFrame() = default;
  GrayFrame(int w, int h, std::uint8_t fill = 0, int idx = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill), index(idx) {}
  GrayFrame(int w, int h, std::vector<std::uint8_t> samples, int idx = 0)
      : width(w), height(h), data(std::move(samples)), index(idx) {
    if (data.size() != static_cast<std::size_t>(w) * h)
      throw Error(Errc::InvalidFrame, "sample count does not match dimensions");
  }

  std::size_t pixel_count() const { return data.size(); }

  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

  /// Border-replicating access.
  std::uint8_t at_clamped(int x, int y) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return data[static_cast<std::size_t>(y) * width + x];
  }

  Frame to_frame() const { return Frame(width, height, 1, data, index); }

  friend bool operator==(const GrayFrame& a, const GrayFrame& b) {
    return a.width == b.width && a.height == b.height && a.data == b.data;
  }
};

inline std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

/// Rec.601 luma.
inline std::uint8_t luma601(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return clamp_u8(0.299 * r + 0.587 * g + 0.114 * b);
}

inline GrayFrame to_grayscale(const Frame& frame) {
  frame.validate();
  if (frame.channels == 1) return GrayFrame(frame.width, frame.height, frame.data, frame.index);
  GrayFrame out(frame.width, frame.height, 0, frame.index);
  const std::size_t n = frame.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = &frame.data[i * 3];
    out.data[i] = luma601(p[0], p[1], p[2]);
  }
  return out;
}

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingFile, path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Header token reader; skips whitespace and '#' comments.
class HeaderCursor {
 public:
  HeaderCursor(const std::vector<std::uint8_t>& bytes, const std::string& name)
      : bytes_(bytes), name_(name) {}

  long next_uint() {
    skip_blank();
    long value = 0;
    int digits = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) throw Error(Errc::BadMagic, name_ + ": header value out of range");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw Error(Errc::BadMagic, name_ + ": malformed header");
    return value;
  }

  // Exactly one whitespace byte separates maxval from the body.
  std::size_t body_offset() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_]))
      throw Error(Errc::TruncatedBody, name_ + ": missing body");
    return pos_ + 1;
  }

  void skip(std::size_t n) { pos_ += n; }

 private:
  void skip_blank() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Decodes binary P5/P6 with maxval 255.
inline Frame load_netpbm(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(Errc::MissingFile, path.string());
  const auto bytes = detail::read_file_bytes(path);
  const std::string name = path.string();
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw Error(Errc::BadMagic, name);
  const int channels = bytes[1] == '5' ? 1 : 3;

  detail::HeaderCursor cursor(bytes, name);
  cursor.skip(2);
  const long width = cursor.next_uint();
  const long height = cursor.next_uint();
  const long maxval = cursor.next_uint();
  if (maxval != 255) throw Error(Errc::UnsupportedMaxval, name + ": maxval " + std::to_string(maxval));
  if (width < 1 || height < 1) throw Error(Errc::BadMagic, name + ": zero dimension");
  const std::size_t body = cursor.body_offset();
  const std::size_t need = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() < body || bytes.size() - body < need)
    throw Error(Errc::TruncatedBody, name + ": expected " + std::to_string(need) + " body bytes");

  std::vector<std::uint8_t> samples(bytes.begin() + static_cast<std::ptrdiff_t>(body),
                                    bytes.begin() + static_cast<std::ptrdiff_t>(body + need));
  return Frame(static_cast<int>(width), static_cast<int>(height), channels, std::move(samples));
}

inline void save_netpbm(const Frame& frame, const std::filesystem::path& path) {
  frame.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out << (frame.channels == 1 ? "P5" : "P6") << '\n'
      << frame.width << ' ' << frame.height << '\n'
      << 255 << '\n';
  out.write(reinterpret_cast<const char*>(frame.data.data()),
            static_cast<std::streamsize>(frame.data.size()));
  if (!out) throw Error(Errc::IoFailure, "write failed: " + path.string());
}

/// Ordered frames `frame_%06d.{pgm,ppm}` in one directory.
struct FrameSequence {
  std::filesystem::path directory;
  std::string extension = ".ppm";  // ".pgm" or ".ppm"
  int count = 0;
  double fps = 30.0;
  int width = 0;
  int height = 0;
  int channels = 0;

  static std::string file_name(int index, const std::string& ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%06d", index);
    return std::string(buf) + ext;
  }

  std::filesystem::path frame_path(int index) const { return directory / file_name(index, extension); }

  /// Loads frame `index`, enforcing the shape shared by the whole sequence.
  Frame load(int index) const {
    if (index < 0 || index >= count) throw Error(Errc::BadParams, "frame index out of range");
    Frame f = load_netpbm(frame_path(index));
    if (f.width != width || f.height != height || f.channels != channels)
      throw Error(Errc::DimensionMismatch, frame_path(index).string() + " differs in shape from frame 0");
    f.index = index;
    return f;
  }
};

/// Scans `dir` for a contiguous run of frames starting at index 0.
inline FrameSequence open_sequence(const std::filesystem::path& dir, double fps = 30.0) {
  if (!std::filesystem::is_directory(dir)) throw Error(Errc::MissingFile, dir.string());
  FrameSequence seq;
  seq.directory = dir;
  seq.fps = fps;
  for (const char* ext : {".ppm", ".pgm"}) {
    if (std::filesystem::exists(dir / FrameSequence::file_name(0, ext))) {
      seq.extension = ext;
      break;
    }
  }
  while (std::filesystem::exists(seq.frame_path(seq.count))) ++seq.count;
  if (seq.count == 0) throw Error(Errc::MissingFile, "no frame_000000.{ppm,pgm} in " + dir.string());

  const Frame first = load_netpbm(seq.frame_path(0));
  if (first.width < kMinSequenceDim || first.height < kMinSequenceDim)
    throw Error(Errc::InvalidFrame, "sequence frames must be at least 16x16");
  seq.width = first.width;
  seq.height = first.height;
  seq.channels = first.channels;
  return seq;
}

/// Writes `frame` into `seq` at its own index using the sequence's naming rule.
inline void write_frame(const FrameSequence& seq, const Frame& frame) {
  save_netpbm(frame, seq.directory / FrameSequence::file_name(frame.index, frame.channels == 1 ? ".pgm" : ".ppm"));
}

}  // namespace seqmatch
