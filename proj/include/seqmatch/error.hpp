#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seqmatch {

enum class Errc {
  MissingFile,
  BadMagic,
  TruncatedBody,
  UnsupportedMaxval,
  IoFailure,
  InvalidFrame,
  DegenerateImage,
  BadParams,
  DimensionMismatch,
  LengthMismatch,
  TooSmall,
  DegenerateConfiguration,
  NumericalFailure,
  PointAtInfinity,
  BadMotion,
  DegenerateModel,
  NotImplemented,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::MissingFile: return "MissingFile";
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedBody: return "TruncatedBody";
    case Errc::UnsupportedMaxval: return "UnsupportedMaxval";
    case Errc::IoFailure: return "IoFailure";
    case Errc::InvalidFrame: return "InvalidFrame";
    case Errc::DegenerateImage: return "DegenerateImage";
    case Errc::BadParams: return "BadParams";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::TooSmall: return "TooSmall";
    case Errc::DegenerateConfiguration: return "DegenerateConfiguration";
    case Errc::NumericalFailure: return "NumericalFailure";
    case Errc::PointAtInfinity: return "PointAtInfinity";
    case Errc::BadMotion: return "BadMotion";
    case Errc::DegenerateModel: return "DegenerateModel";
    case Errc::NotImplemented: return "NotImplemented";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code.
/// I/O-class codes map to CLI exit status 2, everything else to 1.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

  bool is_io() const noexcept {
    return code_ == Errc::MissingFile || code_ == Errc::BadMagic ||
           code_ == Errc::TruncatedBody || code_ == Errc::UnsupportedMaxval ||
           code_ == Errc::IoFailure;
  }

 private:
  Errc code_;
};

}  // namespace seqmatch
