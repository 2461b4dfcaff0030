#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace poslab {

enum class Errc {
  InvalidArgument,
  DimensionMismatch,
  RankDeficient,
  NoConvergence,
  NoComplement,
  NotOrthonormal,
  InvalidSpec,
  WindowOutOfRange,
  TooFewAtoms,
  TooFewGroups,
  EnumerationTooLarge,
  InvalidConfig,
  Diverged,
  DeltaTooLarge,
  DegenerateNormalizer,
  Overflow,
  EpsilonExceedsReach,
  IoError,
};

constexpr std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::NoComplement: return "NoComplement";
    case Errc::NotOrthonormal: return "NotOrthonormal";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::WindowOutOfRange: return "WindowOutOfRange";
    case Errc::TooFewAtoms: return "TooFewAtoms";
    case Errc::TooFewGroups: return "TooFewGroups";
    case Errc::EnumerationTooLarge: return "EnumerationTooLarge";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Diverged: return "Diverged";
    case Errc::DeltaTooLarge: return "DeltaTooLarge";
    case Errc::DegenerateNormalizer: return "DegenerateNormalizer";
    case Errc::Overflow: return "Overflow";
    case Errc::EpsilonExceedsReach: return "EpsilonExceedsReach";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can report it as machine-readable JSON.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace poslab
