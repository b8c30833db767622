#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nmforge {

enum class Errc {
  NegativeWeight,
  DuplicateLabel,
  AllNull,
  UnknownPoint,
  NotAbsolutelyContinuous,
  LevelOutOfRange,
  ChainNotRefining,
  NegativeInput,
  DimensionMismatch,
  NotANorm,
  NotAPartition,
  MapNotMeasurePreserving,
  DominationFails,
  BadExponents,
  FiberMismatch,
  BadRetraction,
  LiftingsNotCompatible,
  UnknownSuite,
  InvalidScenario,
  InvariantViolation,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above; the
/// message holds the witness (point label, section, set) when there is one.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), detail_(what) {}

  Errc code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace nmforge
