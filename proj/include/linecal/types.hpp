#pragma once

#include <compare>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace linecal {

using Complex = std::complex<double>;

/// Rectangular-form phasor. Per-unit unless a function says otherwise.
using Phasor = std::complex<double>;

/// Multiplier that maps a measurement back onto the true quantity
/// (the reciprocal of a positive-sequence ratio error).
using CorrectionFactor = std::complex<double>;

enum class Quantity { Voltage, Current };

enum class ElementKind { Line, Injection };

/// Identifies one CT or PT channel: a line end or a bus injection.
struct ChannelKey {
  std::string bus;
  ElementKind kind = ElementKind::Line;
  std::string line;  // empty for injections
  Quantity quantity = Quantity::Current;

  static ChannelKey line_voltage(std::string bus, std::string line) {
    return {std::move(bus), ElementKind::Line, std::move(line), Quantity::Voltage};
  }
  static ChannelKey line_current(std::string bus, std::string line) {
    return {std::move(bus), ElementKind::Line, std::move(line), Quantity::Current};
  }
  static ChannelKey injection(std::string bus) {
    return {std::move(bus), ElementKind::Injection, {}, Quantity::Current};
  }

  auto operator<=>(const ChannelKey&) const = default;
  bool operator==(const ChannelKey&) const = default;

  /// "bus/line/V", "bus/line/I" or "bus/inj/I".
  std::string to_string() const;
};

// Error hierarchy. Every failure mode in the library throws one of these.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or config.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Structurally invalid model or argument; `subject()` names the offending id.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::string subject)
      : Error(what), subject_(std::move(subject)) {}
  const std::string& subject() const noexcept { return subject_; }

 private:
  std::string subject_;
};

/// A formula evaluated at a point where it is singular.
class DegenerateModelError : public Error {
 public:
  using Error::Error;
};

/// Regression matrix numerically rank deficient.
class IllConditionedError : public Error {
 public:
  IllConditionedError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// More unknown factors than the data can pin down.
class UnderdeterminedError : public Error {
 public:
  UnderdeterminedError(const std::string& what, std::vector<std::string> channels)
      : Error(what), channels_(std::move(channels)) {}
  const std::vector<std::string>& channels() const noexcept { return channels_; }

 private:
  std::vector<std::string> channels_;
};

}  // namespace linecal
