#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace yieldcast {

enum class ErrorKind {
  EmptyInput,
  InvalidConfig,
  InvalidData,
  ConstantFeature,
  ShapeError,
  IndexError,
  FormatError,
  RowError,
  EmptyJoin,
  InsufficientRows,
  Diverged,
  UndefinedR2,
  UndefinedMape,
  UndefinedKappa,
  UnsupportedVersion,
  IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidData: return "InvalidData";
    case ErrorKind::ConstantFeature: return "ConstantFeature";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::IndexError: return "IndexError";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::RowError: return "RowError";
    case ErrorKind::EmptyJoin: return "EmptyJoin";
    case ErrorKind::InsufficientRows: return "InsufficientRows";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::UndefinedR2: return "UndefinedR2";
    case ErrorKind::UndefinedMape: return "UndefinedMape";
    case ErrorKind::UndefinedKappa: return "UndefinedKappa";
    case ErrorKind::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (and the
/// CLI exit-code mapping) can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

// Environment failures map to exit code 1, everything else is a domain error.
inline bool is_environment_error(ErrorKind kind) {
  return kind == ErrorKind::IoError || kind == ErrorKind::FormatError || kind == ErrorKind::UnsupportedVersion;
}

}  // namespace yieldcast
