#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace refinekit {

enum class ErrorCode {
  BadMagic,
  TruncatedFile,
  NonFiniteValue,
  DuplicateId,
  ChecksumMismatch,
  BadFormat,
  IoError,
  UnmatchedId,
  DimensionMismatch,
  ShapeMismatch,
  ZeroNorm,
  VersionMismatch,
  MissingMoments,
  NegativeBeta,
  InsufficientData,
  NonFiniteLoss,
  EmptySet,
  LabelMismatch,
  ConvergenceFailure,
  InvalidArgument,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library. `index()` carries the offending
// row / byte offset / step when the error has one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::size_t> index = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

}  // namespace refinekit
