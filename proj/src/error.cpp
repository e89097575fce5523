#include "refinekit/error.hpp"

namespace refinekit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::BadFormat: return "BadFormat";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnmatchedId: return "UnmatchedId";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::MissingMoments: return "MissingMoments";
    case ErrorCode::NegativeBeta: return "NegativeBeta";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::LabelMismatch: return "LabelMismatch";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

namespace {
std::string compose(ErrorCode code, const std::string& what, std::optional<std::size_t> index) {
  std::string msg(to_string(code));
  if (index) msg += "(" + std::to_string(*index) + ")";
  msg += ": ";
  msg += what;
  return msg;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& what, std::optional<std::size_t> index)
    : std::runtime_error(compose(code, what, index)), code_(code), index_(index) {}

}  // namespace refinekit
