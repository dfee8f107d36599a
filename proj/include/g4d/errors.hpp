#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace g4d {

enum class ErrorCode {
  // model / construction
  ShapeMismatch,
  NonFiniteValue,
  OpacityOutOfRange,
  ScaleOutOfRange,
  // camera gauge
  DegenerateTranslation,
  TooFewCameras,
  LengthMismatch,
  NonPositiveGauge,
  // motion / fusion
  TimeOutOfRange,
  SingularCovariance,
  WeightFileMismatch,
  // metrics
  EmptyInput,
  EmptyCorrespondence,
  DegenerateConfiguration,
  ImageTooSmall,
  // io
  CorruptHeader,
  TruncatedPayload,
  VersionUnsupported,
  ParseError,
  IoError,
  UnsupportedBitDepth,
  // synth / cli
  BadConfig,
  UsageError,
  InternalError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace g4d
