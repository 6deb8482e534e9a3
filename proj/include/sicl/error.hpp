#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sicl {

enum class ErrorCode {
  MalformedWav,
  UnsupportedEncoding,
  RateMismatch,
  InvalidWaveform,
  BackendUnavailable,
  AudioTooLong,
  ControlRejected,
  ProtocolError,
  ManifestParseError,
  DimMismatch,
  EmptyDatastore,
  IoError,
  FormatVersionMismatch,
  CorruptPayload,
  NoCandidateSpeaker,
  TestTooLong,
  MissingAudio,
  EmptyCorpus,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the toolkit carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sicl
