#include "sicl/error.hpp"

namespace sicl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedWav: return "MalformedWav";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::RateMismatch: return "RateMismatch";
    case ErrorCode::InvalidWaveform: return "InvalidWaveform";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::AudioTooLong: return "AudioTooLong";
    case ErrorCode::ControlRejected: return "ControlRejected";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::ManifestParseError: return "ManifestParseError";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptyDatastore: return "EmptyDatastore";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::CorruptPayload: return "CorruptPayload";
    case ErrorCode::NoCandidateSpeaker: return "NoCandidateSpeaker";
    case ErrorCode::TestTooLong: return "TestTooLong";
    case ErrorCode::MissingAudio: return "MissingAudio";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace sicl
