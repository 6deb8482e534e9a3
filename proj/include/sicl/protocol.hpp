#pragma once

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sicl/backend.hpp"
#include "sicl/error.hpp"

// Wire format shared with remote model servers. Field names are fixed.
namespace sicl::protocol {

using nlohmann::json;

std::string base64_encode(std::span<const uint8_t> bytes);
std::vector<uint8_t> base64_decode(std::string_view text);

/// Little-endian float32 payloads.
std::string encode_floats(std::span<const float> values);
std::vector<float> decode_floats(std::string_view b64);

struct EncodeRequest {
  int sample_rate = kNativeSampleRate;
  std::vector<float> audio;
  bool operator==(const EncodeRequest&) const = default;
};

struct TranscribeRequest {
  int sample_rate = kNativeSampleRate;
  std::vector<float> audio;
  ControlSequence control;
  bool operator==(const TranscribeRequest&) const = default;
};

using Request = std::variant<EncodeRequest, TranscribeRequest>;

struct EncodeResponse {
  int dim = 0;
  double hop_seconds = 0.0;
  int audio_frames = 0;
  std::vector<float> frames;  // row-major, frames.size() == T * dim
  bool operator==(const EncodeResponse&) const = default;
};

struct TranscribeResponse {
  std::string text;
  ControlSequence applied_control;
  bool operator==(const TranscribeResponse&) const = default;
};

struct ErrorResponse {
  std::string code;
  std::string message;
  bool operator==(const ErrorResponse&) const = default;
};

json control_to_json(const ControlSequence& c);
ControlSequence control_from_json(const json& j);

json to_json(const Request& r);
json to_json(const EncodeResponse& r);
json to_json(const TranscribeResponse& r);
json to_json(const ErrorResponse& r);

/// Throws ProtocolError on missing or mistyped fields.
Request parse_request(const json& j);
EncodeResponse parse_encode_response(const json& j);
TranscribeResponse parse_transcribe_response(const json& j);

/// Throws the toolkit error matching an error object, if `j` is one.
void raise_if_error(const json& j);

/// Wire code for a toolkit error ("audio_too_long", "bad_request", ...).
std::string error_code_for(ErrorCode code);
ErrorCode error_code_from(std::string_view wire_code);

EmbeddingSequence to_embedding(const EncodeResponse& r);
EncodeResponse from_embedding(const EmbeddingSequence& seq);

/// Serves one request against `backend`; never throws, failures become error objects.
std::string handle(const Backend& backend, std::string_view body);

}  // namespace sicl::protocol
