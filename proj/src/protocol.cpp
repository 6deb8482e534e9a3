#include "sicl/protocol.hpp"

#include <array>
#include <bit>
#include <cstring>

namespace sicl::protocol {
namespace {

constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name))
    throw Error(ErrorCode::ProtocolError, std::string("missing field '") + name + "'");
  return j.at(name);
}

template <typename T>
T get_as(const json& j, const char* name) {
  try {
    return field(j, name).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("field '") + name + "': " + e.what());
  }
}

std::optional<std::string> optional_string(const json& j, const char* name) {
  if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
  return get_as<std::string>(j, name);
}

Waveform to_waveform(int rate, const std::vector<float>& audio) {
  Waveform w;
  w.sample_rate = rate;
  w.samples = Eigen::Map<const Eigen::VectorXf>(audio.data(), static_cast<Eigen::Index>(audio.size()));
  return w;
}

}  // namespace

std::string base64_encode(std::span<const uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const size_t rest = bytes.size() - i;
  if (rest > 0) {
    uint32_t v = bytes[i] << 16;
    if (rest == 2) v |= bytes[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<uint8_t> base64_decode(std::string_view text) {
  std::array<int, 256> lookup{};
  lookup.fill(-1);
  for (size_t i = 0; i < kAlphabet.size(); ++i) lookup[static_cast<uint8_t>(kAlphabet[i])] = static_cast<int>(i);

  if (text.size() % 4 != 0) throw Error(ErrorCode::ProtocolError, "base64 length not a multiple of 4");
  std::vector<uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (size_t i = 0; i < text.size(); i += 4) {
    uint32_t v = 0;
    int pad = 0;
    for (size_t j = 0; j < 4; ++j) {
      const char c = text[i + j];
      if (c == '=') {
        if (i + 4 != text.size() || j < 2) throw Error(ErrorCode::ProtocolError, "bad base64 padding");
        ++pad;
        v <<= 6;
        continue;
      }
      if (pad > 0) throw Error(ErrorCode::ProtocolError, "bad base64 padding");
      const int d = lookup[static_cast<uint8_t>(c)];
      if (d < 0) throw Error(ErrorCode::ProtocolError, "invalid base64 character");
      v = (v << 6) | static_cast<uint32_t>(d);
    }
    out.push_back(static_cast<uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<uint8_t>((v >> 8) & 0xFF));
    if (pad < 1) out.push_back(static_cast<uint8_t>(v & 0xFF));
  }
  return out;
}

std::string encode_floats(std::span<const float> values) {
  std::vector<uint8_t> bytes(values.size() * 4);
  for (size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) bytes[4 * i + static_cast<size_t>(b)] = static_cast<uint8_t>(bits >> (8 * b));
  }
  return base64_encode(bytes);
}

std::vector<float> decode_floats(std::string_view b64) {
  const auto bytes = base64_decode(b64);
  if (bytes.size() % 4 != 0) throw Error(ErrorCode::ProtocolError, "float32 payload not a multiple of 4 bytes");
  std::vector<float> out(bytes.size() / 4);
  for (size_t i = 0; i < out.size(); ++i) {
    uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<uint32_t>(bytes[4 * i + static_cast<size_t>(b)]) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

json control_to_json(const ControlSequence& c) {
  json j;
  j["language"] = c.language ? json(*c.language) : json(nullptr);
  j["task"] = c.task;
  j["no_timestamps"] = c.no_timestamps;
  j["prompt"] = c.prompt ? json(*c.prompt) : json(nullptr);
  j["prefix"] = c.prefix ? json(*c.prefix) : json(nullptr);
  return j;
}

ControlSequence control_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ProtocolError, "control must be an object");
  ControlSequence c;
  c.language = optional_string(j, "language");
  c.task = j.contains("task") ? get_as<std::string>(j, "task") : "transcribe";
  if (c.task != "transcribe") throw Error(ErrorCode::ControlRejected, "unsupported task '" + c.task + "'");
  c.no_timestamps = j.contains("no_timestamps") ? get_as<bool>(j, "no_timestamps") : true;
  c.prompt = optional_string(j, "prompt");
  c.prefix = optional_string(j, "prefix");
  return c;
}

json to_json(const Request& r) {
  return std::visit(
      [](const auto& req) {
        json j;
        using T = std::decay_t<decltype(req)>;
        j["op"] = std::is_same_v<T, EncodeRequest> ? "encode" : "transcribe";
        j["sample_rate"] = req.sample_rate;
        j["audio_b64"] = encode_floats(req.audio);
        if constexpr (std::is_same_v<T, TranscribeRequest>) j["control"] = control_to_json(req.control);
        return j;
      },
      r);
}

json to_json(const EncodeResponse& r) {
  return json{{"dim", r.dim},
              {"hop_seconds", r.hop_seconds},
              {"audio_frames", r.audio_frames},
              {"frames_b64", encode_floats(r.frames)}};
}

json to_json(const TranscribeResponse& r) {
  return json{{"text", r.text}, {"applied_control", control_to_json(r.applied_control)}};
}

json to_json(const ErrorResponse& r) {
  return json{{"error", {{"code", r.code}, {"message", r.message}}}};
}

Request parse_request(const json& j) {
  const auto op = get_as<std::string>(j, "op");
  const auto rate = get_as<int>(j, "sample_rate");
  if (rate <= 0) throw Error(ErrorCode::ProtocolError, "sample_rate must be positive");
  auto audio = decode_floats(get_as<std::string>(j, "audio_b64"));
  if (op == "encode") return EncodeRequest{rate, std::move(audio)};
  if (op == "transcribe") return TranscribeRequest{rate, std::move(audio), control_from_json(field(j, "control"))};
  throw Error(ErrorCode::ProtocolError, "unknown op '" + op + "'");
}

EncodeResponse parse_encode_response(const json& j) {
  raise_if_error(j);
  EncodeResponse r;
  r.dim = get_as<int>(j, "dim");
  r.hop_seconds = get_as<double>(j, "hop_seconds");
  r.audio_frames = get_as<int>(j, "audio_frames");
  r.frames = decode_floats(get_as<std::string>(j, "frames_b64"));
  if (r.dim <= 0 || r.frames.size() % static_cast<size_t>(r.dim) != 0)
    throw Error(ErrorCode::ProtocolError, "frames payload does not match dim");
  const auto rows = static_cast<int>(r.frames.size() / static_cast<size_t>(r.dim));
  if (r.audio_frames < 1 || r.audio_frames > rows)
    throw Error(ErrorCode::ProtocolError, "audio_frames out of range");
  return r;
}

TranscribeResponse parse_transcribe_response(const json& j) {
  raise_if_error(j);
  TranscribeResponse r;
  r.text = get_as<std::string>(j, "text");
  r.applied_control = control_from_json(field(j, "applied_control"));
  return r;
}

std::string error_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::AudioTooLong: return "audio_too_long";
    case ErrorCode::ControlRejected: return "control_rejected";
    case ErrorCode::ProtocolError:
    case ErrorCode::RateMismatch:
    case ErrorCode::InvalidWaveform: return "bad_request";
    default: return "model_error";
  }
}

ErrorCode error_code_from(std::string_view wire_code) {
  if (wire_code == "audio_too_long") return ErrorCode::AudioTooLong;
  if (wire_code == "control_rejected") return ErrorCode::ControlRejected;
  if (wire_code == "bad_request") return ErrorCode::ProtocolError;
  return ErrorCode::BackendUnavailable;
}

void raise_if_error(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ProtocolError, "response is not a JSON object");
  if (!j.contains("error")) return;
  const json& e = j.at("error");
  const std::string code = e.is_object() && e.contains("code") && e["code"].is_string() ? e["code"].get<std::string>() : "";
  const std::string msg = e.is_object() && e.contains("message") && e["message"].is_string()
                              ? e["message"].get<std::string>()
                              : e.dump();
  throw Error(error_code_from(code), "remote " + code + ": " + msg);
}

EmbeddingSequence to_embedding(const EncodeResponse& r) {
  EmbeddingSequence seq;
  const auto rows = static_cast<Eigen::Index>(r.frames.size() / static_cast<size_t>(r.dim));
  seq.frames = Eigen::Map<const RowMatrix<float>>(r.frames.data(), rows, r.dim);
  seq.frame_hop_seconds = r.hop_seconds;
  seq.audio_frames = r.audio_frames;
  return seq;
}

EncodeResponse from_embedding(const EmbeddingSequence& seq) {
  EncodeResponse r;
  r.dim = static_cast<int>(seq.dim());
  r.hop_seconds = seq.frame_hop_seconds;
  r.audio_frames = static_cast<int>(seq.audio_frames);
  r.frames.assign(seq.frames.data(), seq.frames.data() + seq.frames.size());
  return r;
}

std::string handle(const Backend& backend, std::string_view body) {
  try {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::exception& e) {
      return to_json(ErrorResponse{"bad_request", e.what()}).dump();
    }
    const Request req = parse_request(j);
    if (const auto* enc = std::get_if<EncodeRequest>(&req)) {
      return to_json(from_embedding(backend.encode(to_waveform(enc->sample_rate, enc->audio)))).dump();
    }
    const auto& tr = std::get<TranscribeRequest>(req);
    const Transcript t = backend.transcribe(to_waveform(tr.sample_rate, tr.audio), tr.control);
    return to_json(TranscribeResponse{t.text, t.applied_control}).dump();
  } catch (const Error& e) {
    return to_json(ErrorResponse{error_code_for(e.code()), e.what()}).dump();
  } catch (const std::exception& e) {
    return to_json(ErrorResponse{"model_error", e.what()}).dump();
  }
}

}  // namespace sicl::protocol
