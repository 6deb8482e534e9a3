#pragma once

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "sicl/audio.hpp"

namespace sicl {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Encoder output: T x D frames. Only the first `audio_frames` rows cover real audio;
/// the rest (if any) are padding.
struct EmbeddingSequence {
  RowMatrix<float> frames;
  double frame_hop_seconds = 0.02;
  Eigen::Index audio_frames = 0;

  Eigen::Index dim() const { return frames.cols(); }
};

/// Decoder-side controls. Text fields are plain strings; tokenization belongs to the backend.
struct ControlSequence {
  std::optional<std::string> language;
  std::string task = "transcribe";
  bool no_timestamps = true;
  std::optional<std::string> prompt;  // prior context, not continued
  std::optional<std::string> prefix;  // forced start of the transcript

  bool operator==(const ControlSequence&) const = default;
};

/// Decoded continuation after the forced prefix, plus the controls the backend applied.
struct Transcript {
  std::string text;
  ControlSequence applied_control;
};

/// An encoder-decoder ASR model. Implementations must be safe to call concurrently.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual EmbeddingSequence encode(const Waveform& w) const = 0;
  virtual Transcript transcribe(const Waveform& w, const ControlSequence& control) const = 0;

  /// Identifies the model; stored with datastores built from this backend.
  virtual std::string tag() const = 0;
  virtual int sample_rate() const { return kNativeSampleRate; }
};

using BackendPtr = std::shared_ptr<const Backend>;

/// "mock" -> MockBackend with the default label table;
/// "http://host:port" -> HTTP client; "stdio:<command>" -> newline-delimited JSON over a child process.
BackendPtr make_backend(std::string_view spec);

/// Spec from SICL_BACKEND_URL, falling back to `fallback` when unset or empty.
std::string backend_spec_from_env(std::string_view fallback = "mock");

}  // namespace sicl
