#pragma once

#include <array>
#include <span>
#include <string>

#include "sicl/backend.hpp"

namespace sicl {

/// The two surface forms a mock bin can be transcribed as.
struct LabelPair {
  std::string default_form;
  std::string variant_form;
};

inline constexpr int kMockBins = 8;
using LabelTable = std::array<LabelPair, kMockBins>;

/// Label table shared by the mock backend and the synthetic corpus.
const LabelTable& default_label_table();

/// Tone-word frequencies the mock understands: 300, 700, ..., 3100 Hz.
inline constexpr std::array<double, 8> kMockToneFrequencies = {300, 700, 1100, 1500,
                                                               1900, 2300, 2700, 3100};

/// Deterministic stand-in for a Whisper-style model.
///
/// encode: one 20 ms frame per hop, D = 8; each frame is one-hot at
/// clamp(floor(8 * f_dom / 4000), 0, 7) where f_dom is the dominant DFT frequency of
/// the window, or all zeros when the window RMS is below 1e-4.
///
/// transcribe: splits the input on runs of >= 0.05 s of exact silence, takes the last
/// segment and finds its bin b. Emits the variant form of b when the forced prefix
/// contains it, otherwise the default form.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(LabelTable labels = default_label_table(), double window_seconds = 30.0);

  EmbeddingSequence encode(const Waveform& w) const override;
  Transcript transcribe(const Waveform& w, const ControlSequence& control) const override;
  std::string tag() const override { return "mock"; }

  const LabelTable& labels() const { return labels_; }

  static constexpr double kFrameHopSeconds = 0.02;
  static constexpr double kSilenceRunSeconds = 0.05;
  static constexpr float kSilenceRms = 1e-4f;

  static int frequency_bin(double hz);
  /// Frequency of the largest DFT magnitude over a window zero-padded to `fft_size`.
  static double dominant_frequency(std::span<const float> window, int sample_rate, int fft_size);
  /// Bin of the whole segment: argmax of its mean frame vector, -1 when silent.
  int segment_bin(const Waveform& segment) const;

 private:
  void check_input(const Waveform& w) const;

  LabelTable labels_;
  double window_seconds_;
};

}  // namespace sicl
