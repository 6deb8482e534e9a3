#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sicl/audio.hpp"
#include "sicl/backend.hpp"
#include "sicl/datastore.hpp"

namespace sicl {

/// Presentation order of the selected examples relative to the test utterance.
struct OrderMode {
  enum class Kind { FarToNear, NearToFar, Random };
  Kind kind = Kind::FarToNear;
  uint64_t seed = 0;

  /// "far_to_near", "near_to_far", "random" or "random:<seed>".
  static OrderMode parse(std::string_view text);
  std::string to_string() const;
  bool operator==(const OrderMode&) const = default;
};

struct ContextConfig {
  size_t k = 4;
  OrderMode order;
  std::string delimiter = "。";
  std::optional<std::string> prompt_text = "识别方言";
  double gap_seconds = 0.0;
  double max_window_seconds = 30.0;
  std::optional<std::string> language;
  bool no_timestamps = true;
  bool trailing_delimiter = true;
};

struct AssembledInput {
  Waveform audio;
  std::string prefix_text;
  ControlSequence control;
  std::vector<std::string> used_examples;
  std::vector<std::string> dropped_examples;
};

/// Input is knn_select output (ascending distance). Random mode is a seeded Fisher-Yates shuffle.
std::vector<ScoredExample> order_examples(std::vector<ScoredExample> selected, const OrderMode& mode);

/// Empty strings become absent fields.
ControlSequence build_control(const ContextConfig& cfg, std::string_view prefix_text);

/// Loads and standardizes an example's audio; throws MissingAudio when it cannot be read.
using AudioLoader = std::function<Waveform(const Example&)>;
Waveform load_example_audio(const Example& e);

/// label_1 + delim + ... + label_m (+ delim when trailing).
std::string join_labels(std::span<const std::string> labels, std::string_view delimiter, bool trailing);

/// Concatenates example audio (in the given order) ahead of the test audio and builds the
/// label prefix. While the result exceeds the window, the farthest remaining example is
/// dropped (largest distance, then largest id); survivors keep their order.
AssembledInput assemble(std::span<const ScoredExample> ordered, const Waveform& test, const ContextConfig& cfg,
                        const AudioLoader& loader = load_example_audio);

}  // namespace sicl
