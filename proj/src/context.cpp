#include "sicl/context.hpp"

#include <algorithm>
#include <random>

#include "sicl/error.hpp"

namespace sicl {

OrderMode OrderMode::parse(std::string_view text) {
  if (text == "far_to_near") return {Kind::FarToNear, 0};
  if (text == "near_to_far") return {Kind::NearToFar, 0};
  if (text == "random") return {Kind::Random, 0};
  if (text.starts_with("random:")) {
    const std::string digits(text.substr(7));
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
      throw Error(ErrorCode::ConfigError, "bad random seed in order mode '" + std::string(text) + "'");
    return {Kind::Random, std::stoull(digits)};
  }
  throw Error(ErrorCode::ConfigError, "unknown order mode '" + std::string(text) + "'");
}

std::string OrderMode::to_string() const {
  switch (kind) {
    case Kind::FarToNear: return "far_to_near";
    case Kind::NearToFar: return "near_to_far";
    case Kind::Random: return "random:" + std::to_string(seed);
  }
  return {};
}

std::vector<ScoredExample> order_examples(std::vector<ScoredExample> selected, const OrderMode& mode) {
  switch (mode.kind) {
    case OrderMode::Kind::NearToFar:
      break;
    case OrderMode::Kind::FarToNear:
      std::reverse(selected.begin(), selected.end());
      break;
    case OrderMode::Kind::Random: {
      // Raw engine output keeps the permutation identical across standard libraries.
      std::mt19937_64 rng(mode.seed);
      for (size_t i = selected.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(rng() % i);
        std::swap(selected[i - 1], selected[j]);
      }
      break;
    }
  }
  return selected;
}

ControlSequence build_control(const ContextConfig& cfg, std::string_view prefix_text) {
  const auto non_empty = [](const std::optional<std::string>& s) -> std::optional<std::string> {
    if (s && !s->empty()) return s;
    return std::nullopt;
  };
  ControlSequence c;
  c.language = non_empty(cfg.language);
  c.task = "transcribe";
  c.no_timestamps = cfg.no_timestamps;
  c.prompt = non_empty(cfg.prompt_text);
  if (!prefix_text.empty()) c.prefix = std::string(prefix_text);
  return c;
}

Waveform load_example_audio(const Example& e) {
  try {
    Waveform w = standardize(load_wav(e.audio_path));
    validate(w);
    return w;
  } catch (const Error& err) {
    throw Error(ErrorCode::MissingAudio, "example " + e.id + " (" + e.audio_path + "): " + err.what());
  }
}

std::string join_labels(std::span<const std::string> labels, std::string_view delimiter, bool trailing) {
  std::string out;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) out += delimiter;
    out += labels[i];
  }
  if (trailing && !labels.empty()) out += delimiter;
  return out;
}

AssembledInput assemble(std::span<const ScoredExample> ordered, const Waveform& test, const ContextConfig& cfg,
                        const AudioLoader& loader) {
  if (cfg.max_window_seconds <= 0.0) throw Error(ErrorCode::ConfigError, "max_window_seconds must be positive");
  if (cfg.gap_seconds < 0.0) throw Error(ErrorCode::ConfigError, "gap_seconds must be non-negative");
  validate(test);
  const int rate = test.sample_rate;
  const auto budget = static_cast<double>(cfg.max_window_seconds);
  const auto fits = [&](Eigen::Index samples) { return static_cast<double>(samples) / rate <= budget; };
  if (!fits(test.size()))
    throw Error(ErrorCode::TestTooLong, std::to_string(duration_seconds(test)) + " s test exceeds " +
                                            std::to_string(budget) + " s window");

  std::vector<Waveform> audio;
  audio.reserve(ordered.size());
  for (const auto& s : ordered) {
    Waveform w = loader(s.example);
    if (w.sample_rate != rate)
      throw Error(ErrorCode::RateMismatch, "example " + s.example.id + " is not at the test sample rate");
    audio.push_back(std::move(w));
  }

  std::vector<bool> keep(ordered.size(), true);
  const Eigen::Index gap = gap_samples(cfg.gap_seconds, rate);
  Eigen::Index total = test.size();
  for (const auto& w : audio) total += w.size() + gap;

  AssembledInput out;
  size_t kept = ordered.size();
  while (kept > 0 && !fits(total)) {
    size_t victim = ordered.size();
    for (size_t i = 0; i < ordered.size(); ++i) {
      if (!keep[i]) continue;
      if (victim == ordered.size()) {
        victim = i;
        continue;
      }
      const auto& a = ordered[i];
      const auto& b = ordered[victim];
      if (a.distance > b.distance || (a.distance == b.distance && a.example.id > b.example.id)) victim = i;
    }
    keep[victim] = false;
    --kept;
    total -= audio[victim].size() + gap;
    out.dropped_examples.push_back(ordered[victim].example.id);
  }

  std::vector<Waveform> parts;
  std::vector<std::string> labels;
  parts.reserve(kept + 1);
  for (size_t i = 0; i < ordered.size(); ++i) {
    if (!keep[i]) continue;
    parts.push_back(std::move(audio[i]));
    labels.push_back(ordered[i].example.label);
    out.used_examples.push_back(ordered[i].example.id);
  }
  parts.push_back(test);

  out.audio = concat_audio(parts, cfg.gap_seconds);
  out.prefix_text = join_labels(labels, cfg.delimiter, cfg.trailing_delimiter);
  out.control = build_control(cfg, out.prefix_text);
  return out;
}

}  // namespace sicl
