#pragma once

#include <Eigen/Core>

#include <cmath>
#include <filesystem>
#include <span>
#include <vector>

namespace sicl {

inline constexpr int kNativeSampleRate = 16000;

/// Mono PCM audio. Samples live in [-1, 1]; the rate is in Hz.
struct Waveform {
  Eigen::VectorXf samples;
  int sample_rate = kNativeSampleRate;

  Eigen::Index size() const { return samples.size(); }
  bool operator==(const Waveform& other) const {
    return sample_rate == other.sample_rate && samples.size() == other.samples.size() &&
           (samples.array() == other.samples.array()).all();
  }
};

/// Throws InvalidWaveform unless the waveform is non-empty, finite, in range and has a positive rate.
void validate(const Waveform& w);

/// Reads RIFF/WAVE (PCM16/24/32 or float32, 1 or 2 channels). Stereo is averaged to mono.
Waveform load_wav(const std::filesystem::path& path);

enum class WavEncoding { Pcm16, Pcm24, Pcm32, Float32 };

/// Writes a WAV file with the given encoding and channel count. Interleaved input for stereo.
void write_wav(const std::filesystem::path& path, std::span<const float> interleaved,
               int sample_rate, int channels = 1, WavEncoding encoding = WavEncoding::Pcm16);

inline void write_wav(const std::filesystem::path& path, const Waveform& w,
                      WavEncoding encoding = WavEncoding::Pcm16) {
  write_wav(path, std::span<const float>(w.samples.data(), static_cast<size_t>(w.size())),
            w.sample_rate, 1, encoding);
}

/// Resamples to 16 kHz with a Kaiser-windowed sinc; output is clamped to [-1, 1].
Waveform standardize(const Waveform& w);

/// Resamples to an arbitrary rate. Length is round(n * target / rate).
Waveform resample(const Waveform& w, int target_rate);

/// Joins parts in order with round(gap_seconds * rate) zero samples between consecutive parts.
Waveform concat_audio(std::span<const Waveform> parts, double gap_seconds = 0.0);

inline double duration_seconds(const Waveform& w) {
  return static_cast<double>(w.size()) / static_cast<double>(w.sample_rate);
}

inline Eigen::Index gap_samples(double gap_seconds, int rate) {
  return static_cast<Eigen::Index>(std::llround(gap_seconds * rate));
}

/// Pure sine tone, used by fixtures and the synthetic corpus.
Waveform make_tone(double frequency_hz, double seconds, float amplitude = 0.5f,
                   int rate = kNativeSampleRate, double phase = 0.0);

}  // namespace sicl
