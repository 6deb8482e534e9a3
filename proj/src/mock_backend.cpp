#include "sicl/mock_backend.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "sicl/error.hpp"

namespace sicl {

const LabelTable& default_label_table() {
  static const LabelTable table = {{
      {"春花", "阿妹"},
      {"夏雨", "老汉"},
      {"秋月", "啥子"},
      {"冬雪", "晓得"},
      {"东风", "巴适"},
      {"西山", "要紧"},
      {"南海", "莫名"},
      {"北河", "安逸"},
  }};
  return table;
}

MockBackend::MockBackend(LabelTable labels, double window_seconds)
    : labels_(std::move(labels)), window_seconds_(window_seconds) {}

int MockBackend::frequency_bin(double hz) {
  const auto bin = static_cast<int>(std::floor(8.0 * hz / 4000.0));
  return std::clamp(bin, 0, kMockBins - 1);
}

double MockBackend::dominant_frequency(std::span<const float> window, int sample_rate, int fft_size) {
  // Real and imaginary DFT rows for bins 0..n/2, built once per size and thread.
  struct Basis {
    Eigen::MatrixXd re, im;
  };
  thread_local std::map<int, Basis> cache;
  const int n = fft_size;
  auto it = cache.find(n);
  if (it == cache.end()) {
    Basis b{Eigen::MatrixXd(n / 2 + 1, n), Eigen::MatrixXd(n / 2 + 1, n)};
    for (int k = 0; k <= n / 2; ++k) {
      for (int t = 0; t < n; ++t) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>((static_cast<long>(k) * t) % n) / n;
        b.re(k, t) = std::cos(a);
        b.im(k, t) = -std::sin(a);
      }
    }
    it = cache.emplace(n, std::move(b)).first;
  }
  const auto used = static_cast<Eigen::Index>(std::min<size_t>(static_cast<size_t>(n), window.size()));
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXf>(window.data(), used).cast<double>();
  const Eigen::VectorXd mag = (it->second.re.leftCols(used) * x).array().square() +
                              (it->second.im.leftCols(used) * x).array().square();
  Eigen::Index best_k = 0;
  mag.maxCoeff(&best_k);  // first maximum on ties
  return static_cast<double>(best_k) * sample_rate / n;
}

void MockBackend::check_input(const Waveform& w) const {
  if (w.sample_rate != kNativeSampleRate)
    throw Error(ErrorCode::RateMismatch, "mock backend expects 16 kHz input");
  if (duration_seconds(w) > window_seconds_)
    throw Error(ErrorCode::AudioTooLong, std::to_string(duration_seconds(w)) + " s exceeds window");
}

EmbeddingSequence MockBackend::encode(const Waveform& w) const {
  check_input(w);
  const auto hop = static_cast<Eigen::Index>(std::llround(kFrameHopSeconds * w.sample_rate));
  const Eigen::Index n_frames = (w.size() + hop - 1) / hop;

  EmbeddingSequence seq;
  seq.frame_hop_seconds = kFrameHopSeconds;
  seq.audio_frames = n_frames;
  seq.frames = RowMatrix<float>::Zero(n_frames, kMockBins);
  for (Eigen::Index f = 0; f < n_frames; ++f) {
    const Eigen::Index start = f * hop;
    const Eigen::Index len = std::min(hop, w.size() - start);
    const auto window = w.samples.segment(start, len);
    const double rms = std::sqrt(window.cast<double>().squaredNorm() / static_cast<double>(len));
    if (rms < kSilenceRms) continue;
    const double f_dom = dominant_frequency(std::span<const float>(window.data(), static_cast<size_t>(len)),
                                            w.sample_rate, static_cast<int>(hop));
    seq.frames(f, frequency_bin(f_dom)) = 1.0f;
  }
  return seq;
}

int MockBackend::segment_bin(const Waveform& segment) const {
  const EmbeddingSequence seq = encode(segment);
  const Eigen::VectorXf mean = seq.frames.topRows(seq.audio_frames).colwise().mean().transpose();
  if (mean.maxCoeff() <= 0.0f) return -1;
  Eigen::Index best = 0;
  mean.maxCoeff(&best);  // first maximum on ties
  return static_cast<int>(best);
}

Transcript MockBackend::transcribe(const Waveform& w, const ControlSequence& control) const {
  check_input(w);
  Transcript out;
  out.applied_control = control;

  // Locate the last non-silent segment; silence means >= 0.05 s of exact zeros.
  const auto min_run = static_cast<Eigen::Index>(std::llround(kSilenceRunSeconds * w.sample_rate));
  Eigen::Index end = w.size();
  while (end > 0 && w.samples[end - 1] == 0.0f) --end;
  if (end == 0) return out;
  Eigen::Index begin = 0;
  Eigen::Index run = 0;
  for (Eigen::Index i = end - 1; i >= 0; --i) {
    if (w.samples[i] == 0.0f) {
      if (++run >= min_run) {
        begin = i + run;
        break;
      }
    } else {
      run = 0;
    }
  }

  Waveform segment;
  segment.sample_rate = w.sample_rate;
  segment.samples = w.samples.segment(begin, end - begin);
  const int bin = segment_bin(segment);
  if (bin < 0) return out;

  const LabelPair& pair = labels_[static_cast<size_t>(bin)];
  const bool biased = control.prefix && !pair.variant_form.empty() &&
                      control.prefix->find(pair.variant_form) != std::string::npos;
  out.text = biased ? pair.variant_form : pair.default_form;
  return out;
}

}  // namespace sicl
