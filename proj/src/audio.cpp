#include "sicl/audio.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>

#include "sicl/error.hpp"

namespace sicl {
namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint16_t read_u16(const uint8_t* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }
uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>(v >> 8));
}
void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

float decode_sample(const uint8_t* p, uint16_t format, uint16_t bits) {
  if (format == kFormatFloat) {
    return std::bit_cast<float>(read_u32(p));
  }
  switch (bits) {
    case 16: return static_cast<float>(static_cast<int16_t>(read_u16(p))) / 32768.0f;
    case 24: {
      int32_t v = static_cast<int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v -= 0x1000000;
      return static_cast<float>(static_cast<double>(v) / 8388608.0);
    }
    case 32:
      return static_cast<float>(static_cast<double>(static_cast<int32_t>(read_u32(p))) /
                                2147483648.0);
  }
  return 0.0f;
}

double kaiser(double x, double beta) {
  // x in [-1, 1]
  if (std::abs(x) > 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - x * x)) / std::cyl_bessel_i(0.0, beta);
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

void validate(const Waveform& w) {
  if (w.sample_rate <= 0) throw Error(ErrorCode::InvalidWaveform, "sample rate must be positive");
  if (w.size() == 0) throw Error(ErrorCode::InvalidWaveform, "waveform is empty");
  if (!w.samples.allFinite()) throw Error(ErrorCode::InvalidWaveform, "non-finite sample");
  if (w.samples.cwiseAbs().maxCoeff() > 1.0f)
    throw Error(ErrorCode::InvalidWaveform, "sample outside [-1, 1]");
}

Waveform load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedWav, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::MalformedWav, "missing RIFF/WAVE header in " + path.string());
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  const uint8_t* data = nullptr;
  size_t data_size = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint8_t* chunk = bytes.data() + pos;
    const uint32_t size = read_u32(chunk + 4);
    const size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size())
        throw Error(ErrorCode::MalformedWav, "truncated fmt chunk");
      const uint8_t* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      bits = read_u16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 26) throw Error(ErrorCode::MalformedWav, "truncated extensible fmt chunk");
        format = read_u16(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (body + size > bytes.size())
        throw Error(ErrorCode::MalformedWav, "data chunk runs past end of file");
      data = bytes.data() + body;
      data_size = size;
      break;
    }
    pos = body + size + (size & 1u);
  }

  if (!have_fmt) throw Error(ErrorCode::MalformedWav, "no fmt chunk");
  if (data == nullptr) throw Error(ErrorCode::MalformedWav, "no data chunk");
  if (format != kFormatPcm && format != kFormatFloat)
    throw Error(ErrorCode::UnsupportedEncoding, "wav format tag " + std::to_string(format));
  const bool ok_bits = (format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32)) ||
                       (format == kFormatFloat && bits == 32);
  if (!ok_bits) throw Error(ErrorCode::UnsupportedEncoding, std::to_string(bits) + "-bit samples");
  if (channels != 1 && channels != 2)
    throw Error(ErrorCode::UnsupportedEncoding, std::to_string(channels) + " channels");
  if (rate == 0) throw Error(ErrorCode::MalformedWav, "zero sample rate");

  const size_t frame_bytes = static_cast<size_t>(bits / 8) * channels;
  if (data_size % frame_bytes != 0)
    throw Error(ErrorCode::MalformedWav, "data size is not a whole number of frames");
  const size_t frames = data_size / frame_bytes;

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(static_cast<Eigen::Index>(frames));
  for (size_t i = 0; i < frames; ++i) {
    const uint8_t* p = data + i * frame_bytes;
    float v = decode_sample(p, format, bits);
    if (channels == 2) v = 0.5f * (v + decode_sample(p + bits / 8, format, bits));
    if (!std::isfinite(v)) throw Error(ErrorCode::MalformedWav, "non-finite float sample");
    w.samples[static_cast<Eigen::Index>(i)] = std::clamp(v, -1.0f, 1.0f);
  }
  return w;
}

void write_wav(const std::filesystem::path& path, std::span<const float> interleaved,
               int sample_rate, int channels, WavEncoding encoding) {
  const uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : encoding == WavEncoding::Pcm24 ? 24 : 32;
  const uint16_t tag = encoding == WavEncoding::Float32 ? kFormatFloat : kFormatPcm;
  const uint32_t data_size = static_cast<uint32_t>(interleaved.size() * (bits / 8));

  std::vector<uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, tag);
  put_u16(out, static_cast<uint16_t>(channels));
  put_u32(out, static_cast<uint32_t>(sample_rate));
  put_u32(out, static_cast<uint32_t>(sample_rate * channels * (bits / 8)));
  put_u16(out, static_cast<uint16_t>(channels * (bits / 8)));
  put_u16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_size);

  for (float s : interleaved) {
    const double v = std::clamp(static_cast<double>(s), -1.0, 1.0);
    switch (encoding) {
      case WavEncoding::Pcm16: {
        const auto q = static_cast<int16_t>(std::clamp(std::lround(v * 32768.0), -32768L, 32767L));
        put_u16(out, static_cast<uint16_t>(q));
        break;
      }
      case WavEncoding::Pcm24: {
        const auto q = static_cast<int32_t>(std::clamp(std::lround(v * 8388608.0), -8388608L, 8388607L));
        for (int i = 0; i < 3; ++i) out.push_back(static_cast<uint8_t>((q >> (8 * i)) & 0xFF));
        break;
      }
      case WavEncoding::Pcm32: {
        const auto q = static_cast<int32_t>(
            std::clamp(std::llround(v * 2147483648.0), -2147483648LL, 2147483647LL));
        put_u32(out, static_cast<uint32_t>(q));
        break;
      }
      case WavEncoding::Float32:
        put_u32(out, std::bit_cast<uint32_t>(s));
        break;
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0) throw Error(ErrorCode::InvalidWaveform, "target rate must be positive");
  if (w.sample_rate == target_rate) return w;

  constexpr int kZeroCrossings = 16;
  constexpr double kBeta = 8.0;
  constexpr double kRolloff = 0.945;
  constexpr long kMaxPhases = 4096;

  // Output j sits at input position j * m / l.
  const long g = std::gcd(w.sample_rate, target_rate);
  const long l = target_rate / g;
  const long m = w.sample_rate / g;
  const double cutoff = std::min(1.0, static_cast<double>(l) / static_cast<double>(m)) * kRolloff;
  const double half_width = kZeroCrossings / cutoff;  // in input samples
  const auto reach = static_cast<Eigen::Index>(std::ceil(half_width));
  const Eigen::Index taps = 2 * reach + 2;

  // Tap weights for input indices base - reach .. base + reach + 1 at fractional offset frac.
  const auto fill = [&](double frac, double* out) {
    for (Eigen::Index k = 0; k < taps; ++k) {
      const double t = frac + static_cast<double>(reach - k);
      out[k] = std::abs(t) > half_width ? 0.0 : cutoff * sinc(cutoff * t) * kaiser(t / half_width, kBeta);
    }
  };
  const bool tabulated = l <= kMaxPhases;
  Eigen::MatrixXd table;
  if (tabulated) {
    table.resize(taps, l);
    for (long p = 0; p < l; ++p) fill(static_cast<double>(p) / static_cast<double>(l), table.col(p).data());
  }

  const auto n_in = w.size();
  const auto n_out = static_cast<Eigen::Index>(
      std::llround(static_cast<double>(n_in) * static_cast<double>(l) / static_cast<double>(m)));
  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  Eigen::VectorXd scratch(taps);
  for (Eigen::Index j = 0; j < n_out; ++j) {
    const long long num = static_cast<long long>(j) * m;
    const auto base = static_cast<Eigen::Index>(num / l);
    const long phase = static_cast<long>(num % l);
    const double* weights = scratch.data();
    if (tabulated) {
      weights = table.col(phase).data();
    } else {
      fill(static_cast<double>(phase) / static_cast<double>(l), scratch.data());
    }
    double acc = 0.0;
    const Eigen::Index first = base - reach;
    const Eigen::Index lo = std::max<Eigen::Index>(0, first);
    const Eigen::Index hi = std::min<Eigen::Index>(n_in - 1, first + taps - 1);
    for (Eigen::Index i = lo; i <= hi; ++i) acc += w.samples[i] * weights[i - first];
    out.samples[j] = static_cast<float>(std::clamp(acc, -1.0, 1.0));
  }
  return out;
}

Waveform standardize(const Waveform& w) { return resample(w, kNativeSampleRate); }

Waveform concat_audio(std::span<const Waveform> parts, double gap_seconds) {
  if (parts.empty()) throw Error(ErrorCode::InvalidWaveform, "concat_audio needs at least one part");
  if (gap_seconds < 0.0) throw Error(ErrorCode::InvalidWaveform, "negative gap");
  const int rate = parts.front().sample_rate;
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    if (p.sample_rate != rate)
      throw Error(ErrorCode::RateMismatch, std::to_string(p.sample_rate) + " vs " + std::to_string(rate));
    total += p.size();
  }
  const Eigen::Index gap = gap_samples(gap_seconds, rate);
  total += gap * static_cast<Eigen::Index>(parts.size() - 1);

  Waveform out;
  out.sample_rate = rate;
  out.samples = Eigen::VectorXf::Zero(total);
  Eigen::Index pos = 0;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) pos += gap;
    out.samples.segment(pos, parts[i].size()) = parts[i].samples;
    pos += parts[i].size();
  }
  return out;
}

Waveform make_tone(double frequency_hz, double seconds, float amplitude, int rate, double phase) {
  const auto n = static_cast<Eigen::Index>(std::llround(seconds * rate));
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w.samples[i] = amplitude * static_cast<float>(std::sin(
                                   2.0 * std::numbers::pi * frequency_hz * static_cast<double>(i) / rate + phase));
  }
  return w;
}

}  // namespace sicl
