#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "oracles.hpp"
#include "sicl/audio.hpp"
#include "sicl/error.hpp"

using namespace sicl;

namespace {

Waveform ramp(Eigen::Index n, int rate = 16000, float start = 0.1f) {
  Waveform w;
  w.sample_rate = rate;
  w.samples = Eigen::VectorXf::LinSpaced(n, start, 0.9f);
  return w;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::ConfigError;
}

class AudioIo : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = sicl::testing::scratch_dir("audio"); }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

}  // namespace

TEST_F(AudioIo, SilenceLoadsAsZeros) {
  sicl::testing::write_pcm16_wav(dir_ / "silence.wav", std::vector<int16_t>(16000, 0), 16000, 1);
  const Waveform w = load_wav(dir_ / "silence.wav");
  EXPECT_EQ(w.sample_rate, 16000);
  ASSERT_EQ(w.size(), 16000);
  EXPECT_TRUE((w.samples.array() == 0.0f).all());
}

TEST_F(AudioIo, StereoIsAveragedToMono) {
  std::vector<int16_t> stereo;
  for (int i = 0; i < 1000; ++i) {
    stereo.push_back(16384);   // +0.5
    stereo.push_back(-16384);  // -0.5
  }
  sicl::testing::write_pcm16_wav(dir_ / "stereo.wav", stereo, 16000, 2);
  const Waveform w = load_wav(dir_ / "stereo.wav");
  ASSERT_EQ(w.size(), 1000);
  EXPECT_TRUE((w.samples.array() == 0.0f).all());
}

TEST_F(AudioIo, EightKilohertzIsNotResampledAtLoad) {
  std::vector<int16_t> pcm(4000);
  std::mt19937 rng(3);
  for (auto& s : pcm) s = static_cast<int16_t>(static_cast<int>(rng() % 65536) - 32768);
  sicl::testing::write_pcm16_wav(dir_ / "8k.wav", pcm, 8000, 1);
  const Waveform w = load_wav(dir_ / "8k.wav");
  EXPECT_EQ(w.sample_rate, 8000);
  ASSERT_EQ(w.size(), 4000);
  for (size_t i = 0; i < pcm.size(); ++i) {
    ASSERT_EQ(w.samples[static_cast<Eigen::Index>(i)], static_cast<float>(pcm[i]) / 32768.0f) << i;
  }
}

TEST_F(AudioIo, AllEncodingsRoundTrip) {
  const Waveform src = make_tone(440.0, 0.1, 0.5f);
  for (auto enc : {WavEncoding::Pcm16, WavEncoding::Pcm24, WavEncoding::Pcm32, WavEncoding::Float32}) {
    write_wav(dir_ / "t.wav", src, enc);
    const Waveform back = load_wav(dir_ / "t.wav");
    ASSERT_EQ(back.size(), src.size());
    const float tol = enc == WavEncoding::Pcm16 ? 1.0f / 32768 : enc == WavEncoding::Float32 ? 0.0f : 1e-6f;
    EXPECT_LE((back.samples - src.samples).cwiseAbs().maxCoeff(), tol);
  }
}

TEST_F(AudioIo, MalformedAndUnsupportedFiles) {
  {
    std::ofstream f(dir_ / "junk.wav", std::ios::binary);
    f << "not a wav file at all";
  }
  EXPECT_EQ(code_of([&] { load_wav(dir_ / "junk.wav"); }), ErrorCode::MalformedWav);
  EXPECT_EQ(code_of([&] { load_wav(dir_ / "missing.wav"); }), ErrorCode::MalformedWav);

  // Truncated data chunk.
  sicl::testing::write_pcm16_wav(dir_ / "trunc.wav", std::vector<int16_t>(100, 1), 16000, 1);
  std::filesystem::resize_file(dir_ / "trunc.wav", 44 + 50);
  EXPECT_EQ(code_of([&] { load_wav(dir_ / "trunc.wav"); }), ErrorCode::MalformedWav);

  // A-law (format tag 6) is a compressed encoding.
  sicl::testing::write_pcm16_wav(dir_ / "alaw.wav", std::vector<int16_t>(10, 0), 16000, 1);
  {
    std::fstream f(dir_ / "alaw.wav", std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(20);
    f.put(6);
  }
  EXPECT_EQ(code_of([&] { load_wav(dir_ / "alaw.wav"); }), ErrorCode::UnsupportedEncoding);
}

TEST(Standardize, IdentityAtNativeRate) {
  const Waveform w = ramp(1234);
  EXPECT_EQ(standardize(w), w);
  EXPECT_EQ(standardize(standardize(w)), standardize(w));
}

TEST(Standardize, LengthFollowsRateRatio) {
  EXPECT_EQ(standardize(ramp(8000, 8000)).size(), 16000);
  EXPECT_EQ(standardize(ramp(48000, 48000)).size(), 16000);
  EXPECT_EQ(standardize(ramp(1001, 22050)).size(), std::llround(1001.0 * 16000 / 22050));
}

TEST(Standardize, DownsampledToneKeepsItsFrequency) {
  const Waveform high = make_tone(440.0, 1.0, 0.5f, 48000);
  const Waveform w = standardize(high);
  ASSERT_EQ(w.sample_rate, 16000);
  ASSERT_EQ(w.size(), 16000);
  std::vector<double> x(w.samples.data(), w.samples.data() + w.size());
  const double peak = sicl::testing::dft_peak_hz(x, 16000);
  EXPECT_NEAR(peak, 440.0, 1.0);  // one DFT bin is 1 Hz here
}

TEST(Standardize, OutputIsClampedAndFinite) {
  Waveform square;
  square.sample_rate = 44100;
  square.samples.resize(4410);
  for (Eigen::Index i = 0; i < square.size(); ++i) square.samples[i] = (i / 20) % 2 ? 1.0f : -1.0f;
  const Waveform w = standardize(square);
  EXPECT_TRUE(w.samples.allFinite());
  EXPECT_LE(w.samples.cwiseAbs().maxCoeff(), 1.0f);
}

TEST(ConcatAudio, SinglePartIsUnchanged) {
  const Waveform a = ramp(321);
  const std::vector<Waveform> parts{a};
  EXPECT_EQ(concat_audio(parts, 0.37), a);
}

TEST(ConcatAudio, TwoSecondsWithoutGap) {
  const std::vector<Waveform> parts{ramp(16000), ramp(16000)};
  EXPECT_EQ(concat_audio(parts, 0.0).size(), 32000);
}

TEST(ConcatAudio, GapsAreExactZerosAtComputedOffsets) {
  const std::vector<Waveform> parts{ramp(100), ramp(200), ramp(300)};
  const Waveform out = concat_audio(parts, 0.01);
  ASSERT_EQ(out.size(), 920);
  // Index oracle: gaps at [100, 260) and [460, 620); parts carry non-zero ramps.
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const bool in_gap = (i >= 100 && i < 260) || (i >= 460 && i < 620);
    EXPECT_EQ(out.samples[i] == 0.0f, in_gap) << i;
  }
  EXPECT_EQ(out.samples.segment(260, 200), parts[1].samples);
  EXPECT_EQ(out.samples.segment(620, 300), parts[2].samples);
}

TEST(ConcatAudio, AssociativeWithoutGap) {
  const Waveform a = ramp(10, 16000, 0.1f), b = ramp(20, 16000, 0.2f), c = ramp(30, 16000, 0.3f);
  const std::vector<Waveform> ab{a, b};
  const std::vector<Waveform> ab_c{concat_audio(ab), c};
  const std::vector<Waveform> abc{a, b, c};
  EXPECT_EQ(concat_audio(ab_c), concat_audio(abc));
}

TEST(ConcatAudio, RateMismatchAndEmptyInput) {
  const std::vector<Waveform> parts{ramp(10, 16000), ramp(10, 8000)};
  EXPECT_EQ(code_of([&] { concat_audio(parts); }), ErrorCode::RateMismatch);
  EXPECT_THROW(concat_audio(std::span<const Waveform>{}), Error);
}

TEST(Duration, RationalValues) {
  EXPECT_DOUBLE_EQ(duration_seconds(ramp(16000)), 1.0);
  EXPECT_NEAR(duration_seconds(ramp(47999)), 47999.0 / 16000.0, 1e-9);
  EXPECT_EQ(duration_seconds(ramp(47999)), 2.9999375);
}

TEST(Validate, RejectsEmptyAndOutOfRange) {
  Waveform empty;
  EXPECT_EQ(code_of([&] { validate(empty); }), ErrorCode::InvalidWaveform);
  Waveform loud = ramp(4);
  loud.samples[2] = 1.5f;
  EXPECT_EQ(code_of([&] { validate(loud); }), ErrorCode::InvalidWaveform);
  Waveform nan = ramp(4);
  nan.samples[1] = std::nanf("");
  EXPECT_EQ(code_of([&] { validate(nan); }), ErrorCode::InvalidWaveform);
  EXPECT_NO_THROW(validate(ramp(4)));
}

TEST_F(AudioIo, PipelineNeverLeavesRange) {
  // load -> standardize -> concat on loud inputs at several rates.
  std::mt19937 rng(11);
  std::vector<Waveform> parts;
  for (int rate : {8000, 22050, 44100, 48000}) {
    std::vector<int16_t> pcm(static_cast<size_t>(rate / 10));
    for (auto& s : pcm) s = (rng() % 2) ? 32767 : -32768;
    const auto path = dir_ / ("loud" + std::to_string(rate) + ".wav");
    sicl::testing::write_pcm16_wav(path, pcm, rate, 1);
    parts.push_back(standardize(load_wav(path)));
  }
  const Waveform out = concat_audio(parts, 0.05);
  EXPECT_NO_THROW(validate(out));
}
