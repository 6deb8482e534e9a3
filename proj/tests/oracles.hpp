#pragma once

// Independent reference implementations used only by tests. None of these call into the
// library code paths they are used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace sicl::testing {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  static std::random_device rd;
  auto dir = std::filesystem::temp_directory_path() / ("sicl_" + name + "_" + std::to_string(rd()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Hand-rolled PCM16 WAV writer (canonical 44-byte header).
inline void write_pcm16_wav(const std::filesystem::path& path, const std::vector<int16_t>& interleaved, int rate,
                            int channels) {
  std::ofstream f(path, std::ios::binary);
  const auto u32 = [&](uint32_t v) {
    for (int i = 0; i < 4; ++i) f.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  const auto u16 = [&](uint16_t v) {
    f.put(static_cast<char>(v & 0xFF));
    f.put(static_cast<char>(v >> 8));
  };
  const auto data_bytes = static_cast<uint32_t>(interleaved.size() * 2);
  f.write("RIFF", 4);
  u32(36 + data_bytes);
  f.write("WAVEfmt ", 8);
  u32(16);
  u16(1);
  u16(static_cast<uint16_t>(channels));
  u32(static_cast<uint32_t>(rate));
  u32(static_cast<uint32_t>(rate * channels * 2));
  u16(static_cast<uint16_t>(channels * 2));
  u16(16);
  f.write("data", 4);
  u32(data_bytes);
  for (int16_t s : interleaved) u16(static_cast<uint16_t>(s));
}

/// Frequency (Hz) of the largest-magnitude DFT bin, computed directly from the definition.
inline double dft_peak_hz(const std::vector<double>& x, int rate) {
  const size_t n = x.size();
  std::vector<double> c(n), s(n);
  for (size_t i = 0; i < n; ++i) {
    c[i] = std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    s[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  size_t best = 0;
  double best_mag = -1.0;
  for (size_t k = 0; k <= n / 2; ++k) {
    double re = 0.0, im = 0.0;
    size_t idx = 0;
    for (size_t t = 0; t < n; ++t) {
      re += x[t] * c[idx];
      im -= x[t] * s[idx];
      idx += k;
      if (idx >= n) idx -= n;
    }
    const double mag = re * re + im * im;
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }
  return static_cast<double>(best) * rate / static_cast<double>(n);
}

struct OracleNeighbor {
  std::string id;
  double distance;
};

/// Sort-everything kNN: distances from plain loops, full sort on (distance, id), truncate.
inline std::vector<OracleNeighbor> brute_force_knn(const std::vector<float>& query,
                                                   const std::vector<std::pair<std::string, std::vector<float>>>& items,
                                                   size_t k) {
  std::vector<OracleNeighbor> all;
  for (const auto& [id, v] : items) {
    double acc = 0.0;
    for (size_t d = 0; d < v.size(); ++d) {
      const double diff = static_cast<double>(query[d]) - static_cast<double>(v[d]);
      acc += diff * diff;
    }
    all.push_back({id, std::sqrt(acc)});
  }
  std::sort(all.begin(), all.end(), [](const OracleNeighbor& a, const OracleNeighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

/// Minimum edit distance by exhaustive enumeration of every alignment path.
template <typename T>
int exhaustive_edit_distance(const std::vector<T>& ref, const std::vector<T>& hyp, size_t i = 0, size_t j = 0) {
  if (i == ref.size()) return static_cast<int>(hyp.size() - j);
  if (j == hyp.size()) return static_cast<int>(ref.size() - i);
  const int diag = (ref[i] == hyp[j] ? 0 : 1) + exhaustive_edit_distance(ref, hyp, i + 1, j + 1);
  const int del = 1 + exhaustive_edit_distance(ref, hyp, i + 1, j);
  const int ins = 1 + exhaustive_edit_distance(ref, hyp, i, j + 1);
  return std::min({diag, del, ins});
}

}  // namespace sicl::testing
