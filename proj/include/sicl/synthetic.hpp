#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>

namespace sicl {

/// Tone-word corpus understood by MockBackend. Speakers are split into a dialect group,
/// who say every word in its variant form, and a standard group, who use the default form.
struct SyntheticSpec {
  int words = 200;               // test items
  int bins = 8;                  // tone classes used, <= 8
  double variant_fraction = 0.5; // share of test items spoken in the variant form
  int speakers = 4;
  uint64_t seed = 0;
  int examples_per_bin = 2;      // datastore items per speaker and tone class
  double tone_seconds = 0.5;
  bool other_corpus = true;      // also write a read-speech corpus in default forms

  static SyntheticSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct SyntheticCorpus {
  std::filesystem::path test_manifest;
  std::filesystem::path datastore_manifest;
  std::filesystem::path other_manifest;  // empty when not requested
  std::filesystem::path experiment_config;
  int test_items = 0;
  int variant_items = 0;
  int datastore_items = 0;
};

inline constexpr char kVariantDialect[] = "dialect";
inline constexpr char kStandardDialect[] = "standard";
inline constexpr char kOtherCorpusDialect[] = "read_speech";

/// Writes WAV fixtures, manifests and a ready-to-run experiment.json under `out_dir`.
/// Output is byte-identical for a fixed spec.
SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

}  // namespace sicl
