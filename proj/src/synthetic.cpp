#include "sicl/synthetic.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "sicl/audio.hpp"
#include "sicl/datastore.hpp"
#include "sicl/error.hpp"
#include "sicl/mock_backend.hpp"

namespace sicl {
namespace {

using nlohmann::json;

struct Speaker {
  std::string id;
  bool variant = false;
};

const std::string& spoken_form(const Speaker& s, double frequency) {
  const LabelPair& pair = default_label_table()[static_cast<size_t>(MockBackend::frequency_bin(frequency))];
  return s.variant ? pair.variant_form : pair.default_form;
}

double unit_phase(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 * std::numbers::pi;
}

}  // namespace

SyntheticSpec SyntheticSpec::from_json(const json& j) {
  SyntheticSpec s;
  try {
    s.words = j.value("words", s.words);
    s.bins = j.value("bins", s.bins);
    s.variant_fraction = j.value("variant_fraction", s.variant_fraction);
    s.speakers = j.value("speakers", s.speakers);
    s.seed = j.value("seed", s.seed);
    s.examples_per_bin = j.value("examples_per_bin", s.examples_per_bin);
    s.tone_seconds = j.value("tone_seconds", s.tone_seconds);
    s.other_corpus = j.value("other_corpus", s.other_corpus);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("synthetic spec: ") + e.what());
  }
  return s;
}

json SyntheticSpec::to_json() const {
  return json{{"words", words},
              {"bins", bins},
              {"variant_fraction", variant_fraction},
              {"speakers", speakers},
              {"seed", seed},
              {"examples_per_bin", examples_per_bin},
              {"tone_seconds", tone_seconds},
              {"other_corpus", other_corpus}};
}

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
  if (spec.bins < 1 || spec.bins > kMockBins) throw Error(ErrorCode::ConfigError, "bins must be in [1, 8]");
  if (spec.words < 1) throw Error(ErrorCode::ConfigError, "words must be positive");
  if (spec.variant_fraction < 0.0 || spec.variant_fraction > 1.0)
    throw Error(ErrorCode::ConfigError, "variant_fraction must be in [0, 1]");
  if (spec.examples_per_bin < 0) throw Error(ErrorCode::ConfigError, "examples_per_bin must be >= 0");
  if (spec.tone_seconds <= 0.0) throw Error(ErrorCode::ConfigError, "tone_seconds must be positive");

  const int variant_items = static_cast<int>(std::llround(spec.words * spec.variant_fraction));
  const int standard_items = spec.words - variant_items;
  int variant_speakers = 0;
  if (variant_items > 0 && standard_items > 0) {
    if (spec.speakers < 2) throw Error(ErrorCode::ConfigError, "mixed corpora need at least two speakers");
    variant_speakers = std::clamp(static_cast<int>(std::llround(spec.speakers * spec.variant_fraction)), 1,
                                  spec.speakers - 1);
  } else {
    if (spec.speakers < 1) throw Error(ErrorCode::ConfigError, "speakers must be positive");
    variant_speakers = variant_items > 0 ? spec.speakers : 0;
  }

  std::vector<Speaker> speakers;
  std::vector<size_t> dialect_group, standard_group;
  for (int s = 0; s < spec.speakers; ++s) {
    const bool variant = s < variant_speakers;
    speakers.push_back({fmt::format("spk{:02d}", s), variant});
    (variant ? dialect_group : standard_group).push_back(static_cast<size_t>(s));
  }
  const auto dialect_of = [](const Speaker& s) { return std::string(s.variant ? kVariantDialect : kStandardDialect); };

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "wav", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + (out_dir / "wav").string() + ": " + ec.message());

  std::mt19937_64 rng(spec.seed);
  const auto write_tone = [&](const std::string& name, double frequency) {
    const std::string rel = "wav/" + name + ".wav";
    write_wav(out_dir / rel, make_tone(frequency, spec.tone_seconds, 0.5f, kNativeSampleRate, unit_phase(rng)));
    return rel;
  };

  // Tone classes for the test items: balanced, then shuffled under the seed.
  std::vector<int> classes(static_cast<size_t>(spec.words));
  for (size_t i = 0; i < classes.size(); ++i) classes[i] = static_cast<int>(i % static_cast<size_t>(spec.bins));
  for (size_t i = classes.size(); i > 1; --i) std::swap(classes[i - 1], classes[static_cast<size_t>(rng() % i)]);

  SyntheticCorpus corpus;
  std::vector<ManifestRow> test_rows;
  for (int i = 0; i < spec.words; ++i) {
    const bool variant = i < variant_items;
    const auto& group = variant ? dialect_group : standard_group;
    const int group_index = variant ? i : i - variant_items;
    const Speaker& spk = speakers[group[static_cast<size_t>(group_index) % group.size()]];
    const double freq = kMockToneFrequencies[static_cast<size_t>(classes[static_cast<size_t>(i)])];
    const std::string id = fmt::format("test_{:04d}", i);
    test_rows.push_back({id, write_tone(id, freq), spoken_form(spk, freq), spk.id, dialect_of(spk)});
  }

  std::vector<ManifestRow> store_rows;
  for (const auto& spk : speakers) {
    for (int c = 0; c < spec.bins; ++c) {
      const double freq = kMockToneFrequencies[static_cast<size_t>(c)];
      for (int e = 0; e < spec.examples_per_bin; ++e) {
        const std::string id = fmt::format("ds_{}_c{}_{}", spk.id, c, e);
        store_rows.push_back({id, write_tone(id, freq), spoken_form(spk, freq), spk.id, dialect_of(spk)});
      }
    }
  }

  std::vector<ManifestRow> other_rows;
  if (spec.other_corpus) {
    const Speaker standard{"", false};
    for (const auto& spk : speakers) {
      for (int c = 0; c < spec.bins; ++c) {
        const double freq = kMockToneFrequencies[static_cast<size_t>(c)];
        for (int e = 0; e < spec.examples_per_bin; ++e) {
          const std::string id = fmt::format("rs_{}_c{}_{}", spk.id, c, e);
          other_rows.push_back({id, write_tone(id, freq), spoken_form(standard, freq), spk.id, kOtherCorpusDialect});
        }
      }
    }
  }

  corpus.test_manifest = out_dir / "test_manifest.jsonl";
  corpus.datastore_manifest = out_dir / "datastore_manifest.jsonl";
  write_manifest(corpus.test_manifest, test_rows);
  write_manifest(corpus.datastore_manifest, store_rows);
  if (spec.other_corpus) {
    corpus.other_manifest = out_dir / "other_manifest.jsonl";
    write_manifest(corpus.other_manifest, other_rows);
  }

  json experiment{{"test_manifest", "test_manifest.jsonl"},
                  {"datastore_dir", "datastore"},
                  {"datastore_manifest", "datastore_manifest.jsonl"},
                  {"variant", "same_speaker_same_dialect"},
                  {"k_values", {0, 1, 2, 3, 4}},
                  {"order_modes", {"far_to_near"}},
                  {"selection", {{"mode", "knn"}}},
                  {"theta", "mock"},
                  {"lambda", "mock"},
                  {"context", {{"gap_seconds", 0.1}}},
                  {"output", "results"}};
  if (spec.other_corpus) experiment["other_datastore_manifest"] = "other_manifest.jsonl";
  corpus.experiment_config = out_dir / "experiment.json";
  std::ofstream cfg(corpus.experiment_config, std::ios::trunc);
  cfg << experiment.dump(2) << '\n';
  if (!cfg) throw Error(ErrorCode::IoError, "cannot write " + corpus.experiment_config.string());

  std::ofstream spec_out(out_dir / "synth_spec.json", std::ios::trunc);
  spec_out << spec.to_json().dump(2) << '\n';

  corpus.test_items = spec.words;
  corpus.variant_items = variant_items;
  corpus.datastore_items = static_cast<int>(store_rows.size());
  return corpus;
}

}  // namespace sicl
