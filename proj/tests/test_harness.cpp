#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "sicl/error.hpp"
#include "sicl/harness.hpp"
#include "sicl/mock_backend.hpp"
#include "sicl/synthetic.hpp"

using namespace sicl;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::filesystem::path& p) { return json::parse(slurp(p)); }

std::map<size_t, double> wer_by_k(const ResultTable& t) {
  std::map<size_t, double> out;
  for (const auto& c : t.cells) {
    EXPECT_TRUE(c.report) << c.error;
    if (c.report) out[c.key.k] = c.report->wer;
  }
  return out;
}

// One synthetic corpus shared by the suite; each test gets its own output dir.
class SyntheticExperiment : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = sicl::testing::scratch_dir("harness");
    corpus_ = make_synthetic_corpus(SyntheticSpec{}, root_ / "corpus");
  }
  static void TearDownTestSuite() { std::filesystem::remove_all(root_); }

  ExperimentConfig config(const json& overrides = json::object()) {
    json j = read_json(corpus_.experiment_config);
    j.update(overrides);
    j["output"] = (root_ / ::testing::UnitTest::GetInstance()->current_test_info()->name()).string();
    return ExperimentConfig::from_json(j, corpus_.experiment_config.parent_path());
  }

  static inline std::filesystem::path root_;
  static inline SyntheticCorpus corpus_;
};

}  // namespace

TEST(Synthetic, ByteIdenticalForFixedSpec) {
  const auto dir = sicl::testing::scratch_dir("synth");
  SyntheticSpec spec;
  spec.words = 24;
  spec.seed = 9;
  make_synthetic_corpus(spec, dir / "a");
  make_synthetic_corpus(spec, dir / "b");
  size_t files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), dir / "a");
    ASSERT_EQ(slurp(entry.path()), slurp(dir / "b" / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 24u);

  spec.seed = 10;
  make_synthetic_corpus(spec, dir / "c");
  EXPECT_NE(slurp(dir / "a" / "wav" / "test_0000.wav"), slurp(dir / "c" / "wav" / "test_0000.wav"));
  std::filesystem::remove_all(dir);
}

TEST(Synthetic, CorpusShape) {
  const auto dir = sicl::testing::scratch_dir("shape");
  const SyntheticCorpus c = make_synthetic_corpus(SyntheticSpec{}, dir);
  EXPECT_EQ(c.test_items, 200);
  EXPECT_EQ(c.variant_items, 100);
  const auto rows = read_manifest(c.test_manifest);
  ASSERT_EQ(rows.size(), 200u);

  const MockBackend mock;
  const LabelTable& labels = default_label_table();
  size_t variant_rows = 0;
  for (const auto& r : rows) {
    const int bin = mock.segment_bin(load_wav(r.audio));
    const bool variant = r.dialect == kVariantDialect;
    variant_rows += variant;
    EXPECT_EQ(r.label, variant ? labels[static_cast<size_t>(bin)].variant_form : labels[static_cast<size_t>(bin)].default_form)
        << r.id;
  }
  EXPECT_EQ(variant_rows, 100u);

  // Every variant speaker has at least two same-bin variant examples for every word class.
  const auto store = read_manifest(c.datastore_manifest);
  for (const auto& r : rows) {
    if (r.dialect != kVariantDialect) continue;
    const size_t matches = static_cast<size_t>(std::count_if(store.begin(), store.end(), [&](const ManifestRow& s) {
      return s.speaker == r.speaker && s.label == r.label;
    }));
    EXPECT_GE(matches, 2u) << r.id;
  }
  std::filesystem::remove_all(dir);
}

TEST(Synthetic, RejectsBadSpecs) {
  const auto dir = sicl::testing::scratch_dir("bad");
  SyntheticSpec spec;
  spec.bins = 9;
  EXPECT_THROW(make_synthetic_corpus(spec, dir), Error);
  spec = {};
  spec.variant_fraction = 1.5;
  EXPECT_THROW(make_synthetic_corpus(spec, dir), Error);
  std::filesystem::remove_all(dir);
}

TEST_F(SyntheticExperiment, WerFallsWithK) {
  const ResultTable t = run_experiment(config());
  const auto wer = wer_by_k(t);
  ASSERT_EQ(wer.size(), 5u);
  EXPECT_EQ(wer.at(0), 50.0);
  for (size_t k = 1; k <= 4; ++k) EXPECT_EQ(wer.at(k), 0.0) << k;
  for (size_t k = 1; k <= 4; ++k) EXPECT_LE(wer.at(k), wer.at(k - 1));
  for (const auto& c : t.cells) EXPECT_EQ(c.dropped, 0u);
}

TEST_F(SyntheticExperiment, StandardOnlyCorpusIsAlreadyCorrect) {
  const auto dir = root_ / "standard_only";
  SyntheticSpec spec;
  spec.words = 40;
  spec.variant_fraction = 0.0;
  const SyntheticCorpus c = make_synthetic_corpus(spec, dir);
  ExperimentConfig cfg = load_experiment_config(c.experiment_config);
  cfg.k_values = {0, 2};
  const auto wer = wer_by_k(Experiment(cfg).run());
  EXPECT_EQ(wer.at(0), 0.0);
  EXPECT_EQ(wer.at(2), 0.0);
}

TEST_F(SyntheticExperiment, OutputsAndLogsRecompute) {
  ExperimentConfig cfg = config({{"k_values", {0, 2}}});
  const ResultTable t = run_experiment(cfg);

  const std::string csv = slurp(cfg.output / "results.csv");
  EXPECT_EQ(csv, t.to_csv());
  EXPECT_EQ(csv.substr(0, csv.find('\n')), ResultTable::kCsvHeader);
  EXPECT_NE(csv.find("same_speaker_same_dialect,0,far_to_near,mock,mock,0,50.0000,200,0,0,400,0"), std::string::npos)
      << csv;
  const json results = read_json(cfg.output / "results.json");
  ASSERT_EQ(results["cells"].size(), 2u);

  for (const auto& cell : t.cells) {
    ASSERT_TRUE(cell.report);
    std::istringstream lines(slurp(cfg.output / cell.log_file));
    std::vector<UtteranceScore> rescored;
    for (std::string line; std::getline(lines, line);) {
      const json j = json::parse(line);
      rescored.push_back(score_utterance(j["id"], j["reference"].get<std::string>(),
                                         j["raw_hypothesis"].get<std::string>()));
      EXPECT_EQ(rescored.back().counts.substitutions, j["S"].get<int>());
      EXPECT_EQ(j["used"].size(), cell.key.k);
    }
    ASSERT_EQ(rescored.size(), 200u);
    const WERReport r = corpus_wer(rescored);
    EXPECT_EQ(r.counts, cell.report->counts);
    EXPECT_EQ(r.wer, cell.report->wer);
  }
}

TEST_F(SyntheticExperiment, CellOrderAndParallelismDoNotChangeResults) {
  const ResultTable forward = Experiment(config({{"k_values", {0, 1, 3}}})).run();
  const ResultTable backward = Experiment(config({{"k_values", {3, 1, 0}}, {"jobs", 4}})).run();
  ASSERT_EQ(forward.cells.size(), 3u);
  for (size_t i = 0; i < 3; ++i) {
    const auto& a = forward.cells[i];
    const auto& b = backward.cells[2 - i];
    ASSERT_EQ(a.key.k, b.key.k);
    EXPECT_EQ(a.report->counts, b.report->counts);
    for (size_t u = 0; u < a.logs.size(); ++u) EXPECT_EQ(a.logs[u].to_json(), b.logs[u].to_json());
  }
}

TEST_F(SyntheticExperiment, RandomSelectionIsReproducible) {
  const json overrides{{"k_values", {2}}, {"selection", {{"mode", "random"}, {"trials", 3}, {"seeds", {5, 6, 7}}}},
                       {"order_modes", {"random:11"}}};
  const ResultTable a = Experiment(config(overrides)).run();
  const ResultTable b = Experiment(config(overrides)).run();
  ASSERT_EQ(a.cells.size(), 3u);
  EXPECT_EQ(a.to_csv(), b.to_csv());
  EXPECT_EQ(a.to_json(), b.to_json());
  ASSERT_EQ(a.summaries.size(), 1u);
  EXPECT_EQ(a.summaries[0].trials, 3);
  double mean = 0.0;
  for (const auto& c : a.cells) mean += c.report->wer / 3.0;
  EXPECT_NEAR(a.summaries[0].wer_mean, mean, 1e-12);
  // Random draws differ between trials.
  EXPECT_NE(a.cells[0].logs[0].selected, a.cells[1].logs[0].selected);
}

TEST_F(SyntheticExperiment, DatastoreVariants) {
  const ResultTable t = Experiment(config({{"k_values", {2}},
                                           {"variants",
                                            {"same_speaker_same_dialect", "nearest_speaker_same_dialect",
                                             "same_speaker_other_corpus", "whole_dialect"}}}))
                            .run();
  ASSERT_EQ(t.cells.size(), 4u);
  for (const auto& c : t.cells) ASSERT_TRUE(c.report) << c.error;
  EXPECT_EQ(t.cells[0].report->wer, 0.0);
  // Read-speech examples only carry default forms, so they cannot fix variant words.
  EXPECT_EQ(t.cells[2].report->wer, 50.0);
  EXPECT_EQ(t.cells[3].report->wer, 0.0);
  // Nearest speaker never shares the test speaker and never offers the test word.
  for (const auto& log : t.cells[1].logs)
    for (const auto& [id, d] : log.selected) EXPECT_EQ(id.find(log.id), std::string::npos);
}

TEST_F(SyntheticExperiment, SavedDatastoreIsUsed) {
  const auto dir = root_ / "saved_store";
  save(build_datastore(corpus_.datastore_manifest, MockBackend{}), dir);
  ExperimentConfig cfg = config({{"k_values", {1}}});
  cfg.datastore_dir = dir;
  cfg.datastore_manifest.clear();
  EXPECT_EQ(wer_by_k(Experiment(cfg).run()).at(1), 0.0);
}

TEST_F(SyntheticExperiment, FailedCellsAreRecorded) {
  ExperimentConfig cfg = config({{"k_values", {0, 1}}, {"theta", {"mock", "http://127.0.0.1:1"}}});
  const ResultTable t = Experiment(cfg).run();
  ASSERT_EQ(t.cells.size(), 4u);
  EXPECT_TRUE(t.cells[0].report);
  EXPECT_FALSE(t.cells[2].report);
  EXPECT_NE(t.cells[2].error.find("BackendUnavailable"), std::string::npos) << t.cells[2].error;
  EXPECT_NE(t.to_csv().find("http://127.0.0.1:1,mock,0,error,,,,,"), std::string::npos);
}

TEST(ExperimentConfig, Validation) {
  const json base{{"test_manifest", "t.jsonl"}, {"datastore_manifest", "d.jsonl"}, {"k_values", {0, 1}}};
  const auto code = [](const json& j) {
    try {
      ExperimentConfig::from_json(j);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  EXPECT_NO_THROW(ExperimentConfig::from_json(base));
  json j = base;
  j["k_values"] = json::array();
  EXPECT_EQ(code(j), ErrorCode::ConfigError);
  j.erase("k_values");
  EXPECT_EQ(code(j), ErrorCode::ConfigError);
  j = base;
  j["variant"] = "everyone";
  EXPECT_EQ(code(j), ErrorCode::ConfigError);
  j = base;
  j["variant"] = "same_speaker_other_corpus";
  EXPECT_EQ(code(j), ErrorCode::ConfigError);
  j = base;
  j["selection"] = {{"mode", "random"}, {"trials", 2}, {"seeds", {1}}};
  EXPECT_EQ(code(j), ErrorCode::ConfigError);
  j = base;
  j["k_values"] = {-1};
  EXPECT_EQ(code(j), ErrorCode::ConfigError);
}

TEST(ExperimentConfig, RoundTripsThroughJson) {
  const json j{{"test_manifest", "/a/t.jsonl"},
               {"datastore_dir", "/a/ds"},
               {"k_values", {0, 4}},
               {"variants", {"whole_dialect"}},
               {"order_modes", {"near_to_far", "random:3"}},
               {"selection", {{"mode", "random"}, {"trials", 2}}},
               {"theta", {"mock", "http://x:1"}},
               {"context", {{"prompt", nullptr}, {"language", "zh"}, {"gap_seconds", 0.25}}}};
  const ExperimentConfig a = ExperimentConfig::from_json(j);
  EXPECT_EQ(a.selection.seeds, (std::vector<uint64_t>{1, 2}));
  EXPECT_FALSE(a.context.prompt_text);
  EXPECT_EQ(a.context.language, "zh");
  const ExperimentConfig b = ExperimentConfig::from_json(a.to_json());
  EXPECT_EQ(a.to_json(), b.to_json());
}

TEST(RandomSelect, SeededAndFiltered) {
  std::vector<Example> examples;
  for (int i = 0; i < 30; ++i) {
    Example e;
    e.id = "e" + std::to_string(i);
    e.label = "l";
    e.speaker_id = i % 2 ? "odd" : "even";
    e.dialect_id = "d";
    e.audio_path = "x.wav";
    e.mean_embedding = Eigen::VectorXf::Constant(2, static_cast<float>(i));
    examples.push_back(e);
  }
  const Datastore store(examples, 2, "mock");
  const Eigen::VectorXf q = Eigen::VectorXf::Zero(2);
  DatastoreFilter f;
  f.require_speaker = "odd";
  const auto a = random_select(q, store, 5, f, 1, "utt");
  EXPECT_EQ(a.size(), 5u);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].example.speaker_id, "odd");
    if (i) EXPECT_LE(a[i - 1].distance, a[i].distance);
  }
  const auto b = random_select(q, store, 5, f, 1, "utt");
  for (size_t i = 0; i < 5; ++i) EXPECT_EQ(a[i].example.id, b[i].example.id);
  EXPECT_EQ(random_select(q, store, 100, f, 1, "utt").size(), 15u);
}
