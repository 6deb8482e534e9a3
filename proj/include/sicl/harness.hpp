#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sicl/backend.hpp"
#include "sicl/context.hpp"
#include "sicl/datastore.hpp"
#include "sicl/scoring.hpp"

namespace sicl {

/// Which pool in-context examples are drawn from.
enum class DatastoreVariant {
  SameSpeakerSameDialect,
  NearestSpeakerSameDialect,
  SameSpeakerOtherCorpus,
  WholeDialect,
};

std::string to_string(DatastoreVariant v);
DatastoreVariant parse_variant(std::string_view text);

struct SelectionConfig {
  enum class Mode { Knn, Random };
  Mode mode = Mode::Knn;
  int trials = 1;
  std::vector<uint64_t> seeds;  // one per trial
};

struct ExperimentConfig {
  std::filesystem::path test_manifest;
  // The pool is loaded from datastore_dir when it holds a saved datastore,
  // otherwise built in memory from datastore_manifest.
  std::filesystem::path datastore_dir;
  std::filesystem::path datastore_manifest;
  std::filesystem::path other_datastore_dir;
  std::filesystem::path other_datastore_manifest;
  std::vector<DatastoreVariant> variants{DatastoreVariant::SameSpeakerSameDialect};
  std::vector<size_t> k_values;
  std::vector<OrderMode> order_modes{OrderMode{}};
  SelectionConfig selection;
  std::vector<std::string> thetas{"mock"};
  std::vector<std::string> lambdas{"mock"};
  ContextConfig context;  // k and order come from the axes above
  bool baseline_prompt = false;  // attach the prompt to k = 0 cells
  bool sicl_prompt = true;       // attach the prompt to k > 0 cells
  NormalizeOptions normalize;
  std::filesystem::path output;
  int jobs = 1;

  /// Relative paths resolve against `base_dir`. Throws ConfigError.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  nlohmann::json to_json() const;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct CellKey {
  DatastoreVariant variant = DatastoreVariant::SameSpeakerSameDialect;
  size_t k = 0;
  OrderMode order;
  std::string theta;
  std::string lambda;
  int trial = 0;

  /// File-name friendly identifier, unique within one experiment.
  std::string slug(size_t theta_index, size_t lambda_index) const;
};

struct UtteranceLog {
  std::string id;
  std::string reference;
  std::vector<std::pair<std::string, double>> selected;  // (example id, distance)
  std::vector<std::string> used;
  std::vector<std::string> dropped;
  std::string prefix;
  std::string raw_hypothesis;
  std::string normalized_hypothesis;
  UtteranceScore score;

  nlohmann::json to_json() const;
};

struct CellResult {
  CellKey key;
  std::optional<WERReport> report;
  std::vector<UtteranceLog> logs;
  size_t dropped = 0;
  std::string error;  // set when the cell failed
  std::string log_file;
};

/// Mean and sample standard deviation of WER over the trials of one random-selection cell.
struct TrialSummary {
  CellKey key;  // trial field unused
  int trials = 0;
  double wer_mean = 0.0;
  double wer_std = 0.0;
};

struct ResultTable {
  std::vector<CellResult> cells;
  std::vector<TrialSummary> summaries;

  static constexpr char kCsvHeader[] = "variant,k,order,theta,lambda,trial,wer,S,D,I,N,dropped";
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// Everything produced by decoding one utterance with context.
struct DecodeResult {
  std::vector<ScoredExample> selected;
  AssembledInput input;
  Transcript transcript;
};

/// Orders `selected`, assembles the context and transcribes under `lambda`.
DecodeResult decode_with_context(const Waveform& test, std::vector<ScoredExample> selected, const Backend& lambda,
                                 const ContextConfig& cfg, const AudioLoader& loader = load_example_audio);

/// k examples drawn uniformly without replacement from the filtered pool, returned sorted
/// like knn_select output. The draw depends only on (seed, salt).
std::vector<ScoredExample> random_select(const Eigen::Ref<const Eigen::VectorXf>& query, const Datastore& store,
                                         size_t k, const DatastoreFilter& filter, uint64_t seed,
                                         std::string_view salt);

/// Runs configured cells. Backends, datastores, test embeddings and example audio are
/// cached across cells.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig cfg);

  const ExperimentConfig& config() const { return cfg_; }

  /// All cells in the Cartesian product of configured axes, in table order.
  std::vector<CellKey> cells() const;

  /// Throws on failure; errors carry the failing utterance id.
  CellResult run_cell(const CellKey& key);

  /// Runs every cell. Failed cells are recorded and the run continues.
  ResultTable run();

  /// Writes results.csv, results.json and logs/<cell>.jsonl under cfg.output.
  void write(const ResultTable& table) const;

 private:
  struct TestItem {
    ManifestRow row;
    Waveform audio;
  };

  const BackendPtr& backend(const std::string& spec);
  const Datastore& datastore(bool other, const std::string& theta);
  const Eigen::VectorXf& test_embedding(size_t index, const std::string& theta);
  const std::vector<SpeakerProfile>& profiles(const std::string& theta, const std::string& dialect);
  DatastoreFilter resolve_filter(const CellKey& key, const TestItem& item, const Eigen::VectorXf& query);
  Waveform example_audio(const Example& e);
  size_t index_of(const std::vector<std::string>& specs, const std::string& value) const;

  ExperimentConfig cfg_;
  std::vector<TestItem> tests_;

  std::mutex mutex_;
  std::map<std::string, BackendPtr> backends_;
  std::map<std::pair<bool, std::string>, std::unique_ptr<Datastore>> stores_;
  std::map<std::pair<size_t, std::string>, Eigen::VectorXf> test_embeddings_;
  std::map<std::pair<std::string, std::string>, std::vector<SpeakerProfile>> profiles_;
  std::map<std::string, std::shared_ptr<const Waveform>> audio_cache_;
};

/// Loads the config, runs it and writes the outputs.
ResultTable run_experiment(const ExperimentConfig& cfg);

}  // namespace sicl
