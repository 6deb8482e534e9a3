#include "sicl/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <thread>

#include "sicl/audio.hpp"
#include "sicl/error.hpp"

namespace sicl {
namespace {

using nlohmann::json;

uint64_t fnv1a(std::string_view text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t splitmix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? (base / path).lexically_normal() : path;
}

template <typename T>
std::vector<T> string_or_list(const json& j, const char* name, std::vector<T> fallback) {
  if (!j.contains(name)) return fallback;
  const json& v = j.at(name);
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

std::string format_wer(double wer) { return fmt::format("{:.4f}", wer); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json counts_json(const AlignmentCounts& c, int n) {
  return json{{"S", c.substitutions}, {"D", c.deletions}, {"I", c.insertions}, {"H", c.hits}, {"N", n}};
}

json key_json(const CellKey& k) {
  return json{{"variant", to_string(k.variant)}, {"k", k.k},           {"order", k.order.to_string()},
              {"theta", k.theta},                {"lambda", k.lambda}, {"trial", k.trial}};
}

}  // namespace

std::string to_string(DatastoreVariant v) {
  switch (v) {
    case DatastoreVariant::SameSpeakerSameDialect: return "same_speaker_same_dialect";
    case DatastoreVariant::NearestSpeakerSameDialect: return "nearest_speaker_same_dialect";
    case DatastoreVariant::SameSpeakerOtherCorpus: return "same_speaker_other_corpus";
    case DatastoreVariant::WholeDialect: return "whole_dialect";
  }
  return {};
}

DatastoreVariant parse_variant(std::string_view text) {
  for (auto v : {DatastoreVariant::SameSpeakerSameDialect, DatastoreVariant::NearestSpeakerSameDialect,
                 DatastoreVariant::SameSpeakerOtherCorpus, DatastoreVariant::WholeDialect}) {
    if (to_string(v) == text) return v;
  }
  throw Error(ErrorCode::ConfigError, "unknown datastore variant '" + std::string(text) + "'");
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "experiment config must be a JSON object");
  ExperimentConfig cfg;
  try {
    cfg.test_manifest = resolve(base_dir, j.value("test_manifest", ""));
    cfg.datastore_dir = resolve(base_dir, j.value("datastore_dir", ""));
    cfg.datastore_manifest = resolve(base_dir, j.value("datastore_manifest", ""));
    cfg.other_datastore_dir = resolve(base_dir, j.value("other_datastore_dir", ""));
    cfg.other_datastore_manifest = resolve(base_dir, j.value("other_datastore_manifest", ""));
    cfg.output = resolve(base_dir, j.value("output", "results"));

    cfg.variants.clear();
    const char* variant_key = j.contains("variants") ? "variants" : "variant";
    for (const auto& v : string_or_list<std::string>(j, variant_key, {"same_speaker_same_dialect"}))
      cfg.variants.push_back(parse_variant(v));

    if (!j.contains("k_values")) throw Error(ErrorCode::ConfigError, "k_values is required");
    for (const auto& k : j.at("k_values")) {
      if (!k.is_number_integer() || k.get<long long>() < 0)
        throw Error(ErrorCode::ConfigError, "k_values must be non-negative integers");
      cfg.k_values.push_back(k.get<size_t>());
    }

    cfg.order_modes.clear();
    for (const auto& m : string_or_list<std::string>(j, "order_modes", {"far_to_near"}))
      cfg.order_modes.push_back(OrderMode::parse(m));

    if (j.contains("selection")) {
      const json& s = j.at("selection");
      const std::string mode = s.is_string() ? s.get<std::string>() : s.value("mode", "knn");
      if (mode == "knn") {
        cfg.selection.mode = SelectionConfig::Mode::Knn;
      } else if (mode == "random") {
        cfg.selection.mode = SelectionConfig::Mode::Random;
        cfg.selection.trials = s.is_object() ? s.value("trials", 3) : 3;
        if (s.is_object() && s.contains("seeds")) cfg.selection.seeds = s.at("seeds").get<std::vector<uint64_t>>();
      } else {
        throw Error(ErrorCode::ConfigError, "selection mode must be knn or random");
      }
    }

    cfg.thetas = string_or_list<std::string>(j, "theta", {"mock"});
    cfg.lambdas = string_or_list<std::string>(j, "lambda", {"mock"});

    if (j.contains("context")) {
      const json& c = j.at("context");
      ContextConfig& ctx = cfg.context;
      ctx.delimiter = c.value("delimiter", ctx.delimiter);
      if (c.contains("prompt")) {
        ctx.prompt_text = c.at("prompt").is_null() ? std::nullopt : std::optional(c.at("prompt").get<std::string>());
      }
      ctx.gap_seconds = c.value("gap_seconds", ctx.gap_seconds);
      ctx.max_window_seconds = c.value("max_window_seconds", ctx.max_window_seconds);
      if (c.contains("language")) {
        ctx.language = c.at("language").is_null() ? std::nullopt : std::optional(c.at("language").get<std::string>());
      }
      ctx.no_timestamps = c.value("no_timestamps", ctx.no_timestamps);
      ctx.trailing_delimiter = c.value("trailing_delimiter", ctx.trailing_delimiter);
      cfg.baseline_prompt = c.value("baseline_prompt", cfg.baseline_prompt);
      cfg.sicl_prompt = c.value("sicl_prompt", cfg.sicl_prompt);
    }
    if (j.contains("normalize")) {
      cfg.normalize.max_ngram = j.at("normalize").value("max_ngram", cfg.normalize.max_ngram);
      cfg.normalize.min_repeats = j.at("normalize").value("min_repeats", cfg.normalize.min_repeats);
    }
    cfg.jobs = j.value("jobs", 1);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }

  if (cfg.test_manifest.empty()) throw Error(ErrorCode::ConfigError, "test_manifest is required");
  if (cfg.datastore_dir.empty() && cfg.datastore_manifest.empty())
    throw Error(ErrorCode::ConfigError, "datastore_dir or datastore_manifest is required");
  if (cfg.k_values.empty()) throw Error(ErrorCode::ConfigError, "k_values must not be empty");
  if (cfg.variants.empty() || cfg.order_modes.empty() || cfg.thetas.empty() || cfg.lambdas.empty())
    throw Error(ErrorCode::ConfigError, "every axis needs at least one value");
  if (cfg.selection.mode == SelectionConfig::Mode::Random) {
    if (cfg.selection.trials < 1) throw Error(ErrorCode::ConfigError, "random selection requires trials >= 1");
    if (cfg.selection.seeds.empty()) {
      for (int t = 0; t < cfg.selection.trials; ++t) cfg.selection.seeds.push_back(static_cast<uint64_t>(t + 1));
    }
    if (cfg.selection.seeds.size() != static_cast<size_t>(cfg.selection.trials))
      throw Error(ErrorCode::ConfigError, "selection.seeds must have one seed per trial");
  }
  if (cfg.context.max_window_seconds <= 0.0) throw Error(ErrorCode::ConfigError, "max_window_seconds must be > 0");
  if (cfg.context.gap_seconds < 0.0) throw Error(ErrorCode::ConfigError, "gap_seconds must be >= 0");
  if (cfg.jobs < 1) throw Error(ErrorCode::ConfigError, "jobs must be >= 1");
  for (auto v : cfg.variants) {
    if (v == DatastoreVariant::SameSpeakerOtherCorpus && cfg.other_datastore_dir.empty() &&
        cfg.other_datastore_manifest.empty())
      throw Error(ErrorCode::ConfigError, "same_speaker_other_corpus needs other_datastore_dir or _manifest");
  }
  return cfg;
}

json ExperimentConfig::to_json() const {
  json j;
  j["test_manifest"] = test_manifest.string();
  if (!datastore_dir.empty()) j["datastore_dir"] = datastore_dir.string();
  if (!datastore_manifest.empty()) j["datastore_manifest"] = datastore_manifest.string();
  if (!other_datastore_dir.empty()) j["other_datastore_dir"] = other_datastore_dir.string();
  if (!other_datastore_manifest.empty()) j["other_datastore_manifest"] = other_datastore_manifest.string();
  j["variant"] = json::array();
  for (auto v : variants) j["variant"].push_back(to_string(v));
  j["k_values"] = k_values;
  j["order_modes"] = json::array();
  for (const auto& m : order_modes) j["order_modes"].push_back(m.to_string());
  if (selection.mode == SelectionConfig::Mode::Knn) {
    j["selection"] = {{"mode", "knn"}};
  } else {
    j["selection"] = {{"mode", "random"}, {"trials", selection.trials}, {"seeds", selection.seeds}};
  }
  j["theta"] = thetas;
  j["lambda"] = lambdas;
  j["context"] = {{"delimiter", context.delimiter},
                  {"prompt", context.prompt_text ? json(*context.prompt_text) : json(nullptr)},
                  {"gap_seconds", context.gap_seconds},
                  {"max_window_seconds", context.max_window_seconds},
                  {"language", context.language ? json(*context.language) : json(nullptr)},
                  {"no_timestamps", context.no_timestamps},
                  {"trailing_delimiter", context.trailing_delimiter},
                  {"baseline_prompt", baseline_prompt},
                  {"sicl_prompt", sicl_prompt}};
  j["normalize"] = {{"max_ngram", normalize.max_ngram}, {"min_repeats", normalize.min_repeats}};
  j["output"] = output.string();
  j["jobs"] = jobs;
  return j;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return ExperimentConfig::from_json(j, path.parent_path());
}

std::string CellKey::slug(size_t theta_index, size_t lambda_index) const {
  std::string order_name = order.to_string();
  std::replace(order_name.begin(), order_name.end(), ':', '-');
  return fmt::format("{}_theta{}_lambda{}_k{}_{}_t{}", to_string(variant), theta_index, lambda_index, k, order_name,
                     trial);
}

json UtteranceLog::to_json() const {
  json sel = json::array();
  for (const auto& [id, d] : selected) sel.push_back({{"id", id}, {"distance", d}});
  json j{{"id", id},
         {"reference", reference},
         {"selected", sel},
         {"used", used},
         {"dropped", dropped},
         {"prefix", prefix},
         {"raw_hypothesis", raw_hypothesis},
         {"normalized_hypothesis", normalized_hypothesis}};
  j.update(counts_json(score.counts, score.ref_len));
  return j;
}

std::string ResultTable::to_csv() const {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& c : cells) {
    out += fmt::format("{},{},{},{},{},{},", to_string(c.key.variant), c.key.k, c.key.order.to_string(),
                       csv_field(c.key.theta), csv_field(c.key.lambda), c.key.trial);
    if (c.report) {
      const auto& r = *c.report;
      out += fmt::format("{},{},{},{},{},{}\n", format_wer(r.wer), r.counts.substitutions, r.counts.deletions,
                         r.counts.insertions, r.ref_len, c.dropped);
    } else {
      out += "error,,,,,\n";
    }
  }
  return out;
}

json ResultTable::to_json() const {
  json j;
  j["cells"] = json::array();
  for (const auto& c : cells) {
    json cell = key_json(c.key);
    if (c.report) {
      cell["wer"] = c.report->wer;
      cell.update(counts_json(c.report->counts, c.report->ref_len));
      cell["dropped"] = c.dropped;
    } else {
      cell["error"] = c.error;
    }
    if (!c.log_file.empty()) cell["log"] = c.log_file;
    j["cells"].push_back(cell);
  }
  j["summaries"] = json::array();
  for (const auto& s : summaries) {
    json sj = key_json(s.key);
    sj.erase("trial");
    sj["trials"] = s.trials;
    sj["wer_mean"] = s.wer_mean;
    sj["wer_std"] = s.wer_std;
    j["summaries"].push_back(sj);
  }
  return j;
}

DecodeResult decode_with_context(const Waveform& test, std::vector<ScoredExample> selected, const Backend& lambda,
                                 const ContextConfig& cfg, const AudioLoader& loader) {
  DecodeResult r;
  r.selected = order_examples(std::move(selected), cfg.order);
  r.input = assemble(r.selected, test, cfg, loader);
  r.transcript = lambda.transcribe(r.input.audio, r.input.control);
  return r;
}

std::vector<ScoredExample> random_select(const Eigen::Ref<const Eigen::VectorXf>& query, const Datastore& store,
                                         size_t k, const DatastoreFilter& filter, uint64_t seed,
                                         std::string_view salt) {
  if (query.size() != store.dim()) throw Error(ErrorCode::DimMismatch, "query dim does not match datastore");
  std::vector<size_t> pool;
  const auto& examples = store.examples();
  for (size_t i = 0; i < examples.size(); ++i)
    if (filter.accepts(examples[i])) pool.push_back(i);
  std::sort(pool.begin(), pool.end(), [&](size_t a, size_t b) { return examples[a].id < examples[b].id; });

  std::mt19937_64 rng(splitmix(seed ^ fnv1a(salt)));
  const size_t m = std::min(k, pool.size());
  for (size_t i = 0; i < m; ++i) {
    const size_t j = i + static_cast<size_t>(rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  std::vector<ScoredExample> out;
  out.reserve(m);
  for (size_t i = 0; i < m; ++i) out.push_back({examples[pool[i]], euclidean_distance(query, examples[pool[i]].mean_embedding)});
  std::sort(out.begin(), out.end(), [](const ScoredExample& a, const ScoredExample& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.example.id < b.example.id;
  });
  return out;
}

Experiment::Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
  for (auto& row : read_manifest(cfg_.test_manifest)) {
    Waveform w;
    try {
      w = standardize(load_wav(row.audio));
      validate(w);
    } catch (const Error& e) {
      throw Error(e.code(), "test utterance " + row.id + ": " + e.what());
    }
    tests_.push_back({std::move(row), std::move(w)});
  }
  if (tests_.empty()) throw Error(ErrorCode::EmptyCorpus, "test manifest has no rows");
}

std::vector<CellKey> Experiment::cells() const {
  std::vector<CellKey> keys;
  const int trials = cfg_.selection.mode == SelectionConfig::Mode::Random ? cfg_.selection.trials : 1;
  for (auto variant : cfg_.variants)
    for (const auto& theta : cfg_.thetas)
      for (const auto& lambda : cfg_.lambdas)
        for (size_t k : cfg_.k_values)
          for (const auto& order : cfg_.order_modes)
            for (int t = 0; t < trials; ++t) keys.push_back({variant, k, order, theta, lambda, t});
  return keys;
}

const BackendPtr& Experiment::backend(const std::string& spec) {
  std::lock_guard lock(mutex_);
  auto it = backends_.find(spec);
  if (it == backends_.end()) it = backends_.emplace(spec, make_backend(spec)).first;
  return it->second;
}

const Datastore& Experiment::datastore(bool other, const std::string& theta) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = stores_.find({other, theta}); it != stores_.end()) return *it->second;
  }
  const auto& dir = other ? cfg_.other_datastore_dir : cfg_.datastore_dir;
  const auto& manifest = other ? cfg_.other_datastore_manifest : cfg_.datastore_manifest;
  const Backend& model = *backend(theta);

  std::unique_ptr<Datastore> store;
  if (!dir.empty() && std::filesystem::exists(dir / "embeddings.bin")) {
    Datastore saved = load(dir);
    if (saved.retrieval_backend_tag() == model.tag()) {
      store = std::make_unique<Datastore>(std::move(saved));
    } else {
      // Built under a different retrieval model: re-embed the same examples.
      std::vector<ManifestRow> rows;
      for (const auto& e : saved.examples()) rows.push_back({e.id, e.audio_path, e.label, e.speaker_id, e.dialect_id});
      store = std::make_unique<Datastore>(build_datastore(rows, model));
    }
  } else if (!manifest.empty()) {
    store = std::make_unique<Datastore>(build_datastore(manifest, model));
  } else {
    throw Error(ErrorCode::ConfigError, "no datastore found at '" + dir.string() + "' and no manifest given");
  }

  std::lock_guard lock(mutex_);
  auto [it, inserted] = stores_.try_emplace({other, theta}, std::move(store));
  return *it->second;
}

const Eigen::VectorXf& Experiment::test_embedding(size_t index, const std::string& theta) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = test_embeddings_.find({index, theta}); it != test_embeddings_.end()) return it->second;
  }
  Eigen::VectorXf e = mean_embedding(backend(theta)->encode(tests_[index].audio));
  std::lock_guard lock(mutex_);
  return test_embeddings_.try_emplace({index, theta}, std::move(e)).first->second;
}

const std::vector<SpeakerProfile>& Experiment::profiles(const std::string& theta, const std::string& dialect) {
  const Datastore& store = datastore(false, theta);
  std::lock_guard lock(mutex_);
  auto it = profiles_.find({theta, dialect});
  if (it == profiles_.end()) {
    DatastoreFilter f;
    f.require_dialect = dialect;
    it = profiles_.emplace(std::pair{theta, dialect}, speaker_profiles(store, f)).first;
  }
  return it->second;
}

Waveform Experiment::example_audio(const Example& e) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = audio_cache_.find(e.audio_path); it != audio_cache_.end()) return *it->second;
  }
  auto w = std::make_shared<const Waveform>(load_example_audio(e));
  std::lock_guard lock(mutex_);
  return *audio_cache_.try_emplace(e.audio_path, std::move(w)).first->second;
}

DatastoreFilter Experiment::resolve_filter(const CellKey& key, const TestItem& item, const Eigen::VectorXf& query) {
  DatastoreFilter f;
  f.exclude_ids.insert(item.row.id);
  switch (key.variant) {
    case DatastoreVariant::SameSpeakerSameDialect:
      f.require_speaker = item.row.speaker;
      f.require_dialect = item.row.dialect;
      break;
    case DatastoreVariant::NearestSpeakerSameDialect:
      f.require_dialect = item.row.dialect;
      f.require_speaker = nearest_speaker(query, profiles(key.theta, item.row.dialect), item.row.speaker);
      f.exclude_labels.insert(item.row.label);
      break;
    case DatastoreVariant::SameSpeakerOtherCorpus:
      f.require_speaker = item.row.speaker;
      break;
    case DatastoreVariant::WholeDialect:
      f.require_dialect = item.row.dialect;
      break;
  }
  return f;
}

size_t Experiment::index_of(const std::vector<std::string>& specs, const std::string& value) const {
  return static_cast<size_t>(std::find(specs.begin(), specs.end(), value) - specs.begin());
}

CellResult Experiment::run_cell(const CellKey& key) {
  const bool other = key.variant == DatastoreVariant::SameSpeakerOtherCorpus;
  const Datastore& store = datastore(other, key.theta);
  const Backend& lambda = *backend(key.lambda);
  for (size_t i = 0; i < tests_.size(); ++i) {
    const auto& q = test_embedding(i, key.theta);
    if (q.size() != store.dim())
      throw Error(ErrorCode::DimMismatch, "theta '" + key.theta + "' embeds to dim " + std::to_string(q.size()) +
                                              ", datastore has " + std::to_string(store.dim()));
  }

  ContextConfig ctx = cfg_.context;
  ctx.k = key.k;
  ctx.order = key.order;
  if (!(key.k == 0 ? cfg_.baseline_prompt : cfg_.sicl_prompt)) ctx.prompt_text.reset();

  const bool random = cfg_.selection.mode == SelectionConfig::Mode::Random;
  const uint64_t seed = random ? cfg_.selection.seeds[static_cast<size_t>(key.trial)] : 0;
  const AudioLoader loader = [this](const Example& e) { return example_audio(e); };

  std::vector<UtteranceLog> logs(tests_.size());
  std::vector<std::optional<Error>> failures(tests_.size());
  std::atomic<size_t> next{0};
  const auto worker = [&] {
    for (size_t i = next++; i < tests_.size(); i = next++) {
      const TestItem& item = tests_[i];
      try {
        const Eigen::VectorXf& query = test_embedding(i, key.theta);
        std::vector<ScoredExample> selected;
        if (key.k > 0) {
          const DatastoreFilter filter = resolve_filter(key, item, query);
          selected = random ? random_select(query, store, key.k, filter, seed, item.row.id)
                            : knn_select(query, store, key.k, filter);
        }
        DecodeResult d = decode_with_context(item.audio, std::move(selected), lambda, ctx, loader);

        UtteranceLog& log = logs[i];
        log.id = item.row.id;
        log.reference = item.row.label;
        for (const auto& s : d.selected) log.selected.emplace_back(s.example.id, s.distance);
        log.used = d.input.used_examples;
        log.dropped = d.input.dropped_examples;
        log.prefix = d.input.prefix_text;
        log.raw_hypothesis = d.transcript.text;
        log.normalized_hypothesis = normalize_hyp(d.transcript.text, cfg_.normalize);
        log.score = score_utterance(item.row.id, item.row.label, d.transcript.text, cfg_.normalize);
      } catch (const Error& e) {
        failures[i].emplace(e.code(), "utterance " + item.row.id + ": " + e.what());
      } catch (const std::exception& e) {
        failures[i].emplace(ErrorCode::BackendUnavailable, "utterance " + item.row.id + ": " + e.what());
      }
    }
  };
  const auto n_threads = static_cast<size_t>(std::max(1, cfg_.jobs));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (size_t t = 0; t < std::min(n_threads, tests_.size()); ++t) pool.emplace_back(worker);
  }
  for (const auto& f : failures)
    if (f) throw *f;

  CellResult result;
  result.key = key;
  std::vector<UtteranceScore> scores;
  scores.reserve(logs.size());
  for (const auto& log : logs) {
    scores.push_back(log.score);
    result.dropped += log.dropped.size();
  }
  result.report = corpus_wer(std::move(scores));
  result.logs = std::move(logs);
  result.log_file = "logs/" + key.slug(index_of(cfg_.thetas, key.theta), index_of(cfg_.lambdas, key.lambda)) + ".jsonl";
  return result;
}

ResultTable Experiment::run() {
  ResultTable table;
  for (const auto& key : cells()) {
    try {
      table.cells.push_back(run_cell(key));
    } catch (const std::exception& e) {
      CellResult failed;
      failed.key = key;
      failed.error = e.what();
      table.cells.push_back(std::move(failed));
    }
  }

  if (cfg_.selection.mode == SelectionConfig::Mode::Random) {
    const auto trials = static_cast<size_t>(cfg_.selection.trials);
    for (size_t start = 0; start + trials <= table.cells.size(); start += trials) {
      std::vector<double> wers;
      for (size_t t = 0; t < trials; ++t)
        if (const auto& r = table.cells[start + t].report) wers.push_back(r->wer);
      TrialSummary s;
      s.key = table.cells[start].key;
      s.trials = static_cast<int>(wers.size());
      if (!wers.empty()) {
        s.wer_mean = std::accumulate(wers.begin(), wers.end(), 0.0) / static_cast<double>(wers.size());
        if (wers.size() > 1) {
          double ss = 0.0;
          for (double w : wers) ss += (w - s.wer_mean) * (w - s.wer_mean);
          s.wer_std = std::sqrt(ss / static_cast<double>(wers.size() - 1));
        }
      }
      table.summaries.push_back(s);
    }
  }
  return table;
}

void Experiment::write(const ResultTable& table) const {
  std::error_code ec;
  std::filesystem::create_directories(cfg_.output / "logs", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + cfg_.output.string() + ": " + ec.message());

  const auto write_file = [](const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  };
  write_file(cfg_.output / "results.csv", table.to_csv());
  write_file(cfg_.output / "results.json", table.to_json().dump(2) + "\n");
  for (const auto& c : table.cells) {
    if (c.log_file.empty()) continue;
    std::string body;
    for (const auto& log : c.logs) body += log.to_json().dump() + "\n";
    write_file(cfg_.output / c.log_file, body);
  }
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
  Experiment experiment(cfg);
  ResultTable table = experiment.run();
  experiment.write(table);
  return table;
}

}  // namespace sicl
