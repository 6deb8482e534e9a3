// sicl: in-context example retrieval, context assembly and WER evaluation from the command line.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "sicl/audio.hpp"
#include "sicl/backend.hpp"
#include "sicl/context.hpp"
#include "sicl/datastore.hpp"
#include "sicl/error.hpp"
#include "sicl/harness.hpp"
#include "sicl/synthetic.hpp"

namespace {

using nlohmann::json;

int build_datastore_cmd(const std::string& manifest, const std::string& backend_spec, const std::string& out) {
  const auto theta = sicl::make_backend(backend_spec);
  const sicl::Datastore store = sicl::build_datastore(manifest, *theta);
  sicl::save(store, out);
  std::cout << "built " << store.size() << " examples (dim " << store.dim() << ") into " << out << "\n";
  return 0;
}

struct TranscribeArgs {
  std::string audio;
  std::string datastore;
  size_t k = 4;
  std::string order = "far_to_near";
  std::string language;
  std::optional<std::string> prompt;
  bool no_prompt = false;
  std::string backend;
  std::string theta;
  double gap_seconds = 0.0;
  bool json_output = false;
};

int transcribe_cmd(const TranscribeArgs& args) {
  const sicl::Datastore store = sicl::load(args.datastore);
  const std::string lambda_spec = args.backend.empty() ? sicl::backend_spec_from_env() : args.backend;
  const std::string theta_spec = !args.theta.empty()                    ? args.theta
                                 : !store.retrieval_backend_tag().empty() ? store.retrieval_backend_tag()
                                                                          : lambda_spec;
  const auto lambda = sicl::make_backend(lambda_spec);
  const auto theta = theta_spec == lambda_spec ? lambda : sicl::make_backend(theta_spec);

  sicl::ContextConfig cfg;
  cfg.k = args.k;
  cfg.order = sicl::OrderMode::parse(args.order);
  cfg.gap_seconds = args.gap_seconds;
  if (!args.language.empty()) cfg.language = args.language;
  if (args.prompt) cfg.prompt_text = *args.prompt;
  if (args.no_prompt) cfg.prompt_text.reset();

  sicl::Waveform test = sicl::standardize(sicl::load_wav(args.audio));
  sicl::validate(test);
  const Eigen::VectorXf query = sicl::mean_embedding(theta->encode(test));
  auto selected = args.k > 0 ? sicl::knn_select(query, store, args.k) : std::vector<sicl::ScoredExample>{};
  const auto result = sicl::decode_with_context(test, std::move(selected), *lambda, cfg);

  if (args.json_output) {
    json sel = json::array();
    for (const auto& s : result.selected) sel.push_back({{"id", s.example.id}, {"label", s.example.label}, {"distance", s.distance}});
    std::cout << json{{"text", result.transcript.text},
                      {"prefix", result.input.prefix_text},
                      {"selected", sel},
                      {"dropped", result.input.dropped_examples}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << result.transcript.text << "\n";
  }
  return 0;
}

int evaluate_cmd(const std::string& config_path, int jobs) {
  sicl::ExperimentConfig cfg = sicl::load_experiment_config(config_path);
  if (jobs > 0) cfg.jobs = jobs;
  const sicl::ResultTable table = sicl::run_experiment(cfg);
  std::cout << table.to_csv();
  size_t failed = 0;
  for (const auto& c : table.cells) {
    if (!c.report) {
      ++failed;
      std::cerr << "cell failed: " << c.error << "\n";
    }
  }
  std::cerr << "results written to " << cfg.output.string() << "\n";
  return failed == 0 ? 0 : 2;
}

int synth_cmd(const std::string& spec_path, const std::string& out) {
  sicl::SyntheticSpec spec;
  if (!spec_path.empty()) {
    std::ifstream in(spec_path);
    if (!in) throw sicl::Error(sicl::ErrorCode::IoError, "cannot open " + spec_path);
    try {
      spec = sicl::SyntheticSpec::from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw sicl::Error(sicl::ErrorCode::ConfigError, spec_path + ": " + e.what());
    }
  }
  const auto corpus = sicl::make_synthetic_corpus(spec, out);
  std::cout << "wrote " << corpus.test_items << " test items (" << corpus.variant_items << " variant) and "
            << corpus.datastore_items << " datastore items to " << out << "\n"
            << "run: sicl evaluate --config " << corpus.experiment_config.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech in-context learning toolkit"};
  app.require_subcommand(1);

  std::string manifest, backend_spec, out_dir;
  auto* build = app.add_subcommand("build-datastore", "Embed a manifest under a retrieval model and save it");
  build->add_option("--manifest", manifest, "JSON-lines manifest {id, audio, label, speaker, dialect}")->required();
  build->add_option("--backend", backend_spec, "mock, http://host:port or stdio:<command> (default: $SICL_BACKEND_URL or mock)");
  build->add_option("--out", out_dir, "Output directory")->required();

  TranscribeArgs targs;
  auto* transcribe = app.add_subcommand("transcribe", "Transcribe one file with in-context examples");
  transcribe->add_option("--audio", targs.audio, "WAV file")->required()->check(CLI::ExistingFile);
  transcribe->add_option("--datastore", targs.datastore, "Saved datastore directory")->required()->check(CLI::ExistingDirectory);
  transcribe->add_option("--k", targs.k, "Number of in-context examples")->capture_default_str();
  transcribe->add_option("--order", targs.order, "far_to_near, near_to_far or random:<seed>")->capture_default_str();
  transcribe->add_option("--language", targs.language, "Language id passed to the decoder, e.g. zh");
  transcribe->add_option("--prompt", targs.prompt, "Prompt text (default 识别方言)");
  transcribe->add_flag("--no-prompt", targs.no_prompt, "Do not send a prompt");
  transcribe->add_option("--backend", targs.backend, "Inference model (default: $SICL_BACKEND_URL or mock)");
  transcribe->add_option("--theta", targs.theta, "Retrieval model (default: the one the datastore was built with)");
  transcribe->add_option("--gap", targs.gap_seconds, "Seconds of silence between concatenated parts");
  transcribe->add_flag("--json", targs.json_output, "Print selection details as JSON");

  std::string config_path;
  int jobs = 0;
  auto* evaluate = app.add_subcommand("evaluate", "Run an experiment grid and write results.csv/results.json");
  evaluate->add_option("--config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--jobs", jobs, "Worker threads per cell (overrides the config)");

  std::string spec_path, synth_out;
  auto* synth = app.add_subcommand("synth", "Write the synthetic tone-word corpus");
  synth->add_option("--spec", spec_path, "Spec JSON {words, bins, variant_fraction, speakers, seed, examples_per_bin}");
  synth->add_option("--out", synth_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) return build_datastore_cmd(manifest, backend_spec.empty() ? sicl::backend_spec_from_env() : backend_spec, out_dir);
    if (*transcribe) return transcribe_cmd(targs);
    if (*evaluate) return evaluate_cmd(config_path, jobs);
    if (*synth) return synth_cmd(spec_path, synth_out);
  } catch (const sicl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
