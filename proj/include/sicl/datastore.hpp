#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sicl/backend.hpp"
#include "sicl/error.hpp"

namespace sicl {

/// Time-average of the first `audio_frames` rows; padding rows are ignored.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> mean_embedding(
    const Eigen::MatrixBase<Derived>& frames, Eigen::Index audio_frames) {
  using Scalar = typename Derived::Scalar;
  if (audio_frames < 1 || audio_frames > frames.rows())
    throw Error(ErrorCode::DimMismatch, "audio_frames out of range");
  // Accumulate in double so long utterances do not lose precision in float.
  const Eigen::VectorXd sum = frames.topRows(audio_frames).template cast<double>().colwise().sum().transpose();
  return (sum / static_cast<double>(audio_frames)).template cast<Scalar>();
}

inline Eigen::VectorXf mean_embedding(const EmbeddingSequence& seq) {
  return mean_embedding(seq.frames, seq.audio_frames);
}

/// Euclidean distance, accumulated in double.
template <typename DerivedA, typename DerivedB>
double euclidean_distance(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a(i)) - static_cast<double>(b(i));
    acc += d * d;
  }
  return std::sqrt(acc);
}

struct Example {
  std::string id;
  std::string audio_path;
  std::string label;
  std::string speaker_id;
  std::string dialect_id;
  Eigen::VectorXf mean_embedding;

  bool operator==(const Example& o) const {
    return id == o.id && audio_path == o.audio_path && label == o.label && speaker_id == o.speaker_id &&
           dialect_id == o.dialect_id && mean_embedding.size() == o.mean_embedding.size() &&
           (mean_embedding.array() == o.mean_embedding.array()).all();
  }
};

struct ScoredExample {
  Example example;
  double distance = 0.0;
};

/// One manifest line: {id, audio, label, speaker, dialect}.
struct ManifestRow {
  std::string id;
  std::string audio;
  std::string label;
  std::string speaker;
  std::string dialect;
};

/// Relative audio paths are resolved against the manifest's directory.
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows);

/// Conjunction of all set fields.
struct DatastoreFilter {
  std::optional<std::string> require_dialect;
  std::optional<std::string> require_speaker;
  std::optional<std::string> exclude_speaker;
  std::set<std::string> exclude_labels;
  std::set<std::string> exclude_ids;

  bool accepts(const Example& e) const;
};

struct SpeakerProfile {
  std::string speaker_id;
  Eigen::VectorXf avg_embedding;
  int example_count = 0;
};

/// The example pool. Immutable once built or loaded.
class Datastore {
 public:
  Datastore() = default;
  /// Validates unique ids, non-empty labels, finite embeddings of length `dim`.
  Datastore(std::vector<Example> examples, int dim, std::string retrieval_backend_tag);

  const std::vector<Example>& examples() const { return examples_; }
  int dim() const { return dim_; }
  const std::string& retrieval_backend_tag() const { return tag_; }
  size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }

  /// N x D copy of all embeddings.
  RowMatrix<float> embedding_matrix() const;

  bool operator==(const Datastore& o) const {
    return dim_ == o.dim_ && tag_ == o.tag_ && examples_ == o.examples_;
  }

 private:
  std::vector<Example> examples_;
  int dim_ = 0;
  std::string tag_;
};

/// standardize -> encode -> mean_embedding for every manifest row.
Datastore build_datastore(const std::filesystem::path& manifest, const Backend& theta);
Datastore build_datastore(std::span<const ManifestRow> rows, const Backend& theta);

/// Embeds one audio file under `theta`.
Eigen::VectorXf embed_file(const std::filesystem::path& audio, const Backend& theta);

/// Exact scan. Sorted by ascending distance, then ascending id.
std::vector<ScoredExample> knn_select(const Eigen::Ref<const Eigen::VectorXf>& query, const Datastore& store,
                                      size_t k, const DatastoreFilter& filter = {});

/// Profiles sorted by speaker id.
std::vector<SpeakerProfile> speaker_profiles(const Datastore& store);
std::vector<SpeakerProfile> speaker_profiles(const Datastore& store, const DatastoreFilter& filter);

std::string nearest_speaker(const Eigen::Ref<const Eigen::VectorXf>& query, std::span<const SpeakerProfile> profiles,
                            const std::optional<std::string>& exclude = std::nullopt);

/// Writes manifest.jsonl, embeddings.bin and meta.json into `dir`.
void save(const Datastore& store, const std::filesystem::path& dir);
Datastore load(const std::filesystem::path& dir);

inline constexpr char kEmbeddingMagic[] = "SICLEMB1";

}  // namespace sicl
