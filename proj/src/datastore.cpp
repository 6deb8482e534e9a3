#include "sicl/datastore.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <unordered_set>

#include "sicl/audio.hpp"

namespace sicl {
namespace {

using nlohmann::json;

std::string required_string(const json& j, const char* name, const std::filesystem::path& path, size_t line) {
  if (!j.contains(name) || !j.at(name).is_string()) {
    throw Error(ErrorCode::ManifestParseError,
                path.string() + ":" + std::to_string(line) + ": missing string field '" + name + "'");
  }
  return j.at(name).get<std::string>();
}

void put_u32(std::ostream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

uint32_t get_u32(const char* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(p[i])) << (8 * i);
  return v;
}

}  // namespace

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open manifest " + path.string());
  const auto base = path.parent_path();
  std::vector<ManifestRow> rows;
  std::unordered_set<std::string> seen;
  std::string line;
  for (size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ManifestParseError, path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    if (!j.is_object())
      throw Error(ErrorCode::ManifestParseError, path.string() + ":" + std::to_string(n) + ": not an object");
    ManifestRow row{required_string(j, "id", path, n), required_string(j, "audio", path, n),
                    required_string(j, "label", path, n), required_string(j, "speaker", path, n),
                    required_string(j, "dialect", path, n)};
    if (row.label.empty())
      throw Error(ErrorCode::ManifestParseError, path.string() + ":" + std::to_string(n) + ": empty label");
    if (!seen.insert(row.id).second)
      throw Error(ErrorCode::ManifestParseError, path.string() + ":" + std::to_string(n) + ": duplicate id " + row.id);
    std::filesystem::path audio(row.audio);
    if (audio.is_relative()) row.audio = (base / audio).lexically_normal().string();
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& r : rows) {
    out << json{{"id", r.id}, {"audio", r.audio}, {"label", r.label}, {"speaker", r.speaker}, {"dialect", r.dialect}}
               .dump()
        << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

bool DatastoreFilter::accepts(const Example& e) const {
  if (require_dialect && e.dialect_id != *require_dialect) return false;
  if (require_speaker && e.speaker_id != *require_speaker) return false;
  if (exclude_speaker && e.speaker_id == *exclude_speaker) return false;
  if (exclude_labels.contains(e.label)) return false;
  if (exclude_ids.contains(e.id)) return false;
  return true;
}

Datastore::Datastore(std::vector<Example> examples, int dim, std::string retrieval_backend_tag)
    : examples_(std::move(examples)), dim_(dim), tag_(std::move(retrieval_backend_tag)) {
  if (dim_ <= 0) throw Error(ErrorCode::DimMismatch, "datastore dim must be positive");
  std::unordered_set<std::string> ids;
  for (const auto& e : examples_) {
    if (e.mean_embedding.size() != dim_)
      throw Error(ErrorCode::DimMismatch, "example " + e.id + " has dim " + std::to_string(e.mean_embedding.size()) +
                                              ", expected " + std::to_string(dim_));
    if (!e.mean_embedding.allFinite()) throw Error(ErrorCode::CorruptPayload, "non-finite embedding for " + e.id);
    if (e.label.empty()) throw Error(ErrorCode::ManifestParseError, "empty label for " + e.id);
    if (!ids.insert(e.id).second) throw Error(ErrorCode::ManifestParseError, "duplicate id " + e.id);
  }
}

RowMatrix<float> Datastore::embedding_matrix() const {
  RowMatrix<float> m(static_cast<Eigen::Index>(examples_.size()), dim_);
  for (size_t i = 0; i < examples_.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = examples_[i].mean_embedding.transpose();
  return m;
}

Eigen::VectorXf embed_file(const std::filesystem::path& audio, const Backend& theta) {
  Waveform w = standardize(load_wav(audio));
  validate(w);
  return mean_embedding(theta.encode(w));
}

Datastore build_datastore(std::span<const ManifestRow> rows, const Backend& theta) {
  if (rows.empty()) throw Error(ErrorCode::EmptyDatastore, "manifest has no rows");
  std::vector<Example> examples;
  examples.reserve(rows.size());
  int dim = 0;
  for (const auto& row : rows) {
    Example e{row.id, row.audio, row.label, row.speaker, row.dialect, embed_file(row.audio, theta)};
    if (dim == 0) dim = static_cast<int>(e.mean_embedding.size());
    if (e.mean_embedding.size() != dim)
      throw Error(ErrorCode::DimMismatch, "example " + row.id + " embedded with a different dim");
    examples.push_back(std::move(e));
  }
  return Datastore(std::move(examples), dim, theta.tag());
}

Datastore build_datastore(const std::filesystem::path& manifest, const Backend& theta) {
  const auto rows = read_manifest(manifest);
  return build_datastore(rows, theta);
}

std::vector<ScoredExample> knn_select(const Eigen::Ref<const Eigen::VectorXf>& query, const Datastore& store,
                                      size_t k, const DatastoreFilter& filter) {
  if (query.size() != store.dim())
    throw Error(ErrorCode::DimMismatch,
                "query dim " + std::to_string(query.size()) + " vs datastore dim " + std::to_string(store.dim()));
  if (k == 0) return {};

  struct Candidate {
    double distance;
    size_t index;
  };
  const auto& examples = store.examples();
  std::vector<Candidate> candidates;
  candidates.reserve(examples.size());
  for (size_t i = 0; i < examples.size(); ++i) {
    if (!filter.accepts(examples[i])) continue;
    candidates.push_back({euclidean_distance(query, examples[i].mean_embedding), i});
  }
  const auto closer = [&](const Candidate& a, const Candidate& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return examples[a.index].id < examples[b.index].id;
  };
  const size_t m = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(m), candidates.end(), closer);

  std::vector<ScoredExample> out;
  out.reserve(m);
  for (size_t i = 0; i < m; ++i) out.push_back({examples[candidates[i].index], candidates[i].distance});
  return out;
}

std::vector<SpeakerProfile> speaker_profiles(const Datastore& store, const DatastoreFilter& filter) {
  std::map<std::string, std::pair<Eigen::VectorXd, int>> sums;
  for (const auto& e : store.examples()) {
    if (!filter.accepts(e)) continue;
    auto [it, inserted] = sums.try_emplace(e.speaker_id, Eigen::VectorXd::Zero(store.dim()), 0);
    it->second.first += e.mean_embedding.cast<double>();
    it->second.second += 1;
  }
  std::vector<SpeakerProfile> out;
  out.reserve(sums.size());
  for (const auto& [speaker, acc] : sums) {
    out.push_back({speaker, (acc.first / acc.second).cast<float>(), acc.second});
  }
  return out;
}

std::vector<SpeakerProfile> speaker_profiles(const Datastore& store) {
  if (store.empty()) throw Error(ErrorCode::EmptyDatastore, "no examples to profile");
  return speaker_profiles(store, DatastoreFilter{});
}

std::string nearest_speaker(const Eigen::Ref<const Eigen::VectorXf>& query, std::span<const SpeakerProfile> profiles,
                            const std::optional<std::string>& exclude) {
  const SpeakerProfile* best = nullptr;
  double best_distance = 0.0;
  for (const auto& p : profiles) {
    if (exclude && p.speaker_id == *exclude) continue;
    if (p.avg_embedding.size() != query.size())
      throw Error(ErrorCode::DimMismatch, "speaker profile dim does not match query");
    const double d = euclidean_distance(query, p.avg_embedding);
    if (best == nullptr || d < best_distance || (d == best_distance && p.speaker_id < best->speaker_id)) {
      best = &p;
      best_distance = d;
    }
  }
  if (best == nullptr) throw Error(ErrorCode::NoCandidateSpeaker, "no speaker profile left after exclusion");
  return best->speaker_id;
}

void save(const Datastore& store, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  std::vector<ManifestRow> rows;
  rows.reserve(store.size());
  for (const auto& e : store.examples()) rows.push_back({e.id, e.audio_path, e.label, e.speaker_id, e.dialect_id});
  write_manifest(dir / "manifest.jsonl", rows);

  std::ofstream bin(dir / "embeddings.bin", std::ios::binary | std::ios::trunc);
  if (!bin) throw Error(ErrorCode::IoError, "cannot write embeddings.bin");
  bin.write(kEmbeddingMagic, 8);
  put_u32(bin, static_cast<uint32_t>(store.size()));
  put_u32(bin, static_cast<uint32_t>(store.dim()));
  for (const auto& e : store.examples()) {
    for (Eigen::Index i = 0; i < e.mean_embedding.size(); ++i) put_u32(bin, std::bit_cast<uint32_t>(e.mean_embedding[i]));
  }
  if (!bin) throw Error(ErrorCode::IoError, "short write to embeddings.bin");

  std::ofstream meta(dir / "meta.json", std::ios::trunc);
  meta << json{{"format", kEmbeddingMagic}, {"retrieval_backend", store.retrieval_backend_tag()}}.dump(2) << '\n';
  if (!meta) throw Error(ErrorCode::IoError, "short write to meta.json");
}

Datastore load(const std::filesystem::path& dir) {
  std::ifstream bin(dir / "embeddings.bin", std::ios::binary);
  if (!bin) throw Error(ErrorCode::IoError, "cannot open " + (dir / "embeddings.bin").string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kEmbeddingMagic, 8) != 0)
    throw Error(ErrorCode::FormatVersionMismatch, "embeddings.bin does not start with " + std::string(kEmbeddingMagic));
  const uint32_t count = get_u32(bytes.data() + 8);
  const uint32_t dim = get_u32(bytes.data() + 12);
  const size_t payload = bytes.size() - 16;
  if (dim == 0 || payload % (static_cast<size_t>(dim) * 4) != 0)
    throw Error(ErrorCode::CorruptPayload, "payload of " + std::to_string(payload) + " bytes is not a multiple of dim " +
                                               std::to_string(dim) + " x 4");
  if (payload / (static_cast<size_t>(dim) * 4) != count)
    throw Error(ErrorCode::CorruptPayload, "payload holds " + std::to_string(payload / (dim * 4ull)) +
                                               " vectors, header says " + std::to_string(count));

  // Audio paths were resolved when the datastore was built; read them verbatim.
  std::vector<ManifestRow> rows;
  {
    std::ifstream in(dir / "manifest.jsonl");
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + (dir / "manifest.jsonl").string());
    std::string line;
    for (size_t n = 1; std::getline(in, line); ++n) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const json j = json::parse(line);
        rows.push_back({j.at("id").get<std::string>(), j.at("audio").get<std::string>(), j.at("label").get<std::string>(),
                        j.at("speaker").get<std::string>(), j.at("dialect").get<std::string>()});
      } catch (const json::exception& e) {
        throw Error(ErrorCode::ManifestParseError, "manifest.jsonl:" + std::to_string(n) + ": " + e.what());
      }
    }
  }
  if (rows.size() != count)
    throw Error(ErrorCode::CorruptPayload,
                "manifest has " + std::to_string(rows.size()) + " rows, embeddings " + std::to_string(count));

  std::string tag;
  if (std::ifstream meta(dir / "meta.json"); meta) {
    try {
      const json j = json::parse(meta);
      tag = j.value("retrieval_backend", "");
    } catch (const json::exception& e) {
      throw Error(ErrorCode::CorruptPayload, std::string("meta.json: ") + e.what());
    }
  }

  std::vector<Example> examples;
  examples.reserve(count);
  const char* p = bytes.data() + 16;
  for (uint32_t i = 0; i < count; ++i) {
    Eigen::VectorXf v(dim);
    for (uint32_t d = 0; d < dim; ++d, p += 4) v[d] = std::bit_cast<float>(get_u32(p));
    auto& r = rows[i];
    examples.push_back({std::move(r.id), std::move(r.audio), std::move(r.label), std::move(r.speaker),
                        std::move(r.dialect), std::move(v)});
  }
  return Datastore(std::move(examples), static_cast<int>(dim), std::move(tag));
}

}  // namespace sicl
