#pragma once

// Concept vocabulary and the bank of per-concept linear classifiers.
//
// Concept training sets are mined per concept c with cluster h_c:
//   positives = images whose concept set contains c
//   negatives = images whose concept set contains no concept of cluster h_c
// Positives are capped by uniform sampling, negatives are a uniform sample of
// ceil(neg_ratio * |positives|) images from the negative pool.

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "vcb/embeddings.hpp"
#include "vcb/feature_table.hpp"
#include "vcb/io.hpp"
#include "vcb/kmeans.hpp"
#include "vcb/parallel.hpp"
#include "vcb/random.hpp"
#include "vcb/svm.hpp"
#include "vcb/text_norm.hpp"

namespace vcb {

enum class ConceptKind { Obj, Attr, ObjAttr };

inline std::string to_string(ConceptKind kind) {
  switch (kind) {
    case ConceptKind::Obj:
      return "obj";
    case ConceptKind::Attr:
      return "attr";
    case ConceptKind::ObjAttr:
      return "objattr";
  }
  return "obj";
}

inline ConceptKind parse_concept_kind(std::string_view s) {
  if (s == "obj") return ConceptKind::Obj;
  if (s == "attr") return ConceptKind::Attr;
  if (s == "objattr") return ConceptKind::ObjAttr;
  throw Error("unknown concept kind '" + std::string(s) + "' (expected obj, attr or objattr)");
}

/// Separator of object|attribute compound keys; normalization never emits it.
inline constexpr char kCompoundSeparator = '|';

struct RegionAnnotation {
  std::string image_id;
  std::string object_name;
  std::vector<std::string> attributes;
};

/// One JSON object per line: {"image_id": ..., "object_name": ..., "attributes": [...]}.
inline std::vector<RegionAnnotation> parse_annotations(std::istream& in) {
  std::vector<RegionAnnotation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      RegionAnnotation a;
      a.image_id = j.at("image_id").get<std::string>();
      a.object_name = j.value("object_name", std::string{});
      if (j.contains("attributes")) a.attributes = j.at("attributes").get<std::vector<std::string>>();
      out.push_back(std::move(a));
    } catch (const nlohmann::json::exception& e) {
      throw Error("annotation line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<RegionAnnotation> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open annotations: " + path.string());
  return parse_annotations(in);
}

inline std::string encode_annotation(const RegionAnnotation& a) {
  nlohmann::ordered_json j;
  j["image_id"] = a.image_id;
  j["object_name"] = a.object_name;
  j["attributes"] = a.attributes;
  return j.dump();
}

struct ConceptEntry {
  std::string key;
  ConceptKind kind = ConceptKind::Obj;
  std::size_t frequency = 0;  // number of images
  std::optional<Vector> embedding;
  int cluster = -1;
};

struct ConceptVocabulary {
  std::vector<ConceptEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  std::optional<std::size_t> find(std::string_view key) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (entries[i].key == key) return i;
    return std::nullopt;
  }

  std::unordered_map<std::string, int> index() const {
    std::unordered_map<std::string, int> out;
    for (std::size_t i = 0; i < entries.size(); ++i) out.emplace(entries[i].key, static_cast<int>(i));
    return out;
  }
};

/// Per-image concept sets C_I, keyed by image id (first-appearance order).
struct ImageConcepts {
  std::vector<std::string> image_ids;
  std::vector<std::vector<std::string>> keys;  // sorted, unique per image
};

/// C_I as vocabulary indices; images with no vocabulary concept keep an
/// empty set (they remain eligible negatives).
struct ConceptSets {
  std::vector<std::string> image_ids;
  std::vector<std::vector<int>> concepts;  // sorted
};

inline ConceptSets index_concepts(const ImageConcepts& images, const ConceptVocabulary& vocab) {
  const auto idx = vocab.index();
  ConceptSets out;
  out.image_ids = images.image_ids;
  out.concepts.resize(images.keys.size());
  for (std::size_t i = 0; i < images.keys.size(); ++i) {
    for (const auto& k : images.keys[i])
      if (auto it = idx.find(k); it != idx.end()) out.concepts[i].push_back(it->second);
    std::sort(out.concepts[i].begin(), out.concepts[i].end());
  }
  return out;
}

/// Descending frequency, then key.
inline void sort_by_frequency(std::vector<ConceptEntry>& entries) {
  std::stable_sort(entries.begin(), entries.end(), [](const ConceptEntry& a, const ConceptEntry& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.key < b.key;
  });
}

struct ExtractedConcepts {
  ConceptVocabulary vocabulary;
  ImageConcepts images;
};

/// Normalizes annotation names into concept keys of one kind and counts, per
/// key, the number of distinct images containing it.
inline ExtractedConcepts extract_concepts(const std::vector<RegionAnnotation>& annotations, ConceptKind kind,
                                          const StopwordPolicy& policy) {
  std::map<std::string, std::set<std::string>> per_image;
  std::vector<std::string> order;
  for (const auto& a : annotations) {
    auto [it, inserted] = per_image.try_emplace(a.image_id);
    if (inserted) order.push_back(a.image_id);
    auto& keys = it->second;
    switch (kind) {
      case ConceptKind::Obj: {
        auto key = normalize_name(a.object_name, policy, NameKind::Noun);
        if (!key.empty()) keys.insert(std::move(key));
        break;
      }
      case ConceptKind::Attr:
        for (const auto& attr : a.attributes) {
          auto key = normalize_name(attr, policy, NameKind::Attribute);
          if (!key.empty()) keys.insert(std::move(key));
        }
        break;
      case ConceptKind::ObjAttr: {
        const auto obj = normalize_name(a.object_name, policy, NameKind::Noun);
        if (obj.empty()) break;
        for (const auto& attr : a.attributes) {
          const auto at = normalize_name(attr, policy, NameKind::Attribute);
          if (!at.empty()) keys.insert(obj + kCompoundSeparator + at);
        }
        break;
      }
    }
  }
  ExtractedConcepts out;
  std::map<std::string, std::size_t> freq;
  for (const auto& id : order) {
    const auto& keys = per_image.at(id);
    out.images.image_ids.push_back(id);
    out.images.keys.emplace_back(keys.begin(), keys.end());
    for (const auto& k : keys) ++freq[k];
  }
  for (auto& [key, count] : freq) {
    ConceptEntry e;
    e.key = key;
    e.kind = kind;
    e.frequency = count;
    out.vocabulary.entries.push_back(std::move(e));
  }
  sort_by_frequency(out.vocabulary.entries);
  return out;
}

inline ConceptVocabulary filter_min_count(const ConceptVocabulary& vocab, std::size_t min_count = 10) {
  ConceptVocabulary out;
  for (const auto& e : vocab.entries)
    if (e.frequency >= min_count) out.entries.push_back(e);
  sort_by_frequency(out.entries);
  return out;
}

/// Words used to look up a concept key in the embedding table.
inline std::vector<std::string> concept_words(std::string_view key) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : key) {
    if (ch == ' ' || ch == kCompoundSeparator) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

/// Embeds every key and runs k-means on the embeddable ones. Keys without an
/// embedding get singleton clusters k, k+1, ... in vocabulary order.
inline ConceptVocabulary cluster_concepts(const ConceptVocabulary& vocab, const EmbeddingStore& store, int k,
                                          std::uint64_t seed, int max_iter = 300) {
  ConceptVocabulary out = vocab;
  std::vector<std::size_t> embeddable;
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    auto& e = out.entries[i];
    e.embedding = store.size() > 0 ? phrase_vector(store, concept_words(e.key)).vector : std::nullopt;
    e.cluster = -1;
    if (e.embedding) embeddable.push_back(i);
  }
  if (k < 0 || static_cast<std::size_t>(k) > embeddable.size())
    throw Error("cluster_concepts: k = " + std::to_string(k) + " exceeds the " +
                std::to_string(embeddable.size()) + " concepts with embeddings");
  if (!embeddable.empty()) {
    if (k == 0) throw Error("cluster_concepts: k must be at least 1");
    Matrix points(static_cast<Eigen::Index>(embeddable.size()), store.dimension());
    for (std::size_t r = 0; r < embeddable.size(); ++r)
      points.row(static_cast<Eigen::Index>(r)) = out.entries[embeddable[r]].embedding->transpose();
    const auto km = kmeans(points, k, seed, max_iter);
    for (std::size_t r = 0; r < embeddable.size(); ++r) out.entries[embeddable[r]].cluster = km.assignment[r];
  }
  int next = k;
  for (auto& e : out.entries)
    if (e.cluster < 0) e.cluster = next++;
  return out;
}

struct MiningCaps {
  std::size_t max_pos = 1000;
  double neg_ratio = 3.0;
};

/// Full positive and negative pools of concept `c` (image indices, ascending).
struct TrainingPools {
  std::vector<int> positives;
  std::vector<int> negatives;
};

inline TrainingPools mine_pools(int c, const ConceptSets& sets, const ConceptVocabulary& vocab) {
  if (c < 0 || static_cast<std::size_t>(c) >= vocab.size()) throw Error("mine_pools: concept index out of range");
  const int cluster = vocab.entries[c].cluster;
  if (cluster < 0) throw Error("mine_pools: concept '" + vocab.entries[c].key + "' has no cluster");
  TrainingPools pools;
  for (std::size_t i = 0; i < sets.concepts.size(); ++i) {
    bool has_c = false;
    bool touches_cluster = false;
    for (int other : sets.concepts[i]) {
      if (other == c) has_c = true;
      if (vocab.entries[other].cluster == cluster) touches_cluster = true;
    }
    if (has_c)
      pools.positives.push_back(static_cast<int>(i));
    else if (!touches_cluster)
      pools.negatives.push_back(static_cast<int>(i));
  }
  return pools;
}

/// Sampled training sets of concept `c`.
inline TrainingPools build_training_sets(int c, const ConceptSets& sets, const ConceptVocabulary& vocab,
                                         const MiningCaps& caps, std::uint64_t seed) {
  if (!(caps.neg_ratio >= 0.0)) throw Error("build_training_sets: neg_ratio must be non-negative");
  auto pools = mine_pools(c, sets, vocab);
  if (pools.positives.empty())
    throw Error("build_training_sets: concept '" + vocab.entries[c].key + "' has no positive images");
  Rng rng(seed);
  TrainingPools out;
  out.positives = rng.sample(pools.positives, caps.max_pos);
  const auto want = static_cast<std::size_t>(std::ceil(caps.neg_ratio * static_cast<double>(out.positives.size())));
  out.negatives = rng.sample(pools.negatives, want);
  return out;
}

struct ConceptTrainStats {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  TrainMeta svm;
};

/// Stacked concept classifiers: row i of `weights` scores concept i.
struct ConceptBank {
  ConceptVocabulary vocabulary;
  Matrix weights;  // N x d
  Vector biases;   // N
  std::vector<ConceptTrainStats> stats;

  std::size_t size() const { return vocabulary.size(); }
  Eigen::Index feature_dim() const { return weights.cols(); }

  LinearModel model(std::size_t i) const {
    LinearModel m;
    m.weights = weights.row(static_cast<Eigen::Index>(i)).transpose();
    m.bias = biases[static_cast<Eigen::Index>(i)];
    return m;
  }
};

/// Per-concept sampling and SVM seeds are derived from (seed, concept index),
/// so the bank does not depend on the number of worker threads.
inline ConceptBank train_concept_bank(const ConceptVocabulary& vocab, const FeatureTable& features,
                                      const ConceptSets& sets, const SvmParams& svm, const MiningCaps& caps,
                                      std::uint64_t seed, int threads = 1) {
  if (vocab.empty()) throw Error("train_concept_bank: empty vocabulary");
  const auto n = vocab.size();
  const Eigen::Index d = features.dimension();
  std::vector<LinearModel> models(n);
  std::vector<ConceptTrainStats> stats(n);
  parallel_for(n, threads, [&](std::size_t c) {
    const auto sampled = build_training_sets(static_cast<int>(c), sets, vocab, caps, derive_seed(seed, 2 * c));
    const std::size_t m = sampled.positives.size() + sampled.negatives.size();
    Matrix X(static_cast<Eigen::Index>(m), d);
    std::vector<int> y;
    y.reserve(m);
    Eigen::Index r = 0;
    for (int img : sampled.positives) {
      X.row(r++) = l2_normalize(features.row(sets.image_ids[img]).transpose()).transpose();
      y.push_back(1);
    }
    for (int img : sampled.negatives) {
      X.row(r++) = l2_normalize(features.row(sets.image_ids[img]).transpose()).transpose();
      y.push_back(-1);
    }
    SvmParams p = svm;
    p.seed = derive_seed(seed, 2 * c + 1);
    models[c] = train_linear_svm(X, y, p);
    stats[c] = {sampled.positives.size(), sampled.negatives.size(), models[c].train_meta};
  });
  ConceptBank bank;
  bank.vocabulary = vocab;
  bank.weights.resize(static_cast<Eigen::Index>(n), d);
  bank.biases.resize(static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < n; ++c) {
    bank.weights.row(static_cast<Eigen::Index>(c)) = models[c].weights.transpose();
    bank.biases[static_cast<Eigen::Index>(c)] = models[c].bias;
  }
  bank.stats = std::move(stats);
  return bank;
}

// ---------------------------------------------------------------------------
// Vocabulary and bank files.
//
// Vocabulary lines: "<kind>\t<frequency>\t<cluster>\t<key>"
// Bank file:
//   VCBBANK 1
//   concepts <N>
//   dim <d>
//   N vocabulary lines
//   END
//   N*d f32 LE weights (row-major), N f32 LE biases
// ---------------------------------------------------------------------------

inline std::string encode_vocab_line(const ConceptEntry& e) {
  return to_string(e.kind) + "\t" + std::to_string(e.frequency) + "\t" + std::to_string(e.cluster) + "\t" + e.key +
         "\n";
}

inline ConceptEntry decode_vocab_line(std::string_view line) {
  std::vector<std::string_view> f;
  std::size_t start = 0;
  for (int k = 0; k < 3; ++k) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) throw Error("vocabulary line: expected 4 tab-separated fields");
    f.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  f.push_back(line.substr(start));
  ConceptEntry e;
  e.kind = parse_concept_kind(f[0]);
  long long freq = 0, cluster = 0;
  if (std::from_chars(f[1].data(), f[1].data() + f[1].size(), freq).ec != std::errc() || freq < 0 ||
      std::from_chars(f[2].data(), f[2].data() + f[2].size(), cluster).ec != std::errc())
    throw Error("vocabulary line: bad number in '" + std::string(line) + "'");
  e.frequency = static_cast<std::size_t>(freq);
  e.cluster = static_cast<int>(cluster);
  e.key = std::string(f[3]);
  if (e.key.empty()) throw Error("vocabulary line: empty key");
  return e;
}

inline std::string encode_vocabulary(const ConceptVocabulary& vocab) {
  std::string out = "# vcb vocabulary 1\n";
  for (const auto& e : vocab.entries) out += encode_vocab_line(e);
  return out;
}

inline ConceptVocabulary decode_vocabulary(std::string_view text) {
  ConceptVocabulary vocab;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    vocab.entries.push_back(decode_vocab_line(line));
  }
  return vocab;
}

inline constexpr std::string_view kBankMagic = "VCBBANK 1";

inline std::string encode_bank(const ConceptBank& bank) {
  std::string out = std::string(kBankMagic) + "\nconcepts " + std::to_string(bank.size()) + "\ndim " +
                    std::to_string(bank.feature_dim()) + "\n";
  for (const auto& e : bank.vocabulary.entries) out += encode_vocab_line(e);
  out += "END\n";
  for (Eigen::Index i = 0; i < bank.weights.rows(); ++i)
    for (Eigen::Index j = 0; j < bank.weights.cols(); ++j) io::put_f32_le(out, bank.weights(i, j));
  for (Eigen::Index i = 0; i < bank.biases.size(); ++i) io::put_f32_le(out, bank.biases[i]);
  return out;
}

inline ConceptBank decode_bank(std::string_view bytes) {
  std::size_t pos = 0;
  auto next_line = [&]() {
    auto end = bytes.find('\n', pos);
    if (end == std::string_view::npos) throw Error("bank file: truncated header");
    auto line = bytes.substr(pos, end - pos);
    pos = end + 1;
    return line;
  };
  if (next_line() != kBankMagic) throw Error("bank file: bad magic or unsupported version");
  auto read_count = [&](std::string_view name) {
    auto line = next_line();
    if (!line.starts_with(name) || line.size() <= name.size() + 1) throw Error("bank file: expected " + std::string(name));
    long long v = -1;
    auto field = line.substr(name.size() + 1);
    if (std::from_chars(field.data(), field.data() + field.size(), v).ec != std::errc() || v < 0)
      throw Error("bank file: bad " + std::string(name));
    return static_cast<Eigen::Index>(v);
  };
  const auto n = read_count("concepts");
  const auto d = read_count("dim");
  ConceptBank bank;
  for (Eigen::Index i = 0; i < n; ++i) bank.vocabulary.entries.push_back(decode_vocab_line(next_line()));
  if (next_line() != "END") throw Error("bank file: missing END marker");
  const std::size_t need = static_cast<std::size_t>(n) * static_cast<std::size_t>(d + 1) * 4;
  if (bytes.size() - pos != need) throw Error("bank file: weight block has wrong size");
  bank.weights.resize(n, d);
  bank.biases.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j, pos += 4) bank.weights(i, j) = io::get_f32_le(bytes, pos);
  for (Eigen::Index i = 0; i < n; ++i, pos += 4) bank.biases[i] = io::get_f32_le(bytes, pos);
  return bank;
}

}  // namespace vcb
