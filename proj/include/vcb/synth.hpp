#pragma once

// Synthetic ground truth for the concept pipeline.
//
// N unit concept directions live in R^d. Every concept c has a background
// presence probability that decays with its (random) frequency rank as
// rank^-tail_exponent. An image's feature is the normalized sum of the
// directions of its present concepts plus isotropic Gaussian noise.
//
// Concept-split images only carry background concepts and are annotated with
// the names of their concepts. Target images of class p additionally draw
// each constituent of p with probability `constituent_prob`, and are labeled
// with the class whose constituents overlap the presence set the most (ties
// to the lowest class index); draws whose label is not p are rejected, which
// keeps the per-class counts exact.
//
// Word embeddings encode class relevance: each class name gets a random
// vector and each concept sits near the mean of the classes it belongs to
// (or at a random point when it belongs to none).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "vcb/concept_bank.hpp"
#include "vcb/embeddings.hpp"
#include "vcb/feature_table.hpp"
#include "vcb/random.hpp"

namespace vcb {

struct SynthSpec {
  Eigen::Index feature_dim = 64;
  std::size_t n_concepts = 50;
  std::size_t n_classes = 10;
  std::size_t constituents_per_class = 5;
  std::size_t concept_images = 4000;
  std::size_t train_per_class = 200;
  std::size_t test_per_class = 100;
  double tail_exponent = 0.5;
  double noise_sigma = 0.05;
  std::uint64_t seed = 7;

  double background_per_image = 4.0;  // expected background concepts per image
  double constituent_prob = 0.7;
  Eigen::Index embedding_dim = 16;
  double embedding_noise = 0.1;
  bool disjoint_constituents = false;

  void validate() const {
    if (feature_dim < 1 || n_concepts < 1 || n_classes < 1 || constituents_per_class < 1 || concept_images < 1 ||
        train_per_class < 1 || test_per_class < 1 || embedding_dim < 1)
      throw Error("synth: all counts must be at least 1");
    if (constituents_per_class > n_concepts) throw Error("synth: constituents_per_class exceeds n_concepts");
    if (disjoint_constituents && constituents_per_class * n_classes > n_concepts)
      throw Error("synth: disjoint constituents need n_classes * constituents_per_class <= n_concepts");
    if (!(tail_exponent >= 0.0)) throw Error("synth: tail_exponent must be non-negative");
    if (!(noise_sigma >= 0.0)) throw Error("synth: noise_sigma must be non-negative");
    if (!(background_per_image > 0.0)) throw Error("synth: background_per_image must be positive");
    if (!(constituent_prob > 0.0 && constituent_prob <= 1.0)) throw Error("synth: constituent_prob must lie in (0, 1]");
    if (!(embedding_noise >= 0.0)) throw Error("synth: embedding_noise must be non-negative");
  }
};

enum class SynthSplit { Concept, Train, Test };

inline std::string to_string(SynthSplit s) {
  switch (s) {
    case SynthSplit::Concept:
      return "concept";
    case SynthSplit::Train:
      return "train";
    case SynthSplit::Test:
      return "test";
  }
  return "concept";
}

struct SynthImage {
  std::string id;
  SynthSplit split = SynthSplit::Concept;
  std::vector<int> presence;  // sorted concept indices
  int label = -1;             // class index for train/test images
};

struct SynthDataset {
  SynthSpec spec;
  std::vector<std::string> concept_names;
  std::vector<std::string> class_names;
  Matrix directions;                          // N x d, unit rows
  std::vector<double> presence_prob;          // background probability per concept
  std::vector<std::vector<int>> constituents;  // per class, sorted
  std::vector<SynthImage> images;
  FeatureTable features;
  std::vector<RegionAnnotation> annotations;
  LabelSet train_labels;
  LabelSet test_labels;
  EmbeddingStore embeddings;
};

/// Overlap winner: the class sharing the most concepts with `presence`, ties
/// to the lowest class index.
inline int best_overlap_class(const std::vector<int>& presence, const std::vector<std::vector<int>>& constituents) {
  int best = 0;
  std::size_t best_overlap = 0;
  for (std::size_t p = 0; p < constituents.size(); ++p) {
    std::size_t overlap = 0;
    for (int c : constituents[p])
      if (std::binary_search(presence.begin(), presence.end(), c)) ++overlap;
    if (overlap > best_overlap) {
      best_overlap = overlap;
      best = static_cast<int>(p);
    }
  }
  return best;
}

namespace detail {

inline std::string padded_name(std::string_view stem, std::size_t i, std::size_t count) {
  const std::size_t width = std::max<std::size_t>(2, std::to_string(count - 1).size());
  std::string digits = std::to_string(i);
  return std::string(stem) + std::string(width - digits.size(), '0') + digits;
}

inline Vector random_unit(Rng& rng, Eigen::Index dim) {
  Vector v(dim);
  do {
    for (Eigen::Index k = 0; k < dim; ++k) v[k] = rng.normal();
  } while (v.norm() == 0.0);
  return v / v.norm();
}

}  // namespace detail

inline SynthDataset generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  SynthDataset ds;
  ds.spec = spec;
  const std::size_t N = spec.n_concepts;
  const std::size_t L = spec.n_classes;
  const Eigen::Index d = spec.feature_dim;

  Rng structure(derive_seed(spec.seed, 1));
  for (std::size_t c = 0; c < N; ++c) ds.concept_names.push_back(detail::padded_name("concept", c, N));
  for (std::size_t p = 0; p < L; ++p) ds.class_names.push_back(detail::padded_name("action", p, L));

  ds.directions.resize(static_cast<Eigen::Index>(N), d);
  for (std::size_t c = 0; c < N; ++c)
    ds.directions.row(static_cast<Eigen::Index>(c)) = detail::random_unit(structure, d).transpose();

  // long-tail background presence over a random frequency ranking
  std::vector<std::size_t> rank_of(N);
  for (std::size_t c = 0; c < N; ++c) rank_of[c] = c;
  structure.shuffle(rank_of);
  std::vector<double> weight(N);
  double weight_sum = 0.0;
  for (std::size_t c = 0; c < N; ++c) {
    weight[c] = std::pow(static_cast<double>(rank_of[c] + 1), -spec.tail_exponent);
    weight_sum += weight[c];
  }
  ds.presence_prob.resize(N);
  for (std::size_t c = 0; c < N; ++c)
    ds.presence_prob[c] = std::min(1.0, spec.background_per_image * weight[c] / weight_sum);

  std::vector<int> all(N);
  for (std::size_t c = 0; c < N; ++c) all[c] = static_cast<int>(c);
  if (spec.disjoint_constituents) {
    auto pool = all;
    structure.shuffle(pool);
    for (std::size_t p = 0; p < L; ++p) {
      std::vector<int> set(pool.begin() + static_cast<std::ptrdiff_t>(p * spec.constituents_per_class),
                           pool.begin() + static_cast<std::ptrdiff_t>((p + 1) * spec.constituents_per_class));
      std::sort(set.begin(), set.end());
      ds.constituents.push_back(std::move(set));
    }
  } else {
    for (std::size_t p = 0; p < L; ++p) ds.constituents.push_back(structure.sample(all, spec.constituents_per_class));
  }

  Rng images(derive_seed(spec.seed, 2));
  auto background = [&]() {
    std::vector<int> present;
    for (std::size_t c = 0; c < N; ++c)
      if (images.bernoulli(ds.presence_prob[c])) present.push_back(static_cast<int>(c));
    return present;
  };
  auto feature_of = [&](const std::vector<int>& presence) {
    Vector sum = Vector::Zero(d);
    for (int c : presence) sum += ds.directions.row(c).transpose();
    Vector f = l2_normalize(sum);
    if (spec.noise_sigma > 0.0)
      for (Eigen::Index k = 0; k < d; ++k) f[k] += spec.noise_sigma * images.normal();
    return f;
  };

  std::vector<Vector> rows;
  for (std::size_t i = 0; i < spec.concept_images; ++i) {
    SynthImage img;
    img.id = detail::padded_name("vg", i, spec.concept_images);
    img.split = SynthSplit::Concept;
    do {
      img.presence = background();
    } while (img.presence.empty());
    rows.push_back(feature_of(img.presence));
    ds.images.push_back(std::move(img));
  }
  for (SynthSplit split : {SynthSplit::Train, SynthSplit::Test}) {
    const std::size_t per_class = split == SynthSplit::Train ? spec.train_per_class : spec.test_per_class;
    const std::string stem = split == SynthSplit::Train ? "tr" : "te";
    LabelSet& labels = split == SynthSplit::Train ? ds.train_labels : ds.test_labels;
    std::size_t serial = 0;
    for (std::size_t p = 0; p < L; ++p) {
      for (std::size_t n = 0; n < per_class; ++n) {
        SynthImage img;
        img.id = detail::padded_name(stem, serial++, per_class * L);
        img.split = split;
        img.label = static_cast<int>(p);
        while (true) {
          std::vector<int> present = background();
          bool any = false;
          for (int c : ds.constituents[p])
            if (images.bernoulli(spec.constituent_prob)) {
              present.push_back(c);
              any = true;
            }
          if (!any) continue;
          std::sort(present.begin(), present.end());
          present.erase(std::unique(present.begin(), present.end()), present.end());
          if (best_overlap_class(present, ds.constituents) != static_cast<int>(p)) continue;
          img.presence = std::move(present);
          break;
        }
        rows.push_back(feature_of(img.presence));
        labels.ids.push_back(img.id);
        labels.labels[img.id] = {ds.class_names[p]};
        ds.images.push_back(std::move(img));
      }
    }
  }

  std::vector<std::string> ids;
  Matrix feat(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ids.push_back(ds.images[i].id);
    feat.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  ds.features = FeatureTable(std::move(ids), std::move(feat));

  // Region annotations for the concept split, with surface variation that
  // normalizes back to the concept name.
  Rng naming(derive_seed(spec.seed, 3));
  static constexpr std::array<std::string_view, 5> kPrefix{"", "a ", "the ", "A ", "some "};
  for (const auto& img : ds.images) {
    if (img.split != SynthSplit::Concept) continue;
    for (int c : img.presence) {
      RegionAnnotation a;
      a.image_id = img.id;
      const auto form = naming.index(4);
      std::string name = std::string(kPrefix[naming.index(kPrefix.size())]) + ds.concept_names[c];
      if (form == 1) name += "s";
      if (form == 2) name += "!";
      a.object_name = std::move(name);
      ds.annotations.push_back(std::move(a));
    }
  }

  Rng semantic(derive_seed(spec.seed, 4));
  const Eigen::Index E = spec.embedding_dim;
  std::vector<Vector> class_vec;
  for (std::size_t p = 0; p < L; ++p) class_vec.push_back(detail::random_unit(semantic, E));
  ds.embeddings = EmbeddingStore(E);
  for (std::size_t c = 0; c < N; ++c) {
    Vector v = Vector::Zero(E);
    std::size_t owners = 0;
    for (std::size_t p = 0; p < L; ++p)
      if (std::binary_search(ds.constituents[p].begin(), ds.constituents[p].end(), static_cast<int>(c))) {
        v += class_vec[p];
        ++owners;
      }
    if (owners > 0)
      v /= static_cast<double>(owners);
    else
      v = detail::random_unit(semantic, E);
    for (Eigen::Index k = 0; k < E; ++k) v[k] += spec.embedding_noise * semantic.normal() / std::sqrt(double(E));
    ds.embeddings.insert(ds.concept_names[c], v);
  }
  for (std::size_t p = 0; p < L; ++p) ds.embeddings.insert(ds.class_names[p], class_vec[p]);
  return ds;
}

inline std::string encode_embeddings_text(const EmbeddingStore& store) {
  std::string out;
  for (const auto& w : store.words()) {
    out += w;
    for (double x : *store.find(w)) {
      out += ' ';
      out += io::format_double(x);
    }
    out += '\n';
  }
  return out;
}

inline std::string encode_spec_json(const SynthSpec& s) {
  nlohmann::ordered_json j;
  j["feature_dim"] = s.feature_dim;
  j["n_concepts"] = s.n_concepts;
  j["n_classes"] = s.n_classes;
  j["constituents_per_class"] = s.constituents_per_class;
  j["concept_images"] = s.concept_images;
  j["train_per_class"] = s.train_per_class;
  j["test_per_class"] = s.test_per_class;
  j["tail_exponent"] = s.tail_exponent;
  j["noise_sigma"] = s.noise_sigma;
  j["seed"] = s.seed;
  j["background_per_image"] = s.background_per_image;
  j["constituent_prob"] = s.constituent_prob;
  j["embedding_dim"] = s.embedding_dim;
  j["embedding_noise"] = s.embedding_noise;
  j["disjoint_constituents"] = s.disjoint_constituents;
  return j.dump();
}

/// Everything a test needs to check the pipeline against the generator.
inline std::string encode_ground_truth(const SynthDataset& ds) {
  nlohmann::ordered_json j;
  j["format"] = "vcb-synth-truth";
  j["version"] = 1;
  j["spec"] = nlohmann::ordered_json::parse(encode_spec_json(ds.spec));
  j["concepts"] = ds.concept_names;
  j["classes"] = ds.class_names;
  auto dirs = nlohmann::ordered_json::array();
  for (Eigen::Index c = 0; c < ds.directions.rows(); ++c)
    dirs.push_back(std::vector<double>(ds.directions.row(c).begin(), ds.directions.row(c).end()));
  j["directions"] = dirs;
  j["presence_prob"] = ds.presence_prob;
  j["constituents"] = ds.constituents;
  auto imgs = nlohmann::ordered_json::array();
  for (const auto& img : ds.images) {
    nlohmann::ordered_json o;
    o["id"] = img.id;
    o["split"] = to_string(img.split);
    o["presence"] = img.presence;
    o["label"] = img.label;
    imgs.push_back(o);
  }
  j["images"] = imgs;
  return j.dump() + "\n";
}

}  // namespace vcb
