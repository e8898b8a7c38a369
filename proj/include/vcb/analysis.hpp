#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vcb/concept_bank.hpp"
#include "vcb/evaluate.hpp"
#include "vcb/target.hpp"

namespace vcb {

// --- keywords ---------------------------------------------------------------

struct KeywordTable {
  std::vector<std::string> classes;
  std::vector<std::vector<std::pair<std::string, double>>> keywords;  // per class, descending weight
  bool clipped = false;  // requested k exceeded the vocabulary
};

/// Top-k concepts per class by effective (PCA-unfolded) weight. Equal weights
/// keep vocabulary order.
inline KeywordTable top_keywords(const TargetModel& model, const ConceptVocabulary& vocab, std::size_t k) {
  if (model.mode != TargetMode::Concept) throw Error("top_keywords: model was not trained on concept scores");
  require_dim("top_keywords: concept count", model.input_dim(), static_cast<Eigen::Index>(vocab.size()));
  KeywordTable table;
  table.classes = model.class_labels;
  if (k > vocab.size()) {
    table.clipped = true;
    k = vocab.size();
  }
  const Matrix eff = model.effective_weights();
  for (Eigen::Index j = 0; j < eff.rows(); ++j) {
    std::vector<std::size_t> order(vocab.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return eff(j, static_cast<Eigen::Index>(a)) > eff(j, static_cast<Eigen::Index>(b));
    });
    std::vector<std::pair<std::string, double>> row;
    for (std::size_t r = 0; r < k; ++r)
      row.emplace_back(vocab.entries[order[r]].key, eff(j, static_cast<Eigen::Index>(order[r])));
    table.keywords.push_back(std::move(row));
  }
  return table;
}

inline KeywordTable top_keywords(const TargetModel& model, const ConceptBank& bank, std::size_t k) {
  return top_keywords(model, bank.vocabulary, k);
}

inline std::string encode_keywords_tsv(const KeywordTable& table) {
  std::string out = "class\trank\tconcept\tweight\n";
  for (std::size_t j = 0; j < table.classes.size(); ++j)
    for (std::size_t r = 0; r < table.keywords[j].size(); ++r)
      out += table.classes[j] + "\t" + std::to_string(r + 1) + "\t" + table.keywords[j][r].first + "\t" +
             io::format_double(table.keywords[j][r].second) + "\n";
  return out;
}

// --- weight statistics ------------------------------------------------------

/// (1/L) sum_j |omega_j| over the rows of an L x N weight matrix.
inline Vector mean_abs_weights(const Matrix& weights) {
  if (weights.rows() < 1) throw Error("mean_abs_weights: need at least one classifier");
  Vector out = Vector::Zero(weights.cols());
  for (Eigen::Index j = 0; j < weights.rows(); ++j) out += weights.row(j).cwiseAbs().transpose();
  return out / static_cast<double>(weights.rows());
}

struct WeightPoint {
  std::size_t rank = 0;
  double weight = 0.0;
  double moving_average = 0.0;
};

/// Centered moving average of weights listed by descending concept
/// frequency; the window is clipped at both ends.
inline std::vector<WeightPoint> weight_vs_frequency(const Vector& mean_abs, std::size_t window = 50) {
  if (window == 0) throw Error("weight_vs_frequency: window must be positive");
  const auto n = static_cast<std::size_t>(mean_abs.size());
  const std::size_t before = (window - 1) / 2;
  const std::size_t after = window / 2;
  std::vector<WeightPoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= before ? i - before : 0;
    const std::size_t hi = std::min(n - 1, i + after);
    double sum = 0.0;
    for (std::size_t t = lo; t <= hi; ++t) sum += mean_abs[static_cast<Eigen::Index>(t)];
    out.push_back({i + 1, mean_abs[static_cast<Eigen::Index>(i)], sum / static_cast<double>(hi - lo + 1)});
  }
  return out;
}

/// (rank, frequency) by descending frequency, ties by key.
inline std::vector<std::pair<std::size_t, std::size_t>> frequency_histogram(const ConceptVocabulary& vocab) {
  auto entries = vocab.entries;
  sort_by_frequency(entries);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < entries.size(); ++i) out.emplace_back(i + 1, entries[i].frequency);
  return out;
}

// --- semantic relatedness ----------------------------------------------------

struct NamedVector {
  std::string name;
  std::optional<Vector> vector;
};

struct RelatednessRanking {
  std::vector<std::string> concepts;  // embeddable concepts, input order
  std::vector<std::string> classes;   // embeddable classes, input order
  std::vector<std::vector<int>> ranks;  // ranks[p][c] = sigma_p(c) in 1..|C|
  std::vector<double> r_values;       // sum_p exp(-sigma_p(c))
  std::vector<std::string> excluded_concepts;
  std::vector<std::string> excluded_classes;
};

/// Per class p, concepts are ranked by increasing Euclidean distance to the
/// class vector (ties by concept key); r(c) = sum_p exp(-sigma_p(c)).
inline RelatednessRanking relatedness_rank(const std::vector<NamedVector>& concepts,
                                           const std::vector<NamedVector>& classes) {
  RelatednessRanking out;
  std::vector<const Vector*> cvec;
  for (const auto& c : concepts) {
    if (c.vector) {
      out.concepts.push_back(c.name);
      cvec.push_back(&*c.vector);
    } else {
      out.excluded_concepts.push_back(c.name);
    }
  }
  std::vector<const Vector*> pvec;
  for (const auto& p : classes) {
    if (p.vector) {
      out.classes.push_back(p.name);
      pvec.push_back(&*p.vector);
    } else {
      out.excluded_classes.push_back(p.name);
    }
  }
  if (pvec.empty()) throw Error("relatedness_rank: no class has an embedding");
  const std::size_t C = cvec.size();
  out.r_values.assign(C, 0.0);
  std::vector<double> dist(C);
  std::vector<std::size_t> order(C);
  for (const Vector* p : pvec) {
    for (std::size_t c = 0; c < C; ++c) {
      require_dim("relatedness_rank: embedding dimension", p->size(), cvec[c]->size());
      dist[c] = (*cvec[c] - *p).norm();
    }
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (dist[a] != dist[b]) return dist[a] < dist[b];
      return out.concepts[a] < out.concepts[b];
    });
    std::vector<int> rank(C);
    for (std::size_t pos = 0; pos < C; ++pos) rank[order[pos]] = static_cast<int>(pos + 1);
    out.ranks.push_back(std::move(rank));
  }
  // summed in class order for every concept
  for (std::size_t c = 0; c < C; ++c)
    for (const auto& rank : out.ranks) out.r_values[c] += std::exp(-static_cast<double>(rank[c]));
  return out;
}

// --- concept orderings and selection curves ----------------------------------

enum class SelectionOrder { Frequency, Relatedness };

/// Vocabulary indices by frequency (descending unless `ascending`), ties by key.
inline std::vector<std::size_t> frequency_order(const ConceptVocabulary& vocab, bool ascending = false) {
  std::vector<std::size_t> order(vocab.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = vocab.entries[a];
    const auto& eb = vocab.entries[b];
    if (ea.frequency != eb.frequency) return ascending ? ea.frequency < eb.frequency : ea.frequency > eb.frequency;
    return ea.key < eb.key;
  });
  return order;
}

/// Vocabulary indices by descending r(c), ties by key; concepts without a
/// relatedness value follow in vocabulary order.
inline std::vector<std::size_t> relatedness_order(const ConceptVocabulary& vocab, const RelatednessRanking& ranking) {
  std::map<std::string, double> r;
  for (std::size_t c = 0; c < ranking.concepts.size(); ++c) r.emplace(ranking.concepts[c], ranking.r_values[c]);
  std::vector<std::size_t> ranked;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < vocab.size(); ++i) (r.contains(vocab.entries[i].key) ? ranked : rest).push_back(i);
  std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
    const double ra = r.at(vocab.entries[a].key);
    const double rb = r.at(vocab.entries[b].key);
    if (ra != rb) return ra > rb;
    return vocab.entries[a].key < vocab.entries[b].key;
  });
  ranked.insert(ranked.end(), rest.begin(), rest.end());
  return ranked;
}

/// Keeps the given columns in ascending column order, so two orderings that
/// select the same set produce identical tables.
inline FeatureTable select_columns(const FeatureTable& table, std::vector<std::size_t> columns) {
  std::sort(columns.begin(), columns.end());
  Matrix out(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c)
    out.col(static_cast<Eigen::Index>(c)) = table.rows().col(static_cast<Eigen::Index>(columns[c]));
  return FeatureTable(table.ids(), std::move(out));
}

struct SelectionPoint {
  std::size_t k = 0;
  double accuracy = 0.0;
};

struct SelectionData {
  const FeatureTable* train_scores = nullptr;
  const LabelSet* train_labels = nullptr;
  const FeatureTable* test_scores = nullptr;
  const LabelSet* test_labels = nullptr;
};

/// Held-out accuracy of single-label target models trained (without PCA) on
/// the first k concepts of `ordering`, for each k. k = 0 reports chance, 1/L.
inline std::vector<SelectionPoint> selection_curve(const SelectionData& data, const std::vector<std::size_t>& ordering,
                                                   const std::vector<std::size_t>& ks, const SvmParams& svm,
                                                   std::uint64_t seed, int threads = 1) {
  const auto N = static_cast<std::size_t>(data.train_scores->dimension());
  require_dim("selection_curve: ordering length", static_cast<Eigen::Index>(N),
              static_cast<Eigen::Index>(ordering.size()));
  const auto classes = data.train_labels->classes();
  std::vector<std::string> test_ids;
  for (const auto& id : data.test_labels->ids) test_ids.push_back(id);
  std::vector<SelectionPoint> out;
  for (std::size_t k : ks) {
    if (k > N) throw Error("selection_curve: k = " + std::to_string(k) + " exceeds " + std::to_string(N) + " concepts");
    if (k == 0) {
      out.push_back({0, 1.0 / static_cast<double>(classes.size())});
      continue;
    }
    const std::vector<std::size_t> cols(ordering.begin(), ordering.begin() + static_cast<std::ptrdiff_t>(k));
    TargetOptions opt;
    opt.pca_n = 0;
    opt.svm = svm;
    opt.seed = seed;
    opt.threads = threads;
    const auto trained = train_target(select_columns(*data.train_scores, cols), *data.train_labels, opt);
    const auto test = select_columns(data.test_scores->subset(test_ids), cols);
    const Matrix H = predict_target(trained.model, test);
    const auto report = evaluate(H, test_ids, trained.model.class_labels, *data.test_labels, false);
    out.push_back({k, *report.accuracy});
  }
  return out;
}

}  // namespace vcb
