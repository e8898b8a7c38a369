#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vcb/feature_table.hpp"
#include "vcb/io.hpp"
#include "vcb/target.hpp"

namespace vcb {

/// Mean over positives of precision at the positive's rank. Items are ranked
/// by descending score, ties by ascending id. No positives -> nullopt.
inline std::optional<double> average_precision(std::span<const double> scores, std::span<const char> positive,
                                               std::span<const std::string> ids) {
  if (scores.size() != positive.size() || scores.size() != ids.size())
    throw Error("average_precision: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (!positive[order[rank]]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

struct EvaluationReport {
  bool multi_label = false;
  std::size_t images = 0;
  std::vector<std::string> classes;
  std::optional<double> accuracy;         // single-label only
  std::vector<std::optional<double>> per_class_ap;
  double map = 0.0;                       // mean over classes with positives
  std::vector<std::string> excluded_classes;  // no positives in the evaluation set
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> confusion;  // true x predicted
};

/// predictions: rows aligned with `ids`, columns with `classes`.
inline EvaluationReport evaluate(const Matrix& predictions, const std::vector<std::string>& ids,
                                 const std::vector<std::string>& classes, const LabelSet& truth, bool multi_label) {
  if (ids.empty()) throw Error("evaluate: empty evaluation set");
  require_dim("evaluate: prediction rows", static_cast<Eigen::Index>(ids.size()), predictions.rows());
  require_dim("evaluate: prediction columns", static_cast<Eigen::Index>(classes.size()), predictions.cols());
  const auto L = static_cast<Eigen::Index>(classes.size());
  std::map<std::string, Eigen::Index> class_index;
  for (Eigen::Index j = 0; j < L; ++j) class_index.emplace(classes[j], j);

  EvaluationReport r;
  r.multi_label = multi_label;
  r.images = ids.size();
  r.classes = classes;

  std::vector<std::vector<char>> relevant(classes.size(), std::vector<char>(ids.size(), 0));
  std::vector<Eigen::Index> truth_class(ids.size(), -1);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto it = truth.labels.find(ids[i]);
    if (it == truth.labels.end()) throw Error("evaluate: no ground truth for image '" + ids[i] + "'");
    if (!multi_label && it->second.size() != 1)
      throw Error("evaluate: image '" + ids[i] + "' needs exactly one label in single-label mode");
    for (const auto& label : it->second) {
      auto c = class_index.find(label);
      if (c == class_index.end()) throw Error("evaluate: label '" + label + "' is unknown to the model");
      relevant[c->second][i] = 1;
      truth_class[i] = c->second;
    }
  }

  if (!multi_label) {
    r.confusion.setZero(L, L);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto pred = argmax_row(predictions.row(static_cast<Eigen::Index>(i)));
      ++r.confusion(truth_class[i], pred);
      if (pred == truth_class[i]) ++correct;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(ids.size());
  }

  double sum = 0.0;
  std::size_t counted = 0;
  std::vector<double> column(ids.size());
  for (Eigen::Index j = 0; j < L; ++j) {
    for (std::size_t i = 0; i < ids.size(); ++i) column[i] = predictions(static_cast<Eigen::Index>(i), j);
    auto ap = average_precision(column, relevant[j], ids);
    r.per_class_ap.push_back(ap);
    if (ap) {
      sum += *ap;
      ++counted;
    } else {
      r.excluded_classes.push_back(classes[j]);
    }
  }
  r.map = counted ? sum / static_cast<double>(counted) : std::numeric_limits<double>::quiet_NaN();
  return r;
}

inline std::string encode_report(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["mode"] = r.multi_label ? "multi" : "single";
  j["images"] = r.images;
  j["classes"] = r.classes;
  j["accuracy"] = r.accuracy ? nlohmann::ordered_json(*r.accuracy) : nlohmann::ordered_json(nullptr);
  j["map"] = std::isnan(r.map) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.map);
  auto ap = nlohmann::ordered_json::array();
  for (const auto& v : r.per_class_ap) ap.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr));
  j["per_class_ap"] = ap;
  j["excluded_classes"] = r.excluded_classes;
  auto conf = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    std::vector<long long> row(r.confusion.row(i).begin(), r.confusion.row(i).end());
    conf.push_back(row);
  }
  j["confusion"] = conf;
  return j.dump(1) + "\n";
}

}  // namespace vcb
