#pragma once

// Target classifiers over concept scores.
//
// An image with features f is described by its concept scores
//   S = V normalize(f) + b_V
// and class j is scored by
//   H_j = omega_j . P (normalize(S) - mu) + beta_j
// with P the PCA components fitted on the training scores. Unfolding the
// projection gives effective weights omega_j^T P over the N concepts, which is
// what keyword attribution reads.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "vcb/concept_bank.hpp"
#include "vcb/feature_table.hpp"
#include "vcb/parallel.hpp"
#include "vcb/pca.hpp"
#include "vcb/svm.hpp"

namespace vcb {

enum class TargetMode { Concept, Direct };

inline std::string to_string(TargetMode mode) { return mode == TargetMode::Concept ? "concept" : "direct"; }

inline TargetMode parse_target_mode(std::string_view s) {
  if (s == "concept") return TargetMode::Concept;
  if (s == "direct") return TargetMode::Direct;
  throw Error("unknown target mode '" + std::string(s) + "'");
}

/// S_I = V normalize(f_I) + biases for every row, in input order.
inline FeatureTable score_concepts(const ConceptBank& bank, const FeatureTable& features) {
  require_dim("score_concepts: feature dimension", bank.feature_dim(), features.dimension());
  const auto n = static_cast<Eigen::Index>(bank.size());
  Matrix scores(static_cast<Eigen::Index>(features.size()), n);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const Vector f = l2_normalize(features.rows().row(i).transpose());
    for (Eigen::Index j = 0; j < n; ++j) scores(i, j) = ordered_dot(f, bank.weights.row(j)) + bank.biases[j];
  }
  return FeatureTable(features.ids(), std::move(scores));
}

struct TargetModel {
  TargetMode mode = TargetMode::Concept;
  bool multi_label = false;
  std::vector<std::string> class_labels;
  PcaTransform pca;
  Matrix omegas;  // L x n
  Vector biases;  // L

  std::size_t num_classes() const { return class_labels.size(); }
  Eigen::Index input_dim() const { return pca.input_dim(); }

  /// omega_j^T P: class weights over the input coordinates (L x N).
  Matrix effective_weights() const { return omegas * pca.components; }

  /// beta_j - (omega_j^T P) mu
  Vector effective_biases() const { return biases - effective_weights() * pca.mean; }
};

struct TargetOptions {
  TargetMode mode = TargetMode::Concept;
  Eigen::Index pca_n = 900;  // 0 keeps the full input space
  SvmParams svm;
  std::uint64_t seed = 0;
  int threads = 1;
  bool multi_label = false;
};

struct TargetTraining {
  TargetModel model;
  std::vector<std::string> warnings;
};

/// One-vs-all SVMs on PCA-reduced, l2-normalized rows. Every image lacking
/// class j is a negative for class j.
inline TargetTraining train_target(const FeatureTable& scores, const LabelSet& labels, const TargetOptions& opt) {
  std::vector<std::string> ids;
  std::vector<std::string> missing;
  for (const auto& id : labels.ids) {
    if (scores.find(id))
      ids.push_back(id);
    else
      missing.push_back(id);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t k = 0; k < std::min<std::size_t>(missing.size(), 5); ++k) list += (k ? ", " : "") + missing[k];
    throw Error("train_target: " + std::to_string(missing.size()) + " labeled images have no score row (" + list +
                (missing.size() > 5 ? ", ..." : "") + ")");
  }
  if (ids.empty()) throw Error("train_target: empty training set");
  const auto classes = labels.classes();
  if (!opt.multi_label && classes.size() < 2)
    throw Error("train_target: single-label training needs at least two classes");
  if (classes.empty()) throw Error("train_target: no labels");
  if (!opt.multi_label)
    for (const auto& id : ids)
      if (labels.labels.at(id).size() != 1)
        throw Error("train_target: image '" + id + "' has " + std::to_string(labels.labels.at(id).size()) +
                    " labels in single-label mode");

  TargetTraining out;
  const Matrix X = l2_normalize_rows(scores.gather(ids));
  TargetModel& model = out.model;
  model.mode = opt.mode;
  model.multi_label = opt.multi_label;
  model.class_labels = classes;
  if (opt.pca_n > 0) {
    if (X.rows() < 2) throw Error("train_target: PCA needs at least two training images");
    model.pca = fit_pca(X, opt.pca_n);
    if (model.pca.output_dim() < opt.pca_n)
      out.warnings.push_back("PCA dimension clipped from " + std::to_string(opt.pca_n) + " to " +
                             std::to_string(model.pca.output_dim()) + " (available rank)");
  } else {
    model.pca = PcaTransform::identity(X.colwise().mean().transpose());
  }
  const Matrix Z = pca_project_rows(model.pca, X);

  const auto L = classes.size();
  std::vector<LinearModel> fitted(L);
  parallel_for(L, opt.threads, [&](std::size_t j) {
    std::vector<int> y(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto& ls = labels.labels.at(ids[i]);
      y[i] = std::binary_search(ls.begin(), ls.end(), classes[j]) ? 1 : -1;
    }
    SvmParams p = opt.svm;
    p.seed = derive_seed(opt.seed, j);
    fitted[j] = train_linear_svm(Z, y, p);
  });
  model.omegas.resize(static_cast<Eigen::Index>(L), Z.cols());
  model.biases.resize(static_cast<Eigen::Index>(L));
  for (std::size_t j = 0; j < L; ++j) {
    model.omegas.row(static_cast<Eigen::Index>(j)) = fitted[j].weights.transpose();
    model.biases[static_cast<Eigen::Index>(j)] = fitted[j].bias;
  }
  return out;
}

/// H_j for every row of `scores` (rows x L), through the PCA projection.
inline Matrix predict_target(const TargetModel& model, const Matrix& scores) {
  require_dim("predict_target: score dimension", model.input_dim(), scores.cols());
  const Matrix Z = pca_project_rows(model.pca, l2_normalize_rows(scores));
  Matrix H = Z * model.omegas.transpose();
  H.rowwise() += model.biases.transpose();
  return H;
}

inline Matrix predict_target(const TargetModel& model, const FeatureTable& scores) {
  return predict_target(model, scores.rows());
}

/// Same scores as predict_target, evaluated with the unfolded effective weights.
inline Matrix predict_target_unfolded(const TargetModel& model, const Matrix& scores) {
  require_dim("predict_target: score dimension", model.input_dim(), scores.cols());
  Matrix H = l2_normalize_rows(scores) * model.effective_weights().transpose();
  H.rowwise() += model.effective_biases().transpose();
  return H;
}

/// Target classes composed with the concept bank: each class becomes a
/// direction in feature space (omega_eff^T V), so H_j can be evaluated from
/// normalized features without materializing S_I. The l2 normalization of
/// S_I still needs ||S_I||, which is taken from the bank.
struct ComposedTarget {
  Matrix feature_weights;  // L x d: omega_eff V
  Vector score_offsets;    // L: omega_eff . b_V
  Vector biases;           // L: effective biases
};

inline ComposedTarget compose_with_bank(const TargetModel& model, const ConceptBank& bank) {
  require_dim("compose_with_bank: concept count", model.input_dim(), static_cast<Eigen::Index>(bank.size()));
  const Matrix eff = model.effective_weights();
  return {eff * bank.weights, eff * bank.biases, model.effective_biases()};
}

inline Matrix predict_composed(const ComposedTarget& composed, const ConceptBank& bank, const Matrix& features) {
  require_dim("predict_composed: feature dimension", bank.feature_dim(), features.cols());
  const auto L = composed.feature_weights.rows();
  Matrix H(features.rows(), L);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Vector f = l2_normalize(features.row(i).transpose());
    const double norm = (bank.weights * f + bank.biases).norm();
    const double scale = norm > 0.0 ? 1.0 / norm : 1.0;
    for (Eigen::Index j = 0; j < L; ++j)
      H(i, j) = (composed.feature_weights.row(j).dot(f) + composed.score_offsets[j]) * scale + composed.biases[j];
  }
  return H;
}

/// Index of the largest entry, ties to the lowest index.
inline Eigen::Index argmax_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;
  return best;
}

/// Column-wise z-score over the rows; constant columns become zero.
inline Matrix standardize_columns(const Matrix& scores) {
  Matrix out = scores;
  const double m = static_cast<double>(scores.rows());
  for (Eigen::Index j = 0; j < scores.cols(); ++j) {
    const double mean = scores.col(j).sum() / m;
    const double var = (scores.col(j).array() - mean).square().sum() / m;
    const double sd = std::sqrt(var);
    for (Eigen::Index i = 0; i < scores.rows(); ++i) out(i, j) = sd > 0.0 ? (scores(i, j) - mean) / sd : 0.0;
  }
  return out;
}

/// alpha * concept + (1 - alpha) * direct
inline Vector fuse_scores(const Vector& concept_scores, const Vector& direct_scores, double alpha) {
  require_dim("fuse_scores", concept_scores.size(), direct_scores.size());
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("fuse_scores: alpha must lie in [0, 1]");
  return alpha * concept_scores + (1.0 - alpha) * direct_scores;
}

/// Row-wise fusion of standardized score matrices.
inline Matrix fuse_score_matrices(const Matrix& concept_scores, const Matrix& direct_scores, double alpha) {
  require_dim("fuse_scores: rows", concept_scores.rows(), direct_scores.rows());
  require_dim("fuse_scores: classes", concept_scores.cols(), direct_scores.cols());
  const Matrix c = standardize_columns(concept_scores);
  const Matrix d = standardize_columns(direct_scores);
  Matrix out(c.rows(), c.cols());
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    out.row(i) = fuse_scores(c.row(i).transpose(), d.row(i).transpose(), alpha).transpose();
  return out;
}

// --- TargetModel file (JSON) ------------------------------------------------

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.row(i).begin(), m.row(i).end());
    out.push_back(row);
  }
  return out;
}

inline Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index cols) {
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto row = j[i].get<std::vector<double>>();
    require_dim("model file: matrix row", cols, static_cast<Eigen::Index>(row.size()));
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), c) = row[c];
  }
  return m;
}

inline nlohmann::json vector_to_json(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

inline Vector vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline std::string encode_target_model(const TargetModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "vcb-target";
  j["version"] = 1;
  j["mode"] = to_string(model.mode);
  j["multi_label"] = model.multi_label;
  j["input_dim"] = model.input_dim();
  j["classes"] = model.class_labels;
  j["pca"] = {{"mean", detail::vector_to_json(model.pca.mean)},
              {"components", detail::matrix_to_json(model.pca.components)},
              {"explained", detail::vector_to_json(model.pca.explained)}};
  j["omegas"] = detail::matrix_to_json(model.omegas);
  j["biases"] = detail::vector_to_json(model.biases);
  return j.dump(1) + "\n";
}

inline TargetModel decode_target_model(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "vcb-target") throw Error("model file: not a vcb target model");
    if (j.at("version") != 1) throw Error("model file: unsupported version");
    TargetModel m;
    m.mode = parse_target_mode(j.at("mode").get<std::string>());
    m.multi_label = j.at("multi_label").get<bool>();
    m.class_labels = j.at("classes").get<std::vector<std::string>>();
    const auto input_dim = j.at("input_dim").get<Eigen::Index>();
    m.pca.mean = detail::vector_from_json(j.at("pca").at("mean"));
    require_dim("model file: PCA mean", input_dim, m.pca.mean.size());
    m.pca.components = detail::matrix_from_json(j.at("pca").at("components"), input_dim);
    m.pca.explained = detail::vector_from_json(j.at("pca").at("explained"));
    m.omegas = detail::matrix_from_json(j.at("omegas"), m.pca.components.rows());
    m.biases = detail::vector_from_json(j.at("biases"));
    require_dim("model file: class count", static_cast<Eigen::Index>(m.class_labels.size()), m.omegas.rows());
    require_dim("model file: bias count", m.omegas.rows(), m.biases.size());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model file: ") + e.what());
  }
}

}  // namespace vcb
