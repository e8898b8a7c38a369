#pragma once

// L2-regularized L1-hinge linear SVM trained by dual coordinate descent.
//
//   min_w  1/2 ||w||^2 + C sum_i max(0, 1 - y_i w.x_i)
//   dual:  max_a  sum_i a_i - 1/2 ||sum_i a_i y_i x_i||^2,   0 <= a_i <= C
//
// With a bias, every example is augmented with a constant 1 coordinate whose
// weight is the bias (so the bias is regularized like any other weight).
// Each epoch visits the examples in a fresh seeded random order and updates
// one dual variable at a time in closed form; the run stops once the duality
// gap P(w) - D(a) drops to `tol` or `max_epochs` is exhausted.

#include <cstdint>
#include <span>
#include <vector>

#include "vcb/linalg.hpp"
#include "vcb/random.hpp"

namespace vcb {

struct SvmParams {
  double C = 1.0;
  double tol = 1e-4;
  int max_epochs = 1000;
  std::uint64_t seed = 0;
  bool fit_bias = true;
};

struct TrainMeta {
  int epochs_run = 0;
  double final_duality_gap = 0.0;
  bool converged = false;
};

struct LinearModel {
  Vector weights;
  double bias = 0.0;
  TrainMeta train_meta;

  Eigen::Index dim() const { return weights.size(); }
};

namespace detail {

inline void validate_problem(const Matrix& X, std::span<const int> y, const SvmParams& p) {
  if (X.rows() < 1) throw Error("train_linear_svm: need at least one example");
  require_dim("train_linear_svm: label count", X.rows(), static_cast<Eigen::Index>(y.size()));
  if (!(p.C > 0.0)) throw Error("train_linear_svm: C must be positive");
  if (!(p.tol > 0.0)) throw Error("train_linear_svm: tol must be positive");
  if (p.max_epochs < 1) throw Error("train_linear_svm: max_epochs must be at least 1");
  for (int label : y)
    if (label != 1 && label != -1) throw Error("train_linear_svm: labels must be -1 or +1");
}

}  // namespace detail

/// Primal objective 1/2 (||w||^2 + b^2 if fit_bias) + C * sum of hinge losses.
inline double svm_primal_objective(const LinearModel& model, const Matrix& X,
                                   std::span<const int> y, double C, bool fit_bias) {
  require_dim("svm_primal_objective", model.dim(), X.cols());
  double reg = model.weights.squaredNorm();
  if (fit_bias) reg += model.bias * model.bias;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double margin = y[i] * (X.row(i).dot(model.weights) + model.bias);
    if (margin < 1.0) loss += 1.0 - margin;
  }
  return 0.5 * reg + C * loss;
}

inline LinearModel train_linear_svm(const Matrix& X, std::span<const int> y,
                                    const SvmParams& params = {}) {
  detail::validate_problem(X, y, params);
  const Eigen::Index m = X.rows();
  const Eigen::Index d = X.cols();
  const double C = params.C;
  const double bias_feature = params.fit_bias ? 1.0 : 0.0;

  std::vector<double> alpha(m, 0.0);
  std::vector<double> diag(m);
  for (Eigen::Index i = 0; i < m; ++i)
    diag[i] = X.row(i).squaredNorm() + bias_feature * bias_feature;

  Vector w = Vector::Zero(d);
  double b = 0.0;

  std::vector<Eigen::Index> order(m);
  for (Eigen::Index i = 0; i < m; ++i) order[i] = i;
  Rng rng(params.seed);

  auto duality_gap = [&]() {
    double loss = 0.0;
    double alpha_sum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double margin = y[i] * (X.row(i).dot(w) + b * bias_feature);
      if (margin < 1.0) loss += 1.0 - margin;
      alpha_sum += alpha[i];
    }
    const double wsq = w.squaredNorm() + b * b;
    const double primal = 0.5 * wsq + C * loss;
    const double dual = alpha_sum - 0.5 * wsq;
    return primal - dual;
  };

  TrainMeta meta;
  for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (Eigen::Index i : order) {
      const double yi = y[i];
      const double grad = yi * (X.row(i).dot(w) + b * bias_feature) - 1.0;
      const double a = alpha[i];
      double projected = grad;
      if (a <= 0.0)
        projected = std::min(grad, 0.0);
      else if (a >= C)
        projected = std::max(grad, 0.0);
      if (projected == 0.0) continue;

      double next;
      if (diag[i] > 0.0)
        next = std::clamp(a - grad / diag[i], 0.0, C);
      else
        next = C;  // zero example: the dual is linear in a_i with slope 1
      const double delta = (next - a) * yi;
      if (delta == 0.0) continue;
      alpha[i] = next;
      w.noalias() += delta * X.row(i).transpose();
      b += delta * bias_feature;
    }
    meta.epochs_run = epoch + 1;
    meta.final_duality_gap = duality_gap();
    if (meta.final_duality_gap <= params.tol) {
      meta.converged = true;
      break;
    }
  }

  LinearModel model;
  model.weights = std::move(w);
  model.bias = params.fit_bias ? b : 0.0;
  model.train_meta = meta;
  return model;
}

/// w.x_i + b for every row of X.
inline Vector predict_scores(const LinearModel& model, const Matrix& X) {
  require_dim("predict_scores", model.dim(), X.cols());
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = ordered_dot(X.row(i), model.weights) + model.bias;
  return out;
}

}  // namespace vcb
