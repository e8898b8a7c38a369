#pragma once

// Independent reference computations used by the tests. None of these share
// code paths with the library algorithms they check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "vcb/vcb.hpp"

namespace oracle {

using vcb::Matrix;
using vcb::Vector;

/// SVM reference: accelerated projected gradient (FISTA with adaptive
/// restart) on the box-constrained dual
///   min 1/2 a^T Q a - 1^T a,  0 <= a_i <= C,  Q_ij = y_i y_j (x_i.x_j + [bias]).
/// Returns the primal objective at w(a), which upper-bounds the optimum and
/// converges to it.
struct SvmReference {
  Vector weights;
  double bias = 0.0;
  double primal = 0.0;
};

inline SvmReference svm_dual_reference(const Matrix& X, const std::vector<int>& y, double C, bool fit_bias,
                                       int iterations = 200000) {
  const Eigen::Index m = X.rows();
  Matrix Z(m, X.cols() + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    Z.row(i).head(X.cols()) = y[i] * X.row(i);
    Z(i, X.cols()) = fit_bias ? y[i] : 0.0;
  }
  const Matrix Q = Z * Z.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q, Eigen::EigenvaluesOnly);
  const double lipschitz = std::max(es.eigenvalues().maxCoeff(), 1e-12);
  const double step = 1.0 / lipschitz;
  auto project = [&](Vector a) { return a.cwiseMax(0.0).cwiseMin(C); };
  auto dual = [&](const Vector& a) { return 0.5 * a.dot(Q * a) - a.sum(); };

  Vector a = Vector::Zero(m);
  Vector v = a;
  double t = 1.0;
  double f_prev = dual(a);
  for (int it = 0; it < iterations; ++it) {
    const Vector grad = Q * v - Vector::Ones(m);
    Vector next = project(v - step * grad);
    const double f_next = dual(next);
    if (f_next > f_prev) {  // adaptive restart
      t = 1.0;
      v = a;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    v = next + ((t - 1.0) / t_next) * (next - a);
    a = next;
    t = t_next;
    f_prev = f_next;
    if (it % 64 == 0) {
      const Vector g = Q * a - Vector::Ones(m);
      if ((project(a - g) - a).lpNorm<Eigen::Infinity>() <= 1e-13) break;
    }
  }
  const Vector wb = Z.transpose() * a;
  SvmReference ref;
  ref.weights = wb.head(X.cols());
  ref.bias = fit_bias ? wb[X.cols()] : 0.0;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) loss += std::max(0.0, 1.0 - y[i] * (X.row(i).dot(ref.weights) + ref.bias));
  ref.primal = 0.5 * (ref.weights.squaredNorm() + ref.bias * ref.bias) + C * loss;
  return ref;
}

/// Covariance eigendecomposition, eigenvalues descending, eigenvectors as rows.
struct CovarianceEigen {
  Vector values;
  Matrix vectors;
};

inline CovarianceEigen covariance_eigen(const Matrix& X) {
  const Vector mean = X.colwise().mean().transpose();
  Matrix centered = X;
  centered.rowwise() -= mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(X.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::Index d = cov.rows();
  CovarianceEigen out;
  out.values.resize(d);
  out.vectors.resize(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    out.values[k] = es.eigenvalues()[d - 1 - k];
    out.vectors.row(k) = es.eigenvectors().col(d - 1 - k).transpose();
  }
  return out;
}

/// Largest principal angle between the row spaces of A and B (orthonormal
/// rows), computed from its sine, which is well conditioned near zero.
inline double max_principal_angle(const Matrix& A, const Matrix& B) {
  const Matrix residual = A - (A * B.transpose()) * B;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  const double s = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  return std::asin(std::min(1.0, s));
}

/// Minimum k-means inertia over all partitions into two nonempty groups.
inline double best_two_partition_inertia(const Matrix& points) {
  const Eigen::Index m = points.rows();
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask + 1 < (1u << m); ++mask) {
    double total = 0.0;
    for (int side = 0; side < 2; ++side) {
      Vector mean = Vector::Zero(points.cols());
      int count = 0;
      for (Eigen::Index i = 0; i < m; ++i)
        if (((mask >> i) & 1u) == static_cast<unsigned>(side)) {
          mean += points.row(i).transpose();
          ++count;
        }
      mean /= count;
      for (Eigen::Index i = 0; i < m; ++i)
        if (((mask >> i) & 1u) == static_cast<unsigned>(side)) total += (points.row(i).transpose() - mean).squaredNorm();
    }
    best = std::min(best, total);
  }
  return best;
}

/// AP from the definition without sorting: an item's rank is one plus the
/// number of items ahead of it (higher score, or equal score and smaller id).
/// Precisions are accumulated in rank order.
inline std::optional<double> brute_force_ap(const std::vector<double>& scores, const std::vector<char>& positive,
                                            const std::vector<std::string>& ids) {
  const std::size_t n = scores.size();
  std::vector<std::pair<std::size_t, std::size_t>> rank_hits;  // (rank, positives at or above)
  for (std::size_t i = 0; i < n; ++i) {
    if (!positive[i]) continue;
    std::size_t rank = 1;
    std::size_t hits = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const bool ahead = scores[j] > scores[i] || (scores[j] == scores[i] && ids[j] < ids[i]);
      if (ahead) {
        ++rank;
        if (positive[j]) ++hits;
      }
    }
    rank_hits.emplace_back(rank, hits);
  }
  if (rank_hits.empty()) return std::nullopt;
  std::sort(rank_hits.begin(), rank_hits.end());
  double sum = 0.0;
  for (const auto& [rank, hits] : rank_hits) sum += static_cast<double>(hits) / static_cast<double>(rank);
  return sum / static_cast<double>(rank_hits.size());
}

/// Eq. 6-7 by direct set construction.
inline std::pair<std::set<int>, std::set<int>> brute_force_pools(int c, const std::vector<std::vector<int>>& image_sets,
                                                                 const std::vector<int>& cluster_of) {
  std::set<int> pos;
  std::set<int> neg;
  std::set<int> cluster_members;
  for (std::size_t k = 0; k < cluster_of.size(); ++k)
    if (cluster_of[k] == cluster_of[static_cast<std::size_t>(c)]) cluster_members.insert(static_cast<int>(k));
  for (std::size_t i = 0; i < image_sets.size(); ++i) {
    const std::set<int> s(image_sets[i].begin(), image_sets[i].end());
    if (s.count(c)) pos.insert(static_cast<int>(i));
    bool disjoint = true;
    for (int member : cluster_members)
      if (s.count(member)) disjoint = false;
    if (disjoint) neg.insert(static_cast<int>(i));
  }
  return {pos, neg};
}

inline Matrix random_matrix(vcb::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace oracle
