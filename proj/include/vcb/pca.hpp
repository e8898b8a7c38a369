#pragma once

// PCA through a one-sided Jacobi (Hestenes) SVD of the mean-centered data.
// Working directly on the data, rather than on the covariance matrix, keeps
// the small singular values accurate to working precision.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "vcb/linalg.hpp"

namespace vcb {

struct PcaTransform {
  Vector mean;        // d
  Matrix components;  // n x d, orthonormal rows
  Vector explained;   // n, squared singular values / (m - 1), non-increasing

  Eigen::Index input_dim() const { return mean.size(); }
  Eigen::Index output_dim() const { return components.rows(); }

  /// Identity rotation around `mean`; used when no reduction is wanted.
  static PcaTransform identity(const Vector& mean) {
    PcaTransform t;
    t.mean = mean;
    t.components = Matrix::Identity(mean.size(), mean.size());
    t.explained = Vector::Zero(mean.size());
    return t;
  }
};

namespace detail {

struct JacobiSvd {
  Vector singular;  // descending
  Matrix right;     // columns are right singular vectors (cols x rank-sorted)
};

// One-sided Jacobi on the columns of A (rows >= 1). Returns singular values
// sorted descending and the matching right singular vectors as columns.
inline JacobiSvd one_sided_jacobi(Matrix A) {
  const Eigen::Index n = A.cols();
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd cols = A;  // column-major copy for cheap column access
  constexpr double eps = 1e-15;
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = cols.col(p).squaredNorm();
        const double beta = cols.col(q).squaredNorm();
        const double gamma = cols.col(p).dot(cols.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index r = 0; r < cols.rows(); ++r) {
          const double xp = cols(r, p);
          const double xq = cols(r, q);
          cols(r, p) = c * xp - s * xq;
          cols(r, q) = s * xp + c * xq;
        }
        for (Eigen::Index r = 0; r < n; ++r) {
          const double vp = V(r, p);
          const double vq = V(r, q);
          V(r, p) = c * vp - s * vq;
          V(r, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  Vector norms(n);
  for (Eigen::Index j = 0; j < n; ++j) norms[j] = cols.col(j).norm();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return norms[a] > norms[b]; });
  JacobiSvd out;
  out.singular.resize(n);
  out.right.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.singular[k] = norms[order[k]];
    out.right.col(k) = V.col(order[k]);
  }
  return out;
}

// Completes `basis` (k orthonormal rows in R^d, k <= d) with further
// orthonormal rows until it has `want` rows, using Gram-Schmidt against the
// standard basis.
inline Matrix complete_orthonormal_rows(const Matrix& basis, Eigen::Index want) {
  const Eigen::Index d = basis.cols();
  Matrix out(want, d);
  Eigen::Index have = std::min<Eigen::Index>(basis.rows(), want);
  out.topRows(have) = basis.topRows(have);
  for (Eigen::Index e = 0; e < d && have < want; ++e) {
    Vector v = Vector::Unit(d, e);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index r = 0; r < have; ++r) v -= out.row(r).dot(v) * out.row(r).transpose();
    const double norm = v.norm();
    if (norm > 1e-6) out.row(have++) = v.transpose() / norm;
  }
  return out;
}

}  // namespace detail

/// Fits a PCA of the rows of X keeping min(n, d, m - 1) components.
inline PcaTransform fit_pca(const Matrix& X, Eigen::Index n) {
  const Eigen::Index m = X.rows();
  const Eigen::Index d = X.cols();
  if (m < 2) throw Error("fit_pca: need at least two rows");
  if (n < 1) throw Error("fit_pca: target dimension must be at least 1");
  const Eigen::Index keep = std::min({n, d, m - 1});

  PcaTransform t;
  t.mean = X.colwise().mean().transpose();
  Matrix centered = X.rowwise() - t.mean.transpose();

  Matrix rows;  // right singular vectors as rows, descending
  Vector singular;
  if (d <= m) {
    auto svd = detail::one_sided_jacobi(centered);
    rows = svd.right.transpose();
    singular = svd.singular;
  } else {
    // Jacobi on the m columns of A^T; its left vectors are A's right vectors.
    Matrix At = centered.transpose();
    auto svd = detail::one_sided_jacobi(At);
    Eigen::Index rank = 0;
    const double cutoff = svd.singular.size() > 0 ? svd.singular[0] * 1e-12 : 0.0;
    while (rank < svd.singular.size() && svd.singular[rank] > cutoff && svd.singular[rank] > 0.0)
      ++rank;
    Matrix left(rank, d);
    for (Eigen::Index k = 0; k < rank; ++k) {
      Vector u = At * svd.right.col(k);
      left.row(k) = (u / u.norm()).transpose();
    }
    rows = detail::complete_orthonormal_rows(left, std::min(d, m));
    singular = Vector::Zero(rows.rows());
    singular.head(rank) = svd.singular.head(rank);
  }

  t.components = rows.topRows(keep);
  t.explained = singular.head(keep).array().square() / static_cast<double>(m - 1);
  return t;
}

/// components * (x - mean)
inline Vector pca_project(const PcaTransform& t, const Vector& x) {
  require_dim("pca_project", t.input_dim(), x.size());
  return t.components * (x - t.mean);
}

/// Row-wise projection of a matrix.
inline Matrix pca_project_rows(const PcaTransform& t, const Matrix& X) {
  require_dim("pca_project", t.input_dim(), X.cols());
  Matrix centered = X.rowwise() - t.mean.transpose();
  return centered * t.components.transpose();
}

}  // namespace vcb
