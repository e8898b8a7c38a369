#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "vcb/linalg.hpp"
#include "vcb/random.hpp"

namespace vcb {

struct KmeansResult {
  Matrix centroids;             // k x d
  std::vector<int> assignment;  // per point
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after every assignment step
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// Nearest centroid, ties to the lowest index.
inline int nearest_centroid(const Matrix& centroids, const Eigen::Ref<const Vector>& x,
                            double* dist_out = nullptr) {
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double dist = (centroids.row(c).transpose() - x).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<int>(c);
    }
  }
  if (dist_out) *dist_out = best_dist;
  return best;
}

inline Matrix kmeans_plus_plus(const Matrix& points, int k, Rng& rng) {
  const Eigen::Index m = points.rows();
  Matrix centroids(k, points.cols());
  std::vector<double> dist(m, std::numeric_limits<double>::infinity());
  std::vector<char> chosen(m, 0);
  auto take = [&](Eigen::Index idx, int slot) {
    centroids.row(slot) = points.row(idx);
    chosen[idx] = 1;
    for (Eigen::Index i = 0; i < m; ++i)
      dist[i] = std::min(dist[i], (points.row(i) - points.row(idx)).squaredNorm());
  };
  take(static_cast<Eigen::Index>(rng.index(m)), 0);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : dist) total += v;
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        acc += dist[i];
        if (dist[i] > 0.0 && acc > target) {
          pick = i;
          break;
        }
      }
      if (pick < 0)  // rounding at the tail end
        for (Eigen::Index i = m - 1; i >= 0; --i)
          if (dist[i] > 0.0) {
            pick = i;
            break;
          }
    } else {
      for (Eigen::Index i = 0; i < m; ++i)
        if (!chosen[i]) {
          pick = i;
          break;
        }
    }
    take(pick, c);
  }
  return centroids;
}

/// Hartigan single-point transfers: moves a point to another cluster while
/// that lowers the inertia, updating both means exactly. Never empties a
/// cluster. Returns whether any point moved.
inline bool hartigan_refine(const Matrix& points, std::vector<int>& assignment, int k) {
  const Eigen::Index m = points.rows();
  Matrix means = Matrix::Zero(k, points.cols());
  std::vector<Eigen::Index> counts(k, 0);
  for (Eigen::Index i = 0; i < m; ++i) {
    means.row(assignment[i]) += points.row(i);
    ++counts[assignment[i]];
  }
  for (int c = 0; c < k; ++c)
    if (counts[c] > 0) means.row(c) /= static_cast<double>(counts[c]);
  bool moved_any = false;
  for (int pass = 0; pass < 100; ++pass) {
    bool moved = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      const int a = assignment[i];
      if (counts[a] < 2) continue;
      const double na = static_cast<double>(counts[a]);
      const double leave = na / (na - 1.0) * (points.row(i) - means.row(a)).squaredNorm();
      int best = a;
      double best_gain = 0.0;
      for (int b = 0; b < k; ++b) {
        if (b == a) continue;
        const double nb = static_cast<double>(counts[b]);
        const double join = nb / (nb + 1.0) * (points.row(i) - means.row(b)).squaredNorm();
        const double gain = leave - join;
        if (gain > best_gain * (1.0 + 1e-12) + 1e-12 * leave) {
          best_gain = gain;
          best = b;
        }
      }
      if (best == a) continue;
      const double nb = static_cast<double>(counts[best]);
      means.row(a) = (means.row(a) * na - points.row(i)) / (na - 1.0);
      means.row(best) = (means.row(best) * nb + points.row(i)) / (nb + 1.0);
      --counts[a];
      ++counts[best];
      assignment[i] = best;
      moved = moved_any = true;
    }
    if (!moved) break;
  }
  return moved_any;
}

}  // namespace detail

namespace detail {

inline KmeansResult kmeans_single(const Matrix& points, int k, std::uint64_t seed, int max_iter) {
  const Eigen::Index m = points.rows();
  Rng rng(seed);
  KmeansResult res;
  res.centroids = detail::kmeans_plus_plus(points, k, rng);
  res.assignment.assign(m, 0);
  std::vector<double> dist(m);

  auto assign = [&]() {
    bool changed = false;
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const int c = detail::nearest_centroid(res.centroids, points.row(i).transpose(), &dist[i]);
      if (c != res.assignment[i]) changed = true;
      res.assignment[i] = c;
      inertia += dist[i];
    }
    res.inertia = inertia;
    res.inertia_history.push_back(inertia);
    return changed;
  };

  assign();
  for (int it = 0; it < max_iter; ++it) {
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<Eigen::Index> counts(k, 0);
    for (Eigen::Index i = 0; i < m; ++i) {
      sums.row(res.assignment[i]) += points.row(i);
      ++counts[res.assignment[i]];
    }
    std::vector<char> taken(m, 0);
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        res.centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
        continue;
      }
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < m; ++i)
        if (!taken[i] && (far < 0 || dist[i] > dist[far])) far = i;
      taken[far] = 1;
      res.centroids.row(c) = points.row(far);
    }
    res.iterations = it + 1;
    if (!assign()) {
      res.converged = true;
      break;
    }
  }
  if (res.converged && detail::hartigan_refine(points, res.assignment, k)) {
    // transfers leave a partition whose means are again Lloyd-stable
    for (int c = 0; c < k; ++c) {
      Vector sum = Vector::Zero(points.cols());
      Eigen::Index count = 0;
      for (Eigen::Index i = 0; i < m; ++i)
        if (res.assignment[i] == c) {
          sum += points.row(i).transpose();
          ++count;
        }
      res.centroids.row(c) = (sum / static_cast<double>(count)).transpose();
    }
    assign();
  }
  return res;
}

}  // namespace detail

/// k-means++ seeding followed by Lloyd iterations until the assignment is
/// stable or `max_iter` updates have run, then Hartigan point transfers.
/// Empty clusters are re-seeded with the point farthest from its current
/// centroid. The best of `restarts` runs (seeds derived from `seed`) is
/// returned, ties to the earliest run.
inline KmeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iter = 300, int restarts = 10) {
  const Eigen::Index m = points.rows();
  if (k < 1) throw Error("kmeans: k must be at least 1");
  if (k > m) throw Error("kmeans: k = " + std::to_string(k) + " exceeds point count " + std::to_string(m));
  if (restarts < 1) throw Error("kmeans: restarts must be at least 1");
  KmeansResult best;
  for (int r = 0; r < restarts; ++r) {
    auto run = detail::kmeans_single(points, k, derive_seed(seed, static_cast<std::uint64_t>(r)), max_iter);
    if (r == 0 || run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

}  // namespace vcb
