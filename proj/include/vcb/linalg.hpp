#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace vcb {

/// Row-major so that one example is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Base error for every contract violation reported by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, Eigen::Index expected, Eigen::Index got)
      : Error(what + ": expected dimension " + std::to_string(expected) + ", got " +
              std::to_string(got)),
        expected_(expected),
        got_(got) {}

  Eigen::Index expected() const { return expected_; }
  Eigen::Index got() const { return got_; }

 private:
  Eigen::Index expected_;
  Eigen::Index got_;
};

inline void require_dim(const char* what, Eigen::Index expected, Eigen::Index got) {
  if (expected != got) throw DimensionError(what, expected, got);
}

/// Left-to-right scalar dot product. Used wherever two code paths must agree
/// bit for bit, since vectorized reductions may regroup terms depending on
/// operand alignment.
template <class A, class B>
double ordered_dot(const A& a, const B& b) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) sum += a[k] * b[k];
  return sum;
}

/// x / ||x||_2; the zero vector passes through unchanged.
inline Vector l2_normalize(const Vector& x) {
  const double norm = std::sqrt(ordered_dot(x, x));
  if (norm > 0.0) return x / norm;
  return x;
}

/// Row-wise l2 normalization.
inline Matrix l2_normalize_rows(const Matrix& x) {
  Matrix out = x;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = std::sqrt(ordered_dot(out.row(i), out.row(i)));
    if (norm > 0.0) out.row(i) /= norm;
  }
  return out;
}

}  // namespace vcb
