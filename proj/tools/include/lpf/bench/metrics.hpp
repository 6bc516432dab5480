#pragma once

#include "lpf/common.hpp"

#include <vector>

namespace lpf::bench {

/// Floor on |ref| in the relative absolute error.
inline constexpr double kRelativeErrorFloor = 1e-8;

struct RelativeErrors {
  Matrix values;
  /// Entries where |ref| < eps and the floor was used as denominator.
  Eigen::Index floored = 0;
};

/// |est - ref| / max(|ref|, eps), elementwise.
RelativeErrors relative_abs_error(const Matrix& est, const Matrix& ref, double eps = kRelativeErrorFloor);

/// ||est - ref||_F / ||ref||_F over the whole space-time array.
double relative_l2_error(const Matrix& est, const Matrix& ref);

struct Histogram {
  std::vector<double> edges;        ///< bins.size() + 1 ascending edges
  std::vector<double> frequencies;  ///< count / total, per bin
  double underflow = 0.0;           ///< fraction below edges.front()
  double overflow = 0.0;            ///< fraction above edges.back(), including NaN
  Eigen::Index total = 0;           ///< number of entries, d (T+1) for an error matrix
};

/// `bins` uniform bins on [lo, hi).
std::vector<double> uniform_edges(double lo, double hi, int bins);
/// 40 uniform bins on [0, 2].
std::vector<double> default_edges();

/// Bins are [e_k, e_{k+1}); the last bin is closed on the right. NaN entries
/// are counted in the overflow bucket.
Histogram error_histogram(const Matrix& errors, const std::vector<double>& edges = default_edges());

/// Fraction of entries strictly below `threshold`.
double fraction_below(const Matrix& errors, double threshold);

}  // namespace lpf::bench
