#include "lpf/bench/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace lpf::bench {

RelativeErrors relative_abs_error(const Matrix& est, const Matrix& ref, double eps) {
  require(est.rows() == ref.rows() && est.cols() == ref.cols(), "relative_abs_error: shape mismatch");
  require(eps > 0.0, "relative_abs_error: eps must be positive");
  RelativeErrors out;
  out.values.resize(est.rows(), est.cols());
  for (Eigen::Index c = 0; c < est.cols(); ++c) {
    for (Eigen::Index r = 0; r < est.rows(); ++r) {
      const double a = std::abs(ref(r, c));
      if (a < eps) ++out.floored;
      out.values(r, c) = std::abs(est(r, c) - ref(r, c)) / std::max(a, eps);
    }
  }
  return out;
}

double relative_l2_error(const Matrix& est, const Matrix& ref) {
  require(est.rows() == ref.rows() && est.cols() == ref.cols(), "relative_l2_error: shape mismatch");
  const double denom = ref.norm();
  require(denom > 0.0, "relative_l2_error: reference has zero norm");
  return (est - ref).norm() / denom;
}

std::vector<double> uniform_edges(double lo, double hi, int bins) {
  require(bins >= 1 && hi > lo, "uniform_edges: need hi > lo and at least one bin");
  std::vector<double> e(static_cast<std::size_t>(bins) + 1);
  for (int k = 0; k <= bins; ++k) e[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / bins;
  return e;
}

std::vector<double> default_edges() { return uniform_edges(0.0, 2.0, 40); }

Histogram error_histogram(const Matrix& errors, const std::vector<double>& edges) {
  require(edges.size() >= 2, "error_histogram: need at least two edges");
  require(std::is_sorted(edges.begin(), edges.end()), "error_histogram: edges must be ascending");
  Histogram h;
  h.edges = edges;
  h.total = errors.size();
  const std::size_t bins = edges.size() - 1;
  std::vector<Eigen::Index> counts(bins, 0);
  Eigen::Index under = 0;
  Eigen::Index over = 0;
  for (Eigen::Index k = 0; k < errors.size(); ++k) {
    const double e = errors.data()[k];
    if (std::isnan(e) || e > edges.back()) {
      ++over;
    } else if (e < edges.front()) {
      ++under;
    } else {
      auto it = std::upper_bound(edges.begin(), edges.end(), e);
      auto bin = static_cast<std::size_t>(it - edges.begin()) - 1;
      if (bin >= bins) bin = bins - 1;
      ++counts[bin];
    }
  }
  const double total = static_cast<double>(std::max<Eigen::Index>(h.total, 1));
  h.frequencies.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) h.frequencies[b] = static_cast<double>(counts[b]) / total;
  h.underflow = static_cast<double>(under) / total;
  h.overflow = static_cast<double>(over) / total;
  return h;
}

double fraction_below(const Matrix& errors, double threshold) {
  if (errors.size() == 0) return 0.0;
  return static_cast<double>((errors.array() < threshold).count()) / static_cast<double>(errors.size());
}

}  // namespace lpf::bench
