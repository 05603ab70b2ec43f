#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dstofw/constraint.hpp"

namespace dstofw {

/// FW-gap max_{u in set} <grad, x_bar - u>, evaluated through the LMO.
template <typename D1, typename D2>
double fw_gap(const Eigen::MatrixBase<D1>& x_bar, const Eigen::MatrixBase<D2>& grad,
              const ConstraintSet& set) {
  const Vector<double> g = grad;
  const SparseVector<double> vertex = set.lmo(g);
  return g.dot(x_bar) - vertex.dot(g);
}

/// Closed form of the FW-gap over the l1 ball: <grad, x_bar> + R ||grad||_inf.
template <typename D1, typename D2>
typename D1::Scalar fw_gap_l1(const Eigen::MatrixBase<D1>& x_bar, const Eigen::MatrixBase<D2>& grad,
                              typename D1::Scalar radius) {
  if (grad.size() == 0) return 0;
  return grad.dot(x_bar) + radius * grad.template lpNorm<Eigen::Infinity>();
}

/// max_i ||x_i - x_bar|| over the columns of `iterates` (one column per agent).
template <typename Derived>
typename Derived::Scalar consensus_error(const Eigen::MatrixBase<Derived>& iterates) {
  using Scalar = typename Derived::Scalar;
  if (iterates.cols() <= 1) return Scalar(0);
  const Vector<Scalar> mean = iterates.rowwise().mean();
  return (iterates.colwise() - mean).colwise().norm().maxCoeff();
}

struct IterationRecord {
  std::int64_t k = 1;
  double gamma = 0.0;
  double loss = 0.0;
  double fw_gap = 0.0;
  double consensus_err = 0.0;
  std::int64_t ifo_cum = 0;
  std::int64_t lo_cum = 0;
  std::int64_t comm_rounds_cum = 0;
  std::int64_t eval_ifo_cum = 0;
};

struct RunLog {
  /// Echoed as "# key=value" lines ahead of the CSV header, in order.
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<IterationRecord> records;
  std::int64_t iterations = 0;
  /// max_k max(||d_bar - v_bar||_inf, ||d_bar - g_bar||_inf).
  double max_tracking_deviation = 0.0;
  Vector<double> final_average;

  void set(const std::string& key, std::string value);
};

inline constexpr const char* kCsvHeader =
    "k,gamma,loss,fw_gap,consensus_err,ifo_cum,lo_cum,comm_rounds_cum,eval_ifo_cum";

/// Minimum logged FW-gap over k in [floor(K/2)+1, K].
std::optional<double> min_fw_gap_second_half(const RunLog& log);

/// Preamble, header, one row per record (17 significant digits), summary footer.
void emit_csv(const RunLog& log, std::ostream& out);
void write_csv(const RunLog& log, const std::string& path);

}  // namespace dstofw
