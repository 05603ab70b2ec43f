#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "dstofw/constraint.hpp"

namespace dstofw {

enum class Objective { convex, nonconvex };

std::string_view to_string(Objective objective);
Objective parse_objective(std::string_view text);

// ---------------------------------------------------------------------------
// Component losses in terms of the margin z = l <a, x>. Both objectives have
// gradient coefficient(z) * l * a, so only the scalar parts live here.

/// Logistic function evaluated without overflow for any finite z.
template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

/// ln(1 + e^{-z}) without overflow.
template <typename Scalar>
Scalar log1p_exp_neg(Scalar z) {
  if (z >= Scalar(0)) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

template <typename Scalar>
Scalar component_loss(Objective objective, Scalar margin) {
  return objective == Objective::convex ? log1p_exp_neg(margin) : sigmoid(-margin);
}

/// d loss / d margin. The full gradient is this value times l * a.
template <typename Scalar>
Scalar margin_derivative(Objective objective, Scalar margin) {
  if (objective == Objective::convex) return -sigmoid(-margin);
  return -sigmoid(margin) * sigmoid(-margin);
}

// ---------------------------------------------------------------------------

struct Sample {
  SparseVector<double> features;
  double label = 1.0;
};

/// Maps raw file labels to {-1, +1}. The default passes -1/+1 through and
/// sends 2 to -1, which covers a9a, w8a and covtype.binary.
struct LabelMap {
  std::map<double, double> table{{-1.0, -1.0}, {1.0, 1.0}, {2.0, -1.0}};

  /// "raw:mapped,raw:mapped", e.g. "0:-1,1:1". Replaces the default table.
  static LabelMap parse(std::string_view text);
  std::optional<double> map(double raw) const;
};

struct ParsedData {
  std::vector<Sample> samples;
  Eigen::Index dim = 0;
};

/// LIBSVM / SVMlight text: "<label> <idx>:<val> ..." with 1-based ascending
/// indices. Throws ParseError carrying the line number.
ParsedData parse_libsvm(std::istream& in, const LabelMap& labels = {},
                        std::optional<Eigen::Index> dim_override = std::nullopt);
ParsedData load_libsvm(const std::string& path, const LabelMap& labels = {},
                       std::optional<Eigen::Index> dim_override = std::nullopt);

/// Gaussian features (or sparse binary ones) with labels from a planted
/// separator, each flipped with probability `noise`.
struct SyntheticSpec {
  Eigen::Index samples = 2560;
  Eigen::Index dim = 20;
  std::uint64_t seed = 1;
  double noise = 0.1;
  double density = 1.0;  // < 1 switches to binary features present w.p. density
};
ParsedData make_synthetic(const SyntheticSpec& spec);

/// Divides each feature by its max absolute value over the data set.
void scale_max_abs(std::vector<Sample>& samples, Eigen::Index dim);

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// One agent's samples as a row-major design matrix plus labels.
class LocalDataset {
 public:
  LocalDataset() = default;
  LocalDataset(const std::vector<Sample>& samples, std::span<const std::size_t> order,
               Eigen::Index dim);

  Eigen::Index size() const { return labels_.size(); }
  Eigen::Index dim() const { return features_.cols(); }
  const SparseRowMatrix& features() const { return features_; }
  const Vector<double>& labels() const { return labels_; }
  Sample sample(Eigen::Index j) const;

 private:
  SparseRowMatrix features_;
  Vector<double> labels_;
};

enum class PartitionStrategy { round_robin, contiguous };

PartitionStrategy parse_partition(std::string_view text);

/// Seeded shuffle, then round-robin or contiguous blocks. With `equalize`,
/// samples past m * floor(N / m) in shuffled order are dropped.
std::vector<LocalDataset> partition(const std::vector<Sample>& samples, Eigen::Index dim, int agents,
                                    PartitionStrategy strategy, std::uint64_t seed,
                                    bool equalize = true);

/// Union of all local sets in agent order (the single-node view).
LocalDataset merge(std::span<const LocalDataset> locals);

class FiniteSumProblem {
 public:
  FiniteSumProblem(std::vector<LocalDataset> locals, Objective objective);

  int agents() const { return static_cast<int>(locals_.size()); }
  Eigen::Index dim() const { return dim_; }
  Objective objective() const { return objective_; }
  const LocalDataset& local(int i) const { return locals_[i]; }
  std::span<const LocalDataset> locals() const { return locals_; }
  Eigen::Index total_samples() const;
  Eigen::Index min_local_size() const;

 private:
  std::vector<LocalDataset> locals_;
  Objective objective_;
  Eigen::Index dim_ = 0;
};

// ---------------------------------------------------------------------------
// Gradients. IFO counters are plain accumulators owned by the caller.

SparseVector<double> grad_component(Objective objective, const Vector<double>& x,
                                    const Sample& s);
inline SparseVector<double> grad_convex_component(const Vector<double>& x, const Sample& s) {
  return grad_component(Objective::convex, x, s);
}
inline SparseVector<double> grad_nonconvex_component(const Vector<double>& x, const Sample& s) {
  return grad_component(Objective::nonconvex, x, s);
}
double loss_component(Objective objective, const Vector<double>& x, const Sample& s);

/// (1/n_i) sum_j grad f_ij(x). Adds n_i to `ifo`.
Vector<double> full_local_gradient(const Vector<double>& x, const LocalDataset& local,
                                   Objective objective, std::int64_t& ifo);

/// (1/|S|) sum_{j in S} [grad f_ij(x_new) - grad f_ij(x_old)]. Adds 2|S| to `ifo`.
Vector<double> sampled_gradient_difference(const Vector<double>& x_new, const Vector<double>& x_old,
                                           const LocalDataset& local,
                                           std::span<const Eigen::Index> indices,
                                           Objective objective, std::int64_t& ifo);

/// f_i(x) = (1/n_i) sum_j f_ij(x).
double local_loss(const Vector<double>& x, const LocalDataset& local, Objective objective);

struct LossAndGradient {
  double loss = 0.0;
  Vector<double> gradient;
};

/// F(x) and grad F(x), with F = (1/m) sum_i f_i. Adds N (all samples) to `eval_ifo`.
LossAndGradient global_loss_and_gradient(const Vector<double>& x, const FiniteSumProblem& problem,
                                         std::int64_t& eval_ifo);
double global_loss(const Vector<double>& x, const FiniteSumProblem& problem,
                   std::int64_t& eval_ifo);

}  // namespace dstofw
