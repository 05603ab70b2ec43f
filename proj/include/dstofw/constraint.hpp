#pragma once

#include <cmath>
#include <memory>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "dstofw/error.hpp"

namespace dstofw {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using SparseVector = Eigen::SparseVector<Scalar>;

/// Vertex of the l1 ball minimizing <u, g>: -R sgn(g_j) e_j with j the first
/// index of max |g_j|. A zero direction yields the zero vector.
template <typename Derived>
SparseVector<typename Derived::Scalar> lmo_l1(const Eigen::MatrixBase<Derived>& g,
                                              typename Derived::Scalar radius) {
  using Scalar = typename Derived::Scalar;
  if (!g.allFinite()) throw NumericError("lmo_l1: direction contains NaN or Inf");
  SparseVector<Scalar> vertex(g.size());
  if (g.size() == 0) return vertex;
  Eigen::Index j = 0;
  const Scalar largest = g.cwiseAbs().maxCoeff(&j);  // maxCoeff keeps the first maximizer
  if (largest == Scalar(0)) return vertex;
  vertex.insert(j) = g(j) > Scalar(0) ? -radius : radius;
  return vertex;
}

template <typename Scalar>
Scalar diameter_l1(Scalar radius) {
  return Scalar(2) * radius;
}

template <typename Derived>
bool contains_l1(const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar radius,
                 typename Derived::Scalar tol) {
  return x.template lpNorm<1>() <= radius + tol;
}

/// Compact convex feasible set.
class ConstraintSet {
 public:
  virtual ~ConstraintSet() = default;

  virtual Eigen::Index dim() const = 0;
  virtual SparseVector<double> lmo(const Eigen::Ref<const Vector<double>>& direction) const = 0;
  virtual double diameter() const = 0;
  virtual bool contains(const Eigen::Ref<const Vector<double>>& x, double tol) const = 0;
};

class L1Ball final : public ConstraintSet {
 public:
  L1Ball(double radius, Eigen::Index dim) : radius_(radius), dim_(dim) {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw NumericError("L1Ball: radius must be > 0");
    if (dim < 1) throw NumericError("L1Ball: dimension must be >= 1");
  }

  double radius() const { return radius_; }
  Eigen::Index dim() const override { return dim_; }

  SparseVector<double> lmo(const Eigen::Ref<const Vector<double>>& direction) const override {
    return lmo_l1(direction, radius_);
  }
  double diameter() const override { return diameter_l1(radius_); }
  bool contains(const Eigen::Ref<const Vector<double>>& x, double tol) const override {
    return contains_l1(x, radius_, tol);
  }

 private:
  double radius_;
  Eigen::Index dim_;
};

}  // namespace dstofw
