#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <utility>

namespace joplen {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// A parameter vector theta stacks one (w, b) block per flat cell:
// cell k owns coordinates [k*(d+1), (k+1)*(d+1)), weights first, bias last.
// The views below expose the d-by-C weight matrix and the C bias entries of
// that storage without copying. d == 0 degrades to a bias-only layout.
using WeightView = Eigen::Map<Matrix, 0, Eigen::OuterStride<>>;
using ConstWeightView = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;
using BiasVecView = Eigen::Map<Vector, 0, Eigen::InnerStride<>>;
using ConstBiasVecView = Eigen::Map<const Vector, 0, Eigen::InnerStride<>>;

inline WeightView weight_view(Vector& theta, Index d, Index c) {
  return WeightView(theta.data(), d, c, Eigen::OuterStride<>(d + 1));
}

inline ConstWeightView weight_view(const Vector& theta, Index d, Index c) {
  return ConstWeightView(theta.data(), d, c, Eigen::OuterStride<>(d + 1));
}

inline BiasVecView bias_view(Vector& theta, Index d, Index c) {
  return BiasVecView(theta.data() + d, c, Eigen::InnerStride<>(d + 1));
}

inline ConstBiasVecView bias_view(const Vector& theta, Index d, Index c) {
  return ConstBiasVecView(theta.data() + d, c, Eigen::InnerStride<>(d + 1));
}

// Callable shapes shared by the solver and the penalty layer.
// SmoothFn returns (value, gradient); ProxFn maps (point, step) to the
// proximal point of step * penalty; PenaltyFn reports the non-smooth value.
using SmoothFn = std::function<std::pair<double, Vector>(const Vector&)>;
using ProxFn = std::function<Vector(const Vector&, double)>;
using PenaltyFn = std::function<double(const Vector&)>;

}  // namespace joplen
