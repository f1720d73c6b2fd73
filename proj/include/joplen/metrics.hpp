#pragma once

#include <joplen/types.hpp>

#include <stdexcept>

namespace joplen {

inline double mse(const Vector& y, const Vector& yhat) {
  if (y.size() != yhat.size()) throw std::invalid_argument("mse: length mismatch");
  if (y.size() == 0) throw std::invalid_argument("mse: empty inputs");
  return (y - yhat).squaredNorm() / static_cast<double>(y.size());
}

/// MSE normalized by the MSE of predicting `train_mean` on the same set;
/// 1.0 marks the naive baseline.
inline double nmse(const Vector& y, const Vector& yhat, double train_mean) {
  const double denom = mse(y, Vector::Constant(y.size(), train_mean));
  return mse(y, yhat) / denom;
}

/// Fraction of sign disagreements; sign(0) counts as +1.
inline double zero_one(const Vector& y, const Vector& yhat) {
  if (y.size() != yhat.size()) throw std::invalid_argument("zero_one: length mismatch");
  if (y.size() == 0) throw std::invalid_argument("zero_one: empty inputs");
  Index wrong = 0;
  for (Index i = 0; i < y.size(); ++i) {
    const double sign = yhat[i] >= 0.0 ? 1.0 : -1.0;
    if (sign != y[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(y.size());
}

}  // namespace joplen
