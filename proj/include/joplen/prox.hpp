#pragma once

#include <joplen/types.hpp>

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace joplen {

enum class PenaltyKind { none, l21, nuclear, dirty_lasso };

inline std::string to_string(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::none: return "none";
    case PenaltyKind::l21: return "l21";
    case PenaltyKind::nuclear: return "nuclear";
    case PenaltyKind::dirty_lasso: return "dirty_lasso";
  }
  return "none";
}

inline PenaltyKind penalty_kind_from_string(const std::string& s) {
  if (s == "none") return PenaltyKind::none;
  if (s == "l21") return PenaltyKind::l21;
  if (s == "nuclear") return PenaltyKind::nuclear;
  if (s == "dirty_lasso") return PenaltyKind::dirty_lasso;
  throw std::invalid_argument("unknown penalty kind '" + s + "'");
}

/// Row-wise group shrinkage: the prox of tau*lambda*|W|_{2,1}. Each row is
/// scaled by max(0, 1 - tau*lambda/|row|); zero rows stay zero.
template <class Derived>
Matrix prox_l21(const Eigen::MatrixBase<Derived>& w, double tau, double lambda) {
  if (!(tau > 0.0)) throw std::invalid_argument("prox_l21: tau must be positive");
  if (lambda < 0.0) throw std::invalid_argument("prox_l21: lambda must be nonnegative");
  Matrix out = w;
  if (lambda == 0.0) return out;
  const double t = tau * lambda;
  for (Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    out.row(i) *= (norm <= t) ? 0.0 : (1.0 - t / norm);
  }
  return out;
}

/// Singular value thresholding: the prox of tau*lambda*|W|_*. Thin SVD, then
/// soft-threshold the spectrum and reconstruct.
template <class Derived>
Matrix prox_nuclear(const Eigen::MatrixBase<Derived>& w, double tau, double lambda) {
  if (!(tau > 0.0)) throw std::invalid_argument("prox_nuclear: tau must be positive");
  if (lambda < 0.0) throw std::invalid_argument("prox_nuclear: lambda must be nonnegative");
  if (lambda == 0.0) return w;
  if (!w.allFinite()) throw std::invalid_argument("prox_nuclear: non-finite input");
  Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector sigma = svd.singularValues();
  const double t = tau * lambda;
  for (Index i = 0; i < sigma.size(); ++i) sigma[i] = std::max(0.0, sigma[i] - t);
  return svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose();
}

template <class Derived>
double penalty_l21_value(const Eigen::MatrixBase<Derived>& w) {
  double v = 0.0;
  for (Index i = 0; i < w.rows(); ++i) v += w.row(i).norm();
  return v;
}

template <class Derived>
double penalty_nuclear_value(const Eigen::MatrixBase<Derived>& w) {
  if (w.rows() == 0 || w.cols() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(w).singularValues().sum();
}

/// Non-smooth penalty configuration. `lambda` weighs the single-task kinds;
/// dirty_lasso uses lambda_common for the shared block and
/// task_weights[t]*lambda_task for each task block.
struct ProxConfig {
  PenaltyKind kind = PenaltyKind::none;
  double lambda = 0.0;
  double lambda_common = 0.0;
  double lambda_task = 0.0;
  std::vector<double> task_weights;
};

inline double penalty_value(const ProxConfig& cfg, const Eigen::Ref<const Matrix>& w) {
  switch (cfg.kind) {
    case PenaltyKind::none: return 0.0;
    case PenaltyKind::l21: return cfg.lambda * penalty_l21_value(w);
    case PenaltyKind::nuclear: return cfg.lambda * penalty_nuclear_value(w);
    case PenaltyKind::dirty_lasso:
      throw std::invalid_argument("dirty_lasso penalty needs the (C, T) split overload");
  }
  return 0.0;
}

/// Dirty-LASSO composite prox: the shared matrix and the per-task matrices
/// are distinct variables, so the prox separates into independent row-wise
/// shrinkages.
inline std::pair<Matrix, std::vector<Matrix>> prox_dirty_lasso(const Matrix& cmat,
                                                               const std::vector<Matrix>& tmats,
                                                               double tau,
                                                               const ProxConfig& cfg) {
  if (cfg.task_weights.size() != tmats.size())
    throw std::invalid_argument("prox_dirty_lasso: task_weights/tmats size mismatch");
  Index cols = 0;
  for (const Matrix& t : tmats) {
    if (t.rows() != cmat.rows())
      throw std::invalid_argument("prox_dirty_lasso: row dimension mismatch");
    cols += t.cols();
  }
  if (cols != cmat.cols())
    throw std::invalid_argument("prox_dirty_lasso: task columns do not tile the shared matrix");

  std::pair<Matrix, std::vector<Matrix>> out;
  out.first = prox_l21(cmat, tau, cfg.lambda_common);
  out.second.reserve(tmats.size());
  for (std::size_t t = 0; t < tmats.size(); ++t)
    out.second.push_back(prox_l21(tmats[t], tau, cfg.task_weights[t] * cfg.lambda_task));
  return out;
}

inline double penalty_value_mt(const ProxConfig& cfg, const Matrix& cmat,
                               const std::vector<Matrix>& tmats) {
  double v = cfg.lambda_common * penalty_l21_value(cmat);
  for (std::size_t t = 0; t < tmats.size(); ++t)
    v += cfg.task_weights[t] * cfg.lambda_task * penalty_l21_value(tmats[t]);
  return v;
}

/// Prox over a stacked (w, b) parameter vector: applies the configured
/// matrix prox to the weight view and leaves every bias entry untouched.
inline ProxFn make_theta_prox(PenaltyKind kind, double lambda, Index d, Index c) {
  if (kind == PenaltyKind::dirty_lasso)
    throw std::invalid_argument("dirty_lasso prox lives on the multitask layout");
  if (lambda < 0.0) throw std::invalid_argument("penalty weight must be nonnegative");
  if (kind == PenaltyKind::none || lambda == 0.0 || d == 0)
    return [](const Vector& v, double) { return v; };
  return [kind, lambda, d, c](const Vector& v, double step) {
    Vector out = v;
    auto w = weight_view(out, d, c);
    const Matrix shrunk = (kind == PenaltyKind::l21) ? prox_l21(w, step, lambda)
                                                     : prox_nuclear(w, step, lambda);
    w = shrunk;
    return out;
  };
}

inline PenaltyFn make_theta_penalty(PenaltyKind kind, double lambda, Index d, Index c) {
  if (kind == PenaltyKind::none || lambda == 0.0 || d == 0)
    return [](const Vector&) { return 0.0; };
  return [kind, lambda, d, c](const Vector& v) {
    auto w = weight_view(v, d, c);
    return kind == PenaltyKind::l21 ? lambda * penalty_l21_value(w)
                                    : lambda * penalty_nuclear_value(w);
  };
}

}  // namespace joplen
