#pragma once

#include <joplen/partition.hpp>
#include <joplen/types.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace joplen {

enum class LossKind { squared, logistic };

namespace detail {

// log(1 + exp(-m)) without overflow for any m.
inline double softplus_neg(double m) {
  return m >= 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

// sigmoid(-m) = 1 / (1 + exp(m)) without overflow.
inline double sigmoid_neg(double m) {
  if (m >= 0.0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

}  // namespace detail

/// Mean data loss and its gradient with respect to the predictions.
/// squared:  (1/N) sum 1/2 (y - yhat)^2,        grad (yhat - y)/N
/// logistic: (1/N) sum log(1 + exp(-y*yhat)),   grad -y*sigmoid(-y*yhat)/N
inline std::pair<double, Vector> loss_value_grad(LossKind kind, const Vector& y,
                                                 const Vector& yhat) {
  if (y.size() != yhat.size())
    throw std::invalid_argument("loss_value_grad: length mismatch");
  const Index n = y.size();
  if (n == 0) throw std::invalid_argument("loss_value_grad: empty inputs");
  const double inv_n = 1.0 / static_cast<double>(n);

  if (kind == LossKind::squared) {
    const Vector r = yhat - y;
    return {0.5 * inv_n * r.squaredNorm(), inv_n * r};
  }

  double value = 0.0;
  Vector grad(n);
  for (Index i = 0; i < n; ++i) {
    if (y[i] != 1.0 && y[i] != -1.0)
      throw std::invalid_argument("logistic loss needs labels in {-1, +1}");
    const double margin = y[i] * yhat[i];
    value += detail::softplus_neg(margin);
    grad[i] = -y[i] * detail::sigmoid_neg(margin) * inv_n;
  }
  return {value * inv_n, std::move(grad)};
}

/// Gaussian-RBF kernel on a symmetric kNN graph together with its
/// unnormalized Laplacian L = D - K. The quadratic form yhat' L yhat equals
/// half the double sum over ordered pairs of K_ij (yhat_i - yhat_j)^2.
struct LaplacianGraph {
  SpMat kernel;     // symmetric, zero diagonal
  Vector degree;    // row sums of the kernel
  SpMat laplacian;  // D - K
  double bandwidth = 0.0;
  Index k_neighbors = 0;

  Index n() const { return kernel.rows(); }
};

/// Edges connect each point to its k nearest neighbours (kept if either
/// endpoint selects the other). K_ij = exp(-|x_i-x_j|^2 / (2 h^2)); when no
/// bandwidth is given, h is the median retained edge distance.
inline LaplacianGraph build_laplacian(const Matrix& X, Index k_neighbors,
                                      std::optional<double> bandwidth = {}) {
  const Index n = X.rows();
  if (n < 2) throw std::invalid_argument("build_laplacian: need at least 2 points");
  if (k_neighbors < 1 || k_neighbors >= n)
    throw std::invalid_argument("build_laplacian: need 1 <= k_neighbors < N");

  // Brute-force neighbour search; quadratic but dependency-free, and the
  // graph is only ever built once per fit on the training set.
  std::vector<std::pair<Index, Index>> edges;
  std::vector<double> edge_sq;
  {
    std::vector<std::vector<char>> selected(static_cast<std::size_t>(n),
                                            std::vector<char>(static_cast<std::size_t>(n), 0));
    std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n - 1));
    for (Index i = 0; i < n; ++i) {
      std::size_t m = 0;
      for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        dist[m++] = {(X.row(i) - X.row(j)).squaredNorm(), j};
      }
      std::partial_sort(dist.begin(), dist.begin() + k_neighbors, dist.end());
      for (Index k = 0; k < k_neighbors; ++k)
        selected[static_cast<std::size_t>(i)]
                [static_cast<std::size_t>(dist[static_cast<std::size_t>(k)].second)] = 1;
    }
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        if (selected[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ||
            selected[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) {
          edges.emplace_back(i, j);
          edge_sq.push_back((X.row(i) - X.row(j)).squaredNorm());
        }
  }

  double h = 0.0;
  if (bandwidth) {
    h = *bandwidth;
    if (!(h > 0.0)) throw std::invalid_argument("build_laplacian: bandwidth must be positive");
  } else {
    std::vector<double> d(edge_sq.size());
    for (std::size_t e = 0; e < edge_sq.size(); ++e) d[e] = std::sqrt(edge_sq[e]);
    std::sort(d.begin(), d.end());
    const std::size_t m = d.size();
    h = (m % 2 == 1) ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
    if (!(h > 0.0))
      throw std::invalid_argument(
          "build_laplacian: median edge distance is zero (duplicate points); "
          "pass an explicit bandwidth");
  }

  LaplacianGraph g;
  g.bandwidth = h;
  g.k_neighbors = k_neighbors;
  std::vector<Eigen::Triplet<double>> ktrips;
  ktrips.reserve(edges.size() * 2);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double w = std::exp(-edge_sq[e] / (2.0 * h * h));
    ktrips.emplace_back(edges[e].first, edges[e].second, w);
    ktrips.emplace_back(edges[e].second, edges[e].first, w);
  }
  g.kernel.resize(n, n);
  g.kernel.setFromTriplets(ktrips.begin(), ktrips.end());
  g.degree = g.kernel * Vector::Ones(n);

  std::vector<Eigen::Triplet<double>> ltrips;
  ltrips.reserve(ktrips.size() + static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ltrips.emplace_back(i, i, g.degree[i]);
  for (const auto& t : ktrips) ltrips.emplace_back(t.row(), t.col(), -t.value());
  g.laplacian.resize(n, n);
  g.laplacian.setFromTriplets(ltrips.begin(), ltrips.end());
  return g;
}

inline double laplacian_quadratic(const LaplacianGraph& g, const Vector& yhat) {
  if (yhat.size() != g.n())
    throw std::invalid_argument("laplacian_quadratic: size mismatch");
  return yhat.dot(g.laplacian * yhat);
}

/// Configuration of the smooth objective part: data loss plus optional
/// squared-Frobenius weight/bias shrinkage and Laplacian prediction smoothing.
struct SmoothConfig {
  LossKind loss = LossKind::squared;
  double frobenius_weight = 0.0;
  double laplacian_weight = 0.0;
  std::shared_ptr<const LaplacianGraph> laplacian;
  bool penalize_bias_frobenius = true;
  bool penalize_weights_frobenius = true;  // off: ridge on the biases only
};

/// Value and exact gradient of
///   loss(y, Z theta) + lf*|W|_F^2 (+ lf*|b|^2) + ll*(Z theta)' L (Z theta)
/// with respect to the stacked parameters theta.
inline std::pair<double, Vector> smooth_value_grad(const SmoothConfig& cfg,
                                                   const DesignMatrix& dm, const Vector& y,
                                                   const Vector& theta) {
  if (theta.size() != dm.n_params())
    throw std::invalid_argument("smooth_value_grad: theta length mismatch");
  if (y.size() != dm.Z.rows())
    throw std::invalid_argument("smooth_value_grad: target length mismatch");

  const Vector yhat = dm.Z * theta;
  auto [value, loss_grad] = loss_value_grad(cfg.loss, y, yhat);
  Vector grad = dm.Z.transpose() * loss_grad;

  if (cfg.frobenius_weight > 0.0) {
    const double lf = cfg.frobenius_weight;
    const Index d = dm.n_features;
    const Index c = dm.total_cells;
    if (d > 0 && cfg.penalize_weights_frobenius) {
      auto w = weight_view(theta, d, c);
      value += lf * w.squaredNorm();
      weight_view(grad, d, c) += 2.0 * lf * w;
    }
    if (cfg.penalize_bias_frobenius) {
      auto b = bias_view(theta, d, c);
      value += lf * b.squaredNorm();
      bias_view(grad, d, c) += 2.0 * lf * b;
    }
  }

  if (cfg.laplacian_weight > 0.0) {
    if (!cfg.laplacian)
      throw std::invalid_argument("smooth_value_grad: laplacian_weight > 0 without a graph");
    if (cfg.laplacian->n() != dm.Z.rows())
      throw std::invalid_argument("smooth_value_grad: laplacian size mismatch");
    const Vector u = cfg.laplacian->laplacian * yhat;
    value += cfg.laplacian_weight * yhat.dot(u);
    grad += 2.0 * cfg.laplacian_weight * (dm.Z.transpose() * u);
  }

  return {value, std::move(grad)};
}

}  // namespace joplen
