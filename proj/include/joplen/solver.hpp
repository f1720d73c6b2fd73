#pragma once

#include <joplen/objective.hpp>
#include <joplen/prox.hpp>
#include <joplen/rng.hpp>
#include <joplen/types.hpp>

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace joplen {

struct SolverConfig {
  int max_iters = 2000;
  double rel_tol = 1e-8;
  int tol_window = 5;
  std::optional<double> init_step;  // backtracking shrinks from here; default 1.0
  double backtrack_factor = 0.5;
  bool restart = true;
  std::uint64_t seed = 0;
};

enum class Termination { converged, max_iters };

inline std::string to_string(Termination t) {
  return t == Termination::converged ? "converged" : "max_iters";
}

struct FitReport {
  std::vector<double> objective_trace;  // total objective, entry 0 at theta0
  int n_iters = 0;
  Termination termination = Termination::max_iters;
  long backtracks = 0;
  double wall_time_sec = 0.0;
};

inline double objective_total(const Vector& theta, const SmoothFn& smooth,
                              const PenaltyFn& penalty) {
  return smooth(theta).first + penalty(theta);
}

namespace detail {

inline void check_finite(double value, const Vector& grad, int iter) {
  if (!std::isfinite(value) || !grad.allFinite())
    throw std::runtime_error("solver: non-finite objective or gradient at iteration " +
                             std::to_string(iter));
}

}  // namespace detail

/// Accelerated proximal gradient (FISTA) with Armijo backtracking on the
/// smooth part and function-value restart. With restart enabled the recorded
/// objective trace is non-increasing up to floating-point rounding.
///
/// Each iteration extrapolates y from the two latest iterates, then accepts
///   candidate = prox(y - step * grad_smooth(y), step)
/// after shrinking the step until
///   smooth(candidate) <= smooth(y) + <grad, delta> + |delta|^2 / (2 step).
/// If the candidate raises the total objective, momentum is discarded and the
/// step is retaken from the current iterate, which cannot increase it.
///
/// Converged means the relative objective change stayed below rel_tol for
/// tol_window consecutive iterations.
inline std::pair<Vector, FitReport> fit(const SmoothFn& smooth, const ProxFn& prox,
                                        const PenaltyFn& penalty, Vector theta0,
                                        const SolverConfig& cfg) {
  if (cfg.max_iters < 1) throw std::invalid_argument("solver: max_iters must be >= 1");
  if (!(cfg.backtrack_factor > 0.0 && cfg.backtrack_factor < 1.0))
    throw std::invalid_argument("solver: backtrack_factor must lie in (0, 1)");
  if (!(cfg.rel_tol > 0.0)) throw std::invalid_argument("solver: rel_tol must be positive");

  const auto t_start = std::chrono::steady_clock::now();
  FitReport report;
  double step = cfg.init_step.value_or(1.0);
  if (!(step > 0.0)) throw std::invalid_argument("solver: init_step must be positive");

  Vector x = std::move(theta0);
  Vector x_prev = x;
  Vector y = x;
  double t_momentum = 1.0;

  {
    auto [v0, g0] = smooth(x);
    detail::check_finite(v0, g0, 0);
    report.objective_trace.push_back(v0 + penalty(x));
  }

  int consecutive_small = 0;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    auto [sy, gy] = smooth(y);
    detail::check_finite(sy, gy, iter);

    // One backtracked proximal step from `base`; returns the candidate and
    // its smooth value. `step` persists across iterations and only shrinks.
    auto take_step = [&](const Vector& base, double base_val, const Vector& base_grad) {
      const double slack = 1e-12 * (1.0 + std::abs(base_val));
      for (;;) {
        Vector cand = prox(base - step * base_grad, step);
        const Vector delta = cand - base;
        const double sc = smooth(cand).first;
        if (!std::isfinite(sc))
          throw std::runtime_error("solver: non-finite objective at iteration " +
                                   std::to_string(iter));
        const double bound =
            base_val + base_grad.dot(delta) + delta.squaredNorm() / (2.0 * step) + slack;
        if (sc <= bound) return std::make_pair(std::move(cand), sc);
        step *= cfg.backtrack_factor;
        ++report.backtracks;
        if (step < 1e-18)
          throw std::runtime_error("solver: step size underflow at iteration " +
                                   std::to_string(iter));
      }
    };

    auto [cand, cand_smooth] = take_step(y, sy, gy);
    double cand_total = cand_smooth + penalty(cand);

    const double prev_total = report.objective_trace.back();
    if (cfg.restart && cand_total > prev_total) {
      // Momentum overshot: drop it and retake the step from the iterate.
      t_momentum = 1.0;
      y = x;
      auto [sx, gx] = smooth(y);
      detail::check_finite(sx, gx, iter);
      auto [cand2, cand2_smooth] = take_step(y, sx, gx);
      cand = std::move(cand2);
      cand_total = cand2_smooth + penalty(cand);
    }

    x_prev = std::move(x);
    x = std::move(cand);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
    y = x + ((t_momentum - 1.0) / t_next) * (x - x_prev);
    t_momentum = t_next;

    report.objective_trace.push_back(cand_total);
    report.n_iters = iter;

    const double rel_change =
        std::abs(cand_total - prev_total) / std::max(1.0, std::abs(cand_total));
    consecutive_small = (rel_change < cfg.rel_tol) ? consecutive_small + 1 : 0;
    if (consecutive_small >= cfg.tol_window) {
      report.termination = Termination::converged;
      break;
    }
  }
  if (report.termination != Termination::converged) report.termination = Termination::max_iters;

  report.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return {std::move(x), std::move(report)};
}

/// 1 / L where L bounds the Lipschitz constant of the smooth gradient:
///   L = curvature(loss) * sigma_max(Z'Z/N) + 2*lf + 2*ll * sigma_max(Z'LZ),
/// with curvature 1 for squared loss and 1/4 for logistic. Spectral norms
/// come from 20 power-iteration steps with a seeded start vector.
inline double estimate_init_step(const DesignMatrix& dm, const SmoothConfig& cfg,
                                 std::uint64_t seed = 0) {
  const Index n = dm.Z.rows();
  const Index p = dm.Z.cols();
  if (n == 0 || p == 0) throw std::invalid_argument("estimate_init_step: empty design");

  auto power_iter = [&](auto&& apply, std::string_view label) {
    Pcg32 rng(derive_seed(seed, label));
    Vector v(p);
    for (Index i = 0; i < p; ++i) v[i] = rng.normal();
    v.normalize();
    double lam = 0.0;
    for (int it = 0; it < 20; ++it) {
      Vector w = apply(v);
      lam = w.norm();
      if (lam <= 0.0) return 0.0;
      v = w / lam;
    }
    return lam;
  };

  const double inv_n = 1.0 / static_cast<double>(n);
  const double curvature = (cfg.loss == LossKind::squared) ? 1.0 : 0.25;
  double lip = curvature * power_iter(
                               [&](const Vector& v) -> Vector {
                                 return dm.Z.transpose() * (dm.Z * v) * inv_n;
                               },
                               "power_data");
  lip += 2.0 * cfg.frobenius_weight;
  if (cfg.laplacian_weight > 0.0 && cfg.laplacian) {
    lip += 2.0 * cfg.laplacian_weight *
           power_iter(
               [&](const Vector& v) -> Vector {
                 return dm.Z.transpose() * (cfg.laplacian->laplacian * (dm.Z * v));
               },
               "power_laplacian");
  }
  return lip > 0.0 ? 1.0 / lip : 1.0;
}

// ---------------------------------------------------------------------------
// Multitask layout and solver
// ---------------------------------------------------------------------------

/// Flat parameter layout of a multitask model. Cells of all tasks are
/// concatenated in task order into C_total flat columns. The vector holds
/// [vec(C) | vec(T) | biases], each block present only when enabled; every
/// task's effective weights are C_cols + T_cols over its column range.
struct MtLayout {
  Index d = 0;
  std::vector<Index> cells;  // per-task cell counts
  bool has_common = true;
  bool has_task = true;

  Index c_total() const {
    Index c = 0;
    for (Index v : cells) c += v;
    return c;
  }
  Index n_tasks() const { return static_cast<Index>(cells.size()); }
  Index col_begin(Index t) const {
    Index c = 0;
    for (Index i = 0; i < t; ++i) c += cells[static_cast<std::size_t>(i)];
    return c;
  }
  Index common_offset() const { return 0; }
  Index task_offset() const { return (has_common ? d * c_total() : 0); }
  Index bias_offset() const { return task_offset() + (has_task ? d * c_total() : 0); }
  Index n_params() const { return bias_offset() + c_total(); }

  Eigen::Map<Matrix> common(Vector& v) const {
    return {v.data() + common_offset(), has_common ? d : 0, c_total()};
  }
  Eigen::Map<const Matrix> common(const Vector& v) const {
    return {v.data() + common_offset(), has_common ? d : 0, c_total()};
  }
  Eigen::Map<Matrix> task(Vector& v) const {
    return {v.data() + task_offset(), has_task ? d : 0, c_total()};
  }
  Eigen::Map<const Matrix> task(const Vector& v) const {
    return {v.data() + task_offset(), has_task ? d : 0, c_total()};
  }
  Eigen::Map<Vector> biases(Vector& v) const {
    return {v.data() + bias_offset(), c_total()};
  }
  Eigen::Map<const Vector> biases(const Vector& v) const {
    return {v.data() + bias_offset(), c_total()};
  }

  /// Task t's stacked (w, b) parameter vector with w = C + T on its columns.
  Vector task_theta(const Vector& params, Index t) const {
    const Index ct = cells[static_cast<std::size_t>(t)];
    const Index begin = col_begin(t);
    const auto c = common(params);
    const auto tt = task(params);
    const auto b = biases(params);
    Vector theta(ct * (d + 1));
    for (Index k = 0; k < ct; ++k) {
      auto block = theta.segment(k * (d + 1), d);
      block.setZero();
      if (has_common) block += c.col(begin + k);
      if (has_task) block += tt.col(begin + k);
      theta[k * (d + 1) + d] = b[begin + k];
    }
    return theta;
  }

  /// Accumulates a task-theta gradient back into the flat gradient. The
  /// weight part feeds both the C and T blocks (they enter the prediction
  /// through their sum).
  void scatter_task_grad(const Vector& task_grad, Index t, double scale,
                         Vector& grad) const {
    const Index ct = cells[static_cast<std::size_t>(t)];
    const Index begin = col_begin(t);
    auto c = common(grad);
    auto tt = task(grad);
    auto b = biases(grad);
    for (Index k = 0; k < ct; ++k) {
      const auto block = task_grad.segment(k * (d + 1), d);
      if (has_common) c.col(begin + k) += scale * block;
      if (has_task) tt.col(begin + k) += scale * block;
      b[begin + k] += scale * task_grad[k * (d + 1) + d];
    }
  }
};

/// Weighted multitask objective: sum_t gamma[t] * task_smooth[t](theta_t).
inline SmoothFn make_multitask_smooth(std::vector<SmoothFn> task_smooth,
                                      std::vector<double> gamma, MtLayout layout) {
  if (task_smooth.size() != gamma.size() ||
      static_cast<Index>(task_smooth.size()) != layout.n_tasks())
    throw std::invalid_argument("make_multitask_smooth: per-task sizes mismatch");
  return [task_smooth = std::move(task_smooth), gamma = std::move(gamma),
          layout](const Vector& params) -> std::pair<double, Vector> {
    double value = 0.0;
    Vector grad = Vector::Zero(params.size());
    for (Index t = 0; t < layout.n_tasks(); ++t) {
      const Vector theta_t = layout.task_theta(params, t);
      auto [v, g] = task_smooth[static_cast<std::size_t>(t)](theta_t);
      value += gamma[static_cast<std::size_t>(t)] * v;
      layout.scatter_task_grad(g, t, gamma[static_cast<std::size_t>(t)], grad);
    }
    return {value, std::move(grad)};
  };
}

inline SmoothFn add_ridge(SmoothFn inner, const MtLayout& layout, double ridge_weight,
                          bool ridge_bias) {
  if (ridge_weight <= 0.0) return inner;
  return [inner = std::move(inner), layout, ridge_weight,
          ridge_bias](const Vector& params) -> std::pair<double, Vector> {
    auto [value, grad] = inner(params);
    const Index nb = layout.bias_offset();
    value += ridge_weight * params.head(nb).squaredNorm();
    grad.head(nb) += 2.0 * ridge_weight * params.head(nb);
    if (ridge_bias) {
      value += ridge_weight * params.tail(layout.c_total()).squaredNorm();
      grad.tail(layout.c_total()) += 2.0 * ridge_weight * params.tail(layout.c_total());
    }
    return {value, std::move(grad)};
  };
}

/// Dirty-LASSO prox over the flat multitask layout: row shrinkage of the
/// shared block with lambda_common and of each task's column range with
/// task_weights[t] * lambda_task. Biases pass through untouched.
inline ProxFn make_dirty_lasso_prox(const MtLayout& layout, const ProxConfig& cfg) {
  return [layout, cfg](const Vector& v, double step) {
    Vector out = v;
    if (layout.has_common && cfg.lambda_common > 0.0) {
      auto c = layout.common(out);
      const Matrix shrunk = prox_l21(c, step, cfg.lambda_common);
      c = shrunk;
    }
    if (layout.has_task && cfg.lambda_task > 0.0) {
      auto t = layout.task(out);
      for (Index i = 0; i < layout.n_tasks(); ++i) {
        auto cols = t.middleCols(layout.col_begin(i), layout.cells[static_cast<std::size_t>(i)]);
        const Matrix shrunk =
            prox_l21(cols, step, cfg.task_weights[static_cast<std::size_t>(i)] * cfg.lambda_task);
        cols = shrunk;
      }
    }
    return out;
  };
}

inline PenaltyFn make_dirty_lasso_penalty(const MtLayout& layout, const ProxConfig& cfg) {
  return [layout, cfg](const Vector& v) {
    double value = 0.0;
    if (layout.has_common && cfg.lambda_common > 0.0)
      value += cfg.lambda_common * penalty_l21_value(layout.common(v));
    if (layout.has_task && cfg.lambda_task > 0.0) {
      const auto t = layout.task(v);
      for (Index i = 0; i < layout.n_tasks(); ++i)
        value += cfg.task_weights[static_cast<std::size_t>(i)] * cfg.lambda_task *
                 penalty_l21_value(
                     t.middleCols(layout.col_begin(i), layout.cells[static_cast<std::size_t>(i)]));
    }
    return value;
  };
}

/// Multitask fit over the concatenated parameter vector: same FISTA loop,
/// blockwise-independent gradients, penalty coupling only through the prox.
inline std::pair<Vector, FitReport> fit_multitask(const std::vector<SmoothFn>& task_smooth,
                                                  const std::vector<double>& gamma,
                                                  const MtLayout& layout, const ProxFn& prox,
                                                  const PenaltyFn& penalty,
                                                  const Vector& theta0,
                                                  const SolverConfig& cfg,
                                                  double ridge_weight = 0.0,
                                                  bool ridge_bias = true) {
  if (theta0.size() != layout.n_params())
    throw std::invalid_argument("fit_multitask: theta0 does not match the layout");
  SmoothFn combined =
      add_ridge(make_multitask_smooth(task_smooth, gamma, layout), layout, ridge_weight,
                ridge_bias);
  return fit(combined, prox, penalty, theta0, cfg);
}

}  // namespace joplen
