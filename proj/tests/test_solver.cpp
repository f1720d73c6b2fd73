#include <catch2/catch_amalgamated.hpp>

#include <joplen/solver.hpp>

#include <joplen/dataset.hpp>

#include "support/oracles.hpp"

#include <cmath>
#include <limits>

using namespace joplen;
using Catch::Matchers::WithinAbs;

namespace {

SmoothFn quadratic_smooth(const Vector& target) {
  return [target](const Vector& theta) -> std::pair<double, Vector> {
    return {0.5 * (theta - target).squaredNorm(), theta - target};
  };
}

const ProxFn identity_prox = [](const Vector& v, double) { return v; };
const PenaltyFn zero_penalty = [](const Vector&) { return 0.0; };

SmoothFn least_squares_smooth(const Matrix& z, const Vector& y) {
  return [&z, &y](const Vector& theta) -> std::pair<double, Vector> {
    const double n = static_cast<double>(z.rows());
    const Vector r = z * theta - y;
    return {0.5 * r.squaredNorm() / n, z.transpose() * r / n};
  };
}

void require_monotone(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    REQUIRE(trace[i] <= trace[i - 1] + 1e-12 * std::max(1.0, std::abs(trace[i - 1])));
}

struct RandomLs {
  Matrix z;
  Vector y;
};

RandomLs random_ls(Pcg32& rng, Index n, Index p) {
  RandomLs out;
  out.z.resize(n, p);
  out.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) out.z(i, j) = rng.normal();
    out.y[i] = rng.normal();
  }
  return out;
}

}  // namespace

TEST_CASE("solver minimizes a pure quadratic", "[solver]") {
  Pcg32 rng(1);
  Vector target(8);
  for (Index i = 0; i < 8; ++i) target[i] = rng.normal(0, 3);
  SolverConfig cfg;
  cfg.max_iters = 200;
  cfg.rel_tol = 1e-14;
  const auto [theta, report] = fit(quadratic_smooth(target), identity_prox, zero_penalty,
                                   Vector::Zero(8), cfg);
  REQUIRE((theta - target).norm() <= 1e-8);
  REQUIRE(report.n_iters <= 200);
  require_monotone(report.objective_trace);
}

TEST_CASE("solver matches a coordinate-descent lasso oracle", "[solver]") {
  Pcg32 rng(2);
  const RandomLs ls = random_ls(rng, 10, 5);
  const double lambda = 0.1;

  const ProxFn l1_prox = [](const Vector& v, double step) {
    Vector out = v;
    const double t = step * 0.1;
    for (Index i = 0; i < out.size(); ++i)
      out[i] = std::abs(out[i]) > t ? (out[i] > 0 ? out[i] - t : out[i] + t) : 0.0;
    return out;
  };
  const PenaltyFn l1_pen = [](const Vector& v) { return 0.1 * v.lpNorm<1>(); };

  SolverConfig cfg;
  cfg.max_iters = 5000;
  cfg.rel_tol = 1e-13;
  cfg.tol_window = 10;
  const auto [theta, report] =
      fit(least_squares_smooth(ls.z, ls.y), l1_prox, l1_pen, Vector::Zero(5), cfg);

  const Vector oracle = oracles::lasso_cd(ls.z, ls.y, lambda);
  const double f_solver = oracles::lasso_objective(ls.z, ls.y, lambda, theta);
  const double f_oracle = oracles::lasso_objective(ls.z, ls.y, lambda, oracle);
  REQUIRE(std::abs(f_solver - f_oracle) <= 1e-6);
  require_monotone(report.objective_trace);
}

TEST_CASE("infinite tolerance converges after the window", "[solver]") {
  SolverConfig cfg;
  cfg.rel_tol = std::numeric_limits<double>::infinity();
  cfg.tol_window = 5;
  const auto [theta, report] =
      fit(quadratic_smooth(Vector::Ones(3)), identity_prox, zero_penalty, Vector::Zero(3), cfg);
  REQUIRE(report.termination == Termination::converged);
  REQUIRE(report.n_iters == 5);
}

TEST_CASE("solver is deterministic", "[solver]") {
  Pcg32 rng(3);
  const RandomLs ls = random_ls(rng, 30, 12);
  SolverConfig cfg;
  cfg.max_iters = 300;
  const auto [t1, r1] =
      fit(least_squares_smooth(ls.z, ls.y), identity_prox, zero_penalty, Vector::Zero(12), cfg);
  const auto [t2, r2] =
      fit(least_squares_smooth(ls.z, ls.y), identity_prox, zero_penalty, Vector::Zero(12), cfg);
  REQUIRE(t1 == t2);
  REQUIRE(r1.objective_trace == r2.objective_trace);
}

TEST_CASE("solver reports non-finite objectives with the iteration", "[solver]") {
  const SmoothFn bad = [](const Vector& theta) -> std::pair<double, Vector> {
    return {std::numeric_limits<double>::quiet_NaN(), theta};
  };
  SolverConfig cfg;
  REQUIRE_THROWS_WITH(fit(bad, identity_prox, zero_penalty, Vector::Zero(2), cfg),
                      Catch::Matchers::ContainsSubstring("iteration"));
}

TEST_CASE("objective trace stays monotone on random penalized problems", "[solver]") {
  Pcg32 rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = 10 + static_cast<Index>(rng.below(40));
    const Index p = 2 + static_cast<Index>(rng.below(10));
    const RandomLs ls = random_ls(rng, n, p);
    const double lambda = 0.01 + 0.3 * rng.next_double();
    const ProxFn prox = [lambda](const Vector& v, double step) {
      Vector out = v;
      const double t = step * lambda;
      for (Index i = 0; i < out.size(); ++i)
        out[i] = std::abs(out[i]) > t ? (out[i] > 0 ? out[i] - t : out[i] + t) : 0.0;
      return out;
    };
    const PenaltyFn pen = [lambda](const Vector& v) { return lambda * v.lpNorm<1>(); };
    SolverConfig cfg;
    cfg.max_iters = 400;
    const auto [theta, report] =
        fit(least_squares_smooth(ls.z, ls.y), prox, pen, Vector::Zero(p), cfg);
    require_monotone(report.objective_trace);
    REQUIRE(report.objective_trace.back() <= report.objective_trace.front() + 1e-12);
  }
}

TEST_CASE("ridge solutions match the closed form", "[solver]") {
  Pcg32 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = 30 + static_cast<Index>(rng.below(170));
    const Index p = 2 + static_cast<Index>(rng.below(20));
    const RandomLs ls = random_ls(rng, n, p);
    const double lf = 0.01 + rng.next_double();

    const SmoothFn smooth = [&](const Vector& theta) -> std::pair<double, Vector> {
      const double nn = static_cast<double>(n);
      const Vector r = ls.z * theta - ls.y;
      const double value = 0.5 * r.squaredNorm() / nn + lf * theta.squaredNorm();
      return {value, ls.z.transpose() * r / nn + 2.0 * lf * theta};
    };
    SolverConfig cfg;
    cfg.max_iters = 20000;
    cfg.rel_tol = 1e-14;
    cfg.tol_window = 20;
    const auto [theta, report] = fit(smooth, identity_prox, zero_penalty, Vector::Zero(p), cfg);
    const Vector closed = oracles::ridge_closed_form(ls.z, ls.y, lf, Vector::Ones(p));
    REQUIRE((theta - closed).norm() / std::max(1.0, closed.norm()) <= 1e-5);
  }
}

TEST_CASE("penalty value decreases as lambda grows", "[solver]") {
  Pcg32 rng(6);
  for (int rep = 0; rep < 5; ++rep) {
    const Index n = 20 + static_cast<Index>(rng.below(30));
    const Index d = 2 + static_cast<Index>(rng.below(3));
    const Index c = 2 + static_cast<Index>(rng.below(3));
    const Index p = c * (d + 1);
    const RandomLs ls = random_ls(rng, n, p);
    const double l1 = 0.01 + 0.05 * rng.next_double();
    const double l2 = l1 * (2.0 + 3.0 * rng.next_double());

    for (PenaltyKind kind : {PenaltyKind::l21, PenaltyKind::nuclear}) {
      auto solve = [&](double lambda) {
        SolverConfig cfg;
        cfg.max_iters = 8000;
        cfg.rel_tol = 1e-10;
        cfg.tol_window = 10;
        const auto [theta, report] =
            fit(least_squares_smooth(ls.z, ls.y), make_theta_prox(kind, lambda, d, c),
                make_theta_penalty(kind, lambda, d, c), Vector::Zero(p), cfg);
        // unweighted norm of the solution's weight block
        return make_theta_penalty(kind, 1.0, d, c)(theta);
      };
      REQUIRE(solve(l2) <= solve(l1) + 1e-6);
    }
  }
}

TEST_CASE("estimate_init_step reflects the curvature bound", "[solver]") {
  DesignMatrix dm;
  dm.n_features = 0;
  dm.total_cells = 1;
  dm.n_partitions = 1;
  dm.Z.resize(1, 1);
  dm.Z.insert(0, 0) = 1.0;
  dm.Z.makeCompressed();

  SmoothConfig cfg;
  const double step = estimate_init_step(dm, cfg);
  REQUIRE_THAT(1.0 / step, WithinAbs(1.0, 1e-9));

  SmoothConfig with_frob = cfg;
  with_frob.frobenius_weight = 0.5;
  SmoothConfig with_frob2 = cfg;
  with_frob2.frobenius_weight = 1.0;
  const double l1 = 1.0 / estimate_init_step(dm, with_frob);
  const double l2 = 1.0 / estimate_init_step(dm, with_frob2);
  REQUIRE_THAT(l2 - l1, WithinAbs(1.0, 1e-12));  // doubling lf adds exactly 2*lf

  REQUIRE(estimate_init_step(dm, cfg, 42) == estimate_init_step(dm, cfg, 42));
}

// --- multitask ---------------------------------------------------------------

namespace {

struct MtFixture {
  MtLayout layout;
  std::vector<SmoothFn> smooth;
  std::vector<double> gamma;
  std::vector<DesignMatrix> dms;
  std::vector<Vector> ys;
};

MtFixture make_mt_fixture(const std::vector<Dataset>& tasks, Index partitions, Index cells,
                          bool has_common, bool has_task, std::uint64_t seed) {
  MtFixture f;
  f.layout.d = tasks.front().n_features();
  f.layout.has_common = has_common;
  f.layout.has_task = has_task;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto pe = make_voronoi(tasks[t], partitions, cells, seed + t);
    f.dms.push_back(design_matrix(pe, tasks[t]));
    f.ys.push_back(tasks[t].targets);
    f.layout.cells.push_back(pe.total_cells());
    f.gamma.push_back(1.0);
  }
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const DesignMatrix* dm = &f.dms[t];
    const Vector* y = &f.ys[t];
    f.smooth.push_back([dm, y](const Vector& theta) {
      SmoothConfig cfg;
      return smooth_value_grad(cfg, *dm, *y, theta);
    });
  }
  return f;
}

Dataset random_task(Index n, Index d, std::uint64_t seed) {
  Pcg32 rng(seed);
  Dataset ds;
  for (Index j = 0; j < d; ++j) ds.feature_names.push_back("f" + std::to_string(j));
  ds.features.resize(n, d);
  ds.targets.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) ds.features(i, j) = rng.uniform(-2, 2);
    ds.targets[i] = std::sin(ds.features(i, 0)) + 0.3 * rng.normal();
  }
  return ds;
}

}  // namespace

TEST_CASE("single-task multitask run reproduces the plain fit", "[solver][multitask]") {
  const Dataset task = random_task(40, 3, 7);
  MtFixture f = make_mt_fixture({task}, 2, 4, /*has_common=*/true, /*has_task=*/false, 5);

  ProxConfig pcfg;
  pcfg.kind = PenaltyKind::dirty_lasso;
  pcfg.lambda_common = 0.05;
  pcfg.lambda_task = 0.0;
  pcfg.task_weights = {1.0};

  SolverConfig cfg;
  cfg.max_iters = 500;
  cfg.init_step = 0.05;
  const auto [params, rep_mt] = fit_multitask(
      f.smooth, f.gamma, f.layout, make_dirty_lasso_prox(f.layout, pcfg),
      make_dirty_lasso_penalty(f.layout, pcfg), Vector::Zero(f.layout.n_params()), cfg);

  const Index d = 3, c = f.layout.c_total();
  const auto [theta, rep_st] =
      fit(f.smooth[0], make_theta_prox(PenaltyKind::l21, 0.05, d, c),
          make_theta_penalty(PenaltyKind::l21, 0.05, d, c), Vector::Zero(c * (d + 1)), cfg);

  REQUIRE(rep_mt.objective_trace.size() == rep_st.objective_trace.size());
  for (std::size_t i = 0; i < rep_mt.objective_trace.size(); ++i)
    REQUIRE_THAT(rep_mt.objective_trace[i],
                 WithinAbs(rep_st.objective_trace[i],
                           1e-12 * std::max(1.0, std::abs(rep_st.objective_trace[i]))));

  const Vector theta_mt = f.layout.task_theta(params, 0);
  REQUIRE((theta_mt - theta).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("zero-weight tasks keep their block at zero", "[solver][multitask]") {
  const Dataset t0 = random_task(30, 2, 11);
  const Dataset t1 = random_task(30, 2, 12);
  MtFixture f = make_mt_fixture({t0, t1}, 1, 4, true, true, 9);
  f.gamma = {1.0, 0.0};

  ProxConfig pcfg;
  pcfg.kind = PenaltyKind::dirty_lasso;
  pcfg.lambda_common = 0.02;
  pcfg.lambda_task = 0.02;
  pcfg.task_weights = f.gamma;

  SolverConfig cfg;
  cfg.max_iters = 300;
  cfg.init_step = 0.05;
  const auto [params, report] = fit_multitask(
      f.smooth, f.gamma, f.layout, make_dirty_lasso_prox(f.layout, pcfg),
      make_dirty_lasso_penalty(f.layout, pcfg), Vector::Zero(f.layout.n_params()), cfg);

  const auto tmat = f.layout.task(params);
  REQUIRE(tmat.middleCols(f.layout.col_begin(1), f.layout.cells[1]).cwiseAbs().maxCoeff() ==
          0.0);
}

TEST_CASE("identical tasks put shared signal into the common block",
          "[solver][multitask]") {
  const Dataset t0 = random_task(60, 2, 21);
  MtFixture f = make_mt_fixture({t0, t0}, 2, 5, true, true, 3);

  ProxConfig pcfg;
  pcfg.kind = PenaltyKind::dirty_lasso;
  pcfg.lambda_common = 0.001;
  pcfg.lambda_task = 0.5;  // much heavier per-task penalty
  pcfg.task_weights = {1.0, 1.0};

  SolverConfig cfg;
  cfg.max_iters = 2000;
  cfg.rel_tol = 1e-12;
  cfg.init_step = 0.02;
  const auto [params, report] = fit_multitask(
      f.smooth, f.gamma, f.layout, make_dirty_lasso_prox(f.layout, pcfg),
      make_dirty_lasso_penalty(f.layout, pcfg), Vector::Zero(f.layout.n_params()), cfg,
      /*ridge_weight=*/1e-6);

  const auto tmat = f.layout.task(params);
  REQUIRE(tmat.rowwise().norm().maxCoeff() <= 1e-6);
  const auto cmat = f.layout.common(params);
  REQUIRE(cmat.norm() > 0.1);  // the fit did learn something

  // identical tasks, equal gammas: per-task row-norm profiles agree
  Vector n0 = tmat.middleCols(f.layout.col_begin(0), f.layout.cells[0]).rowwise().norm();
  Vector n1 = tmat.middleCols(f.layout.col_begin(1), f.layout.cells[1]).rowwise().norm();
  REQUIRE((n0 - n1).cwiseAbs().maxCoeff() <= 1e-4);
}
