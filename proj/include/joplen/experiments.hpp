#pragma once

#include <joplen/dataset.hpp>
#include <joplen/metrics.hpp>
#include <joplen/model.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

namespace joplen {

/// Frobenius-vs-nuclear comparison on the diagonal-subspace regression
/// problem. Both fits share the same Voronoi ensemble, data, and solver
/// settings; only the penalty differs. Defaults are tuned for the default
/// data configuration.
struct SubspaceConfig {
  Index n_total = 10000;
  Index n_train = 100;
  double noise_std = 0.2;
  std::uint64_t seed = 0;
  Index n_partitions = 7;
  Index cells = 5;
  double lambda_frobenius = 0.0075;
  double lambda_nuclear = 0.012;
  // the nuclear fit shrinks biases through a small ridge so that the
  // comparison isolates the weight penalty; tuned on the default data sizes
  double lambda_bias_ridge = 0.0075;
  SolverConfig solver;

  SubspaceConfig() {
    solver.max_iters = 4000;
    solver.rel_tol = 1e-10;
  }
};

struct SubspaceResult {
  double mse_frobenius = 0.0;
  double mse_nuclear = 0.0;
  Vector singular_values_frobenius;
  Vector singular_values_nuclear;
  Vector top_left_singular_vector_nuclear;  // on the standardized scale
  double cos_diagonal = 0.0;                // |cos| against (1,1)/sqrt(2)
  JoplenModel model_frobenius;
  JoplenModel model_nuclear;
  Dataset train;
  Dataset test;
};

inline SubspaceResult run_subspace_experiment(const SubspaceConfig& cfg) {
  auto [train, test] = synth_subspace(cfg.n_train, cfg.n_total, cfg.noise_std, cfg.seed);
  const PartitionEnsemble pe =
      make_voronoi(train, cfg.n_partitions, cfg.cells, derive_seed(cfg.seed, "partitions"));

  FitConfig frob;
  frob.frobenius_weight = cfg.lambda_frobenius;
  frob.penalize_bias_frobenius = true;
  frob.solver = cfg.solver;

  FitConfig nuclear;
  nuclear.penalty = PenaltyKind::nuclear;
  nuclear.lambda = cfg.lambda_nuclear;
  nuclear.frobenius_weight = cfg.lambda_bias_ridge;
  nuclear.penalize_weights_frobenius = false;  // ridge acts on the biases only
  nuclear.solver = cfg.solver;

  SubspaceResult out;
  out.model_frobenius = fit_model(train, pe, frob);
  out.model_nuclear = fit_model(train, pe, nuclear);
  out.mse_frobenius = mse(test.targets, predict(out.model_frobenius, test));
  out.mse_nuclear = mse(test.targets, predict(out.model_nuclear, test));

  Eigen::JacobiSVD<Matrix> svd_f(out.model_frobenius.W);
  out.singular_values_frobenius = svd_f.singularValues();
  Eigen::JacobiSVD<Matrix> svd_n(out.model_nuclear.W, Eigen::ComputeThinU);
  out.singular_values_nuclear = svd_n.singularValues();
  out.top_left_singular_vector_nuclear = svd_n.matrixU().col(0);
  const Vector diag = Vector::Constant(2, 1.0 / std::numbers::sqrt2);
  out.cos_diagonal = std::abs(out.top_left_singular_vector_nuclear.dot(diag));

  out.train = std::move(train);
  out.test = std::move(test);
  return out;
}

/// Dirty-LASSO support recovery on the synthetic multitask fixture. Defaults
/// are tuned for the default data configuration (3 tasks, 2 common features,
/// 1 specific feature per task).
struct MtRecoveryConfig {
  Index n_tasks = 3;
  Index d = 20;
  std::vector<Index> common = {0, 1};
  std::vector<std::vector<Index>> specific = {{2}, {3}, {4}};
  Index n_per_task = 500;
  double noise_std = 0.1;
  std::uint64_t seed = 0;
  Index n_partitions = 8;
  Index cells = 12;
  double lambda_common = 0.22;
  double lambda_task = 0.15;
  double frobenius_weight = 1e-4;
  double threshold = 1e-4;
  SolverConfig solver;

  MtRecoveryConfig() {
    solver.max_iters = 2500;
    solver.rel_tol = 1e-9;
  }
};

struct MtRecoveryResult {
  MultitaskModel model;
  FeatureReport report;
  bool all_common_found = false;    // every true common feature selected in C
  bool all_specific_found = false;  // every true specific feature in its T block
  Index false_features = 0;         // selected anywhere but outside every true support
  SynthMultitask fixture;
};

inline MtRecoveryResult run_mt_recovery(const MtRecoveryConfig& cfg) {
  MtRecoveryResult out;
  out.fixture = synth_multitask_sparse(cfg.n_tasks, cfg.d, cfg.common, cfg.specific,
                                       cfg.n_per_task, cfg.noise_std, cfg.seed);

  std::vector<PartitionEnsemble> pes;
  for (Index t = 0; t < cfg.n_tasks; ++t)
    pes.push_back(make_voronoi(out.fixture.data.tasks[static_cast<std::size_t>(t)],
                               cfg.n_partitions, cfg.cells,
                               derive_seed(cfg.seed, "mt_partitions",
                                           static_cast<std::uint64_t>(t))));

  MultitaskFitConfig mcfg;
  mcfg.lambda_common = cfg.lambda_common;
  mcfg.lambda_task = cfg.lambda_task;
  mcfg.frobenius_weight = cfg.frobenius_weight;
  mcfg.solver = cfg.solver;
  out.model = fit_multitask_model(out.fixture.data, std::move(pes), mcfg);
  out.report = feature_report(out.model, cfg.threshold);

  std::set<Index> support(cfg.common.begin(), cfg.common.end());
  for (const auto& sp : cfg.specific) support.insert(sp.begin(), sp.end());

  out.all_common_found = true;
  for (Index j : cfg.common)
    if (out.report.common_norms[j] <= cfg.threshold) out.all_common_found = false;

  out.all_specific_found = true;
  for (Index t = 0; t < cfg.n_tasks; ++t)
    for (Index j : cfg.specific[static_cast<std::size_t>(t)])
      if (out.report.task_norms[static_cast<std::size_t>(t)][j] <= cfg.threshold)
        out.all_specific_found = false;

  std::set<Index> selected_anywhere(out.report.selected_common.begin(),
                                    out.report.selected_common.end());
  for (Index t = 0; t < cfg.n_tasks; ++t)
    for (Index j = 0; j < cfg.d; ++j)
      if (out.report.task_norms[static_cast<std::size_t>(t)][j] > cfg.threshold)
        selected_anywhere.insert(j);
  out.false_features = 0;
  for (Index j : selected_anywhere)
    if (!support.count(j)) ++out.false_features;
  return out;
}

}  // namespace joplen
