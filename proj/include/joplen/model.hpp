#pragma once

#include <joplen/dataset.hpp>
#include <joplen/json_io.hpp>
#include <joplen/objective.hpp>
#include <joplen/partition.hpp>
#include <joplen/prox.hpp>
#include <joplen/solver.hpp>
#include <joplen/types.hpp>

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace joplen {

enum class LeafMode { linear, constant };

inline std::string to_string(LeafMode m) {
  return m == LeafMode::linear ? "linear" : "constant";
}
inline std::string to_string(LossKind k) {
  return k == LossKind::squared ? "squared" : "logistic";
}
inline LeafMode leaf_mode_from_string(const std::string& s) {
  if (s == "linear") return LeafMode::linear;
  if (s == "constant") return LeafMode::constant;
  throw std::invalid_argument("unknown leaf mode '" + s + "'");
}
inline LossKind loss_from_string(const std::string& s) {
  if (s == "squared") return LossKind::squared;
  if (s == "logistic") return LossKind::logistic;
  throw std::invalid_argument("unknown loss '" + s + "'");
}

/// Everything fit_model needs besides the data and the partitions.
/// Weights for the smooth penalties live here next to the prox penalty.
struct FitConfig {
  LossKind loss = LossKind::squared;
  LeafMode leaf_mode = LeafMode::linear;
  double frobenius_weight = 0.0;
  bool penalize_bias_frobenius = true;
  bool penalize_weights_frobenius = true;
  double laplacian_weight = 0.0;
  Index laplacian_k = 10;
  std::optional<double> laplacian_bandwidth;
  PenaltyKind penalty = PenaltyKind::none;
  double lambda = 0.0;
  SolverConfig solver;
};

/// Fitted piecewise-linear ensemble. Weights live on the standardized
/// feature scale; the standardizer travels with the model and is applied at
/// predict time. Cell assignment always happens on raw inputs, so partitions
/// stay meaningful independent of the scaling.
struct JoplenModel {
  PartitionEnsemble ensemble;
  Standardizer standardizer;
  LeafMode leaf_mode = LeafMode::linear;
  LossKind loss = LossKind::squared;
  Matrix W;  // d x C, all-zero in constant mode
  Vector b;  // C
  double train_target_mean = 0.0;
  PenaltyKind penalty = PenaltyKind::none;
  double lambda = 0.0;
  double frobenius_weight = 0.0;
  bool penalize_bias_frobenius = true;
  bool penalize_weights_frobenius = true;
  double laplacian_weight = 0.0;
  FitReport report;  // in-memory only, not serialized

  Index n_features() const { return ensemble.n_features(); }
  Index total_cells() const { return ensemble.total_cells(); }
};

inline Vector predict(const JoplenModel& m, const Matrix& X) {
  if (X.cols() != m.n_features())
    throw std::invalid_argument("predict: feature dimension mismatch");
  if (!X.allFinite()) throw std::invalid_argument("predict: non-finite input");
  const Matrix Xs = transform(m.standardizer, X);
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i)
    out[i] = ensemble_eval(m.ensemble, m.W, m.b, X.row(i), Xs.row(i));
  return out;
}

inline Vector predict(const JoplenModel& m, const Dataset& ds) {
  return predict(m, ds.features);
}

inline JoplenModel fit_model(const Dataset& train, PartitionEnsemble pe, const FitConfig& cfg) {
  if (train.n_features() != pe.n_features())
    throw std::invalid_argument("fit_model: dataset/partition dimension mismatch");
  if (train.kind == TaskKind::classification && cfg.loss != LossKind::logistic)
    throw std::invalid_argument("fit_model: classification data needs the logistic loss");
  if (train.kind == TaskKind::regression && cfg.loss != LossKind::squared)
    throw std::invalid_argument("fit_model: regression data needs the squared loss");
  if (cfg.leaf_mode == LeafMode::constant && cfg.penalty != PenaltyKind::none &&
      cfg.lambda > 0.0)
    throw std::invalid_argument("fit_model: weight penalties have no effect on constant leaves");

  const Standardizer st = fit_standardizer(train);
  const Matrix Xs = transform(st, train.features);

  const DesignMatrix dm = (cfg.leaf_mode == LeafMode::linear)
                              ? design_matrix(pe, train.features, Xs)
                              : design_matrix_bias(pe, train.features);

  SmoothConfig scfg;
  scfg.loss = cfg.loss;
  scfg.frobenius_weight = cfg.frobenius_weight;
  scfg.penalize_bias_frobenius = cfg.penalize_bias_frobenius;
  scfg.penalize_weights_frobenius = cfg.penalize_weights_frobenius;
  scfg.laplacian_weight = cfg.laplacian_weight;
  if (cfg.laplacian_weight > 0.0)
    scfg.laplacian = std::make_shared<LaplacianGraph>(
        build_laplacian(Xs, cfg.laplacian_k, cfg.laplacian_bandwidth));

  SolverConfig solver_cfg = cfg.solver;
  if (!solver_cfg.init_step)
    solver_cfg.init_step = estimate_init_step(dm, scfg, solver_cfg.seed);

  const SmoothFn smooth = [&scfg, &dm, &train](const Vector& theta) {
    return smooth_value_grad(scfg, dm, train.targets, theta);
  };
  const ProxFn prox = make_theta_prox(cfg.penalty, cfg.lambda, dm.n_features, dm.total_cells);
  const PenaltyFn penalty =
      make_theta_penalty(cfg.penalty, cfg.lambda, dm.n_features, dm.total_cells);

  auto [theta, report] = fit(smooth, prox, penalty, Vector::Zero(dm.n_params()), solver_cfg);

  const Index d = train.n_features();
  const Index c = pe.total_cells();
  JoplenModel model;
  model.ensemble = std::move(pe);
  model.standardizer = st;
  model.leaf_mode = cfg.leaf_mode;
  model.loss = cfg.loss;
  model.train_target_mean = train.targets.mean();
  model.penalty = cfg.penalty;
  model.lambda = cfg.lambda;
  model.frobenius_weight = cfg.frobenius_weight;
  model.penalize_bias_frobenius = cfg.penalize_bias_frobenius;
  model.penalize_weights_frobenius = cfg.penalize_weights_frobenius;
  model.laplacian_weight = cfg.laplacian_weight;
  model.report = std::move(report);
  if (cfg.leaf_mode == LeafMode::linear) {
    model.W = weight_view(theta, d, c);
    model.b = bias_view(theta, d, c);
  } else {
    model.W = Matrix::Zero(d, c);
    model.b = theta;
  }
  return model;
}

// ---------------------------------------------------------------------------
// Multitask
// ---------------------------------------------------------------------------

struct MultitaskFitConfig {
  LossKind loss = LossKind::squared;
  double lambda_common = 0.0;
  double lambda_task = 0.0;
  double frobenius_weight = 0.0;  // ridge over C, T, and biases
  bool penalize_bias_frobenius = true;
  double laplacian_weight = 0.0;  // per-task prediction smoothing
  Index laplacian_k = 10;
  std::optional<double> laplacian_bandwidth;
  SolverConfig solver;
};

/// Multitask model with the common/task weight split W_t = C_t + T_t.
/// A zero lambda disables the corresponding block entirely (it is frozen at
/// zero rather than left unpenalized, which would make the split arbitrary):
/// lambda_task == 0 fits only the shared block, lambda_common == 0 with
/// lambda_task > 0 fits only the per-task blocks.
struct MultitaskModel {
  std::vector<PartitionEnsemble> ensembles;  // one per task
  Standardizer standardizer;                 // shared, fit on pooled features
  LossKind loss = LossKind::squared;
  Matrix Cmat;                 // d x C_total (zero-size rows when disabled)
  std::vector<Matrix> Tmats;   // d x C_t each (empty when disabled)
  std::vector<Vector> biases;  // C_t each
  std::vector<double> gammas;
  std::vector<std::string> task_names;
  std::vector<double> train_target_means;
  double lambda_common = 0.0;
  double lambda_task = 0.0;
  double frobenius_weight = 0.0;
  FitReport report;

  Index n_tasks() const { return static_cast<Index>(ensembles.size()); }
  Index n_features() const { return standardizer.n_features(); }

  /// Effective weights of task t: C columns plus T columns where present.
  Matrix task_weights_matrix(Index t) const {
    const Index d = n_features();
    const Index ct = ensembles[static_cast<std::size_t>(t)].total_cells();
    Matrix w = Matrix::Zero(d, ct);
    Index begin = 0;
    for (Index i = 0; i < t; ++i)
      begin += ensembles[static_cast<std::size_t>(i)].total_cells();
    if (Cmat.rows() > 0) w += Cmat.middleCols(begin, ct);
    if (!Tmats.empty() && Tmats[static_cast<std::size_t>(t)].size() > 0)
      w += Tmats[static_cast<std::size_t>(t)];
    return w;
  }
};

inline Vector predict_task(const MultitaskModel& m, Index t, const Matrix& X) {
  if (t < 0 || t >= m.n_tasks()) throw std::invalid_argument("predict_task: bad task index");
  if (X.cols() != m.n_features())
    throw std::invalid_argument("predict_task: feature dimension mismatch");
  const Matrix Xs = transform(m.standardizer, X);
  const Matrix W = m.task_weights_matrix(t);
  const auto& pe = m.ensembles[static_cast<std::size_t>(t)];
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i)
    out[i] = ensemble_eval(pe, W, m.biases[static_cast<std::size_t>(t)], X.row(i), Xs.row(i));
  return out;
}

inline MultitaskModel fit_multitask_model(const MultitaskDataset& mt,
                                          std::vector<PartitionEnsemble> ensembles,
                                          const MultitaskFitConfig& cfg) {
  validate_multitask(mt);
  if (static_cast<Index>(ensembles.size()) != mt.n_tasks())
    throw std::invalid_argument("fit_multitask_model: one ensemble per task required");
  const Index d = mt.n_features();
  for (const auto& pe : ensembles)
    if (pe.n_features() != d)
      throw std::invalid_argument("fit_multitask_model: ensemble dimension mismatch");
  if (cfg.lambda_common < 0.0 || cfg.lambda_task < 0.0)
    throw std::invalid_argument("fit_multitask_model: penalty weights must be nonnegative");

  // Shared standardizer over the pooled training features keeps row norms
  // comparable across tasks.
  Index n_all = 0;
  for (const auto& task : mt.tasks) n_all += task.n_samples();
  Matrix pooled(n_all, d);
  Index at = 0;
  for (const auto& task : mt.tasks) {
    pooled.middleRows(at, task.n_samples()) = task.features;
    at += task.n_samples();
  }
  Dataset pooled_ds;
  pooled_ds.features = std::move(pooled);
  pooled_ds.targets = Vector::Zero(n_all);
  pooled_ds.feature_names = mt.tasks.front().feature_names;
  const Standardizer st = fit_standardizer(pooled_ds);

  MtLayout layout;
  layout.d = d;
  for (const auto& pe : ensembles) layout.cells.push_back(pe.total_cells());
  layout.has_task = cfg.lambda_task > 0.0;
  layout.has_common = cfg.lambda_common > 0.0 || !layout.has_task;

  std::vector<DesignMatrix> dms;
  std::vector<std::shared_ptr<const LaplacianGraph>> graphs(
      static_cast<std::size_t>(mt.n_tasks()));
  dms.reserve(static_cast<std::size_t>(mt.n_tasks()));
  for (Index t = 0; t < mt.n_tasks(); ++t) {
    const auto& task = mt.tasks[static_cast<std::size_t>(t)];
    const Matrix Xs = transform(st, task.features);
    dms.push_back(design_matrix(ensembles[static_cast<std::size_t>(t)], task.features, Xs));
    if (cfg.laplacian_weight > 0.0)
      graphs[static_cast<std::size_t>(t)] = std::make_shared<LaplacianGraph>(
          build_laplacian(Xs, cfg.laplacian_k, cfg.laplacian_bandwidth));
  }

  std::vector<SmoothFn> task_smooth;
  for (Index t = 0; t < mt.n_tasks(); ++t) {
    SmoothConfig scfg;
    scfg.loss = cfg.loss;
    scfg.laplacian_weight = cfg.laplacian_weight;
    scfg.laplacian = graphs[static_cast<std::size_t>(t)];
    const DesignMatrix* dm = &dms[static_cast<std::size_t>(t)];
    const Vector* y = &mt.tasks[static_cast<std::size_t>(t)].targets;
    task_smooth.push_back([scfg, dm, y](const Vector& theta) {
      return smooth_value_grad(scfg, *dm, *y, theta);
    });
  }

  ProxConfig pcfg;
  pcfg.kind = PenaltyKind::dirty_lasso;
  pcfg.lambda_common = cfg.lambda_common;
  pcfg.lambda_task = cfg.lambda_task;
  pcfg.task_weights = mt.task_weights;

  SolverConfig solver_cfg = cfg.solver;
  if (!solver_cfg.init_step) {
    // Lipschitz bound of the combined gradient. A weight direction feeds
    // every prediction through C and T simultaneously, which at most doubles
    // the blockwise curvature; the per-block bounds then add across blocks.
    double lip = 0.0;
    SmoothConfig probe;
    probe.loss = cfg.loss;
    probe.laplacian_weight = cfg.laplacian_weight;
    for (Index t = 0; t < mt.n_tasks(); ++t) {
      probe.laplacian = graphs[static_cast<std::size_t>(t)];
      const double step_t =
          estimate_init_step(dms[static_cast<std::size_t>(t)], probe, solver_cfg.seed);
      lip = std::max(lip, mt.task_weights[static_cast<std::size_t>(t)] / step_t);
    }
    const double blocks = (layout.has_common && layout.has_task) ? 2.0 : 1.0;
    solver_cfg.init_step = 1.0 / (blocks * lip + 2.0 * cfg.frobenius_weight);
  }

  auto [params, report] = fit_multitask(
      task_smooth, mt.task_weights, layout, make_dirty_lasso_prox(layout, pcfg),
      make_dirty_lasso_penalty(layout, pcfg), Vector::Zero(layout.n_params()), solver_cfg,
      cfg.frobenius_weight, cfg.penalize_bias_frobenius);

  MultitaskModel model;
  model.standardizer = st;
  model.loss = cfg.loss;
  model.gammas = mt.task_weights;
  model.task_names = mt.task_names;
  model.lambda_common = cfg.lambda_common;
  model.lambda_task = cfg.lambda_task;
  model.frobenius_weight = cfg.frobenius_weight;
  model.report = std::move(report);
  model.Cmat = layout.common(params);
  const auto tall = layout.task(params);
  const auto ball = layout.biases(params);
  for (Index t = 0; t < mt.n_tasks(); ++t) {
    const Index ct = layout.cells[static_cast<std::size_t>(t)];
    const Index begin = layout.col_begin(t);
    model.Tmats.push_back(layout.has_task ? Matrix(tall.middleCols(begin, ct))
                                          : Matrix(0, ct));
    model.biases.push_back(ball.segment(begin, ct));
    model.train_target_means.push_back(mt.tasks[static_cast<std::size_t>(t)].targets.mean());
  }
  model.ensembles = std::move(ensembles);
  return model;
}

// ---------------------------------------------------------------------------
// Feature selection report
// ---------------------------------------------------------------------------

/// Row-norm based selection on the standardized weight scale. Multitask
/// models report a feature as common when its shared-block row clears the
/// threshold; task lists hold task-specific-only features.
struct FeatureReport {
  Vector common_norms;                       // d (single task: W row norms)
  std::vector<Vector> task_norms;            // per task, d each (multitask only)
  std::vector<Index> selected_common;
  std::vector<std::vector<Index>> selected_task;
  double threshold = 0.0;
};

inline FeatureReport feature_report(const JoplenModel& m, double threshold = 1e-6) {
  FeatureReport r;
  r.threshold = threshold;
  r.common_norms = m.W.rowwise().norm();
  for (Index j = 0; j < r.common_norms.size(); ++j)
    if (r.common_norms[j] > threshold) r.selected_common.push_back(j);
  return r;
}

inline FeatureReport feature_report(const MultitaskModel& m, double threshold = 1e-6) {
  FeatureReport r;
  r.threshold = threshold;
  const Index d = m.n_features();
  r.common_norms = (m.Cmat.rows() > 0) ? Vector(m.Cmat.rowwise().norm()) : Vector::Zero(d);
  for (Index j = 0; j < d; ++j)
    if (r.common_norms[j] > threshold) r.selected_common.push_back(j);
  for (Index t = 0; t < m.n_tasks(); ++t) {
    const Matrix& tm = m.Tmats[static_cast<std::size_t>(t)];
    Vector norms = (tm.rows() > 0) ? Vector(tm.rowwise().norm()) : Vector::Zero(d);
    std::vector<Index> sel;
    for (Index j = 0; j < d; ++j)
      if (norms[j] > threshold && r.common_norms[j] <= threshold) sel.push_back(j);
    r.task_norms.push_back(std::move(norms));
    r.selected_task.push_back(std::move(sel));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Serialization (model file schema version 1)
// ---------------------------------------------------------------------------

namespace detail {

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw std::runtime_error(where + ": expected an array of rows");
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) return Matrix(0, 0);
  const Index cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw std::runtime_error(where + ": ragged rows");
    for (Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Vector vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw std::runtime_error(where + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

inline json standardizer_to_json(const Standardizer& s) {
  return json{{"means", vector_to_json(s.means)}, {"stds", vector_to_json(s.stds)}};
}

inline Standardizer standardizer_from_json(const json& j) {
  Standardizer s;
  s.means = vector_from_json(j.at("means"), "standardizer.means");
  s.stds = vector_from_json(j.at("stds"), "standardizer.stds");
  return s;
}

}  // namespace detail

inline json model_to_json(const JoplenModel& m) {
  json j;
  j["version"] = 1;
  j["leaf_mode"] = to_string(m.leaf_mode);
  j["loss"] = to_string(m.loss);
  j["standardizer"] = detail::standardizer_to_json(m.standardizer);
  j["partitions"] = export_partitions(m.ensemble);
  j["W"] = detail::matrix_to_json(m.W);
  j["b"] = detail::vector_to_json(m.b);
  j["train_target_mean"] = m.train_target_mean;
  j["penalty"] = json{{"kind", to_string(m.penalty)},
                      {"lambda", m.lambda},
                      {"frobenius_weight", m.frobenius_weight},
                      {"penalize_bias_frobenius", m.penalize_bias_frobenius},
                      {"penalize_weights_frobenius", m.penalize_weights_frobenius},
                      {"laplacian_weight", m.laplacian_weight}};
  return j;
}

inline json model_to_json(const MultitaskModel& m) {
  json j;
  j["version"] = 1;
  j["leaf_mode"] = "linear";
  j["loss"] = to_string(m.loss);
  j["standardizer"] = detail::standardizer_to_json(m.standardizer);
  j["penalty"] = json{{"kind", "dirty_lasso"},
                      {"lambda_common", m.lambda_common},
                      {"lambda_task", m.lambda_task},
                      {"frobenius_weight", m.frobenius_weight}};
  json mt;
  mt["C"] = detail::matrix_to_json(m.Cmat);
  json tmats = json::array();
  for (const auto& t : m.Tmats) tmats.push_back(detail::matrix_to_json(t));
  mt["T"] = std::move(tmats);
  json biases = json::array();
  for (const auto& b : m.biases) biases.push_back(detail::vector_to_json(b));
  mt["b"] = std::move(biases);
  mt["gamma"] = m.gammas;
  mt["task_names"] = m.task_names;
  mt["train_target_means"] = m.train_target_means;
  json parts = json::array();
  for (const auto& pe : m.ensembles) parts.push_back(export_partitions(pe));
  mt["partitions"] = std::move(parts);
  j["multitask"] = std::move(mt);
  return j;
}

inline bool is_multitask_model_json(const json& j) { return j.contains("multitask"); }

inline JoplenModel model_from_json(const json& j) {
  if (!j.contains("version") || j["version"] != 1)
    throw std::runtime_error("model file: unsupported version (expected 1)");
  if (is_multitask_model_json(j))
    throw std::runtime_error("model file: multitask model where single-task expected");
  const json& pen = j.at("penalty");
  JoplenModel m;
  m.ensemble = import_partitions(j.at("partitions"));
  m.standardizer = detail::standardizer_from_json(j.at("standardizer"));
  m.leaf_mode = leaf_mode_from_string(j.at("leaf_mode").get<std::string>());
  m.loss = loss_from_string(j.at("loss").get<std::string>());
  m.W = detail::matrix_from_json(j.at("W"), "W");
  m.b = detail::vector_from_json(j.at("b"), "b");
  m.train_target_mean = j.at("train_target_mean").get<double>();
  m.penalty = penalty_kind_from_string(pen.at("kind").get<std::string>());
  m.lambda = pen.at("lambda").get<double>();
  m.frobenius_weight = pen.at("frobenius_weight").get<double>();
  m.penalize_bias_frobenius = pen.at("penalize_bias_frobenius").get<bool>();
  m.penalize_weights_frobenius = pen.value("penalize_weights_frobenius", true);
  m.laplacian_weight = pen.at("laplacian_weight").get<double>();
  if (m.W.rows() != m.n_features() && !(m.W.size() == 0 && m.n_features() == 0))
    throw std::runtime_error("model file: W shape does not match the partitions");
  if (m.W.cols() != m.total_cells() || m.b.size() != m.total_cells())
    throw std::runtime_error("model file: parameter shape does not match the partitions");
  return m;
}

inline MultitaskModel multitask_model_from_json(const json& j) {
  if (!j.contains("version") || j["version"] != 1)
    throw std::runtime_error("model file: unsupported version (expected 1)");
  if (!is_multitask_model_json(j))
    throw std::runtime_error("model file: single-task model where multitask expected");
  const json& mt = j.at("multitask");
  MultitaskModel m;
  m.standardizer = detail::standardizer_from_json(j.at("standardizer"));
  m.loss = loss_from_string(j.at("loss").get<std::string>());
  const json& pen = j.at("penalty");
  m.lambda_common = pen.at("lambda_common").get<double>();
  m.lambda_task = pen.at("lambda_task").get<double>();
  m.frobenius_weight = pen.at("frobenius_weight").get<double>();
  m.Cmat = detail::matrix_from_json(mt.at("C"), "multitask.C");
  for (const auto& t : mt.at("T"))
    m.Tmats.push_back(detail::matrix_from_json(t, "multitask.T"));
  for (const auto& b : mt.at("b"))
    m.biases.push_back(detail::vector_from_json(b, "multitask.b"));
  m.gammas = mt.at("gamma").get<std::vector<double>>();
  m.task_names = mt.at("task_names").get<std::vector<std::string>>();
  m.train_target_means = mt.at("train_target_means").get<std::vector<double>>();
  for (const auto& p : mt.at("partitions")) m.ensembles.push_back(import_partitions(p));
  if (m.ensembles.size() != m.biases.size() || m.ensembles.size() != m.Tmats.size() ||
      m.ensembles.size() != m.gammas.size())
    throw std::runtime_error("model file: inconsistent multitask block counts");
  return m;
}

inline void save_model(const JoplenModel& m, const std::string& path) {
  write_json_file(path, model_to_json(m));
}
inline void save_model(const MultitaskModel& m, const std::string& path) {
  write_json_file(path, model_to_json(m));
}

using AnyModel = std::variant<JoplenModel, MultitaskModel>;

inline AnyModel load_model(const std::string& path) {
  const json j = read_json_file(path);
  if (is_multitask_model_json(j)) return multitask_model_from_json(j);
  return model_from_json(j);
}

}  // namespace joplen
