// joplen command-line interface: build partitions, fit and evaluate models,
// report selected features, and run the bundled synthetic experiments.
//
// Exit codes: 0 success, 2 usage/config error, 1 runtime error.

#include <CLI11.hpp>

#include <joplen/experiments.hpp>
#include <joplen/joplen.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace joplen;

std::string iso8601_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json timing_block(double wall_seconds) {
  return json{{"timestamp", iso8601_now()}, {"wall_time_sec", wall_seconds}};
}

// Values resolve as: flag on the command line > config file entry > default.
struct Overrides {
  json cfg;
  CLI::App* cmd = nullptr;

  void load(const std::string& path) {
    if (!path.empty()) cfg = read_json_file(path);
  }

  static std::string flag_of(const std::string& key) {
    std::string f = "--";
    for (char c : key) f.push_back(c == '_' ? '-' : c);
    return f;
  }

  bool on_cli(const std::string& key) const {
    const CLI::Option* opt = cmd->get_option_no_throw(flag_of(key));
    return opt != nullptr && opt->count() > 0;
  }

  template <class T>
  void pull(const std::string& key, T& var) const {
    if (cfg.is_null() || !cfg.contains(key) || cfg.at(key).is_null()) return;
    if (on_cli(key)) return;
    var = cfg.at(key).get<T>();
  }

  void pull_opt(const std::string& key, std::optional<double>& var) const {
    if (on_cli(key)) return;
    if (cfg.is_null() || !cfg.contains(key)) return;
    if (cfg.at(key).is_null())
      var.reset();
    else
      var = cfg.at(key).get<double>();
  }
};

void require_set(const std::string& value, const std::string& flag) {
  if (value.empty()) throw std::invalid_argument("missing required option " + flag);
}

json opt_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

// --- CSV helpers ------------------------------------------------------------

Matrix load_feature_matrix(const std::string& path, const std::string& target) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path + ": empty file");
  const auto header = joplen::detail::split_line(line);
  Index target_idx = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (!target.empty() && header[j] == target) target_idx = static_cast<Index>(j);
  if (!target.empty() && target_idx < 0)
    throw std::invalid_argument(path + ": target column '" + target + "' not found");

  std::vector<std::vector<double>> rows;
  Index row_no = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    ++row_no;
    const auto cells = joplen::detail::split_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error("row " + std::to_string(row_no) + ": ragged row");
    std::vector<double> parsed;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (static_cast<Index>(j) == target_idx) continue;
      parsed.push_back(joplen::detail::parse_cell(cells[j], row_no, header[j]));
    }
    rows.push_back(std::move(parsed));
  }
  const Index n = static_cast<Index>(rows.size());
  const Index d = n > 0 ? static_cast<Index>(rows[0].size()) : 0;
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j)
      x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return x;
}

void write_predictions_csv(const std::string& path, const Vector& yhat) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "prediction\n";
  for (Index i = 0; i < yhat.size(); ++i)
    os << joplen::detail::format_double(yhat[i]) << '\n';
}

// --- shared solver flag plumbing ---------------------------------------------

struct SolverFlags {
  int max_iters = 2000;
  double rel_tol = 1e-8;
  int tol_window = 5;
  std::optional<double> init_step;
  double init_step_raw = 0.0;
  double backtrack_factor = 0.5;
  bool no_restart = false;
  std::uint64_t seed = 0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--max-iters", max_iters, "solver iteration budget");
    cmd->add_option("--rel-tol", rel_tol, "relative objective-change tolerance");
    cmd->add_option("--tol-window", tol_window, "consecutive small changes to converge");
    cmd->add_option("--init-step", init_step_raw, "initial step (default: Lipschitz estimate)");
    cmd->add_option("--backtrack-factor", backtrack_factor, "step shrink factor in (0,1)");
    cmd->add_flag("--no-restart", no_restart, "disable momentum restarts");
    cmd->add_option("--seed", seed, "seed for every random stage");
  }

  void merge(const Overrides& ov) {
    ov.pull("max_iters", max_iters);
    ov.pull("rel_tol", rel_tol);
    ov.pull("tol_window", tol_window);
    ov.pull("backtrack_factor", backtrack_factor);
    ov.pull("no_restart", no_restart);
    ov.pull("seed", seed);
    if (ov.on_cli("init_step"))
      init_step = init_step_raw;
    else
      ov.pull_opt("init_step", init_step);
  }

  SolverConfig to_solver() const {
    SolverConfig s;
    s.max_iters = max_iters;
    s.rel_tol = rel_tol;
    s.tol_window = tol_window;
    s.init_step = init_step;
    s.backtrack_factor = backtrack_factor;
    s.restart = !no_restart;
    s.seed = seed;
    return s;
  }

  void to_config(json& cfg) const {
    cfg["max_iters"] = max_iters;
    cfg["rel_tol"] = rel_tol;
    cfg["tol_window"] = tol_window;
    cfg["init_step"] = opt_json(init_step);
    cfg["backtrack_factor"] = backtrack_factor;
    cfg["no_restart"] = no_restart;
    cfg["seed"] = seed;
  }
};

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "regression") return TaskKind::regression;
  if (s == "classification") return TaskKind::classification;
  throw std::invalid_argument("unknown task kind '" + s + "'");
}

// --- partition ----------------------------------------------------------------

struct PartitionArgs {
  std::string config, data, target, method = "voronoi", in, out;
  std::string task = "regression";
  Index partitions = 10, cells = 16, max_leaves = 16, min_leaf = 1;
  double feature_subsample = 1.0, learn_rate = 0.1;
  std::uint64_t seed = 0;
};

void run_partition(PartitionArgs& a, Overrides& ov) {
  ov.load(a.config);
  ov.pull("data", a.data);
  ov.pull("target", a.target);
  ov.pull("method", a.method);
  ov.pull("in", a.in);
  ov.pull("out", a.out);
  ov.pull("task", a.task);
  ov.pull("partitions", a.partitions);
  ov.pull("cells", a.cells);
  ov.pull("max_leaves", a.max_leaves);
  ov.pull("min_leaf", a.min_leaf);
  ov.pull("feature_subsample", a.feature_subsample);
  ov.pull("learn_rate", a.learn_rate);
  ov.pull("seed", a.seed);
  require_set(a.out, "--out");

  std::optional<PartitionEnsemble> pe;
  if (a.method == "import") {
    require_set(a.in, "--in");
    pe = import_partitions(read_json_file(a.in));
  } else {
    require_set(a.data, "--data");
    require_set(a.target, "--target");
    const Dataset ds = load_csv(a.data, a.target, task_kind_from_string(a.task));
    if (a.method == "voronoi") {
      pe = make_voronoi(ds, a.partitions, a.cells, a.seed);
    } else if (a.method == "cart-bag" || a.method == "cart-boost") {
      CartParams params;
      params.max_leaves = a.max_leaves;
      params.min_leaf = a.min_leaf;
      params.feature_subsample = a.feature_subsample;
      pe = make_forest(ds, a.partitions, params,
                       a.method == "cart-bag" ? ForestMode::bagged : ForestMode::boosted,
                       a.learn_rate, a.seed);
    } else {
      throw std::invalid_argument("unknown method '" + a.method +
                                  "' (voronoi, cart-bag, cart-boost, import)");
    }
  }
  write_json_file(a.out, export_partitions(*pe));

  json cfg{{"data", a.data},       {"target", a.target},
           {"method", a.method},   {"in", a.in},
           {"out", a.out},         {"task", a.task},
           {"partitions", a.partitions}, {"cells", a.cells},
           {"max_leaves", a.max_leaves}, {"min_leaf", a.min_leaf},
           {"feature_subsample", a.feature_subsample}, {"learn_rate", a.learn_rate},
           {"seed", a.seed}};
  json out;
  out["n_partitions"] = pe->n_partitions();
  out["total_cells"] = pe->total_cells();
  json per = json::array();
  for (const auto& p : pe->partitions()) per.push_back(p.n_cells());
  out["cells_per_partition"] = std::move(per);
  out["config"] = std::move(cfg);
  std::cout << dump_json(out);
}

// --- fit -----------------------------------------------------------------------

struct FitArgs {
  std::string config, data, target, partitions_file, out;
  std::string task = "regression", leaf = "linear", penalty = "none";
  double lambda = 0.0, frobenius = 0.0, laplacian = 0.0;
  bool no_penalize_bias = false;
  bool no_penalize_weights = false;
  Index laplacian_k = 10;
  std::optional<double> laplacian_bandwidth;
  double laplacian_bandwidth_raw = 0.0;
  SolverFlags solver;
};

json fit_args_config(const FitArgs& a) {
  json cfg{{"data", a.data},
           {"target", a.target},
           {"partitions_file", a.partitions_file},
           {"out", a.out},
           {"task", a.task},
           {"leaf", a.leaf},
           {"penalty", a.penalty},
           {"lambda", a.lambda},
           {"frobenius", a.frobenius},
           {"no_penalize_bias", a.no_penalize_bias},
           {"no_penalize_weights", a.no_penalize_weights},
           {"laplacian", a.laplacian},
           {"laplacian_k", a.laplacian_k},
           {"laplacian_bandwidth", opt_json(a.laplacian_bandwidth)}};
  a.solver.to_config(cfg);
  return cfg;
}

void run_fit(FitArgs& a, Overrides& ov) {
  ov.load(a.config);
  ov.pull("data", a.data);
  ov.pull("target", a.target);
  ov.pull("partitions_file", a.partitions_file);
  ov.pull("out", a.out);
  ov.pull("task", a.task);
  ov.pull("leaf", a.leaf);
  ov.pull("penalty", a.penalty);
  ov.pull("lambda", a.lambda);
  ov.pull("frobenius", a.frobenius);
  ov.pull("no_penalize_bias", a.no_penalize_bias);
  ov.pull("no_penalize_weights", a.no_penalize_weights);
  ov.pull("laplacian", a.laplacian);
  ov.pull("laplacian_k", a.laplacian_k);
  if (ov.on_cli("laplacian_bandwidth"))
    a.laplacian_bandwidth = a.laplacian_bandwidth_raw;
  else
    ov.pull_opt("laplacian_bandwidth", a.laplacian_bandwidth);
  a.solver.merge(ov);
  require_set(a.data, "--data");
  require_set(a.target, "--target");
  require_set(a.partitions_file, "--partitions-file");
  require_set(a.out, "--out");

  const TaskKind kind = task_kind_from_string(a.task);
  const Dataset train = load_csv(a.data, a.target, kind);
  const PartitionEnsemble pe =
      import_partitions(read_json_file(a.partitions_file), train.n_features());

  FitConfig cfg;
  cfg.loss = (kind == TaskKind::classification) ? LossKind::logistic : LossKind::squared;
  cfg.leaf_mode = leaf_mode_from_string(a.leaf);
  cfg.penalty = penalty_kind_from_string(a.penalty);
  cfg.lambda = a.lambda;
  cfg.frobenius_weight = a.frobenius;
  cfg.penalize_bias_frobenius = !a.no_penalize_bias;
  cfg.penalize_weights_frobenius = !a.no_penalize_weights;
  cfg.laplacian_weight = a.laplacian;
  cfg.laplacian_k = a.laplacian_k;
  cfg.laplacian_bandwidth = a.laplacian_bandwidth;
  cfg.solver = a.solver.to_solver();

  const JoplenModel model = fit_model(train, pe, cfg);
  save_model(model, a.out);

  json rep;
  rep["final_objective"] = model.report.objective_trace.back();
  rep["penalty_value"] =
      (cfg.leaf_mode == LeafMode::linear)
          ? penalty_value(ProxConfig{cfg.penalty, cfg.lambda, 0, 0, {}}, model.W)
          : 0.0;
  rep["n_iters"] = model.report.n_iters;
  rep["termination"] = to_string(model.report.termination);
  rep["backtracks"] = model.report.backtracks;
  rep["leaf_mode"] = to_string(model.leaf_mode);
  rep["loss"] = to_string(model.loss);
  rep["model_file"] = a.out;
  rep["config"] = fit_args_config(a);
  rep["timing"] = timing_block(model.report.wall_time_sec);
  std::cout << dump_json(rep);
}

// --- fit-mt ---------------------------------------------------------------------

struct FitMtArgs {
  std::string config, manifest, out;
  Index partitions = 8, cells = 12;
  double lambda_common = 0.0, lambda_task = 0.0, frobenius = 0.0, laplacian = 0.0;
  Index laplacian_k = 10;
  std::optional<double> laplacian_bandwidth;
  double laplacian_bandwidth_raw = 0.0;
  SolverFlags solver;
};

void run_fit_mt(FitMtArgs& a, Overrides& ov) {
  ov.load(a.config);
  ov.pull("manifest", a.manifest);
  ov.pull("out", a.out);
  ov.pull("partitions", a.partitions);
  ov.pull("cells", a.cells);
  ov.pull("lambda_common", a.lambda_common);
  ov.pull("lambda_task", a.lambda_task);
  ov.pull("frobenius", a.frobenius);
  ov.pull("laplacian", a.laplacian);
  ov.pull("laplacian_k", a.laplacian_k);
  if (ov.on_cli("laplacian_bandwidth"))
    a.laplacian_bandwidth = a.laplacian_bandwidth_raw;
  else
    ov.pull_opt("laplacian_bandwidth", a.laplacian_bandwidth);
  a.solver.merge(ov);
  require_set(a.manifest, "--manifest");
  require_set(a.out, "--out");

  const json man = read_json_file(a.manifest);
  if (!man.contains("tasks") || !man["tasks"].is_array() || man["tasks"].empty())
    throw std::invalid_argument(a.manifest + ": needs a non-empty 'tasks' array");
  const std::string target = man.value("target", "y");
  const std::filesystem::path base = std::filesystem::path(a.manifest).parent_path();

  MultitaskDataset mt;
  for (const auto& jt : man["tasks"]) {
    std::filesystem::path p = jt.at("data").get<std::string>();
    if (p.is_relative()) p = base / p;
    mt.tasks.push_back(load_csv(p.string(), target, TaskKind::regression));
    mt.task_weights.push_back(jt.value("gamma", 1.0));
    mt.task_names.push_back(jt.value("name", "task" + std::to_string(mt.tasks.size() - 1)));
  }
  validate_multitask(mt);

  std::vector<PartitionEnsemble> pes;
  for (Index t = 0; t < mt.n_tasks(); ++t)
    pes.push_back(make_voronoi(mt.tasks[static_cast<std::size_t>(t)], a.partitions, a.cells,
                               derive_seed(a.solver.seed, "task_partitions",
                                           static_cast<std::uint64_t>(t))));

  MultitaskFitConfig cfg;
  cfg.lambda_common = a.lambda_common;
  cfg.lambda_task = a.lambda_task;
  cfg.frobenius_weight = a.frobenius;
  cfg.laplacian_weight = a.laplacian;
  cfg.laplacian_k = a.laplacian_k;
  cfg.laplacian_bandwidth = a.laplacian_bandwidth;
  cfg.solver = a.solver.to_solver();

  const MultitaskModel model = fit_multitask_model(mt, std::move(pes), cfg);
  save_model(model, a.out);

  json cfg_out{{"manifest", a.manifest},
               {"out", a.out},
               {"partitions", a.partitions},
               {"cells", a.cells},
               {"lambda_common", a.lambda_common},
               {"lambda_task", a.lambda_task},
               {"frobenius", a.frobenius},
               {"laplacian", a.laplacian},
               {"laplacian_k", a.laplacian_k},
               {"laplacian_bandwidth", opt_json(a.laplacian_bandwidth)}};
  a.solver.to_config(cfg_out);
  json rep;
  rep["final_objective"] = model.report.objective_trace.back();
  rep["n_iters"] = model.report.n_iters;
  rep["termination"] = to_string(model.report.termination);
  rep["backtracks"] = model.report.backtracks;
  rep["n_tasks"] = model.n_tasks();
  rep["model_file"] = a.out;
  rep["config"] = std::move(cfg_out);
  rep["timing"] = timing_block(model.report.wall_time_sec);
  std::cout << dump_json(rep);
}

// --- predict / eval ---------------------------------------------------------------

struct PredictArgs {
  std::string config, model, data, target, out;
  Index task_index = 0;
};

Vector predict_any(const AnyModel& any, const Matrix& X, Index task_index) {
  if (std::holds_alternative<JoplenModel>(any)) return predict(std::get<JoplenModel>(any), X);
  return predict_task(std::get<MultitaskModel>(any), task_index, X);
}

void run_predict(PredictArgs& a, Overrides& ov) {
  ov.load(a.config);
  ov.pull("model", a.model);
  ov.pull("data", a.data);
  ov.pull("target", a.target);
  ov.pull("out", a.out);
  ov.pull("task_index", a.task_index);
  require_set(a.model, "--model");
  require_set(a.data, "--data");
  require_set(a.out, "--out");

  const AnyModel any = load_model(a.model);
  const Matrix X = load_feature_matrix(a.data, a.target);
  write_predictions_csv(a.out, predict_any(any, X, a.task_index));
  json out{{"rows", X.rows()},
           {"out", a.out},
           {"config", json{{"model", a.model},
                           {"data", a.data},
                           {"target", a.target},
                           {"out", a.out},
                           {"task_index", a.task_index}}}};
  std::cout << dump_json(out);
}

void run_eval(PredictArgs& a, Overrides& ov) {
  ov.load(a.config);
  ov.pull("model", a.model);
  ov.pull("data", a.data);
  ov.pull("target", a.target);
  ov.pull("out", a.out);
  ov.pull("task_index", a.task_index);
  require_set(a.model, "--model");
  require_set(a.data, "--data");
  require_set(a.target, "--target");

  const AnyModel any = load_model(a.model);
  const bool is_mt = std::holds_alternative<MultitaskModel>(any);
  const LossKind loss = is_mt ? std::get<MultitaskModel>(any).loss
                              : std::get<JoplenModel>(any).loss;
  const TaskKind kind =
      (loss == LossKind::logistic) ? TaskKind::classification : TaskKind::regression;
  const Dataset ds = load_csv(a.data, a.target, kind);
  const Vector yhat = predict_any(any, ds.features, a.task_index);
  const double train_mean =
      is_mt ? std::get<MultitaskModel>(any)
                  .train_target_means[static_cast<std::size_t>(a.task_index)]
            : std::get<JoplenModel>(any).train_target_mean;

  json out;
  out["mse"] = mse(ds.targets, yhat);
  if (kind == TaskKind::regression)
    out["nmse"] = nmse(ds.targets, yhat, train_mean);
  else
    out["zero_one"] = zero_one(ds.targets, yhat);
  out["config"] = json{{"model", a.model},
                       {"data", a.data},
                       {"target", a.target},
                       {"out", a.out},
                       {"task_index", a.task_index}};
  const std::string text = dump_json(out);
  if (!a.out.empty()) {
    std::ofstream os(a.out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + a.out);
    os << text;
  }
  std::cout << text;
}

// --- features ----------------------------------------------------------------------

struct FeaturesArgs {
  std::string config, model, out;
  double threshold = 1e-6;
};

json feature_report_json(const FeatureReport& r) {
  json out;
  out["threshold"] = r.threshold;
  out["common_norms"] = detail::vector_to_json(r.common_norms);
  out["selected_common"] = r.selected_common;
  json tn = json::array();
  for (const auto& v : r.task_norms) tn.push_back(detail::vector_to_json(v));
  out["task_norms"] = std::move(tn);
  out["selected_task"] = r.selected_task;
  return out;
}

void run_features(FeaturesArgs& a, Overrides& ov) {
  ov.load(a.config);
  ov.pull("model", a.model);
  ov.pull("out", a.out);
  ov.pull("threshold", a.threshold);
  require_set(a.model, "--model");

  const AnyModel any = load_model(a.model);
  const FeatureReport r = std::holds_alternative<JoplenModel>(any)
                              ? feature_report(std::get<JoplenModel>(any), a.threshold)
                              : feature_report(std::get<MultitaskModel>(any), a.threshold);
  json out = feature_report_json(r);
  out["config"] = json{{"model", a.model}, {"out", a.out}, {"threshold", a.threshold}};
  const std::string text = dump_json(out);
  if (!a.out.empty()) {
    std::ofstream os(a.out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + a.out);
    os << text;
  }
  std::cout << text;
}

// --- synth-subspace -----------------------------------------------------------------

struct SynthSubspaceArgs {
  std::string config, outdir;
  Index n_total = 10000, n_train = 100, partitions = 7, cells = 5;
  double noise = 0.2, lambda_frobenius = 0.0075, lambda_nuclear = 0.012;
  double lambda_bias_ridge = 0.0075;
  std::uint64_t seed = 0;
  int max_iters = 4000;
  double rel_tol = 1e-10;
};

void run_synth_subspace(SynthSubspaceArgs& a, Overrides& ov) {
  ov.load(a.config);
  ov.pull("outdir", a.outdir);
  ov.pull("n_total", a.n_total);
  ov.pull("n_train", a.n_train);
  ov.pull("partitions", a.partitions);
  ov.pull("cells", a.cells);
  ov.pull("noise", a.noise);
  ov.pull("lambda_frobenius", a.lambda_frobenius);
  ov.pull("lambda_nuclear", a.lambda_nuclear);
  ov.pull("lambda_bias_ridge", a.lambda_bias_ridge);
  ov.pull("seed", a.seed);
  ov.pull("max_iters", a.max_iters);
  ov.pull("rel_tol", a.rel_tol);
  require_set(a.outdir, "--outdir");
  std::filesystem::create_directories(a.outdir);
  const auto path = [&](const char* name) {
    return (std::filesystem::path(a.outdir) / name).string();
  };

  SubspaceConfig cfg;
  cfg.n_total = a.n_total;
  cfg.n_train = a.n_train;
  cfg.noise_std = a.noise;
  cfg.seed = a.seed;
  cfg.n_partitions = a.partitions;
  cfg.cells = a.cells;
  cfg.lambda_frobenius = a.lambda_frobenius;
  cfg.lambda_nuclear = a.lambda_nuclear;
  cfg.lambda_bias_ridge = a.lambda_bias_ridge;
  cfg.solver.max_iters = a.max_iters;
  cfg.solver.rel_tol = a.rel_tol;
  cfg.solver.seed = a.seed;

  const auto t0 = std::chrono::steady_clock::now();
  const SubspaceResult res = run_subspace_experiment(cfg);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  save_csv(res.train, path("train.csv"));
  save_csv(res.test, path("test.csv"));
  save_model(res.model_frobenius, path("model_frobenius.json"));
  save_model(res.model_nuclear, path("model_nuclear.json"));

  json cfg_out{{"outdir", a.outdir},
               {"n_total", a.n_total},
               {"n_train", a.n_train},
               {"partitions", a.partitions},
               {"cells", a.cells},
               {"noise", a.noise},
               {"lambda_frobenius", a.lambda_frobenius},
               {"lambda_nuclear", a.lambda_nuclear},
               {"lambda_bias_ridge", a.lambda_bias_ridge},
               {"seed", a.seed},
               {"max_iters", a.max_iters},
               {"rel_tol", a.rel_tol}};
  write_json_file(path("data.json"),
                  json{{"generator", "synth_subspace"},
                       {"n_total", a.n_total},
                       {"n_train", a.n_train},
                       {"noise_std", a.noise},
                       {"seed", a.seed},
                       {"target", "y = sin(pi*(x1+x2)) + eps"}});

  json cmp;
  cmp["mse_frobenius"] = res.mse_frobenius;
  cmp["mse_nuclear"] = res.mse_nuclear;
  cmp["singular_values_frobenius"] = detail::vector_to_json(res.singular_values_frobenius);
  cmp["singular_values_nuclear"] = detail::vector_to_json(res.singular_values_nuclear);
  cmp["top_left_singular_vector_nuclear"] =
      detail::vector_to_json(res.top_left_singular_vector_nuclear);
  cmp["cos_diagonal"] = res.cos_diagonal;
  cmp["config"] = cfg_out;
  write_json_file(path("comparison.json"), cmp);

  cmp["timing"] = timing_block(wall);
  std::cout << dump_json(cmp);
}

// --- synth-mt ------------------------------------------------------------------------

struct SynthMtArgs {
  std::string config, outdir;
  Index tasks = 3, features = 20, n_common = 2, n_specific = 1, n_per_task = 500;
  double noise = 0.1;
  std::uint64_t seed = 0;
};

void run_synth_mt(SynthMtArgs& a, Overrides& ov) {
  ov.load(a.config);
  ov.pull("outdir", a.outdir);
  ov.pull("tasks", a.tasks);
  ov.pull("features", a.features);
  ov.pull("n_common", a.n_common);
  ov.pull("n_specific", a.n_specific);
  ov.pull("n_per_task", a.n_per_task);
  ov.pull("noise", a.noise);
  ov.pull("seed", a.seed);
  require_set(a.outdir, "--outdir");
  std::filesystem::create_directories(a.outdir);

  std::vector<Index> common;
  for (Index j = 0; j < a.n_common; ++j) common.push_back(j);
  std::vector<std::vector<Index>> specific;
  for (Index t = 0; t < a.tasks; ++t) {
    std::vector<Index> sp;
    for (Index j = 0; j < a.n_specific; ++j)
      sp.push_back(a.n_common + t * a.n_specific + j);
    specific.push_back(std::move(sp));
  }

  const SynthMultitask synth = synth_multitask_sparse(a.tasks, a.features, common, specific,
                                                      a.n_per_task, a.noise, a.seed);

  json manifest;
  manifest["target"] = "y";
  json tasks = json::array();
  json recipe = json::array();
  for (Index t = 0; t < a.tasks; ++t) {
    const std::string name = synth.data.task_names[static_cast<std::size_t>(t)];
    const std::string file = name + ".csv";
    save_csv(synth.data.tasks[static_cast<std::size_t>(t)],
             (std::filesystem::path(a.outdir) / file).string());
    tasks.push_back(json{{"name", name},
                         {"data", file},
                         {"gamma", synth.data.task_weights[static_cast<std::size_t>(t)]}});
    json terms = json::array();
    for (const auto& term : synth.recipe.per_task[static_cast<std::size_t>(t)])
      terms.push_back(json{{"feature", term.feature},
                           {"omega", term.omega},
                           {"phase", term.phase},
                           {"amplitude", term.amplitude}});
    recipe.push_back(std::move(terms));
  }
  manifest["tasks"] = std::move(tasks);
  write_json_file((std::filesystem::path(a.outdir) / "manifest.json").string(), manifest);

  json truth;
  truth["generator"] = "synth_multitask_sparse";
  truth["common_features"] = common;
  truth["specific_features"] = specific;
  truth["noise_std"] = a.noise;
  truth["seed"] = a.seed;
  truth["recipe"] = std::move(recipe);
  write_json_file((std::filesystem::path(a.outdir) / "truth.json").string(), truth);

  json out;
  out["manifest"] = (std::filesystem::path(a.outdir) / "manifest.json").string();
  out["config"] = json{{"outdir", a.outdir},         {"tasks", a.tasks},
                       {"features", a.features},     {"n_common", a.n_common},
                       {"n_specific", a.n_specific}, {"n_per_task", a.n_per_task},
                       {"noise", a.noise},           {"seed", a.seed}};
  std::cout << dump_json(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joplen: jointly optimized piecewise-linear ensembles"};
  app.require_subcommand(1);

  PartitionArgs pa;
  Overrides pov;
  auto* cmd_partition = app.add_subcommand("partition", "build or import a partition ensemble");
  cmd_partition->add_option("--config", pa.config, "JSON config file (flags override)");
  cmd_partition->add_option("--data", pa.data, "training CSV");
  cmd_partition->add_option("--target", pa.target, "target column name");
  cmd_partition->add_option("--task", pa.task, "regression|classification");
  cmd_partition->add_option("--method", pa.method, "voronoi|cart-bag|cart-boost|import");
  cmd_partition->add_option("--partitions", pa.partitions, "number of partitions");
  cmd_partition->add_option("--cells", pa.cells, "cells per voronoi partition");
  cmd_partition->add_option("--max-leaves", pa.max_leaves, "tree leaf budget");
  cmd_partition->add_option("--min-leaf", pa.min_leaf, "minimum samples per leaf");
  cmd_partition->add_option("--feature-subsample", pa.feature_subsample,
                            "fraction of features searched per split");
  cmd_partition->add_option("--learn-rate", pa.learn_rate, "boosting learn rate");
  cmd_partition->add_option("--in", pa.in, "partition JSON to import");
  cmd_partition->add_option("--seed", pa.seed, "seed");
  cmd_partition->add_option("--out", pa.out, "output partition JSON");
  pov.cmd = cmd_partition;
  cmd_partition->callback([&] { run_partition(pa, pov); });

  FitArgs fa;
  Overrides fov;
  auto* cmd_fit = app.add_subcommand("fit", "fit a model on fixed partitions");
  cmd_fit->add_option("--config", fa.config, "JSON config file (flags override)");
  cmd_fit->add_option("--data", fa.data, "training CSV");
  cmd_fit->add_option("--target", fa.target, "target column name");
  cmd_fit->add_option("--task", fa.task, "regression|classification");
  cmd_fit->add_option("--partitions-file", fa.partitions_file, "partition JSON");
  cmd_fit->add_option("--leaf", fa.leaf, "linear|constant");
  cmd_fit->add_option("--penalty", fa.penalty, "none|l21|nuclear");
  cmd_fit->add_option("--lambda", fa.lambda, "penalty weight");
  cmd_fit->add_option("--frobenius", fa.frobenius, "squared-Frobenius weight");
  cmd_fit->add_flag("--no-penalize-bias", fa.no_penalize_bias,
                    "exempt biases from the Frobenius term");
  cmd_fit->add_flag("--no-penalize-weights", fa.no_penalize_weights,
                    "exempt weights from the Frobenius term (bias ridge only)");
  cmd_fit->add_option("--laplacian", fa.laplacian, "Laplacian smoothing weight");
  cmd_fit->add_option("--laplacian-k", fa.laplacian_k, "kNN graph neighbours");
  cmd_fit->add_option("--laplacian-bandwidth", fa.laplacian_bandwidth_raw,
                      "RBF bandwidth (default: median edge distance)");
  fa.solver.add_to(cmd_fit);
  cmd_fit->add_option("--out", fa.out, "output model JSON");
  fov.cmd = cmd_fit;
  cmd_fit->callback([&] { run_fit(fa, fov); });

  FitMtArgs ma;
  Overrides mov;
  auto* cmd_fit_mt = app.add_subcommand("fit-mt", "fit a multitask model (dirty-LASSO split)");
  cmd_fit_mt->add_option("--config", ma.config, "JSON config file (flags override)");
  cmd_fit_mt->add_option("--manifest", ma.manifest, "task manifest JSON");
  cmd_fit_mt->add_option("--partitions", ma.partitions, "voronoi partitions per task");
  cmd_fit_mt->add_option("--cells", ma.cells, "cells per partition");
  cmd_fit_mt->add_option("--lambda-common", ma.lambda_common, "shared-block penalty weight");
  cmd_fit_mt->add_option("--lambda-task", ma.lambda_task, "per-task penalty weight");
  cmd_fit_mt->add_option("--frobenius", ma.frobenius, "ridge over all blocks");
  cmd_fit_mt->add_option("--laplacian", ma.laplacian, "per-task Laplacian weight");
  cmd_fit_mt->add_option("--laplacian-k", ma.laplacian_k, "kNN graph neighbours");
  cmd_fit_mt->add_option("--laplacian-bandwidth", ma.laplacian_bandwidth_raw,
                         "RBF bandwidth (default: median edge distance)");
  ma.solver.add_to(cmd_fit_mt);
  cmd_fit_mt->add_option("--out", ma.out, "output model JSON");
  mov.cmd = cmd_fit_mt;
  cmd_fit_mt->callback([&] { run_fit_mt(ma, mov); });

  PredictArgs pra;
  Overrides prov;
  auto* cmd_predict = app.add_subcommand("predict", "write predictions for a CSV");
  cmd_predict->add_option("--config", pra.config, "JSON config file (flags override)");
  cmd_predict->add_option("--model", pra.model, "model JSON");
  cmd_predict->add_option("--data", pra.data, "input CSV");
  cmd_predict->add_option("--target", pra.target, "target column to drop, if present");
  cmd_predict->add_option("--task-index", pra.task_index, "task for multitask models");
  cmd_predict->add_option("--out", pra.out, "output predictions CSV");
  prov.cmd = cmd_predict;
  cmd_predict->callback([&] { run_predict(pra, prov); });

  PredictArgs ea;
  Overrides eov;
  auto* cmd_eval = app.add_subcommand("eval", "evaluate a model on labelled data");
  cmd_eval->add_option("--config", ea.config, "JSON config file (flags override)");
  cmd_eval->add_option("--model", ea.model, "model JSON");
  cmd_eval->add_option("--data", ea.data, "labelled CSV");
  cmd_eval->add_option("--target", ea.target, "target column name");
  cmd_eval->add_option("--task-index", ea.task_index, "task for multitask models");
  cmd_eval->add_option("--out", ea.out, "also write metrics JSON here");
  eov.cmd = cmd_eval;
  cmd_eval->callback([&] { run_eval(ea, eov); });

  FeaturesArgs fea;
  Overrides feov;
  auto* cmd_features = app.add_subcommand("features", "report selected features");
  cmd_features->add_option("--config", fea.config, "JSON config file (flags override)");
  cmd_features->add_option("--model", fea.model, "model JSON");
  cmd_features->add_option("--threshold", fea.threshold, "row-norm selection threshold");
  cmd_features->add_option("--out", fea.out, "also write the report here");
  feov.cmd = cmd_features;
  cmd_features->callback([&] { run_features(fea, feov); });

  SynthSubspaceArgs sa;
  Overrides sov;
  auto* cmd_synth = app.add_subcommand(
      "synth-subspace", "diagonal-subspace data: frobenius vs nuclear comparison");
  cmd_synth->add_option("--config", sa.config, "JSON config file (flags override)");
  cmd_synth->add_option("--outdir", sa.outdir, "output directory");
  cmd_synth->add_option("--n-total", sa.n_total, "total points");
  cmd_synth->add_option("--n-train", sa.n_train, "training points");
  cmd_synth->add_option("--partitions", sa.partitions, "voronoi partitions");
  cmd_synth->add_option("--cells", sa.cells, "cells per partition");
  cmd_synth->add_option("--noise", sa.noise, "target noise std");
  cmd_synth->add_option("--lambda-frobenius", sa.lambda_frobenius, "frobenius weight");
  cmd_synth->add_option("--lambda-nuclear", sa.lambda_nuclear, "nuclear weight");
  cmd_synth->add_option("--lambda-bias-ridge", sa.lambda_bias_ridge,
                        "bias shrinkage in the nuclear fit");
  cmd_synth->add_option("--seed", sa.seed, "seed");
  cmd_synth->add_option("--max-iters", sa.max_iters, "solver iteration budget");
  cmd_synth->add_option("--rel-tol", sa.rel_tol, "solver tolerance");
  sov.cmd = cmd_synth;
  cmd_synth->callback([&] { run_synth_subspace(sa, sov); });

  SynthMtArgs sma;
  Overrides smov;
  auto* cmd_synth_mt =
      app.add_subcommand("synth-mt", "multitask fixture with known feature supports");
  cmd_synth_mt->add_option("--config", sma.config, "JSON config file (flags override)");
  cmd_synth_mt->add_option("--outdir", sma.outdir, "output directory");
  cmd_synth_mt->add_option("--tasks", sma.tasks, "number of tasks");
  cmd_synth_mt->add_option("--features", sma.features, "feature count");
  cmd_synth_mt->add_option("--n-common", sma.n_common, "shared support size");
  cmd_synth_mt->add_option("--n-specific", sma.n_specific, "per-task support size");
  cmd_synth_mt->add_option("--n-per-task", sma.n_per_task, "samples per task");
  cmd_synth_mt->add_option("--noise", sma.noise, "target noise std");
  cmd_synth_mt->add_option("--seed", sma.seed, "seed");
  smov.cmd = cmd_synth_mt;
  cmd_synth_mt->callback([&] { run_synth_mt(sma, smov); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
