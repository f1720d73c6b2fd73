#pragma once

#include <joplen/rng.hpp>
#include <joplen/types.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace joplen {

enum class TaskKind { regression, classification };

/// Immutable tabular dataset. Regression targets are arbitrary reals;
/// classification targets are stored as -1/+1.
struct Dataset {
  Matrix features;  // N x d
  Vector targets;   // N
  std::vector<std::string> feature_names;
  std::string target_name = "y";
  TaskKind kind = TaskKind::regression;

  Index n_samples() const { return features.rows(); }
  Index n_features() const { return features.cols(); }
};

struct MultitaskDataset {
  std::vector<Dataset> tasks;
  std::vector<double> task_weights;  // gamma, one per task, > 0
  std::vector<std::string> task_names;

  Index n_tasks() const { return static_cast<Index>(tasks.size()); }
  Index n_features() const { return tasks.empty() ? 0 : tasks.front().n_features(); }
};

inline void validate_multitask(const MultitaskDataset& mt) {
  if (mt.tasks.empty()) throw std::invalid_argument("multitask dataset needs at least one task");
  if (mt.task_weights.size() != mt.tasks.size() || mt.task_names.size() != mt.tasks.size())
    throw std::invalid_argument("task_weights/task_names must match the number of tasks");
  const Index d = mt.tasks.front().n_features();
  for (std::size_t t = 0; t < mt.tasks.size(); ++t) {
    if (mt.tasks[t].n_features() != d)
      throw std::invalid_argument("all tasks must share n_features");
    if (mt.tasks[t].feature_names != mt.tasks.front().feature_names)
      throw std::invalid_argument("all tasks must share feature_names");
    if (!(mt.task_weights[t] > 0.0))
      throw std::invalid_argument("task weights must be positive");
  }
}

/// Per-column affine rescaling fitted on one dataset (typically the training
/// split) and applied to any other with the same feature layout.
struct Standardizer {
  Vector means;
  Vector stds;  // population convention (1/N); constant columns store 1

  Index n_features() const { return means.size(); }
};

struct SplitSpec {
  double train_frac = 0.8;
  double val_frac = 0.1;
  double test_frac = 0.1;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

inline double parse_cell(const std::string& cell, Index row, const std::string& col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw std::runtime_error("row " + std::to_string(row) + ", column '" + col +
                             "': cannot parse '" + cell + "' as a real number");
  if (!std::isfinite(v))
    throw std::runtime_error("row " + std::to_string(row) + ", column '" + col +
                             "': non-finite value '" + cell + "'");
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline double map_class_label(double raw, Index row) {
  if (raw == 0.0 || raw == -1.0) return -1.0;
  if (raw == 1.0) return 1.0;
  throw std::runtime_error("row " + std::to_string(row) +
                           ": classification label must be one of {0, 1, -1, +1}, got " +
                           format_double(raw));
}

}  // namespace detail

/// Parses a UTF-8 comma-separated file with a header row. Every non-target
/// column must hold finite reals; classification labels {0,1} are remapped to
/// {-1,+1}. Row numbers in error messages are 1-based data rows.
inline Dataset load_csv(const std::string& path, const std::string& target_column,
                        TaskKind kind) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);

  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path + ": empty file");
  const std::vector<std::string> header = detail::split_line(line);

  {
    std::set<std::string> seen;
    for (const auto& name : header)
      if (!seen.insert(name).second)
        throw std::runtime_error(path + ": duplicate column '" + name + "'");
  }

  Index target_idx = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == target_column) target_idx = static_cast<Index>(j);
  if (target_idx < 0)
    throw std::invalid_argument(path + ": target column '" + target_column + "' not found");

  const Index n_cols = static_cast<Index>(header.size());
  std::vector<std::vector<double>> rows;
  Index row_no = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    ++row_no;
    const std::vector<std::string> cells = detail::split_line(line);
    if (static_cast<Index>(cells.size()) != n_cols)
      throw std::runtime_error("row " + std::to_string(row_no) + ": expected " +
                               std::to_string(n_cols) + " cells, got " +
                               std::to_string(cells.size()));
    std::vector<double> parsed(static_cast<std::size_t>(n_cols));
    for (Index j = 0; j < n_cols; ++j)
      parsed[static_cast<std::size_t>(j)] =
          detail::parse_cell(cells[static_cast<std::size_t>(j)], row_no,
                             header[static_cast<std::size_t>(j)]);
    rows.push_back(std::move(parsed));
  }

  const Index n = static_cast<Index>(rows.size());
  const Index d = n_cols - 1;
  Dataset ds;
  ds.kind = kind;
  ds.target_name = target_column;
  ds.features.resize(n, d);
  ds.targets.resize(n);
  for (std::size_t j = 0; j < header.size(); ++j)
    if (static_cast<Index>(j) != target_idx) ds.feature_names.push_back(header[j]);
  for (Index i = 0; i < n; ++i) {
    Index jj = 0;
    for (Index j = 0; j < n_cols; ++j) {
      const double v = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (j == target_idx) {
        ds.targets[i] = (kind == TaskKind::classification)
                            ? detail::map_class_label(v, i + 1)
                            : v;
      } else {
        ds.features(i, jj++) = v;
      }
    }
  }
  return ds;
}

/// Writes features plus the target column; numbers use shortest exact
/// round-trip formatting so load(save(ds)) reproduces every value.
inline void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& name : ds.feature_names) os << name << ',';
  os << ds.target_name << '\n';
  for (Index i = 0; i < ds.n_samples(); ++i) {
    for (Index j = 0; j < ds.n_features(); ++j)
      os << detail::format_double(ds.features(i, j)) << ',';
    os << detail::format_double(ds.targets[i]) << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline Dataset take_rows(const Dataset& ds, const std::vector<Index>& idx) {
  Dataset out;
  out.feature_names = ds.feature_names;
  out.target_name = ds.target_name;
  out.kind = ds.kind;
  out.features.resize(static_cast<Index>(idx.size()), ds.n_features());
  out.targets.resize(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.features.row(static_cast<Index>(i)) = ds.features.row(idx[i]);
    out.targets[static_cast<Index>(i)] = ds.targets[idx[i]];
  }
  return out;
}

/// Random train/val/test split. Val and test sizes are round(N*frac); the
/// remainder goes to train. Row order within each part follows the source.
inline std::array<Dataset, 3> split(const Dataset& ds, const SplitSpec& spec) {
  if (std::abs(spec.train_frac + spec.val_frac + spec.test_frac - 1.0) > 1e-12)
    throw std::invalid_argument("split fractions must sum to 1");
  if (spec.train_frac < 0 || spec.val_frac < 0 || spec.test_frac < 0)
    throw std::invalid_argument("split fractions must be nonnegative");
  const Index n = ds.n_samples();
  if (n < 10) throw std::invalid_argument("split needs at least 10 samples");

  const Index n_val = static_cast<Index>(std::llround(static_cast<double>(n) * spec.val_frac));
  const Index n_test = static_cast<Index>(std::llround(static_cast<double>(n) * spec.test_frac));
  const Index n_train = n - n_val - n_test;
  if (n_train <= 0 || n_val <= 0 || n_test <= 0)
    throw std::invalid_argument("split produced an empty part");

  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  Pcg32 rng(derive_seed(spec.seed, "split"));
  rng.shuffle(perm);

  auto part = [&](Index begin, Index count) {
    std::vector<Index> idx(perm.begin() + begin, perm.begin() + begin + count);
    std::sort(idx.begin(), idx.end());
    return take_rows(ds, idx);
  };
  return {part(0, n_train), part(n_train, n_val), part(n_train + n_val, n_test)};
}

inline Standardizer fit_standardizer(const Dataset& ds) {
  const Index n = ds.n_samples();
  const Index d = ds.n_features();
  if (n == 0) throw std::invalid_argument("cannot standardize an empty dataset");
  Standardizer s;
  s.means.resize(d);
  s.stds.resize(d);
  for (Index j = 0; j < d; ++j) {
    const auto col = ds.features.col(j);
    if (col.minCoeff() == col.maxCoeff()) {
      s.means[j] = col[0];
      s.stds[j] = 1.0;  // constant column: centered to zero, never divided
      continue;
    }
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(n);
    s.means[j] = mean;
    s.stds[j] = std::sqrt(var);
  }
  return s;
}

inline Matrix transform(const Standardizer& s, const Matrix& features) {
  if (features.cols() != s.n_features())
    throw std::invalid_argument("standardizer dimension mismatch");
  return (features.rowwise() - s.means.transpose()).array().rowwise() /
         s.stds.transpose().array();
}

inline Dataset transform(const Standardizer& s, const Dataset& ds) {
  Dataset out = ds;
  out.features = transform(s, ds.features);
  return out;
}

/// Synthetic regression problem whose response varies along the diagonal
/// feature direction only: y = sin(pi*(x1+x2)) + eps on the square [-1,1]^2.
/// Returns (train, test) with n_train and n_total-n_train points.
inline std::pair<Dataset, Dataset> synth_subspace(Index n_train = 100, Index n_total = 10000,
                                                  double noise_std = 0.2,
                                                  std::uint64_t seed = 0) {
  if (n_train <= 0 || n_train >= n_total)
    throw std::invalid_argument("need 0 < n_train < n_total");
  Pcg32 rng(derive_seed(seed, "synth_subspace"));
  Dataset all;
  all.feature_names = {"x1", "x2"};
  all.kind = TaskKind::regression;
  all.features.resize(n_total, 2);
  all.targets.resize(n_total);
  for (Index i = 0; i < n_total; ++i) {
    const double x1 = rng.uniform(-1.0, 1.0);
    const double x2 = rng.uniform(-1.0, 1.0);
    all.features(i, 0) = x1;
    all.features(i, 1) = x2;
    double y = std::sin(std::numbers::pi * (x1 + x2));
    if (noise_std > 0.0) y += rng.normal(0.0, noise_std);
    all.targets[i] = y;
  }
  std::vector<Index> head(static_cast<std::size_t>(n_train));
  std::vector<Index> tail(static_cast<std::size_t>(n_total - n_train));
  for (Index i = 0; i < n_train; ++i) head[static_cast<std::size_t>(i)] = i;
  for (Index i = n_train; i < n_total; ++i) tail[static_cast<std::size_t>(i - n_train)] = i;
  return {take_rows(all, head), take_rows(all, tail)};
}

/// Generation recipe of synth_multitask_sparse: each task's response is a sum
/// of per-feature sine terms over exactly that task's active features.
struct SynthMtRecipe {
  struct Term {
    Index feature = 0;
    double omega = 1.0;
    double phase = 0.0;
    double amplitude = 1.0;
  };
  std::vector<std::vector<Term>> per_task;
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  static double eval(const std::vector<Term>& terms, const RowVector& x) {
    double y = 0.0;
    for (const auto& t : terms)
      y += t.amplitude * std::sin(t.omega * x[t.feature] + t.phase);
    return y;
  }
};

struct SynthMultitask {
  MultitaskDataset data;
  SynthMtRecipe recipe;
};

/// Multitask fixture with known supports: features `common` drive every task,
/// `specific[t]` drives only task t, all other features are pure noise inputs.
inline SynthMultitask synth_multitask_sparse(Index n_tasks, Index d,
                                             const std::vector<Index>& common,
                                             const std::vector<std::vector<Index>>& specific,
                                             Index n_per_task, double noise_std = 0.1,
                                             std::uint64_t seed = 0) {
  if (n_tasks <= 0) throw std::invalid_argument("need at least one task");
  if (static_cast<Index>(specific.size()) != n_tasks)
    throw std::invalid_argument("specific feature sets must match the number of tasks");
  if (n_per_task <= 0) throw std::invalid_argument("n_per_task must be positive");
  for (Index j : common)
    if (j < 0 || j >= d) throw std::invalid_argument("common feature index out of range");
  for (const auto& sp : specific)
    for (Index j : sp) {
      if (j < 0 || j >= d) throw std::invalid_argument("specific feature index out of range");
      if (std::find(common.begin(), common.end(), j) != common.end())
        throw std::invalid_argument("common and specific feature sets must be disjoint");
    }

  SynthMultitask out;
  out.recipe.noise_std = noise_std;
  out.recipe.seed = seed;
  std::vector<std::string> names;
  for (Index j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));

  for (Index t = 0; t < n_tasks; ++t) {
    Pcg32 rng(derive_seed(seed, "synth_mt_task", static_cast<std::uint64_t>(t)));
    std::vector<SynthMtRecipe::Term> terms;
    auto add_terms = [&](const std::vector<Index>& feats) {
      for (Index j : feats) {
        SynthMtRecipe::Term term;
        term.feature = j;
        term.omega = rng.uniform(0.8, 1.6);
        term.phase = rng.uniform(0.0, std::numbers::pi);
        term.amplitude = 1.5;
        terms.push_back(term);
      }
    };
    add_terms(common);
    add_terms(specific[static_cast<std::size_t>(t)]);

    Dataset ds;
    ds.feature_names = names;
    ds.kind = TaskKind::regression;
    ds.features.resize(n_per_task, d);
    ds.targets.resize(n_per_task);
    for (Index i = 0; i < n_per_task; ++i) {
      for (Index j = 0; j < d; ++j) ds.features(i, j) = rng.uniform(-2.0, 2.0);
      double y = SynthMtRecipe::eval(terms, ds.features.row(i));
      if (noise_std > 0.0) y += rng.normal(0.0, noise_std);
      ds.targets[i] = y;
    }
    out.data.tasks.push_back(std::move(ds));
    out.data.task_weights.push_back(1.0);
    out.data.task_names.push_back("task" + std::to_string(t));
    out.recipe.per_task.push_back(std::move(terms));
  }
  validate_multitask(out.data);
  return out;
}

}  // namespace joplen
