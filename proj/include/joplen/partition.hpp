#pragma once

#include <joplen/dataset.hpp>
#include <joplen/json_io.hpp>
#include <joplen/rng.hpp>
#include <joplen/types.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace joplen {

enum class PartitionKind { voronoi, tree };

/// Binary-tree node. Internal nodes have feature >= 0 and both children set;
/// leaves have cell >= 0. Routing rule: x[feature] <= threshold goes left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int cell = -1;

  bool is_leaf() const { return feature < 0; }
};

/// One partition of feature space into n_cells disjoint, exhaustive cells.
/// Voronoi partitions map a point to its nearest center (ties to the lowest
/// center index); tree partitions descend from node 0.
class Partition {
 public:
  static Partition voronoi(Matrix centers) {
    if (centers.rows() == 0) throw std::invalid_argument("voronoi partition needs centers");
    Partition p;
    p.kind_ = PartitionKind::voronoi;
    p.n_cells_ = centers.rows();
    p.centers_ = std::move(centers);
    return p;
  }

  static Partition tree(std::vector<TreeNode> nodes) {
    Partition p;
    p.kind_ = PartitionKind::tree;
    p.nodes_ = std::move(nodes);
    p.n_cells_ = validate_tree(p.nodes_);
    return p;
  }

  PartitionKind kind() const { return kind_; }
  Index n_cells() const { return n_cells_; }
  const Matrix& centers() const { return centers_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  Index assign(const Eigen::Ref<const RowVector>& x) const {
    if (kind_ == PartitionKind::voronoi) {
      Index best = 0;
      double best_d = (centers_.row(0) - x).squaredNorm();
      for (Index c = 1; c < centers_.rows(); ++c) {
        const double d = (centers_.row(c) - x).squaredNorm();
        if (d < best_d) {  // strict: equal distance keeps the lower index
          best_d = d;
          best = c;
        }
      }
      return best;
    }
    int node = 0;
    while (!nodes_[static_cast<std::size_t>(node)].is_leaf()) {
      const TreeNode& nd = nodes_[static_cast<std::size_t>(node)];
      node = (x[nd.feature] <= nd.threshold) ? nd.left : nd.right;
    }
    return nodes_[static_cast<std::size_t>(node)].cell;
  }

 private:
  Partition() = default;

  // Checks the node list forms a single rooted tree (root at index 0) whose
  // leaf cells are exactly 0..L-1. Returns the number of leaves.
  static Index validate_tree(const std::vector<TreeNode>& nodes) {
    if (nodes.empty()) throw std::invalid_argument("tree partition has no nodes");
    std::vector<int> visits(nodes.size(), 0);
    std::vector<int> stack{0};
    std::vector<int> leaf_cells;
    while (!stack.empty()) {
      const int id = stack.back();
      stack.pop_back();
      if (id < 0 || id >= static_cast<int>(nodes.size()))
        throw std::invalid_argument("tree child id " + std::to_string(id) + " out of range");
      if (++visits[static_cast<std::size_t>(id)] > 1)
        throw std::invalid_argument("tree node " + std::to_string(id) +
                                    " reachable more than once");
      const TreeNode& nd = nodes[static_cast<std::size_t>(id)];
      if (nd.is_leaf()) {
        if (nd.cell < 0) throw std::invalid_argument("leaf node without a cell id");
        leaf_cells.push_back(nd.cell);
      } else {
        if (!std::isfinite(nd.threshold))
          throw std::invalid_argument("non-finite threshold in tree node " + std::to_string(id));
        stack.push_back(nd.left);
        stack.push_back(nd.right);
      }
    }
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (visits[i] == 0)
        throw std::invalid_argument("orphan tree node " + std::to_string(i));
    std::sort(leaf_cells.begin(), leaf_cells.end());
    for (std::size_t c = 0; c < leaf_cells.size(); ++c)
      if (leaf_cells[c] != static_cast<int>(c))
        throw std::invalid_argument("leaf cell ids must be 0..L-1 without gaps");
    return static_cast<Index>(leaf_cells.size());
  }

  PartitionKind kind_ = PartitionKind::voronoi;
  Matrix centers_;
  std::vector<TreeNode> nodes_;
  Index n_cells_ = 0;
};

/// P fixed partitions over a shared feature space; flat cell index of
/// (partition p, cell c) is cell_offset(p) + c.
class PartitionEnsemble {
 public:
  PartitionEnsemble() = default;  // empty placeholder, replaced before use

  PartitionEnsemble(std::vector<Partition> partitions, Index n_features)
      : parts_(std::move(partitions)), d_(n_features) {
    if (parts_.empty()) throw std::invalid_argument("ensemble needs at least one partition");
    if (d_ <= 0) throw std::invalid_argument("ensemble needs n_features >= 1");
    offsets_.resize(parts_.size());
    total_cells_ = 0;
    for (std::size_t p = 0; p < parts_.size(); ++p) {
      offsets_[p] = total_cells_;
      total_cells_ += parts_[p].n_cells();
      if (parts_[p].kind() == PartitionKind::voronoi) {
        if (parts_[p].centers().cols() != d_)
          throw std::invalid_argument("voronoi centers do not match n_features");
      } else {
        for (const TreeNode& nd : parts_[p].nodes())
          if (!nd.is_leaf() && nd.feature >= d_)
            throw std::invalid_argument("tree feature index " + std::to_string(nd.feature) +
                                        " out of range for d=" + std::to_string(d_));
      }
    }
  }

  const std::vector<Partition>& partitions() const { return parts_; }
  Index n_partitions() const { return static_cast<Index>(parts_.size()); }
  Index n_features() const { return d_; }
  Index total_cells() const { return total_cells_; }
  Index cell_offset(Index p) const { return offsets_[static_cast<std::size_t>(p)]; }

  Index flat_cell(Index p, const Eigen::Ref<const RowVector>& x) const {
    return cell_offset(p) + parts_[static_cast<std::size_t>(p)].assign(x);
  }

 private:
  std::vector<Partition> parts_;
  Index d_ = 0;
  std::vector<Index> offsets_;
  Index total_cells_ = 0;
};

/// Voronoi ensemble: each partition samples `cells` distinct training rows as
/// centers, without replacement.
inline PartitionEnsemble make_voronoi(const Dataset& ds, Index n_partitions, Index cells,
                                      std::uint64_t seed) {
  const Index n = ds.n_samples();
  if (n_partitions <= 0) throw std::invalid_argument("need at least one partition");
  if (cells <= 0) throw std::invalid_argument("need at least one cell per partition");
  if (cells > n)
    throw std::invalid_argument("cells_per_partition exceeds the number of samples");

  std::vector<Partition> parts;
  for (Index p = 0; p < n_partitions; ++p) {
    Pcg32 rng(derive_seed(seed, "voronoi", static_cast<std::uint64_t>(p)));
    std::vector<Index> order(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(order);

    Matrix centers(cells, ds.n_features());
    Index kept = 0;
    for (Index i = 0; i < n && kept < cells; ++i) {
      const auto row = ds.features.row(order[static_cast<std::size_t>(i)]);
      bool duplicate = false;
      for (Index c = 0; c < kept && !duplicate; ++c)
        duplicate = (centers.row(c) == row);
      if (!duplicate) centers.row(kept++) = row;
    }
    if (kept < cells)
      throw std::invalid_argument("fewer than " + std::to_string(cells) +
                                  " distinct rows available for voronoi centers");
    parts.push_back(Partition::voronoi(std::move(centers)));
  }
  return PartitionEnsemble(std::move(parts), ds.n_features());
}

struct CartParams {
  Index max_leaves = 16;
  Index min_leaf = 1;
  double feature_subsample = 1.0;  // fraction of features searched per node
};

namespace detail {

struct BuildNode {
  std::vector<Index> idx;
  double sse = 0.0;
  bool has_split = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  int left = -1, right = -1;  // build-node ids after a split is applied
};

inline double node_sse(const Matrix&, const Vector& y, const std::vector<Index>& idx) {
  double mean = 0.0;
  for (Index i : idx) mean += y[i];
  mean /= static_cast<double>(idx.size());
  double sse = 0.0;
  for (Index i : idx) {
    const double r = y[i] - mean;
    sse += r * r;
  }
  return sse;
}

// Exhaustive variance-reduction split search over midpoints of consecutive
// distinct values; first best wins (lowest feature, then lowest threshold).
inline void find_best_split(const Matrix& X, const Vector& y, const CartParams& params,
                            Pcg32& rng, BuildNode& node) {
  node.has_split = false;
  const Index n = static_cast<Index>(node.idx.size());
  if (n < 2 * params.min_leaf) return;
  const Index d = X.cols();

  std::vector<Index> feats;
  if (params.feature_subsample >= 1.0) {
    feats.resize(static_cast<std::size_t>(d));
    for (Index j = 0; j < d; ++j) feats[static_cast<std::size_t>(j)] = j;
  } else {
    const Index k = std::max<Index>(
        1, static_cast<Index>(std::llround(params.feature_subsample * static_cast<double>(d))));
    auto sampled = rng.sample_without_replacement(d, k);
    feats.assign(sampled.begin(), sampled.end());
    std::sort(feats.begin(), feats.end());
  }

  const double eps = 1e-12 * (1.0 + std::abs(node.sse));
  double best_gain = 0.0;
  std::vector<Index> order;
  for (Index j : feats) {
    order = node.idx;
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      const double xa = X(a, j), xb = X(b, j);
      return xa < xb || (xa == xb && a < b);
    });
    double sum_left = 0.0, sumsq_left = 0.0;
    double sum_all = 0.0, sumsq_all = 0.0;
    for (Index i : order) {
      sum_all += y[i];
      sumsq_all += y[i] * y[i];
    }
    for (Index s = 1; s < n; ++s) {
      const Index prev = order[static_cast<std::size_t>(s - 1)];
      sum_left += y[prev];
      sumsq_left += y[prev] * y[prev];
      const double a = X(prev, j);
      const double b = X(order[static_cast<std::size_t>(s)], j);
      if (a == b) continue;
      if (s < params.min_leaf || n - s < params.min_leaf) continue;
      const double nl = static_cast<double>(s), nr = static_cast<double>(n - s);
      const double sse_l = sumsq_left - sum_left * sum_left / nl;
      const double sum_r = sum_all - sum_left;
      const double sse_r = (sumsq_all - sumsq_left) - sum_r * sum_r / nr;
      const double gain = node.sse - (sse_l + sse_r);
      if (gain > best_gain && gain > eps) {
        best_gain = gain;
        node.has_split = true;
        node.feature = static_cast<int>(j);
        double thr = 0.5 * (a + b);
        if (!(thr < b)) thr = a;  // keep a <= thr < b under rounding
        node.threshold = thr;
        node.gain = gain;
      }
    }
  }
}

}  // namespace detail

/// Axis-aligned regression tree grown best-first by sum-of-squares reduction.
/// Only positive-gain splits are applied, so constant targets yield one leaf.
inline Partition train_cart(const Matrix& X, const Vector& y, const CartParams& params,
                            std::uint64_t seed) {
  const Index n = X.rows();
  if (params.max_leaves < 2) throw std::invalid_argument("max_leaves must be >= 2");
  if (params.min_leaf < 1) throw std::invalid_argument("min_leaf must be >= 1");
  if (n < 2 * params.min_leaf)
    throw std::invalid_argument("need at least 2*min_leaf training samples");

  Pcg32 rng(derive_seed(seed, "cart"));
  std::vector<detail::BuildNode> nodes;
  nodes.emplace_back();
  nodes[0].idx.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) nodes[0].idx[static_cast<std::size_t>(i)] = i;
  nodes[0].sse = detail::node_sse(X, y, nodes[0].idx);
  detail::find_best_split(X, y, params, rng, nodes[0]);

  // Max-heap of splittable nodes: highest gain first, creation order breaks ties.
  auto cmp = [&](int a, int b) {
    const auto& na = nodes[static_cast<std::size_t>(a)];
    const auto& nb = nodes[static_cast<std::size_t>(b)];
    return na.gain < nb.gain || (na.gain == nb.gain && a > b);
  };
  std::priority_queue<int, std::vector<int>, decltype(cmp)> heap(cmp);
  if (nodes[0].has_split) heap.push(0);

  Index leaves = 1;
  while (leaves < params.max_leaves && !heap.empty()) {
    const int id = heap.top();
    heap.pop();
    const int feature = nodes[static_cast<std::size_t>(id)].feature;
    const double threshold = nodes[static_cast<std::size_t>(id)].threshold;

    detail::BuildNode left, right;
    for (Index i : nodes[static_cast<std::size_t>(id)].idx)
      (X(i, feature) <= threshold ? left.idx : right.idx).push_back(i);
    left.sse = detail::node_sse(X, y, left.idx);
    right.sse = detail::node_sse(X, y, right.idx);
    detail::find_best_split(X, y, params, rng, left);
    detail::find_best_split(X, y, params, rng, right);

    const int left_id = static_cast<int>(nodes.size());
    nodes.push_back(std::move(left));
    const int right_id = static_cast<int>(nodes.size());
    nodes.push_back(std::move(right));
    nodes[static_cast<std::size_t>(id)].left = left_id;
    nodes[static_cast<std::size_t>(id)].right = right_id;
    if (nodes[static_cast<std::size_t>(left_id)].has_split) heap.push(left_id);
    if (nodes[static_cast<std::size_t>(right_id)].has_split) heap.push(right_id);
    ++leaves;
  }

  std::vector<TreeNode> out(nodes.size());
  int next_cell = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].left >= 0) {
      out[i].feature = nodes[i].feature;
      out[i].threshold = nodes[i].threshold;
      out[i].left = nodes[i].left;
      out[i].right = nodes[i].right;
    } else {
      out[i].cell = next_cell++;
    }
  }
  return Partition::tree(std::move(out));
}

inline Partition train_cart(const Dataset& ds, const CartParams& params, std::uint64_t seed) {
  return train_cart(ds.features, ds.targets, params, seed);
}

enum class ForestMode { bagged, boosted };

/// Tree ensemble used purely as a source of partitions: bagged trees fit
/// bootstrap resamples, boosted trees fit residuals of a constant-leaf
/// running prediction. Leaf values are discarded; only the structure stays.
inline PartitionEnsemble make_forest(const Dataset& ds, Index n_partitions,
                                     const CartParams& params, ForestMode mode,
                                     double learn_rate, std::uint64_t seed) {
  if (n_partitions <= 0) throw std::invalid_argument("need at least one partition");
  if (mode == ForestMode::boosted && !(learn_rate > 0.0 && learn_rate <= 1.0) &&
      learn_rate != 0.0)
    throw std::invalid_argument("boosted mode needs learn_rate in (0, 1]");

  const Index n = ds.n_samples();
  std::vector<Partition> parts;
  Vector running = Vector::Zero(n);

  for (Index p = 0; p < n_partitions; ++p) {
    const std::uint64_t tree_seed = derive_seed(seed, "tree", static_cast<std::uint64_t>(p));
    if (mode == ForestMode::bagged) {
      Pcg32 rng(derive_seed(seed, "bootstrap", static_cast<std::uint64_t>(p)));
      Matrix xb(n, ds.n_features());
      Vector yb(n);
      for (Index i = 0; i < n; ++i) {
        const Index k = static_cast<Index>(rng.below(static_cast<std::uint32_t>(n)));
        xb.row(i) = ds.features.row(k);
        yb[i] = ds.targets[k];
      }
      parts.push_back(train_cart(xb, yb, params, tree_seed));
    } else {
      const Vector residual = ds.targets - running;
      Partition tree = train_cart(ds.features, residual, params, tree_seed);
      // constant-leaf update: mean residual per cell, scaled by the learn rate
      Vector cell_sum = Vector::Zero(tree.n_cells());
      Vector cell_count = Vector::Zero(tree.n_cells());
      std::vector<Index> cell_of(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) {
        const Index c = tree.assign(ds.features.row(i));
        cell_of[static_cast<std::size_t>(i)] = c;
        cell_sum[c] += residual[i];
        cell_count[c] += 1.0;
      }
      for (Index i = 0; i < n; ++i) {
        const Index c = cell_of[static_cast<std::size_t>(i)];
        if (cell_count[c] > 0) running[i] += learn_rate * cell_sum[c] / cell_count[c];
      }
      parts.push_back(std::move(tree));
    }
  }
  return PartitionEnsemble(std::move(parts), ds.n_features());
}

// ---------------------------------------------------------------------------
// Partition file schema (version 1):
// {"version":1, "n_features":d, "partitions":[
//    {"kind":"tree", "nodes":[{"id":0,"feature":j,"threshold":t,"left":l,"right":r}
//                             | {"id":m,"leaf":c}, ...]}
//  | {"kind":"voronoi", "centers":[[...], ...]} ]}
// Tree routing convention: x[feature] <= threshold descends to "left".
// ---------------------------------------------------------------------------

inline json export_partitions(const PartitionEnsemble& pe) {
  json out;
  out["version"] = 1;
  out["n_features"] = pe.n_features();
  json parts = json::array();
  for (const Partition& p : pe.partitions()) {
    json jp;
    if (p.kind() == PartitionKind::voronoi) {
      jp["kind"] = "voronoi";
      json centers = json::array();
      for (Index c = 0; c < p.centers().rows(); ++c) {
        json row = json::array();
        for (Index j = 0; j < p.centers().cols(); ++j) row.push_back(p.centers()(c, j));
        centers.push_back(std::move(row));
      }
      jp["centers"] = std::move(centers);
    } else {
      jp["kind"] = "tree";
      json nodes = json::array();
      for (std::size_t i = 0; i < p.nodes().size(); ++i) {
        const TreeNode& nd = p.nodes()[i];
        json jn;
        jn["id"] = static_cast<int>(i);
        if (nd.is_leaf()) {
          jn["leaf"] = nd.cell;
        } else {
          jn["feature"] = nd.feature;
          jn["threshold"] = nd.threshold;
          jn["left"] = nd.left;
          jn["right"] = nd.right;
        }
        nodes.push_back(std::move(jn));
      }
      jp["nodes"] = std::move(nodes);
    }
    parts.push_back(std::move(jp));
  }
  out["partitions"] = std::move(parts);
  return out;
}

namespace detail {

inline Partition import_tree(const json& jp, const std::string& where) {
  if (!jp.contains("nodes") || !jp["nodes"].is_array() || jp["nodes"].empty())
    throw std::runtime_error(where + ": tree partition needs a non-empty 'nodes' array");

  std::map<int, json> by_id;
  std::map<int, int> referenced;  // child id -> reference count
  for (std::size_t i = 0; i < jp["nodes"].size(); ++i) {
    const json& jn = jp["nodes"][i];
    const std::string node_where = where + ".nodes[" + std::to_string(i) + "]";
    if (!jn.contains("id") || !jn["id"].is_number_integer())
      throw std::runtime_error(node_where + ": missing integer 'id'");
    const int id = jn["id"].get<int>();
    if (!by_id.emplace(id, jn).second)
      throw std::runtime_error(node_where + ": duplicate node id " + std::to_string(id));
    if (jn.contains("leaf")) continue;
    for (const char* key : {"feature", "threshold", "left", "right"})
      if (!jn.contains(key))
        throw std::runtime_error(node_where + ": internal node missing '" + std::string(key) + "'");
    referenced[jn["left"].get<int>()]++;
    referenced[jn["right"].get<int>()]++;
  }

  for (const auto& [id, count] : referenced) {
    if (!by_id.count(id))
      throw std::runtime_error(where + ": child id " + std::to_string(id) +
                               " points to a missing node");
    if (count > 1)
      throw std::runtime_error(where + ": node " + std::to_string(id) +
                               " referenced more than once");
  }
  int root = std::numeric_limits<int>::min();
  for (const auto& [id, jn] : by_id) {
    if (referenced.count(id)) continue;
    if (root != std::numeric_limits<int>::min())
      throw std::runtime_error(where + ": multiple root nodes (" + std::to_string(root) +
                               " and " + std::to_string(id) + ")");
    root = id;
  }
  if (root == std::numeric_limits<int>::min())
    throw std::runtime_error(where + ": no root node (cycle)");

  // Map source ids to vector positions. Files whose ids are already
  // 0..M-1 with the root at 0 keep their numbering, so export then import
  // reproduces the node list verbatim; anything else is renumbered preorder.
  std::map<int, int> local;
  const bool canonical =
      root == 0 && by_id.rbegin()->first == static_cast<int>(by_id.size()) - 1;
  if (canonical) {
    for (const auto& [id, jn] : by_id) local[id] = id;
  } else {
    std::vector<int> stack{root};
    while (!stack.empty()) {
      const int id = stack.back();
      stack.pop_back();
      const int me = static_cast<int>(local.size());
      local[id] = me;
      const json& jn = by_id.at(id);
      if (!jn.contains("leaf")) {
        stack.push_back(jn["right"].get<int>());
        stack.push_back(jn["left"].get<int>());
      }
    }
  }
  if (local.size() != by_id.size())
    throw std::runtime_error(where + ": orphan nodes not reachable from the root");

  std::vector<TreeNode> nodes(by_id.size());
  for (const auto& [id, jn] : by_id) {
    TreeNode nd;
    if (jn.contains("leaf")) {
      nd.cell = jn["leaf"].get<int>();
    } else {
      nd.feature = jn["feature"].get<int>();
      if (nd.feature < 0)
        throw std::runtime_error(where + ": negative feature index in node " + std::to_string(id));
      nd.threshold = jn["threshold"].get<double>();
      nd.left = local.at(jn["left"].get<int>());
      nd.right = local.at(jn["right"].get<int>());
    }
    nodes[static_cast<std::size_t>(local.at(id))] = nd;
  }
  try {
    return Partition::tree(std::move(nodes));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(where + ": " + e.what());
  }
}

}  // namespace detail

inline PartitionEnsemble import_partitions(const json& j,
                                           std::optional<Index> expect_features = {}) {
  if (!j.contains("version") || j["version"] != 1)
    throw std::runtime_error("partition file: unsupported version (expected 1)");
  if (!j.contains("n_features") || !j["n_features"].is_number_integer())
    throw std::runtime_error("partition file: missing integer 'n_features'");
  const Index d = j["n_features"].get<Index>();
  if (expect_features && *expect_features != d)
    throw std::runtime_error("partition file: n_features=" + std::to_string(d) +
                             " does not match expected " + std::to_string(*expect_features));
  if (!j.contains("partitions") || !j["partitions"].is_array() || j["partitions"].empty())
    throw std::runtime_error("partition file: missing non-empty 'partitions' array");

  std::vector<Partition> parts;
  for (std::size_t p = 0; p < j["partitions"].size(); ++p) {
    const json& jp = j["partitions"][p];
    const std::string where = "partitions[" + std::to_string(p) + "]";
    if (!jp.contains("kind"))
      throw std::runtime_error(where + ": missing 'kind'");
    const std::string kind = jp["kind"].get<std::string>();
    if (kind == "voronoi") {
      if (!jp.contains("centers") || !jp["centers"].is_array() || jp["centers"].empty())
        throw std::runtime_error(where + ": voronoi partition needs 'centers'");
      const std::size_t rows = jp["centers"].size();
      Matrix centers(static_cast<Index>(rows), d);
      for (std::size_t r = 0; r < rows; ++r) {
        const json& row = jp["centers"][r];
        if (!row.is_array() || static_cast<Index>(row.size()) != d)
          throw std::runtime_error(where + ".centers[" + std::to_string(r) +
                                   "]: expected " + std::to_string(d) + " coordinates");
        for (Index c = 0; c < d; ++c)
          centers(static_cast<Index>(r), c) = row[static_cast<std::size_t>(c)].get<double>();
      }
      parts.push_back(Partition::voronoi(std::move(centers)));
    } else if (kind == "tree") {
      parts.push_back(detail::import_tree(jp, where));
    } else {
      throw std::runtime_error(where + ": unknown kind '" + kind + "'");
    }
  }
  try {
    return PartitionEnsemble(std::move(parts), d);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("partition file: ") + e.what());
  }
}

/// Sparse design matrix of an ensemble: one (x, 1) block per partition per
/// row, placed at the flat cell containing that row. All block positions are
/// stored, including explicit zeros, so every row has exactly P*(d+1)
/// structural entries (or P when d_linear == 0, the bias-only layout).
struct DesignMatrix {
  SpMat Z;
  Index n_features = 0;  // d of the linear blocks (0 for bias-only)
  Index total_cells = 0;
  Index n_partitions = 0;

  Index n_params() const { return total_cells * (n_features + 1); }
};

/// Builds Z with cell assignment driven by `X_assign` and linear block values
/// taken from `X_linear` (same rows, possibly differently scaled features).
inline DesignMatrix design_matrix(const PartitionEnsemble& pe, const Matrix& X_assign,
                                  const Matrix& X_linear) {
  if (X_assign.cols() != pe.n_features() || X_linear.cols() != pe.n_features())
    throw std::invalid_argument("design_matrix: feature dimension mismatch");
  if (X_assign.rows() != X_linear.rows())
    throw std::invalid_argument("design_matrix: row count mismatch");
  const Index n = X_assign.rows();
  const Index d = pe.n_features();
  const Index block = d + 1;

  DesignMatrix out;
  out.n_features = d;
  out.total_cells = pe.total_cells();
  out.n_partitions = pe.n_partitions();
  out.Z.resize(n, out.total_cells * block);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n * pe.n_partitions() * block));
  for (Index i = 0; i < n; ++i) {
    for (Index p = 0; p < pe.n_partitions(); ++p) {
      const Index k = pe.flat_cell(p, X_assign.row(i));
      const Index base = k * block;
      for (Index jj = 0; jj < d; ++jj)
        trips.emplace_back(i, base + jj, X_linear(i, jj));
      trips.emplace_back(i, base + d, 1.0);
    }
  }
  out.Z.setFromTriplets(trips.begin(), trips.end());
  return out;
}

inline DesignMatrix design_matrix(const PartitionEnsemble& pe, const Dataset& ds) {
  return design_matrix(pe, ds.features, ds.features);
}

/// Bias-only design (constant-leaf models): column k is the indicator of
/// flat cell k.
inline DesignMatrix design_matrix_bias(const PartitionEnsemble& pe, const Matrix& X_assign) {
  if (X_assign.cols() != pe.n_features())
    throw std::invalid_argument("design_matrix_bias: feature dimension mismatch");
  const Index n = X_assign.rows();
  DesignMatrix out;
  out.n_features = 0;
  out.total_cells = pe.total_cells();
  out.n_partitions = pe.n_partitions();
  out.Z.resize(n, out.total_cells);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n * pe.n_partitions()));
  for (Index i = 0; i < n; ++i)
    for (Index p = 0; p < pe.n_partitions(); ++p)
      trips.emplace_back(i, pe.flat_cell(p, X_assign.row(i)), 1.0);
  out.Z.setFromTriplets(trips.begin(), trips.end());
  return out;
}

/// Direct ensemble evaluation for one point: sum over partitions of the
/// active cell's affine value. W is d x C (C = total cells), b has length C.
inline double ensemble_eval(const PartitionEnsemble& pe, const Eigen::Ref<const Matrix>& W,
                            const Vector& b, const Eigen::Ref<const RowVector>& x_assign,
                            const Eigen::Ref<const RowVector>& x_linear) {
  double acc = 0.0;
  for (Index p = 0; p < pe.n_partitions(); ++p) {
    const Index k = pe.flat_cell(p, x_assign);
    acc += b[k];
    if (W.rows() > 0) acc += x_linear.dot(W.col(k));
  }
  return acc;
}

}  // namespace joplen
