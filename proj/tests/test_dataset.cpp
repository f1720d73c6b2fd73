#include <catch2/catch_amalgamated.hpp>

#include <joplen/dataset.hpp>

#include "support/tmpdir.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

using namespace joplen;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
}

}  // namespace

TEST_CASE("load_csv parses a small regression file", "[dataset]") {
  testsupport::TmpDir tmp("joplen-csv");
  write_file(tmp.file("d.csv"), "a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
  const Dataset ds = load_csv(tmp.file("d.csv"), "y", TaskKind::regression);
  REQUIRE(ds.n_samples() == 3);
  REQUIRE(ds.n_features() == 2);
  REQUIRE(ds.feature_names == std::vector<std::string>{"a", "b"});
  REQUIRE(ds.features(1, 0) == 4.0);
  REQUIRE(ds.targets[2] == 9.0);
}

TEST_CASE("load_csv maps 0/1 labels to -1/+1 preserving row order", "[dataset]") {
  testsupport::TmpDir tmp("joplen-csv");
  write_file(tmp.file("c.csv"), "a,y\n0.5,0\n1.5,1\n2.5,0\n-3,1\n");
  const Dataset ds = load_csv(tmp.file("c.csv"), "y", TaskKind::classification);
  REQUIRE(ds.targets[0] == -1.0);
  REQUIRE(ds.targets[1] == 1.0);
  REQUIRE(ds.targets[2] == -1.0);
  REQUIRE(ds.targets[3] == 1.0);
}

TEST_CASE("load_csv rejects bad input naming the location", "[dataset]") {
  testsupport::TmpDir tmp("joplen-csv");
  write_file(tmp.file("nan.csv"), "a,b,y\n1,NaN,3\n");
  REQUIRE_THROWS_WITH(load_csv(tmp.file("nan.csv"), "y", TaskKind::regression),
                      ContainsSubstring("row 1") && ContainsSubstring("'b'"));

  write_file(tmp.file("text.csv"), "a,y\n1,2\nfoo,3\n");
  REQUIRE_THROWS_WITH(load_csv(tmp.file("text.csv"), "y", TaskKind::regression),
                      ContainsSubstring("row 2") && ContainsSubstring("'a'"));

  write_file(tmp.file("ok.csv"), "a,y\n1,2\n");
  REQUIRE_THROWS_WITH(load_csv(tmp.file("ok.csv"), "z", TaskKind::regression),
                      ContainsSubstring("'z'"));

  write_file(tmp.file("lbl.csv"), "a,y\n1,2\n");
  REQUIRE_THROWS_WITH(load_csv(tmp.file("lbl.csv"), "y", TaskKind::classification),
                      ContainsSubstring("label"));
}

TEST_CASE("csv round trip preserves every value", "[dataset]") {
  testsupport::TmpDir tmp("joplen-csv");
  Pcg32 rng(42);
  Dataset ds;
  ds.feature_names = {"u", "v", "w"};
  ds.features.resize(20, 3);
  ds.targets.resize(20);
  for (Index i = 0; i < 20; ++i) {
    for (Index j = 0; j < 3; ++j) ds.features(i, j) = rng.normal(0, 3.7);
    ds.targets[i] = rng.normal();
  }
  save_csv(ds, tmp.file("rt.csv"));
  const Dataset back = load_csv(tmp.file("rt.csv"), "y", TaskKind::regression);
  REQUIRE((back.features - ds.features).cwiseAbs().maxCoeff() <= 1e-12);
  REQUIRE((back.targets - ds.targets).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("split sizes follow rounding with remainder to train", "[dataset]") {
  Dataset ds;
  ds.feature_names = {"a"};
  ds.features = Matrix::Zero(100, 1);
  for (Index i = 0; i < 100; ++i) ds.features(i, 0) = static_cast<double>(i);
  ds.targets = Vector::Zero(100);

  const auto [tr, va, te] = split(ds, {0.8, 0.1, 0.1, 7});
  REQUIRE(tr.n_samples() == 80);
  REQUIRE(va.n_samples() == 10);
  REQUIRE(te.n_samples() == 10);

  Dataset small = take_rows(ds, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  const auto [tr2, va2, te2] = split(small, {0.8, 0.1, 0.1, 3});
  REQUIRE(tr2.n_samples() == 9);
  REQUIRE(va2.n_samples() == 1);
  REQUIRE(te2.n_samples() == 1);
}

TEST_CASE("split is deterministic, disjoint, and exhaustive", "[dataset]") {
  Pcg32 rng(11);
  for (int rep = 0; rep < 8; ++rep) {
    const Index n = 10 + static_cast<Index>(rng.below(200));
    Dataset ds;
    ds.feature_names = {"a"};
    ds.features.resize(n, 1);
    for (Index i = 0; i < n; ++i) ds.features(i, 0) = static_cast<double>(i);
    ds.targets = Vector::Zero(n);
    const SplitSpec spec{0.8, 0.1, 0.1, rng.next_u64()};

    const auto [tr, va, te] = split(ds, spec);
    const auto [tr2, va2, te2] = split(ds, spec);
    REQUIRE(tr.features == tr2.features);
    REQUIRE(va.features == va2.features);
    REQUIRE(te.features == te2.features);

    std::set<double> seen;
    for (const auto* part : {&tr, &va, &te})
      for (Index i = 0; i < part->n_samples(); ++i)
        REQUIRE(seen.insert(part->features(i, 0)).second);
    REQUIRE(static_cast<Index>(seen.size()) == n);
  }
}

TEST_CASE("standardizer uses the population convention", "[dataset]") {
  Dataset ds;
  ds.feature_names = {"a", "c"};
  ds.features.resize(3, 2);
  ds.features.col(0) << 1, 2, 3;
  ds.features.col(1) << 5, 5, 5;
  ds.targets = Vector::Zero(3);

  const Standardizer s = fit_standardizer(ds);
  REQUIRE_THAT(s.means[0], WithinAbs(2.0, 1e-15));
  REQUIRE_THAT(s.stds[0], WithinAbs(std::sqrt(2.0 / 3.0), 1e-12));
  REQUIRE(s.stds[1] == 1.0);

  const Dataset out = transform(s, ds);
  REQUIRE_THAT(out.features(0, 0), WithinAbs(-1.2247448713915890, 1e-9));
  REQUIRE_THAT(out.features(1, 0), WithinAbs(0.0, 1e-15));
  REQUIRE_THAT(out.features(2, 0), WithinAbs(1.2247448713915890, 1e-9));
  REQUIRE(out.features.col(1).isZero(0.0));
  REQUIRE(out.targets == ds.targets);
}

TEST_CASE("transform after fit centers and scales every column", "[dataset]") {
  Pcg32 rng(5);
  for (int rep = 0; rep < 6; ++rep) {
    const Index n = 20 + static_cast<Index>(rng.below(100));
    const Index d = 1 + static_cast<Index>(rng.below(6));
    Dataset ds;
    for (Index j = 0; j < d; ++j) ds.feature_names.push_back("f" + std::to_string(j));
    ds.features.resize(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d; ++j)
        ds.features(i, j) = rng.normal(rng.uniform(-5, 5), 0.1 + 4 * rng.next_double());
    ds.targets = Vector::Zero(n);

    const Dataset out = transform(fit_standardizer(ds), ds);
    for (Index j = 0; j < d; ++j) {
      const auto col = out.features.col(j);
      REQUIRE(std::abs(col.mean()) <= 1e-9);
      const double std = std::sqrt((col.array() - col.mean()).square().sum() / double(n));
      REQUIRE(std::abs(std - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("transform rejects dimension mismatch", "[dataset]") {
  Standardizer s;
  s.means = Vector::Zero(3);
  s.stds = Vector::Ones(3);
  REQUIRE_THROWS_AS(transform(s, Matrix::Zero(4, 2)), std::invalid_argument);
}

TEST_CASE("synth_subspace matches its stated geometry", "[dataset]") {
  const auto [train, test] = synth_subspace();
  REQUIRE(train.n_samples() == 100);
  REQUIRE(test.n_samples() == 9900);
  REQUIRE(train.n_features() == 2);
  REQUIRE(train.features.minCoeff() >= -1.0);
  REQUIRE(train.features.maxCoeff() <= 1.0);
  REQUIRE(test.features.minCoeff() >= -1.0);
  REQUIRE(test.features.maxCoeff() <= 1.0);

  const auto [tr0, te0] = synth_subspace(50, 500, 0.0, 9);
  for (const Dataset* part : {&tr0, &te0})
    for (Index i = 0; i < part->n_samples(); ++i) {
      const double want =
          std::sin(std::numbers::pi * (part->features(i, 0) + part->features(i, 1)));
      REQUIRE(part->targets[i] == want);
    }
  REQUIRE_THAT(std::sin(std::numbers::pi * (0.5 + 0.5)), WithinAbs(0.0, 1e-15));

  const auto [tra, tea] = synth_subspace(50, 500, 0.2, 9);
  const auto [trb, teb] = synth_subspace(50, 500, 0.2, 9);
  REQUIRE(tra.features == trb.features);
  REQUIRE(tra.targets == trb.targets);
}

TEST_CASE("synth_multitask_sparse targets depend only on active features", "[dataset]") {
  const auto synth = synth_multitask_sparse(2, 10, {0, 1}, {{2}, {3}}, 50, 0.0, 13);
  REQUIRE(synth.data.n_tasks() == 2);
  REQUIRE(synth.data.tasks[0].n_samples() == 50);

  // with zero noise the targets reproduce the recipe exactly, and the recipe
  // references nothing outside common+specific
  for (Index t = 0; t < 2; ++t) {
    std::set<Index> active{0, 1, t == 0 ? Index(2) : Index(3)};
    for (const auto& term : synth.recipe.per_task[static_cast<std::size_t>(t)])
      REQUIRE(active.count(term.feature) == 1);
    const Dataset& ds = synth.data.tasks[static_cast<std::size_t>(t)];
    for (Index i = 0; i < ds.n_samples(); ++i) {
      const double want = SynthMtRecipe::eval(synth.recipe.per_task[static_cast<std::size_t>(t)],
                                              ds.features.row(i));
      REQUIRE(ds.targets[i] == want);
    }
  }

  const auto again = synth_multitask_sparse(2, 10, {0, 1}, {{2}, {3}}, 50, 0.0, 13);
  REQUIRE(again.data.tasks[0].features == synth.data.tasks[0].features);
  REQUIRE(again.data.tasks[1].targets == synth.data.tasks[1].targets);

  REQUIRE_THROWS_AS(synth_multitask_sparse(2, 10, {0}, {{1}, {2}}, 0, 0.1, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(synth_multitask_sparse(2, 10, {0}, {{0}, {2}}, 5, 0.1, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(synth_multitask_sparse(2, 3, {0}, {{1}, {7}}, 5, 0.1, 1),
                    std::invalid_argument);
}
