#include <catch2/catch_amalgamated.hpp>

#include <joplen/prox.hpp>

#include <joplen/rng.hpp>

#include "support/oracles.hpp"

#include <Eigen/SVD>

using namespace joplen;
using Catch::Matchers::WithinAbs;

namespace {

Matrix random_matrix(Index r, Index c, Pcg32& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

}  // namespace

TEST_CASE("prox_l21 frozen examples", "[prox]") {
  Matrix w(1, 2);
  w << 3.0, 4.0;
  const Matrix out = prox_l21(w, 1.0, 1.0);  // tau*lambda = 1, |row| = 5
  REQUIRE_THAT(out(0, 0), WithinAbs(2.4, 1e-12));
  REQUIRE_THAT(out(0, 1), WithinAbs(3.2, 1e-12));

  Matrix small(2, 2);
  small << 0.1, 0.1, 3.0, 0.0;
  const Matrix out2 = prox_l21(small, 0.5, 1.0);
  REQUIRE(out2.row(0).isZero(0.0));  // |row| < tau*lambda
  REQUIRE(out2(1, 0) == 2.5);

  REQUIRE(prox_l21(w, 1.0, 0.0) == w);
  REQUIRE_THROWS_AS(prox_l21(w, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("prox_l21 preserves signs and zero rows", "[prox]") {
  Pcg32 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix w = random_matrix(5, 4, rng, 2.0);
    w.row(2).setZero();
    const double t = 0.1 + rng.next_double();
    const Matrix out = prox_l21(w, t, 0.7);
    REQUIRE(out.row(2).isZero(0.0));
    for (Index i = 0; i < w.rows(); ++i)
      for (Index j = 0; j < w.cols(); ++j)
        if (out(i, j) != 0.0) REQUIRE(out(i, j) * w(i, j) > 0.0);
  }
}

TEST_CASE("prox_nuclear frozen examples", "[prox]") {
  Matrix w = Matrix::Zero(2, 2);
  w(0, 0) = 3.0;
  w(1, 1) = 1.0;
  const Matrix out = prox_nuclear(w, 1.0, 1.0);
  REQUIRE_THAT(out(0, 0), WithinAbs(2.0, 1e-10));
  REQUIRE_THAT(out(1, 1), WithinAbs(0.0, 1e-10));
  REQUIRE_THAT(out(0, 1), WithinAbs(0.0, 1e-10));

  const Matrix wiped = prox_nuclear(w, 1.0, 4.0);  // both sigmas below threshold
  REQUIRE(wiped.cwiseAbs().maxCoeff() <= 1e-12);

  Pcg32 rng(9);
  const Matrix any = random_matrix(3, 5, rng);
  REQUIRE((prox_nuclear(any, 1.0, 0.0) - any).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("prox_nuclear never raises a singular value", "[prox]") {
  Pcg32 rng(11);
  for (int rep = 0; rep < 15; ++rep) {
    const Index r = 2 + static_cast<Index>(rng.below(4));
    const Index c = 2 + static_cast<Index>(rng.below(6));
    const Matrix w = random_matrix(r, c, rng, 1.5);
    const double t = 0.05 + 0.5 * rng.next_double();
    const Matrix out = prox_nuclear(w, t, 1.0);
    const Vector sin = Eigen::JacobiSVD<Matrix>(w).singularValues();
    const Vector sout = Eigen::JacobiSVD<Matrix>(out).singularValues();
    for (Index i = 0; i < sout.size(); ++i) REQUIRE(sout[i] <= sin[i] + 1e-10);
  }
}

TEST_CASE("penalty values on frozen inputs", "[prox]") {
  ProxConfig nuc{PenaltyKind::nuclear, 0.5, 0, 0, {}};
  REQUIRE_THAT(penalty_value(nuc, Matrix::Identity(2, 2)), WithinAbs(1.0, 1e-12));

  Matrix rows(2, 2);
  rows << 3, 4, 0, 0;
  ProxConfig l21{PenaltyKind::l21, 1.0, 0, 0, {}};
  REQUIRE_THAT(penalty_value(l21, rows), WithinAbs(5.0, 1e-12));

  const Matrix zero = Matrix::Zero(3, 4);
  REQUIRE(penalty_value(l21, zero) == 0.0);
  REQUIRE(penalty_value(nuc, zero) == 0.0);
  REQUIRE(penalty_value(ProxConfig{PenaltyKind::none, 1.0, 0, 0, {}}, rows) == 0.0);
}

TEST_CASE("dirty lasso prox separates and respects degenerate weights", "[prox]") {
  Pcg32 rng(13);
  const Matrix c = random_matrix(4, 6, rng);
  const std::vector<Matrix> ts = {random_matrix(4, 2, rng), random_matrix(4, 4, rng)};

  ProxConfig cfg{PenaltyKind::dirty_lasso, 0, 0.3, 0.2, {1.0, 2.0}};
  const auto [c1, t1] = prox_dirty_lasso(c, ts, 0.5, cfg);
  REQUIRE(c1 == prox_l21(c, 0.5, 0.3));
  REQUIRE(t1[0] == prox_l21(ts[0], 0.5, 1.0 * 0.2));
  REQUIRE(t1[1] == prox_l21(ts[1], 0.5, 2.0 * 0.2));

  // dominant common threshold wipes the shared block only
  ProxConfig heavy = cfg;
  heavy.lambda_common = 10.0 * c.rowwise().norm().maxCoeff() / 0.5;
  const auto [c2, t2] = prox_dirty_lasso(c, ts, 0.5, heavy);
  REQUIRE(c2.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(t2[0] == t1[0]);

  ProxConfig no_task = cfg;
  no_task.lambda_task = 0.0;
  const auto [c3, t3] = prox_dirty_lasso(c, ts, 0.5, no_task);
  REQUIRE(t3[0] == ts[0]);
  REQUIRE(t3[1] == ts[1]);

  REQUIRE_THROWS_AS(prox_dirty_lasso(c, {ts[0]}, 0.5, cfg), std::invalid_argument);

  const double pv = penalty_value_mt(cfg, c, ts);
  REQUIRE_THAT(pv, WithinAbs(0.3 * penalty_l21_value(c) + 0.2 * penalty_l21_value(ts[0]) +
                                 0.4 * penalty_l21_value(ts[1]),
                             1e-12));
}

TEST_CASE("prox outputs match numerical minimization of the prox objective", "[prox]") {
  Pcg32 rng(21);
  for (int rep = 0; rep < 25; ++rep) {
    const Index d = 1 + static_cast<Index>(rng.below(6));
    const Index c = 1 + static_cast<Index>(rng.below(8));
    const Matrix v = random_matrix(d, c, rng, 2.0);
    const double a = 0.05 + 1.5 * rng.next_double();

    const Matrix zl = prox_l21(v, 1.0, a);
    REQUIRE(std::abs(oracles::prox_l21_objective(zl, v, a) -
                     oracles::prox_l21_objective(oracles::prox_l21(v, a), v, a)) <= 1e-6);

    const Matrix zn = prox_nuclear(v, 1.0, a);
    REQUIRE(std::abs(oracles::prox_nuclear_objective(zn, v, a) -
                     oracles::prox_nuclear_objective(oracles::prox_nuclear(v, a), v, a)) <=
            1e-6);
  }
}

TEST_CASE("prox outputs are local minima under random perturbations", "[prox]") {
  Pcg32 rng(31);
  for (int rep = 0; rep < 5; ++rep) {
    const Index d = 2 + static_cast<Index>(rng.below(5));
    const Index c = 2 + static_cast<Index>(rng.below(7));
    const Matrix v = random_matrix(d, c, rng, 2.0);
    const double a = 0.1 + rng.next_double();

    const Matrix zl = prox_l21(v, 1.0, a);
    const Matrix zn = prox_nuclear(v, 1.0, a);
    const double fl = oracles::prox_l21_objective(zl, v, a);
    const double fn = oracles::prox_nuclear_objective(zn, v, a);
    for (int p = 0; p < 100; ++p) {
      Matrix delta = random_matrix(d, c, rng);
      delta *= 1e-3 / delta.norm();
      REQUIRE(oracles::prox_l21_objective(zl + delta, v, a) >= fl - 1e-12);
      REQUIRE(oracles::prox_nuclear_objective(zn + delta, v, a) >= fn - 1e-10);
    }
  }
}

TEST_CASE("prox operators are nonexpansive", "[prox]") {
  Pcg32 rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    const Index d = 1 + static_cast<Index>(rng.below(5));
    const Index c = 1 + static_cast<Index>(rng.below(6));
    const Matrix a = random_matrix(d, c, rng, 2.0);
    const Matrix b = random_matrix(d, c, rng, 2.0);
    const double t = 0.1 + rng.next_double();
    REQUIRE((prox_l21(a, t, 0.8) - prox_l21(b, t, 0.8)).norm() <= (a - b).norm() + 1e-9);
    REQUIRE((prox_nuclear(a, t, 0.8) - prox_nuclear(b, t, 0.8)).norm() <=
            (a - b).norm() + 1e-9);
  }
}

TEST_CASE("theta-level prox never touches biases", "[prox]") {
  Pcg32 rng(51);
  const Index d = 4, c = 6;
  Vector theta(c * (d + 1));
  for (Index i = 0; i < theta.size(); ++i) theta[i] = rng.normal();
  const Vector before_bias = bias_view(theta, d, c);

  for (PenaltyKind kind : {PenaltyKind::l21, PenaltyKind::nuclear, PenaltyKind::none}) {
    const ProxFn prox = make_theta_prox(kind, 0.4, d, c);
    const Vector out = prox(theta, 0.7);
    const Vector after_bias = bias_view(out, d, c);
    REQUIRE(after_bias == before_bias);  // bit-identical
    if (kind != PenaltyKind::none) {
      const Matrix expect = (kind == PenaltyKind::l21)
                                ? prox_l21(weight_view(theta, d, c), 0.7, 0.4)
                                : prox_nuclear(weight_view(theta, d, c), 0.7, 0.4);
      REQUIRE((Matrix(weight_view(out, d, c)) - expect).cwiseAbs().maxCoeff() <= 1e-15);
    }
  }

  const PenaltyFn pen = make_theta_penalty(PenaltyKind::l21, 2.0, d, c);
  REQUIRE_THAT(pen(theta), WithinAbs(2.0 * penalty_l21_value(weight_view(theta, d, c)), 1e-12));
}
