// Test-only reference implementations, kept independent of the library's
// closed forms: prox objectives minimized numerically, gradients from central
// finite differences, least-squares solutions from normal equations, and a
// coordinate-descent lasso solver.
#pragma once

#include <joplen/types.hpp>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <functional>

namespace oracles {

using joplen::Index;
using joplen::Matrix;
using joplen::Vector;

// Minimizes a convex scalar function on [lo, hi] by ternary search.
inline double minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                              int iters = 300) {
  for (int i = 0; i < iters; ++i) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) <= f(m2))
      hi = m2;
    else
      lo = m1;
  }
  return 0.5 * (lo + hi);
}

inline double prox_l21_objective(const Matrix& z, const Matrix& v, double a) {
  double obj = 0.5 * (z - v).squaredNorm();
  for (Index i = 0; i < z.rows(); ++i) obj += a * z.row(i).norm();
  return obj;
}

// Row-wise numerical prox of a*|.|_{2,1}: for each row the minimizer is a
// nonnegative rescaling of the input row, so the problem reduces to a scalar
// search over the output norm.
inline Matrix prox_l21(const Matrix& v, double a) {
  Matrix z = Matrix::Zero(v.rows(), v.cols());
  for (Index i = 0; i < v.rows(); ++i) {
    const double r = v.row(i).norm();
    if (r == 0.0) continue;
    const auto phi = [&](double t) { return 0.5 * (t - r) * (t - r) + a * t; };
    const double t = minimize_scalar(phi, 0.0, r);
    z.row(i) = (t / r) * v.row(i);
  }
  return z;
}

inline double prox_nuclear_objective(const Matrix& z, const Matrix& v, double a) {
  return 0.5 * (z - v).squaredNorm() +
         a * Eigen::JacobiSVD<Matrix>(z).singularValues().sum();
}

// Numerical prox of a*|.|_*: the minimizer shares the input's singular
// vectors, leaving one scalar search per singular value.
inline Matrix prox_nuclear(const Matrix& v, double a) {
  Eigen::JacobiSVD<Matrix> svd(v, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector sigma = svd.singularValues();
  for (Index i = 0; i < sigma.size(); ++i) {
    const double s = sigma[i];
    const auto phi = [&](double t) { return 0.5 * (t - s) * (t - s) + a * t; };
    sigma[i] = minimize_scalar(phi, 0.0, std::max(s, 1e-300));
  }
  return svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose();
}

// Central finite differences of a scalar function of a vector.
inline Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& x,
                               double h = 1e-5) {
  Vector g(x.size());
  Vector xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Solution of (Z'Z/N + 2*lf*M) theta = Z'y/N for a diagonal 0/1 mask M.
inline Vector ridge_closed_form(const Matrix& z, const Vector& y, double lf,
                                const Vector& mask) {
  const double n = static_cast<double>(z.rows());
  Matrix a = z.transpose() * z / n;
  a += (2.0 * lf) * Matrix(mask.asDiagonal());
  const Vector rhs = z.transpose() * y / n;
  return a.ldlt().solve(rhs);
}

inline Vector least_squares(const Matrix& z, const Vector& y) {
  return z.colPivHouseholderQr().solve(y);
}

// Coordinate descent for 0.5*|Z theta - y|^2 / N + lambda*|theta|_1.
inline Vector lasso_cd(const Matrix& z, const Vector& y, double lambda, int sweeps = 20000,
                       double tol = 1e-14) {
  const Index p = z.cols();
  const double n = static_cast<double>(z.rows());
  Vector theta = Vector::Zero(p);
  Vector residual = y;  // y - Z theta
  Vector colsq(p);
  for (Index j = 0; j < p; ++j) colsq[j] = z.col(j).squaredNorm() / n;
  for (int s = 0; s < sweeps; ++s) {
    double max_delta = 0.0;
    for (Index j = 0; j < p; ++j) {
      if (colsq[j] == 0.0) continue;
      const double rho = z.col(j).dot(residual) / n + colsq[j] * theta[j];
      const double soft = std::abs(rho) > lambda
                              ? (rho > 0 ? rho - lambda : rho + lambda)
                              : 0.0;
      const double next = soft / colsq[j];
      const double delta = next - theta[j];
      if (delta != 0.0) {
        residual -= delta * z.col(j);
        theta[j] = next;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta < tol) break;
  }
  return theta;
}

inline double lasso_objective(const Matrix& z, const Vector& y, double lambda,
                              const Vector& theta) {
  return 0.5 * (z * theta - y).squaredNorm() / static_cast<double>(z.rows()) +
         lambda * theta.lpNorm<1>();
}

}  // namespace oracles
