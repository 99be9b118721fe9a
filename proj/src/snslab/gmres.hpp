#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace snslab {

struct GmresResult {
  bool converged = false;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Restarted GMRES with right preconditioning, so the monitored residual is
/// the true residual ||b - A x||. `apply(x, y)` sets y = A x and
/// `precondition(x, y)` sets y = P^{-1} x. x holds the initial guess.
template <class Vec, class Apply, class Precondition>
GmresResult gmres(Apply&& apply, Precondition&& precondition, const Vec& b, Vec& x, double tolerance,
                  int max_iterations, int restart = 40) {
  using Scalar = typename Vec::Scalar;
  using Eigen::numext::conj;
  GmresResult result;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    result.converged = true;
    return result;
  }
  const Eigen::Index n = b.size();
  Vec r(n), w(n), z(n);
  std::vector<Vec> basis;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> h;
  std::vector<Scalar> cs, sn, g;

  while (true) {
    apply(x, w);
    r = b - w;
    double beta = r.norm();
    result.relative_residual = beta / bnorm;
    if (result.relative_residual <= tolerance) {
      result.converged = true;
      return result;
    }
    if (result.iterations >= max_iterations) return result;

    const int m = restart;
    basis.assign(1, r / beta);
    h = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(m + 1, m);
    cs.assign(m, Scalar{});
    sn.assign(m, Scalar{});
    g.assign(m + 1, Scalar{});
    g[0] = beta;
    std::vector<Vec> zs;
    int k = 0;
    for (; k < m && result.iterations < max_iterations; ++k) {
      precondition(basis[k], z);
      zs.push_back(z);
      apply(z, w);
      ++result.iterations;
      for (int i = 0; i <= k; ++i) {
        h(i, k) = basis[i].dot(w);
        w -= h(i, k) * basis[i];
      }
      h(k + 1, k) = w.norm();
      if (std::abs(h(k + 1, k)) > 0.0) basis.push_back(w / Eigen::numext::real(h(k + 1, k)));
      else basis.push_back(Vec::Zero(n));
      for (int i = 0; i < k; ++i) {
        const Scalar t = conj(cs[i]) * h(i, k) + conj(sn[i]) * h(i + 1, k);
        h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
        h(i, k) = t;
      }
      const double a = std::abs(h(k, k));
      const double c = std::abs(h(k + 1, k));
      const double den = std::hypot(a, c);
      if (den == 0.0) {
        cs[k] = 1.0;
        sn[k] = 0.0;
      } else {
        cs[k] = h(k, k) / den;
        sn[k] = h(k + 1, k) / den;
      }
      h(k, k) = den;
      h(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = conj(cs[k]) * g[k];
      if (std::abs(g[k + 1]) / bnorm <= tolerance) {
        ++k;
        break;
      }
    }
    // Back substitution on the k x k triangle.
    std::vector<Scalar> y(k);
    for (int i = k - 1; i >= 0; --i) {
      Scalar s = g[i];
      for (int j = i + 1; j < k; ++j) s -= h(i, j) * y[j];
      y[i] = s / h(i, i);
    }
    for (int i = 0; i < k; ++i) x += y[i] * zs[i];
  }
}

}  // namespace snslab
