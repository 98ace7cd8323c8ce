#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace nlkpp::detail {

using Vec = std::vector<double>;
using LinearMap = std::function<void(const Vec& in, Vec& out)>;

struct GmresResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Restarted GMRES with right preconditioning: solves A x = b, x = M^{-1} y.
/// x enters as the initial guess.
inline GmresResult gmres(const LinearMap& A, const LinearMap& Minv, const Vec& b, Vec& x, double rel_tol, int restart,
                         int max_iter) {
  const std::size_t n = b.size();
  auto dot = [n](const Vec& u, const Vec& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += u[i] * v[i];
    return s;
  };
  const double bnorm = std::sqrt(dot(b, b));
  GmresResult res;
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    res.converged = true;
    return res;
  }
  Vec r(n), w(n), z(n);
  std::vector<Vec> V(static_cast<std::size_t>(restart) + 1, Vec(n));
  std::vector<std::vector<double>> H(static_cast<std::size_t>(restart) + 1, std::vector<double>(restart, 0.0));
  std::vector<double> cs(restart), sn(restart), g(static_cast<std::size_t>(restart) + 1);
  while (res.iterations < max_iter) {
    A(x, w);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    double beta = std::sqrt(dot(r, r));
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= rel_tol) {
      res.converged = true;
      return res;
    }
    for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    int k = 0;
    for (; k < restart && res.iterations < max_iter; ++k, ++res.iterations) {
      Minv(V[k], z);
      A(z, w);
      for (int i = 0; i <= k; ++i) {
        H[i][k] = dot(w, V[i]);
        for (std::size_t t = 0; t < n; ++t) w[t] -= H[i][k] * V[i][t];
      }
      H[k + 1][k] = std::sqrt(dot(w, w));
      if (H[k + 1][k] > 0.0)
        for (std::size_t t = 0; t < n; ++t) V[k + 1][t] = w[t] / H[k + 1][k];
      for (int i = 0; i < k; ++i) {
        const double tmp = cs[i] * H[i][k] + sn[i] * H[i + 1][k];
        H[i + 1][k] = -sn[i] * H[i][k] + cs[i] * H[i + 1][k];
        H[i][k] = tmp;
      }
      const double den = std::hypot(H[k][k], H[k + 1][k]);
      cs[k] = den == 0.0 ? 1.0 : H[k][k] / den;
      sn[k] = den == 0.0 ? 0.0 : H[k + 1][k] / den;
      H[k][k] = den;
      H[k + 1][k] = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      res.relative_residual = std::abs(g[k + 1]) / bnorm;
      if (res.relative_residual <= rel_tol) {
        ++k;
        ++res.iterations;
        break;
      }
    }
    // Back substitution and update x += M^{-1} V y.
    std::vector<double> y(k);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= H[i][j] * y[j];
      y[i] = s / H[i][i];
    }
    std::fill(w.begin(), w.end(), 0.0);
    for (int i = 0; i < k; ++i)
      for (std::size_t t = 0; t < n; ++t) w[t] += y[i] * V[i][t];
    Minv(w, z);
    for (std::size_t t = 0; t < n; ++t) x[t] += z[t];
    if (res.relative_residual <= rel_tol) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

}  // namespace nlkpp::detail
