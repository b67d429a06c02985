#include "spsim/levmar.hpp"

#include <algorithm>
#include <cmath>

namespace spsim::fitkit {

namespace {

// Cholesky solve of A x = b for symmetric positive definite A (row-major).
// Returns false when a pivot collapses.
bool cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n,
                    std::vector<double>& x) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      if (i == j) {
        if (s <= 0.0 || !std::isfinite(s)) return false;
        a[i * n + i] = std::sqrt(s);
      } else {
        a[i * n + j] = s / a[j * n + j];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  x.assign(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * x[k];
    x[ii] = s / a[ii * n + ii];
  }
  return true;
}

bool invert_spd(const std::vector<double>& a, std::size_t n,
                std::vector<std::vector<double>>& inv) {
  inv.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> e(n, 0.0);
    e[c] = 1.0;
    std::vector<double> x;
    if (!cholesky_solve(a, e, n, x)) return false;
    for (std::size_t r = 0; r < n; ++r) inv[r][c] = x[r];
  }
  return true;
}

double chi2_of(const std::vector<double>& y, const std::vector<double>& w,
               const std::vector<double>& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double r = y[i] - m[i];
    s += w[i] * r * r;
  }
  return s;
}

}  // namespace

LevMarResult lev_mar(const std::vector<double>& y, const std::vector<double>& w,
                     std::vector<double> theta0, const LsqEval& eval,
                     const LevMarOptions& opts) {
  const std::size_t n = y.size();
  const std::size_t p = theta0.size();
  LevMarResult res;
  res.theta = std::move(theta0);

  std::vector<double> m(n), jac(n * p);
  std::vector<double> h(p * p), g(p), step, m_try(n), jac_try(n * p);

  eval(res.theta, m, jac);
  double chi2 = chi2_of(y, w, m);
  double lambda = opts.lambda0;
  int small_change_streak = 0;

  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    std::fill(h.begin(), h.end(), 0.0);
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double r = y[i] - m[i];
      double wi = w[i];
      for (std::size_t a = 0; a < p; ++a) {
        double ja = jac[i * p + a];
        g[a] += wi * ja * r;
        for (std::size_t b = 0; b <= a; ++b) h[a * p + b] += wi * ja * jac[i * p + b];
      }
    }
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a + 1; b < p; ++b) h[a * p + b] = h[b * p + a];

    double grad_inf = 0.0;
    for (std::size_t a = 0; a < p; ++a) grad_inf = std::max(grad_inf, std::abs(g[a]));
    if (res.iterations == 0) res.grad_inf_initial = grad_inf;
    res.grad_inf_final = grad_inf;
    if (grad_inf <= opts.grad_rel_tol * res.grad_inf_initial) {
      res.converged = true;
      break;
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      std::vector<double> damped = h;
      for (std::size_t a = 0; a < p; ++a) {
        double d = h[a * p + a];
        damped[a * p + a] = d + lambda * (d > 0.0 ? d : 1.0);
      }
      if (!cholesky_solve(damped, g, p, step)) {
        lambda *= 10.0;
        if (lambda > 1e15) {
          res.singular = true;
          break;
        }
        continue;
      }
      double step_inf = 0.0;
      for (std::size_t a = 0; a < p; ++a)
        step_inf = std::max(step_inf, std::abs(step[a]) / (1.0 + std::abs(res.theta[a])));
      if (step_inf <= opts.step_tol) {
        res.converged = true;
        break;
      }
      std::vector<double> theta_try(p);
      for (std::size_t a = 0; a < p; ++a) theta_try[a] = res.theta[a] + step[a];
      eval(theta_try, m_try, jac_try);
      double chi2_try = chi2_of(y, w, m_try);
      if (std::isfinite(chi2_try) && chi2_try <= chi2) {
        double delta = chi2 - chi2_try;
        res.theta = std::move(theta_try);
        m.swap(m_try);
        jac.swap(jac_try);
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        if (delta <= opts.chi2_rel_tol * std::max(chi2, 1e-300)) {
          if (++small_change_streak >= 2) {
            chi2 = chi2_try;
            res.converged = true;
          }
        } else {
          small_change_streak = 0;
        }
        chi2 = chi2_try;
        break;
      }
      lambda *= 7.0;
      if (lambda > 1e15) {
        res.singular = true;
        break;
      }
    }
    if (res.converged || res.singular || !stepped) break;
  }

  res.chi_square = chi2;
  // Covariance from the undamped normal matrix.
  std::fill(h.begin(), h.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b <= a; ++b)
        h[a * p + b] += w[i] * jac[i * p + a] * jac[i * p + b];
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a + 1; b < p; ++b) h[a * p + b] = h[b * p + a];
  if (!invert_spd(h, p, res.covariance)) {
    res.covariance.assign(p, std::vector<double>(p, std::nan("")));
    res.singular = true;
  }
  return res;
}

}  // namespace spsim::fitkit
