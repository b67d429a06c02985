#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace spsim::fitkit {

struct LevMarOptions {
  int max_iterations = 200;
  double chi2_rel_tol = 1e-9;
  double grad_rel_tol = 1e-13;
  double step_tol = 1e-12;
  double lambda0 = 1e-3;
};

struct LevMarResult {
  std::vector<double> theta;
  std::vector<std::vector<double>> covariance;  // (J^T W J)^-1 at the optimum
  double chi_square = 0.0;
  int iterations = 0;
  bool converged = false;
  bool singular = false;
  double grad_inf_initial = 0.0;
  double grad_inf_final = 0.0;
};

// eval(theta, model, jacobian): model[i] and jacobian[i*p + j] = d model[i] / d theta[j].
using LsqEval =
    std::function<void(const std::vector<double>&, std::vector<double>&, std::vector<double>&)>;

// Damped least squares on chi^2 = sum_i w_i (y_i - m_i)^2: blends gradient
// descent and Gauss-Newton through an adaptive damping factor. Never throws on
// a singular normal matrix; that raises the damping instead.
LevMarResult lev_mar(const std::vector<double>& y, const std::vector<double>& w,
                     std::vector<double> theta0, const LsqEval& eval,
                     const LevMarOptions& opts = {});

}  // namespace spsim::fitkit
