#pragma once

#include <functional>

namespace san {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
};

/// Globally adaptive Gauss-Kronrod (7/15) integration of `f` over [a, b].
/// Stops once the summed error estimate is below max(abs_tol, rel_tol*|I|).
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double abs_tol = 1e-12, double rel_tol = 1e-12,
                           int max_intervals = 2000);

}  // namespace san
