#pragma once

#include <functional>

namespace flockdde {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int intervals = 0;
    bool converged = false;
};

/// Globally adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.
/// Bisects the interval with the largest error estimate until
/// error <= max(abs_tol, rel_tol * |value|) or max_intervals is reached.
/// b < a is allowed and yields the negated integral.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol = 1e-14, double rel_tol = 1e-13,
                                    int max_intervals = 4000);

} // namespace flockdde
