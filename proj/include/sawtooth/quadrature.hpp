#pragma once

#include <functional>

namespace sawtooth {

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int evaluations = 0;
};

/// Globally adaptive Gauss-Kronrod 15(7) integration of f over [lo, hi].
/// lo > hi is allowed; the result is signed accordingly. Convergence target is
/// max(abs_tol, rel_tol * |integral|); throws numeric_error with diagnostics
/// if the target is not reached within the subdivision budget.
QuadResult integrate(const std::function<double(double)>& f, double lo, double hi,
                     double rel_tol, double abs_tol = 1e-14);

}  // namespace sawtooth
