#pragma once

#include <memory>
#include <vector>

#include "sawtooth/model.hpp"

namespace sawtooth {

/// Signed integral of e^{-rho u / a} u^{-alpha} over [lo, hi] (the recurring
/// kernel of the discounted value function). Reversed limits negate the result.
double exp_power_integral(double lo, double hi, double rho, double a, double alpha);

/// Upper incomplete gamma Gamma(s, z) = int_z^inf e^{-u} u^{s-1} du for
/// s in (-1, 0), z > 0.
double incomplete_gamma_upper(double s, double z);

/// Checkpointed evaluation of int_1^x e^{-rho u / a} u^{-alpha} du: a geometric
/// table of cumulative integrals makes repeated queries O(1) amortized.
/// Immutable after construction.
class ExpPowerCache {
public:
    ExpPowerCache(double rho, double a, double alpha, double lo, double hi, int checkpoints);
    double integral_from_one(double x) const;

private:
    double rho_, a_, alpha_;
    double log_lo_ = 0.0, step_ = 0.0;
    std::vector<double> xs_;
    std::vector<double> cum_;
};

/// Discounted free-boundary solution: root of H, boundary constant w1, the
/// parameter snapshot, and the shared integral cache.
struct DiscountedSolution {
    double x_bar = 0.0;
    double w1 = 0.0;
    FlowParams flow;
    CriterionParams crit;
    std::shared_ptr<const ExpPowerCache> cache;

    ThresholdPolicy policy() const { return {x_bar, flow.b}; }
};

/// Rejects parameter sets outside the discounted theory: needs gamma = 0,
/// alpha in (1,2), rho > 0, lambda > 0.
void check_discounted_preconditions(const FlowParams& fp, const CriterionParams& cp);

/// Boundary value candidate W~(x) for a given w1 and its analytic derivative.
double W_tilde(double x, double w1, const FlowParams& fp, const CriterionParams& cp);
double W_tilde_prime(double x, double w1, const FlowParams& fp, const CriterionParams& cp);

/// Boundary constant of the no-impulse value: the unique w1 for which
/// e^{-rho T} W~(x0 + aT) -> 0.
double no_impulse_boundary(const FlowParams& fp, const CriterionParams& cp);

/// No-impulse value W*(x), evaluated in a cancellation-free tail form
/// (exact for every x > 0, stable at large x where e7 terms nearly cancel).
double W_star(double x, const FlowParams& fp, const CriterionParams& cp);

/// Free-boundary function H(x): its unique positive root is the threshold.
/// Evaluated in an overflow-safe scaled form identical to the defining
/// expression wherever that is representable.
double H(double x, const FlowParams& fp, const CriterionParams& cp);

DiscountedSolution solve_threshold_disc(const FlowParams& fp, const CriterionParams& cp);

/// rho -> 0 limit of the discounted threshold (coincides with the average
/// threshold at gamma = 0).
double limit_threshold(const FlowParams& fp, const CriterionParams& cp);

/// Bellman value W: W~(x; w1) below the threshold, W(x) = W~(b^{v(x)} x)
/// above. Exact breakpoints take the right-limit branch. Immutable; the
/// integral cache is read-only after construction.
class ValueFunctionW {
public:
    explicit ValueFunctionW(DiscountedSolution sol);

    double value(double x) const;       // W(x)
    double derivative(double x) const;  // W'(x), analytic piecewise
    double tilde(double x) const;       // W~(x; w1), cached integral path
    double tilde_prime(double x) const;
    int impulse_depth(double x) const;  // v(x) above threshold, 0 below

    const DiscountedSolution& solution() const { return sol_; }

private:
    DiscountedSolution sol_;
};

struct ResidualPairDisc {
    double flow_residual = 0.0;
    double impulse_residual = 0.0;
};

ResidualPairDisc bellman_residual_disc(double x, const ValueFunctionW& vf);

struct DiagnosticRow {
    double x = 0.0;
    double W = 0.0;       // Bellman value
    double z = 0.0;       // stationarity curve: W~' = 0 where W~ crosses z
    double v_infl = 0.0;  // inflection curve: W~'' = 0 where W~ crosses it
};

std::vector<DiagnosticRow> diagnostic_curves(const std::vector<double>& x_grid,
                                             const ValueFunctionW& vf);

}  // namespace sawtooth
