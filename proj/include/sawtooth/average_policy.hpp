#pragma once

#include "sawtooth/model.hpp"

namespace sawtooth {

/// Closed-form solution of the long-run average criterion: optimal threshold
/// and gain, with the parameter snapshot it was computed from.
struct AverageSolution {
    double x_bar = 0.0;
    double gain = 0.0;
    FlowParams flow;
    CriterionParams crit;

    ThresholdPolicy policy() const { return {x_bar, flow.b}; }
};

AverageSolution threshold_avg(const FlowParams& fp, const CriterionParams& cp);

/// Relative value function h of the average criterion: h = h0 on (0, x_bar),
/// h(x) = h0(b^k x) on [x_bar/b^{k-1}, x_bar/b^k). Exact breakpoints take the
/// right-limit branch. All evaluators are pure; the object is immutable.
class RelativeValueProfile {
public:
    explicit RelativeValueProfile(const AverageSolution& sol);

    double value(double x) const;       // h(x)
    double derivative(double x) const;  // h'(x), analytic piecewise
    double h0(double x) const;
    double h0_prime(double x) const;
    int impulse_depth(double x) const;  // v(x) above threshold, 0 below

    const AverageSolution& solution() const { return sol_; }

private:
    AverageSolution sol_;
};

struct ResidualPair {
    double flow_residual = 0.0;
    double impulse_residual = 0.0;
};

/// Bellman residuals of the average problem at x (offset from breakpoints):
/// flow = c(x) - g + h'(x) a x^gamma, impulse = sup_m [h(b^m x) - h(x)] with
/// the sup truncated one step past the first m landing below b*x_bar.
ResidualPair bellman_residual_avg(double x, const RelativeValueProfile& profile);

}  // namespace sawtooth
