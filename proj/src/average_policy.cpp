#include "sawtooth/average_policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sawtooth/errors.hpp"

namespace sawtooth {

namespace {

void check_average_preconditions(const FlowParams& fp, const CriterionParams& cp) {
    fp.validate();
    cp.validate();
    if (!(cp.lambda > 0.0)) throw zero_price_error();
    if (std::abs(2.0 - cp.alpha - fp.gamma) < 1e-12) throw degenerate_exponent_error();
}

}  // namespace

AverageSolution threshold_avg(const FlowParams& fp, const CriterionParams& cp) {
    check_average_preconditions(fp, cp);
    const double alpha = cp.alpha;
    const double gamma = fp.gamma;
    const double b = fp.b;
    const double e1 = 2.0 - alpha - gamma;
    const double e2 = 2.0 - gamma;

    const double ratio = e2 * (1.0 - std::pow(b, e1)) / (e1 * (1.0 - std::pow(b, e2)) * cp.lambda);
    const double x_bar = std::pow(ratio, 1.0 / alpha);

    double gain;
    if (gamma == 1.0) {
        gain = x_bar * cp.lambda * (alpha / (1.0 - alpha)) * (b - 1.0) / std::log(b);
    } else {
        gain = x_bar * cp.lambda * (alpha / (1.0 - alpha)) * (1.0 - gamma) *
               (1.0 - std::pow(b, e2)) / (e2 * (1.0 - std::pow(b, 1.0 - gamma)));
    }
    return {x_bar, gain, fp, cp};
}

RelativeValueProfile::RelativeValueProfile(const AverageSolution& sol) : sol_(sol) {
    check_average_preconditions(sol.flow, sol.crit);
    if (!(sol.x_bar > 0.0)) throw param_error("relative value profile needs x_bar > 0");
}

double RelativeValueProfile::h0(double x) const {
    if (!(x > 0.0)) throw std::domain_error("h0: x must be > 0");
    const double a = sol_.flow.a;
    const double gamma = sol_.flow.gamma;
    const double alpha = sol_.crit.alpha;
    const double lambda = sol_.crit.lambda;
    const double g = sol_.gain;
    if (gamma == 1.0) {
        // Integral of h'(x) = (g + lambda x - x^{1-alpha}/(1-alpha)) / (a x).
        const double oma = 1.0 - alpha;
        return (g * std::log(x) + lambda * x - std::pow(x, oma) / (oma * oma)) / a;
    }
    const double e1 = 2.0 - alpha - gamma;
    const double e2 = 2.0 - gamma;
    return (-std::pow(x, e1) / ((1.0 - alpha) * e1) + lambda * std::pow(x, e2) / e2 +
            g * std::pow(x, 1.0 - gamma) / (1.0 - gamma)) /
           a;
}

double RelativeValueProfile::h0_prime(double x) const {
    if (!(x > 0.0)) throw std::domain_error("h0_prime: x must be > 0");
    const double a = sol_.flow.a;
    const double gamma = sol_.flow.gamma;
    const double alpha = sol_.crit.alpha;
    // Same expression across gamma in [0,1]: a x^gamma h0'(x) = -c(x) + g.
    return (-std::pow(x, 1.0 - alpha - gamma) / (1.0 - alpha) +
            sol_.crit.lambda * std::pow(x, 1.0 - gamma) + sol_.gain * std::pow(x, -gamma)) /
           a;
}

int RelativeValueProfile::impulse_depth(double x) const {
    if (!(x > 0.0)) throw std::domain_error("impulse_depth: x must be > 0");
    if (x < sol_.x_bar) return 0;
    return sol_.policy().impulse_count(x);
}

double RelativeValueProfile::value(double x) const {
    const int k = impulse_depth(x);
    return k == 0 ? h0(x) : h0(std::pow(sol_.flow.b, k) * x);
}

double RelativeValueProfile::derivative(double x) const {
    const int k = impulse_depth(x);
    if (k == 0) return h0_prime(x);
    const double bk = std::pow(sol_.flow.b, k);
    return bk * h0_prime(bk * x);
}

ResidualPair bellman_residual_avg(double x, const RelativeValueProfile& profile) {
    if (!(x > 0.0)) throw std::domain_error("bellman_residual_avg: x must be > 0");
    const AverageSolution& sol = profile.solution();
    const double c = reward_rate(x, sol.crit);
    const double flow = c - sol.gain +
                        profile.derivative(x) * sol.flow.a * std::pow(x, sol.flow.gamma);

    // sup over impulse depths; depths beyond the first landing below b*x_bar
    // only push h down, so one extra term past that point is exact.
    const double h_x = profile.value(x);
    double sup = -std::numeric_limits<double>::infinity();
    double y = x;
    bool past_deep = false;
    for (int m = 1; m < 400; ++m) {
        y *= sol.flow.b;
        sup = std::max(sup, profile.value(y) - h_x);
        if (past_deep) break;
        if (y < sol.flow.b * sol.x_bar) past_deep = true;
    }
    return {flow, sup};
}

}  // namespace sawtooth
