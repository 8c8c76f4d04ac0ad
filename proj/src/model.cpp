#include "sawtooth/model.hpp"

#include <cmath>
#include <sstream>

#include "sawtooth/errors.hpp"
#include "sawtooth/quadrature.hpp"

namespace sawtooth {

namespace {

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void FlowParams::validate() const {
    if (!finite_positive(a)) throw param_error("flow growth coefficient a must be > 0");
    if (!(std::isfinite(b) && b > 0.0 && b < 1.0))
        throw param_error("decrease factor b must lie in (0,1)");
    if (!(std::isfinite(gamma) && gamma >= 0.0 && gamma <= 1.0))
        throw param_error("growth exponent gamma must lie in [0,1]");
}

void CriterionParams::validate() const {
    if (!finite_positive(alpha)) throw param_error("alpha must be > 0");
    if (alpha == 1.0) throw alpha_one_error();
    if (!(std::isfinite(lambda) && lambda >= 0.0)) throw param_error("lambda must be >= 0");
    if (!(std::isfinite(rho) && rho >= 0.0)) throw param_error("rho must be >= 0");
}

int ThresholdPolicy::impulse_count(double x) const {
    if (!(x_bar > 0.0) || !(b > 0.0 && b < 1.0)) throw param_error("invalid threshold policy");
    if (!(x >= x_bar)) throw std::domain_error("impulse count undefined below the threshold");
    // v(x) = k on [x_bar/b^{k-1}, x_bar/b^k); the upper edge belongs to k+1.
    int k = 1;
    double upper = x_bar / b;
    while (x >= upper) {
        ++k;
        upper /= b;
    }
    return k;
}

double ThresholdPolicy::apply(double x) const {
    const int k = impulse_count(x);
    return apply_impulse(x, k, b);
}

void NetworkSpec::validate() const {
    const int links = num_links();
    const int flows_n = num_flows();
    if (links <= 0 || flows_n <= 0) throw validation_error("network needs >= 1 link and >= 1 flow");
    if (static_cast<int>(link_weights.size()) != links)
        throw validation_error("link_weights length must equal the number of links");
    std::vector<bool> column_used(flows_n, false);
    for (int l = 0; l < links; ++l) {
        if (static_cast<int>(routing[l].size()) != flows_n)
            throw validation_error("routing rows must all have one entry per flow");
        bool row_used = false;
        for (int k = 0; k < flows_n; ++k) {
            const int e = routing[l][k];
            if (e != 0 && e != 1) throw validation_error("routing entries must be 0 or 1");
            if (e == 1) {
                row_used = true;
                column_used[k] = true;
            }
        }
        if (!row_used) throw validation_error("every link must carry at least one flow");
        if (!(std::isfinite(link_weights[l]) && link_weights[l] >= 0.0))
            throw validation_error("link weights must be >= 0");
    }
    for (int k = 0; k < flows_n; ++k)
        if (!column_used[k]) throw validation_error("every flow must cross at least one link");
    for (const FlowParams& fp : flows) fp.validate();
    if (!finite_positive(alpha) || alpha == 1.0)
        throw validation_error("network alpha must be > 0 and != 1");
}

double grow(double x0, double dt, const FlowParams& fp) {
    fp.validate();
    if (!finite_positive(x0)) throw std::domain_error("grow: x0 must be > 0");
    if (!(std::isfinite(dt) && dt >= 0.0)) throw std::domain_error("grow: dt must be >= 0");
    if (fp.gamma == 1.0) return x0 * std::exp(fp.a * dt);
    const double one_minus_gamma = 1.0 - fp.gamma;
    return std::pow(std::pow(x0, one_minus_gamma) + fp.a * one_minus_gamma * dt,
                    1.0 / one_minus_gamma);
}

double time_to_reach(double x0, double x1, const FlowParams& fp) {
    fp.validate();
    if (!finite_positive(x0)) throw std::domain_error("time_to_reach: x0 must be > 0");
    if (!(std::isfinite(x1) && x1 >= x0)) throw std::domain_error("time_to_reach: need x1 >= x0");
    if (x1 == x0) return 0.0;
    if (fp.gamma == 0.0) return (x1 - x0) / fp.a;
    if (fp.gamma == 1.0) return std::log(x1 / x0) / fp.a;
    const double one_minus_gamma = 1.0 - fp.gamma;
    return (std::pow(x1, one_minus_gamma) - std::pow(x0, one_minus_gamma)) /
           (fp.a * one_minus_gamma);
}

double apply_impulse(double x, int k, double b) {
    if (!finite_positive(x)) throw std::domain_error("apply_impulse: x must be > 0");
    if (k < 1) throw std::domain_error("apply_impulse: impulse count must be >= 1");
    if (!(b > 0.0 && b < 1.0)) throw param_error("apply_impulse: b must lie in (0,1)");
    return std::pow(b, k) * x;
}

double reward_rate(double x, const CriterionParams& cp) {
    cp.validate();
    if (!finite_positive(x)) throw std::domain_error("reward_rate: x must be > 0");
    return std::pow(x, 1.0 - cp.alpha) / (1.0 - cp.alpha) - cp.lambda * x;
}

namespace {

// Antiderivative of c(x)/(a x^gamma) for gamma = 0: cycle rewards in closed form.
double average_antiderivative_gamma0(double x, double a, double alpha, double lambda) {
    double util;
    if (alpha == 2.0) {
        util = -std::log(x);
    } else {
        util = std::pow(x, 2.0 - alpha) / ((1.0 - alpha) * (2.0 - alpha));
    }
    return (util - 0.5 * lambda * x * x) / a;
}

// Antiderivative of c(x)/(a x) for gamma = 1.
double average_antiderivative_gamma1(double x, double a, double alpha, double lambda) {
    const double one_minus_alpha = 1.0 - alpha;
    return (std::pow(x, one_minus_alpha) / (one_minus_alpha * one_minus_alpha) - lambda * x) / a;
}

}  // namespace

double segment_reward(double x0, double x1, const FlowParams& fp, const CriterionParams& cp,
                      Criterion mode, double t0) {
    fp.validate();
    cp.validate();
    if (!finite_positive(x0)) throw std::domain_error("segment_reward: x0 must be > 0");
    if (!(std::isfinite(x1) && x1 >= x0)) throw std::domain_error("segment_reward: need x1 >= x0");
    if (x1 == x0) return 0.0;

    if (mode == Criterion::average) {
        if (fp.gamma == 0.0) {
            return average_antiderivative_gamma0(x1, fp.a, cp.alpha, cp.lambda) -
                   average_antiderivative_gamma0(x0, fp.a, cp.alpha, cp.lambda);
        }
        if (fp.gamma == 1.0) {
            return average_antiderivative_gamma1(x1, fp.a, cp.alpha, cp.lambda) -
                   average_antiderivative_gamma1(x0, fp.a, cp.alpha, cp.lambda);
        }
        auto integrand = [&](double u) {
            return reward_rate(u, cp) / (fp.a * std::pow(u, fp.gamma));
        };
        return integrate(integrand, x0, x1, 1e-11).value;
    }

    // Discounted: weight e^{-rho (t0 + tau(u))} with tau(u) the exact transit
    // time from x0 to u. The e^{-rho t0} factor is pulled out of the integral.
    if (!(cp.rho > 0.0)) throw param_error("segment_reward: discounted mode needs rho > 0");
    if (!(std::isfinite(t0) && t0 >= 0.0)) throw std::domain_error("segment_reward: t0 must be >= 0");
    auto integrand = [&](double u) {
        const double tau = time_to_reach(x0, u, fp);
        return std::exp(-cp.rho * tau) * reward_rate(u, cp) / (fp.a * std::pow(u, fp.gamma));
    };
    return std::exp(-cp.rho * t0) * integrate(integrand, x0, x1, 1e-11).value;
}

}  // namespace sawtooth
