#include "sawtooth/discounted_policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sawtooth/errors.hpp"
#include "sawtooth/quadrature.hpp"

namespace sawtooth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double reward_rate_raw(double x, double alpha, double lambda) {
    return std::pow(x, 1.0 - alpha) / (1.0 - alpha) - lambda * x;
}

}  // namespace

void check_discounted_preconditions(const FlowParams& fp, const CriterionParams& cp) {
    fp.validate();
    cp.validate();
    if (fp.gamma != 0.0)
        throw unsupported_param_error("discounted solution requires additive increase (gamma = 0)");
    if (!(cp.alpha > 1.0 && cp.alpha < 2.0))
        throw unsupported_param_error("discounted solution requires alpha in (1,2)");
    if (!(cp.rho > 0.0)) throw unsupported_param_error("discounted solution requires rho > 0");
    if (!(cp.lambda > 0.0)) throw zero_price_error();
}

double exp_power_integral(double lo, double hi, double rho, double a, double alpha) {
    if (!(lo > 0.0) || !(hi > 0.0))
        throw std::domain_error("exp_power_integral: limits must be > 0");
    if (!(a > 0.0)) throw param_error("exp_power_integral: a must be > 0");
    if (!(rho >= 0.0)) throw param_error("exp_power_integral: rho must be >= 0");
    if (lo == hi) return 0.0;
    const double r = rho / a;
    auto f = [=](double u) { return std::exp(-r * u) * std::pow(u, -alpha); };
    return integrate(f, lo, hi, 1e-12, 1e-300).value;
}

double incomplete_gamma_upper(double s, double z) {
    if (!(s > -1.0 && s < 0.0))
        throw unsupported_param_error("incomplete_gamma_upper: s must lie in (-1,0)");
    if (!(z > 0.0)) throw std::domain_error("incomplete_gamma_upper: z must be > 0");
    // The integrand decays like e^{-u}; beyond Z = max(z,1)+60 the remaining
    // tail is below e^{-Z} <= 3e-27, negligible at the 1e-13 target.
    const double Z = std::max(z, 1.0) + 60.0;
    auto f = [=](double u) { return std::exp(-u) * std::pow(u, s - 1.0); };
    return integrate(f, z, Z, 1e-13, 1e-15).value;
}

namespace {

// e^z * Gamma(s, z): substituting u = z + t gives int_0^inf e^{-t} (z+t)^{s-1} dt,
// bounded for all z > 0. Keeps W* finite at large x where e7's terms overflow.
double gamma_upper_scaled(double s, double z) {
    auto f = [=](double t) { return std::exp(-t) * std::pow(z + t, s - 1.0); };
    return integrate(f, 0.0, 64.0, 1e-13, 1e-15).value;
}

}  // namespace

double W_tilde(double x, double w1, const FlowParams& fp, const CriterionParams& cp) {
    check_discounted_preconditions(fp, cp);
    if (!(x > 0.0)) throw std::domain_error("W_tilde: x must be > 0");
    const double a = fp.a, rho = cp.rho, alpha = cp.alpha, lambda = cp.lambda;
    const double K = lambda / rho + lambda * a / (rho * rho) + 1.0 / (rho * (alpha - 1.0)) + w1;
    const double I1x = exp_power_integral(1.0, x, rho, a, alpha);
    return std::exp(rho / a * (x - 1.0)) * K - std::pow(x, 1.0 - alpha) / (rho * (alpha - 1.0)) -
           lambda / rho * x - a * lambda / (rho * rho) - std::exp(rho / a * x) / rho * I1x;
}

double W_tilde_prime(double x, double w1, const FlowParams& fp, const CriterionParams& cp) {
    check_discounted_preconditions(fp, cp);
    if (!(x > 0.0)) throw std::domain_error("W_tilde_prime: x must be > 0");
    const double a = fp.a, rho = cp.rho, alpha = cp.alpha, lambda = cp.lambda;
    const double K = lambda / rho + lambda * a / (rho * rho) + 1.0 / (rho * (alpha - 1.0)) + w1;
    const double I1x = exp_power_integral(1.0, x, rho, a, alpha);
    // The x^{-alpha} terms cancel when differentiating e7.
    return rho / a * std::exp(rho / a * (x - 1.0)) * K - lambda / rho -
           std::exp(rho / a * x) / a * I1x;
}

double no_impulse_boundary(const FlowParams& fp, const CriterionParams& cp) {
    check_discounted_preconditions(fp, cp);
    const double a = fp.a, rho = cp.rho, alpha = cp.alpha, lambda = cp.lambda;
    const double r = rho / a;
    return std::exp(r) / rho * std::pow(r, alpha - 1.0) * incomplete_gamma_upper(1.0 - alpha, r) -
           1.0 / (rho * (alpha - 1.0)) - lambda * (rho + a) / (rho * rho);
}

double W_star(double x, const FlowParams& fp, const CriterionParams& cp) {
    check_discounted_preconditions(fp, cp);
    if (!(x > 0.0)) throw std::domain_error("W_star: x must be > 0");
    const double a = fp.a, rho = cp.rho, alpha = cp.alpha, lambda = cp.lambda;
    const double r = rho / a;
    const double tail = std::pow(r, alpha - 1.0) * gamma_upper_scaled(1.0 - alpha, r * x);
    return tail / rho - std::pow(x, 1.0 - alpha) / (rho * (alpha - 1.0)) - lambda / rho * x -
           a * lambda / (rho * rho);
}

namespace {

// Scaled H: H(x) = e^{rho x (1-b)/a} * h_scaled(x). The integral term is
// folded into int_{bx}^x e^{rho(bx-u)/a} u^{-alpha} du whose integrand never
// exceeds (bx)^{-alpha}, so the scaled form is representable for every x.
double H_scaled(double x, const FlowParams& fp, const CriterionParams& cp) {
    const double a = fp.a, b = fp.b, rho = cp.rho, alpha = cp.alpha, lambda = cp.lambda;
    const double e1inv = std::exp(-rho * x * (1.0 - b) / a);
    const double r = rho / a;
    auto f = [=](double u) { return std::exp(r * (b * x - u)) * std::pow(u, -alpha); };
    const double q = integrate(f, b * x, x, 1e-12, 1e-300).value;
    const double bracket =
        std::pow(x, 1.0 - alpha) * (1.0 - std::pow(b, 1.0 - alpha)) / (alpha - 1.0) +
        lambda * x * (1.0 - b);
    return (1.0 - e1inv) * (1.0 - b) * lambda * a / rho - (1.0 - b) * q -
           (1.0 - b * e1inv) * bracket;
}

}  // namespace

double H(double x, const FlowParams& fp, const CriterionParams& cp) {
    check_discounted_preconditions(fp, cp);
    if (!(x > 0.0)) throw std::domain_error("H: x must be > 0");
    const double hs = H_scaled(x, fp, cp);
    const double exponent = cp.rho * x * (1.0 - fp.b) / fp.a;
    if (exponent > 700.0) return hs > 0.0 ? kInf : (hs < 0.0 ? -kInf : 0.0);
    return std::exp(exponent) * hs;
}

double limit_threshold(const FlowParams& fp, const CriterionParams& cp) {
    fp.validate();
    cp.validate();
    if (!(cp.lambda > 0.0)) throw zero_price_error();
    if (!(cp.alpha > 1.0 && cp.alpha < 2.0))
        throw unsupported_param_error("limit_threshold requires alpha in (1,2)");
    const double b = fp.b, alpha = cp.alpha;
    return std::pow(2.0 * (1.0 - std::pow(b, 2.0 - alpha)) /
                        (cp.lambda * (1.0 - b * b) * (2.0 - alpha)),
                    1.0 / alpha);
}

namespace {

double compute_w1(double x_bar, const FlowParams& fp, const CriterionParams& cp) {
    const double a = fp.a, b = fp.b, rho = cp.rho, alpha = cp.alpha, lambda = cp.lambda;
    const double t1 = std::exp(rho / a) / rho * exp_power_integral(1.0, x_bar, rho, a, alpha) -
                      lambda * (rho + a) / (rho * rho) - 1.0 / (rho * (alpha - 1.0));
    const double num =
        std::pow(x_bar, 1.0 - alpha) * (1.0 - std::pow(b, 1.0 - alpha)) / (rho * (alpha - 1.0)) +
        (1.0 - b) * lambda * x_bar / rho +
        std::exp(rho * b * x_bar / a) / rho *
            exp_power_integral(b * x_bar, x_bar, rho, a, alpha);
    const double den =
        std::exp((rho * b * x_bar - rho) / a) - std::exp((rho * x_bar - rho) / a);
    return t1 - num / den;
}

}  // namespace

DiscountedSolution solve_threshold_disc(const FlowParams& fp, const CriterionParams& cp) {
    check_discounted_preconditions(fp, cp);

    // Log-grid sign scan for the single + -> - crossing of H. Near the origin
    // H tends to 0 from above, so a left bracket must clear a small positive
    // floor before it is trusted.
    constexpr int kPerDecade = 64;
    constexpr double kLeftFloor = 1e-12;
    double lo_exp = -4.0, hi_exp = 4.0;
    double bracket_lo = 0.0, bracket_hi = 0.0;
    int crossings = 0;
    for (int expansion = 0; expansion < 3 && crossings == 0; ++expansion) {
        const int n = static_cast<int>((hi_exp - lo_exp) * kPerDecade) + 1;
        double prev_x = 0.0, prev_h = 0.0;
        bool have_prev = false;
        crossings = 0;
        for (int i = 0; i < n; ++i) {
            const double x = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * i / (n - 1));
            const double h = H(x, fp, cp);
            if (have_prev && prev_h > kLeftFloor && h < 0.0) {
                ++crossings;
                if (crossings == 1) {
                    bracket_lo = prev_x;
                    bracket_hi = x;
                }
            }
            prev_x = x;
            prev_h = h;
            have_prev = true;
        }
        if (crossings == 0) {
            lo_exp -= 2.0;
            hi_exp += 2.0;
        }
    }
    if (crossings == 0) {
        std::ostringstream msg;
        msg << "H has no + -> - sign change on [1e" << lo_exp << ", 1e" << hi_exp
            << "] (64 points/decade scan); sampled values:";
        for (double e = lo_exp; e <= hi_exp + 1e-9; e += (hi_exp - lo_exp) / 8.0) {
            const double x = std::pow(10.0, e);
            msg << " H(" << x << ")=" << H(x, fp, cp);
        }
        throw no_root_error(msg.str());
    }
    if (crossings > 1) {
        std::ostringstream msg;
        msg << "H has " << crossings << " sign changes; the theory predicts exactly one";
        throw ambiguous_root_error(msg.str());
    }

    // Bisection with secant acceleration on the scaled H (same sign, better
    // conditioned at large arguments).
    double lo = bracket_lo, hi = bracket_hi;
    double f_lo = H_scaled(lo, fp, cp), f_hi = H_scaled(hi, fp, cp);
    for (int iter = 0; iter < 200 && (hi - lo) > 1e-10 * hi; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (f_lo > 0.0 && f_hi < 0.0) {
            const double secant = lo - f_lo * (hi - lo) / (f_hi - f_lo);
            if (secant > lo + 0.05 * (hi - lo) && secant < hi - 0.05 * (hi - lo)) mid = secant;
        }
        const double f_mid = H_scaled(mid, fp, cp);
        if (f_mid > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    const double x_bar = 0.5 * (lo + hi);
    const double w1 = compute_w1(x_bar, fp, cp);

    // Smooth pasting is the defining property of (x_bar, w1); refuse to return
    // a solution that does not satisfy it.
    {
        const double wv = W_tilde(x_bar, w1, fp, cp);
        const double wv_b = W_tilde(fp.b * x_bar, w1, fp, cp);
        const double wd = W_tilde_prime(x_bar, w1, fp, cp);
        const double wd_b = fp.b * W_tilde_prime(fp.b * x_bar, w1, fp, cp);
        const double v_scale = std::max(1.0, std::abs(wv));
        const double d_scale = std::max(1.0, std::abs(wd));
        if (std::abs(wv - wv_b) > 1e-7 * v_scale || std::abs(wd - wd_b) > 1e-7 * d_scale) {
            std::ostringstream msg;
            msg << "smooth pasting violated at computed root x_bar=" << x_bar
                << ": value residual " << std::abs(wv - wv_b) << ", derivative residual "
                << std::abs(wd - wd_b);
            throw numeric_error(msg.str());
        }
    }

    DiscountedSolution sol;
    sol.x_bar = x_bar;
    sol.w1 = w1;
    sol.flow = fp;
    sol.crit = cp;
    const double cache_lo = std::min(x_bar / 256.0, 0.04);
    const double cache_hi = std::max(4.0, x_bar / std::pow(fp.b, 7));
    sol.cache = std::make_shared<ExpPowerCache>(cp.rho, fp.a, cp.alpha, cache_lo, cache_hi, 1024);
    return sol;
}

ExpPowerCache::ExpPowerCache(double rho, double a, double alpha, double lo, double hi,
                             int checkpoints)
    : rho_(rho), a_(a), alpha_(alpha) {
    if (!(lo > 0.0 && hi > lo) || checkpoints < 2)
        throw param_error("ExpPowerCache: invalid checkpoint range");
    log_lo_ = std::log(lo);
    step_ = (std::log(hi) - log_lo_) / (checkpoints - 1);
    xs_.resize(checkpoints);
    cum_.resize(checkpoints);
    for (int i = 0; i < checkpoints; ++i) xs_[i] = std::exp(log_lo_ + i * step_);
    // Cumulative integrals from 1 to each checkpoint, built segment by segment
    // from the checkpoint nearest 1 so panel errors do not accumulate a bias.
    int anchor = static_cast<int>(std::lround((std::log(1.0) - log_lo_) / step_));
    anchor = std::clamp(anchor, 0, checkpoints - 1);
    cum_[anchor] = exp_power_integral(1.0, xs_[anchor], rho_, a_, alpha_);
    for (int i = anchor + 1; i < checkpoints; ++i)
        cum_[i] = cum_[i - 1] + exp_power_integral(xs_[i - 1], xs_[i], rho_, a_, alpha_);
    for (int i = anchor - 1; i >= 0; --i)
        cum_[i] = cum_[i + 1] - exp_power_integral(xs_[i], xs_[i + 1], rho_, a_, alpha_);
}

double ExpPowerCache::integral_from_one(double x) const {
    if (!(x > 0.0)) throw std::domain_error("integral_from_one: x must be > 0");
    if (x <= xs_.front()) return cum_.front() - exp_power_integral(x, xs_.front(), rho_, a_, alpha_);
    if (x >= xs_.back()) return cum_.back() + exp_power_integral(xs_.back(), x, rho_, a_, alpha_);
    const int i = std::clamp(static_cast<int>((std::log(x) - log_lo_) / step_), 0,
                             static_cast<int>(xs_.size()) - 1);
    return cum_[i] + exp_power_integral(xs_[i], x, rho_, a_, alpha_);
}

ValueFunctionW::ValueFunctionW(DiscountedSolution sol) : sol_(std::move(sol)) {
    check_discounted_preconditions(sol_.flow, sol_.crit);
    if (!(sol_.x_bar > 0.0)) throw param_error("ValueFunctionW needs x_bar > 0");
    if (!sol_.cache) {
        const double cache_lo = std::min(sol_.x_bar / 256.0, 0.04);
        const double cache_hi = std::max(4.0, sol_.x_bar / std::pow(sol_.flow.b, 7));
        sol_.cache = std::make_shared<ExpPowerCache>(sol_.crit.rho, sol_.flow.a, sol_.crit.alpha,
                                                     cache_lo, cache_hi, 1024);
    }
}

double ValueFunctionW::tilde(double x) const {
    if (!(x > 0.0)) throw std::domain_error("W: x must be > 0");
    const double a = sol_.flow.a, rho = sol_.crit.rho;
    const double alpha = sol_.crit.alpha, lambda = sol_.crit.lambda;
    const double K =
        lambda / rho + lambda * a / (rho * rho) + 1.0 / (rho * (alpha - 1.0)) + sol_.w1;
    const double I1x = sol_.cache->integral_from_one(x);
    return std::exp(rho / a * (x - 1.0)) * K - std::pow(x, 1.0 - alpha) / (rho * (alpha - 1.0)) -
           lambda / rho * x - a * lambda / (rho * rho) - std::exp(rho / a * x) / rho * I1x;
}

double ValueFunctionW::tilde_prime(double x) const {
    if (!(x > 0.0)) throw std::domain_error("W': x must be > 0");
    const double a = sol_.flow.a, rho = sol_.crit.rho;
    const double alpha = sol_.crit.alpha, lambda = sol_.crit.lambda;
    const double K =
        lambda / rho + lambda * a / (rho * rho) + 1.0 / (rho * (alpha - 1.0)) + sol_.w1;
    const double I1x = sol_.cache->integral_from_one(x);
    return rho / a * std::exp(rho / a * (x - 1.0)) * K - lambda / rho -
           std::exp(rho / a * x) / a * I1x;
}

int ValueFunctionW::impulse_depth(double x) const {
    if (!(x > 0.0)) throw std::domain_error("impulse_depth: x must be > 0");
    if (x < sol_.x_bar) return 0;
    return sol_.policy().impulse_count(x);
}

double ValueFunctionW::value(double x) const {
    const int k = impulse_depth(x);
    return k == 0 ? tilde(x) : tilde(std::pow(sol_.flow.b, k) * x);
}

double ValueFunctionW::derivative(double x) const {
    const int k = impulse_depth(x);
    if (k == 0) return tilde_prime(x);
    const double bk = std::pow(sol_.flow.b, k);
    return bk * tilde_prime(bk * x);
}

ResidualPairDisc bellman_residual_disc(double x, const ValueFunctionW& vf) {
    if (!(x > 0.0)) throw std::domain_error("bellman_residual_disc: x must be > 0");
    const DiscountedSolution& sol = vf.solution();
    const double c = reward_rate_raw(x, sol.crit.alpha, sol.crit.lambda);
    const double flow = c - sol.crit.rho * vf.value(x) + sol.flow.a * vf.derivative(x);

    const double w_x = vf.value(x);
    double sup = -kInf;
    double y = x;
    bool past_deep = false;
    for (int i = 1; i < 400; ++i) {
        y *= sol.flow.b;
        sup = std::max(sup, vf.value(y) - w_x);
        if (past_deep) break;
        if (y < sol.flow.b * sol.x_bar) past_deep = true;
    }
    return {flow, sup};
}

std::vector<DiagnosticRow> diagnostic_curves(const std::vector<double>& x_grid,
                                             const ValueFunctionW& vf) {
    const CriterionParams& cp = vf.solution().crit;
    const FlowParams& fp = vf.solution().flow;
    std::vector<DiagnosticRow> rows;
    rows.reserve(x_grid.size());
    for (double x : x_grid) {
        if (!(x > 0.0)) throw std::domain_error("diagnostic_curves: grid values must be > 0");
        DiagnosticRow row;
        row.x = x;
        row.W = vf.value(x);
        row.z = -(std::pow(x, 1.0 - cp.alpha) / (cp.alpha - 1.0) + cp.lambda * x) / cp.rho;
        row.v_infl = fp.a * (std::pow(x, -cp.alpha) - cp.lambda) / (cp.rho * cp.rho) + row.z;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace sawtooth
