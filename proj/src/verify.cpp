#include "sawtooth/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sawtooth/errors.hpp"
#include "sawtooth/netsim.hpp"

namespace sawtooth {

std::vector<double> GridSpec::make() const {
    if (!(lo > 0.0 && hi > lo) || points < 2) throw param_error("invalid grid spec");
    std::vector<double> xs(points);
    const double log_lo = std::log(lo);
    const double step = (std::log(hi) - log_lo) / (points - 1);
    for (int i = 0; i < points; ++i) xs[i] = std::exp(log_lo + i * step);
    return xs;
}

ThresholdSearchResult grid_search_threshold(const FlowParams& fp, const CriterionParams& cp,
                                            Criterion criterion, const GridSpec& grid,
                                            const GridSearchOptions& opts) {
    fp.validate();
    cp.validate();
    if (grid.points < 200)
        throw param_error("grid_search_threshold needs >= 200 candidate thresholds");

    ThresholdSearchResult result;
    result.thresholds = grid.make();
    result.rewards.reserve(result.thresholds.size());
    result.best_reward = -std::numeric_limits<double>::infinity();

    for (double th : result.thresholds) {
        double reward;
        if (criterion == Criterion::average) {
            // One saw-tooth cycle [b*th, th] determines the long-run mean.
            reward = segment_reward(fp.b * th, th, fp, cp, Criterion::average) /
                     time_to_reach(fp.b * th, th, fp);
        } else {
            SimConfig cfg;
            cfg.network.routing = {{1}};
            cfg.network.link_weights = {cp.lambda};
            cfg.network.flows = {fp};
            cfg.network.alpha = cp.alpha;
            cfg.policies = {PolicySpec::threshold(th)};
            cfg.initial_rates = {opts.x0};
            cfg.horizon = opts.horizon_factor / cp.rho;
            cfg.criterion = Criterion::discounted;
            cfg.rho = cp.rho;
            reward = *simulate(cfg).disc_reward;
        }
        result.rewards.push_back(reward);
        if (reward > result.best_reward) {
            result.best_reward = reward;
            result.best_threshold = th;
        }
    }
    return result;
}

namespace {

// Shared sweep over either value-profile flavour.
template <typename ValueFn, typename ResidualFn>
ScanReport run_scan(double x_bar, double b, ValueFn&& value, ResidualFn&& residual,
                    const GridSpec& grid, const ScanTolerances& tol) {
    constexpr double kShift = 1e-9;
    ScanReport report;
    report.grid = grid;
    report.tolerances = tol;
    report.max_positive_residual = -std::numeric_limits<double>::infinity();

    std::vector<double> xs = grid.make();
    // Nudge points sitting on a breakpoint x_bar / b^k off it.
    for (double& x : xs) {
        if (x < x_bar) continue;
        double bp = x_bar;
        while (bp < x * (1.0 - kShift)) bp /= b;
        if (std::abs(x - bp) <= kShift * bp)
            x = (x < bp) ? bp * (1.0 - kShift) : bp * (1.0 + kShift);
    }

    for (double x : xs) {
        const auto [flow, impulse] = residual(x);
        const double worst = std::max(flow, impulse);
        if (worst > report.max_positive_residual) {
            report.max_positive_residual = worst;
            report.worst_x = x;
        }
        if (x < x_bar) {
            if (std::abs(flow) > report.flow_equality_max) {
                report.flow_equality_max = std::abs(flow);
                report.flow_equality_x = x;
            }
        } else {
            if (std::abs(impulse) > report.impulse_equality_max) {
                report.impulse_equality_max = std::abs(impulse);
                report.impulse_equality_x = x;
            }
        }
    }

    // Value continuity across every breakpoint inside the grid range.
    for (double bp = x_bar; bp <= xs.back(); bp /= b) {
        if (bp < xs.front()) continue;
        const double left = value(bp * (1.0 - kShift));
        const double right = value(bp * (1.0 + kShift));
        const double rel = std::abs(left - right) / std::max(1.0, std::abs(left));
        if (rel > report.continuity_max) {
            report.continuity_max = rel;
            report.continuity_x = bp;
        }
    }

    report.pass = report.max_positive_residual <= tol.residual &&
                  report.flow_equality_max <= tol.equality &&
                  report.impulse_equality_max <= tol.equality &&
                  report.continuity_max <= tol.continuity;
    return report;
}

}  // namespace

ScanReport bellman_scan(const RelativeValueProfile& profile, const GridSpec& grid,
                        const ScanTolerances& tol) {
    const AverageSolution& sol = profile.solution();
    return run_scan(
        sol.x_bar, sol.flow.b, [&](double x) { return profile.value(x); },
        [&](double x) {
            const ResidualPair r = bellman_residual_avg(x, profile);
            return std::pair<double, double>{r.flow_residual, r.impulse_residual};
        },
        grid, tol);
}

ScanReport bellman_scan(const ValueFunctionW& vf, const GridSpec& grid,
                        const ScanTolerances& tol) {
    const DiscountedSolution& sol = vf.solution();
    return run_scan(
        sol.x_bar, sol.flow.b, [&](double x) { return vf.value(x); },
        [&](double x) {
            const ResidualPairDisc r = bellman_residual_disc(x, vf);
            return std::pair<double, double>{r.flow_residual, r.impulse_residual};
        },
        grid, tol);
}

PastingResiduals pasting_check(const DiscountedSolution& sol) {
    const double wv = W_tilde(sol.x_bar, sol.w1, sol.flow, sol.crit);
    const double wv_b = W_tilde(sol.flow.b * sol.x_bar, sol.w1, sol.flow, sol.crit);
    const double wd = W_tilde_prime(sol.x_bar, sol.w1, sol.flow, sol.crit);
    const double wd_b = sol.flow.b * W_tilde_prime(sol.flow.b * sol.x_bar, sol.w1, sol.flow, sol.crit);
    PastingResiduals r;
    r.value_rel = std::abs(wv - wv_b) / std::max(1.0, std::abs(wv));
    r.derivative_rel = std::abs(wd - wd_b) / std::max(1.0, std::abs(wd));
    return r;
}

double fd_check(const std::function<double(double)>& f,
                const std::function<double(double)>& analytic,
                const std::vector<double>& x_grid, int order) {
    if (order != 1 && order != 2) throw param_error("fd_check: order must be 1 or 2");
    double worst = 0.0;
    for (double x : x_grid) {
        const double h = 1e-6 * (1.0 + std::abs(x));
        double fd;
        if (order == 1) {
            fd = (f(x + h) - f(x - h)) / (2.0 * h);
        } else {
            fd = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        }
        const double ref = analytic(x);
        worst = std::max(worst, std::abs(fd - ref) / (1.0 + std::abs(ref)));
    }
    return worst;
}

}  // namespace sawtooth
