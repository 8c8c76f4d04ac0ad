#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sawtooth/average_policy.hpp"
#include "sawtooth/discounted_policy.hpp"
#include "sawtooth/model.hpp"

namespace sawtooth {

struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    int points = 0;  // log-spaced

    std::vector<double> make() const;
};

struct ScanTolerances {
    double residual = 1e-8;    // max positive Bellman residual
    double equality = 1e-8;    // active-region equalities
    double continuity = 1e-8;  // relative value match across breakpoints
};

struct ScanReport {
    GridSpec grid;
    ScanTolerances tolerances;
    double max_positive_residual = 0.0;
    double worst_x = 0.0;
    double flow_equality_max = 0.0;     // on (0, x_bar)
    double flow_equality_x = 0.0;
    double impulse_equality_max = 0.0;  // on [x_bar, inf)
    double impulse_equality_x = 0.0;
    double continuity_max = 0.0;        // relative, across breakpoints in range
    double continuity_x = 0.0;
    bool pass = false;
};

struct ThresholdSearchResult {
    double best_threshold = 0.0;
    double best_reward = 0.0;
    std::vector<double> thresholds;
    std::vector<double> rewards;
};

struct GridSearchOptions {
    double x0 = 1.0;              // discounted: simulation start state
    double horizon_factor = 40.0; // discounted: horizon = factor / rho
};

/// Independent optimality oracle: evaluates the threshold family on a log
/// grid using only model/netsim primitives (exact cycle arithmetic for the
/// average criterion, truncated event-driven simulation for the discounted
/// one) and returns the argmax with the full reward curve.
ThresholdSearchResult grid_search_threshold(const FlowParams& fp, const CriterionParams& cp,
                                            Criterion criterion, const GridSpec& grid,
                                            const GridSearchOptions& opts = {});

/// Residual sweep over a log grid (points are nudged off breakpoints by a
/// 1e-9 relative shift). Checks the sign condition everywhere, the equalities
/// in their active regions, and value continuity across breakpoints.
ScanReport bellman_scan(const RelativeValueProfile& profile, const GridSpec& grid,
                        const ScanTolerances& tol = {});
ScanReport bellman_scan(const ValueFunctionW& vf, const GridSpec& grid,
                        const ScanTolerances& tol = {1e-6, 1e-6, 1e-8});

struct PastingResiduals {
    double value_rel = 0.0;
    double derivative_rel = 0.0;
};

/// Smooth-pasting residuals of a discounted solution, relative scale.
PastingResiduals pasting_check(const DiscountedSolution& sol);

/// Central-difference check of an analytic derivative (order 1) or second
/// derivative (order 2); returns the worst relative deviation over the grid.
double fd_check(const std::function<double(double)>& f,
                const std::function<double(double)>& analytic,
                const std::vector<double>& x_grid, int order);

}  // namespace sawtooth
