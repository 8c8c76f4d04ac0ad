#include <doctest.h>

#include <cmath>
#include <vector>

#include "sawtooth/average_policy.hpp"
#include "sawtooth/discounted_policy.hpp"
#include "sawtooth/errors.hpp"
#include "sawtooth/verify.hpp"

using namespace sawtooth;

namespace {

const FlowParams kAimd{0.2, 0.5, 0.0};
const FlowParams kMimd{0.2, 0.5, 1.0};
const CriterionParams kAvgCrit{0.5, 2.0, 0.0};
const CriterionParams kDiscCrit{1.3, 2.0, 1.0};

bool within_one_grid_step(const ThresholdSearchResult& sr, double reference) {
    const double step =
        std::log(sr.thresholds.back() / sr.thresholds.front()) / (sr.thresholds.size() - 1);
    return std::abs(std::log(sr.best_threshold / reference)) <= step * (1.0 + 1e-9);
}

int local_maxima(const std::vector<double>& ys, double wiggle) {
    int count = 0;
    for (std::size_t i = 1; i + 1 < ys.size(); ++i)
        if (ys[i] > ys[i - 1] + wiggle && ys[i] > ys[i + 1] + wiggle) ++count;
    return count;
}

}  // namespace

TEST_CASE("grid_search_threshold: average criterion argmax sits at the closed form") {
    for (const FlowParams& fp : {kAimd, kMimd}) {
        const AverageSolution sol = threshold_avg(fp, kAvgCrit);
        const ThresholdSearchResult sr = grid_search_threshold(
            fp, kAvgCrit, Criterion::average, {0.5 * sol.x_bar, 1.5 * sol.x_bar, 200});
        CHECK(within_one_grid_step(sr, sol.x_bar));
        CHECK(local_maxima(sr.rewards, 1e-14) <= 1);
    }
    CHECK_THROWS_AS(
        grid_search_threshold(kAimd, kAvgCrit, Criterion::average, {0.2, 0.5, 50}),
        param_error);
}

TEST_CASE("grid_search_threshold: discounted criterion argmax sits at the root of H") {
    const DiscountedSolution sol = solve_threshold_disc(kAimd, kDiscCrit);
    const ThresholdSearchResult sr = grid_search_threshold(
        kAimd, kDiscCrit, Criterion::discounted, {0.5 * sol.x_bar, 1.5 * sol.x_bar, 200});
    CHECK(within_one_grid_step(sr, sol.x_bar));
    CHECK(local_maxima(sr.rewards, 1e-12) <= 1);
}

TEST_CASE("bellman_scan: passes for correct solutions") {
    const RelativeValueProfile profile(threshold_avg(kAimd, kAvgCrit));
    const double xb = profile.solution().x_bar;
    const ScanReport avg = bellman_scan(profile, {xb / 100.0, xb / std::pow(0.5, 5), 2000});
    CHECK(avg.pass);

    const DiscountedSolution dsol = solve_threshold_disc(kAimd, kDiscCrit);
    const ValueFunctionW vf(dsol);
    const ScanReport disc =
        bellman_scan(vf, {dsol.x_bar / 100.0, dsol.x_bar / std::pow(0.5, 5), 2000});
    CHECK(disc.pass);
}

TEST_CASE("bellman_scan: every 1% mutation is detected") {
    const AverageSolution sol = threshold_avg(kAimd, kAvgCrit);
    const GridSpec grid{sol.x_bar / 100.0, sol.x_bar / std::pow(0.5, 5), 2000};

    for (double factor : {1.01, 0.99}) {
        AverageSolution bad_gain = sol;
        bad_gain.gain *= factor;
        CHECK(!bellman_scan(RelativeValueProfile(bad_gain), grid).pass);

        AverageSolution bad_threshold = sol;
        bad_threshold.x_bar *= factor;
        CHECK(!bellman_scan(RelativeValueProfile(bad_threshold), grid).pass);
    }

    const DiscountedSolution dsol = solve_threshold_disc(kAimd, kDiscCrit);
    const GridSpec dgrid{dsol.x_bar / 100.0, dsol.x_bar / std::pow(0.5, 5), 2000};
    for (double factor : {1.01, 0.99}) {
        DiscountedSolution bad_w1 = dsol;
        bad_w1.w1 *= factor;
        CHECK(!bellman_scan(ValueFunctionW(bad_w1), dgrid).pass);

        DiscountedSolution bad_threshold = dsol;
        bad_threshold.x_bar *= factor;
        CHECK(!bellman_scan(ValueFunctionW(bad_threshold), dgrid).pass);
    }
}

TEST_CASE("pasting_check: tight for the solution, loose for 1% mutations") {
    const DiscountedSolution sol = solve_threshold_disc(kAimd, kDiscCrit);
    const PastingResiduals good = pasting_check(sol);
    CHECK(good.value_rel <= 1e-7);
    CHECK(good.derivative_rel <= 1e-7);

    // x_bar is a tangency point of W~(x) and W~(bx): the value residual under
    // an x_bar shift is second order in the shift, so detection rests on the
    // first-order derivative residual.
    DiscountedSolution bad_x = sol;
    bad_x.x_bar *= 1.01;
    const PastingResiduals shifted = pasting_check(bad_x);
    CHECK(std::max(shifted.value_rel, shifted.derivative_rel) > 1e-4);
    CHECK(shifted.value_rel > 1e-6);

    DiscountedSolution bad_w1 = sol;
    bad_w1.w1 *= 1.01;
    CHECK(pasting_check(bad_w1).value_rel > 1e-4);
}

TEST_CASE("fd_check: analytic derivatives and the degenerate constant case") {
    const RelativeValueProfile profile(threshold_avg(kAimd, kAvgCrit));
    const double xb = profile.solution().x_bar;
    std::vector<double> grid;
    for (int i = 1; i <= 30; ++i) grid.push_back(xb * i / 32.0);
    CHECK(fd_check([&](double x) { return profile.value(x); },
                   [&](double x) { return profile.derivative(x); }, grid, 1) <= 1e-6);

    const DiscountedSolution dsol = solve_threshold_disc(kAimd, kDiscCrit);
    const ValueFunctionW vf(dsol);
    std::vector<double> wgrid;
    for (int i = 1; i <= 30; ++i) wgrid.push_back(0.1 + 1.5 * i / 30.0);
    CHECK(fd_check([&](double x) { return vf.tilde(x); },
                   [&](double x) { return vf.tilde_prime(x); }, wgrid, 1) <= 1e-5);

    CHECK(fd_check([](double) { return 3.5; }, [](double) { return 0.0; }, grid, 1) <= 1e-12);
    CHECK(fd_check([](double) { return 3.5; }, [](double) { return 0.0; }, grid, 2) <= 1e-12);
    CHECK_THROWS_AS(fd_check([](double x) { return x; }, [](double) { return 1.0; }, grid, 3),
                    param_error);
}
