#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sawtooth/model.hpp"

namespace sawtooth {

enum class PolicyKind { threshold, red, fixed_period, none };

/// Per-flow notification policy. threshold is the paper's AQM scheme; red and
/// fixed_period are baselines; none disables notifications.
struct PolicySpec {
    PolicyKind kind = PolicyKind::none;
    double x_bar = 0.0;                       // threshold
    double min_th = 0.0, max_th = 0.0;        // red ramp
    double p_max = 0.0, step = 0.0;           // red drop probability cap and time step
    double period = 0.0;                      // fixed_period

    static PolicySpec threshold(double x_bar);
    static PolicySpec red(double min_th, double max_th, double p_max, double step);
    static PolicySpec fixed_period(double period);
    static PolicySpec none();

    void validate() const;
};

struct SimConfig {
    NetworkSpec network;
    std::vector<PolicySpec> policies;    // one per flow
    std::vector<double> initial_rates;   // one per flow, > 0
    double horizon = 0.0;
    Criterion criterion = Criterion::average;
    double rho = 0.0;                    // discounted criterion only
    std::uint64_t seed = 0;              // consumed by RED streams only
    double warmup_time = 0.0;            // average criterion: exclude [0, warmup) from the mean
    bool capture_trace = false;          // record per-event TraceRows

    void validate() const;
};

/// One trace record per impulse (plus a closing row per flow at the horizon).
/// cumulative_reward is the flow's own criterion-weighted reward up to time.
struct TraceRow {
    double time = 0.0;
    int flow = 0;
    double rate_before = 0.0;
    double rate_after = 0.0;
    int impulse_count = 0;
    double cumulative_reward = 0.0;
};

/// Per-flow aggregated price lambda^k = sum of weights of the links on the
/// flow's path. Decouples the network objective into single-flow problems.
std::vector<double> decouple_prices(const NetworkSpec& net);

/// Event-driven simulation: exact event times and closed-form/quadrature
/// segment rewards for deterministic policies; RED advances in fixed steps
/// with one seeded counter-based stream per flow. Deterministic given the
/// config (including seed).
SimReport simulate(const SimConfig& cfg);

/// Trace rows for the same run (empty unless cfg.capture_trace).
SimReport simulate(const SimConfig& cfg, std::vector<TraceRow>& trace);

struct PolicyComparison {
    std::string label;
    SimReport report;
};

/// Runs each labelled config and tabulates the results. All variants must
/// share the horizon and flow count.
std::vector<PolicyComparison> compare_policies(
    const std::vector<std::pair<std::string, SimConfig>>& variants);

}  // namespace sawtooth
