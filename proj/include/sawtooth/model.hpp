#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace sawtooth {

/// Per-flow saw-tooth dynamics: dx/dt = a * x^gamma between notifications,
/// x -> b^k * x when a (possibly composite) notification of count k arrives.
struct FlowParams {
    double a = 0.0;      // growth coefficient, rate units per second
    double b = 0.0;      // multiplicative decrease factor, in (0,1)
    double gamma = 0.0;  // growth exponent, in [0,1]; 0 = AIMD, 1 = MIMD

    void validate() const;
};

enum class Criterion { average, discounted };

/// Fairness/pricing constants of the reward rate c(x) = x^{1-alpha}/(1-alpha) - lambda*x.
struct CriterionParams {
    double alpha = 0.0;   // fairness exponent, > 0 and != 1
    double lambda = 0.0;  // aggregated link price, >= 0
    double rho = 0.0;     // discount factor, > 0 for the discounted criterion

    void validate() const;
};

/// Feedback policy: no notification below x_bar; count v(x) = k for
/// x in [x_bar/b^{k-1}, x_bar/b^k). The impulse lands in [b*x_bar, x_bar).
struct ThresholdPolicy {
    double x_bar = 0.0;
    double b = 0.0;

    bool triggers(double x) const { return x >= x_bar; }
    int impulse_count(double x) const;   // v(x); throws below threshold
    double apply(double x) const;        // b^{v(x)} * x
};

/// Routed multi-flow network. routing[l][k] == 1 iff flow k crosses link l.
struct NetworkSpec {
    std::vector<std::vector<int>> routing;  // L rows of n entries in {0,1}
    std::vector<double> link_weights;       // lambda_l, length L
    std::vector<FlowParams> flows;          // length n
    double alpha = 0.0;

    int num_links() const { return static_cast<int>(routing.size()); }
    int num_flows() const { return static_cast<int>(flows.size()); }
    void validate() const;
};

struct ImpulseEvent {
    double time = 0.0;
    int flow = 0;
    int count = 0;  // composite notification count v
};

struct FlowOutcome {
    double reward = 0.0;  // this flow's contribution to the active criterion
    std::int64_t impulses = 0;
    double final_rate = 0.0;
    double min_rate = 0.0;  // observed after the first impulse (confinement range)
    double max_rate = 0.0;
};

struct SimReport {
    double horizon = 0.0;
    std::vector<ImpulseEvent> impulse_times;  // sorted by (time, flow)
    std::optional<double> avg_reward;         // horizon mean, average criterion
    std::optional<double> disc_reward;        // discounted criterion
    std::optional<double> truncation_bound;   // bound on the discarded discounted tail
    std::vector<FlowOutcome> per_flow;
    std::int64_t total_impulses = 0;  // N_T summed over flows
};

/// Exact solution of dx/dt = a x^gamma after dt seconds from x0.
double grow(double x0, double dt, const FlowParams& fp);

/// Inverse of grow: time for the rate to climb from x0 to x1 (>= x0).
double time_to_reach(double x0, double x1, const FlowParams& fp);

/// Composite notification: b^k * x.
double apply_impulse(double x, int k, double b);

/// alpha-fairness reward rate c(x) = x^{1-alpha}/(1-alpha) - lambda*x.
double reward_rate(double x, const CriterionParams& cp);

/// Reward accumulated along one growth segment from x0 to x1:
/// integral of c(x(t)) dt (average) or e^{-rho t} c(x(t)) dt starting at
/// absolute time t0 (discounted). Closed forms for gamma in {0,1} in average
/// mode, adaptive quadrature otherwise.
double segment_reward(double x0, double x1, const FlowParams& fp, const CriterionParams& cp,
                      Criterion mode, double t0 = 0.0);

}  // namespace sawtooth
