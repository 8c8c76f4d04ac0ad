#include "sawtooth/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sawtooth/errors.hpp"

namespace sawtooth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Counter-based uniform draw: one independent stream per flow, O(1) access by
// step index, bit-stable across runs and platforms.
double uniform01(std::uint64_t seed, std::uint64_t flow, std::uint64_t counter) {
    const std::uint64_t key = mix64(seed ^ mix64(flow + 0x51ed2701a3c5e4d9ull));
    const std::uint64_t v = mix64(key ^ (counter * 0x9e3779b97f4a7c15ull));
    return static_cast<double>(v >> 11) * 0x1.0p-53;
}

}  // namespace

PolicySpec PolicySpec::threshold(double x_bar) {
    PolicySpec p;
    p.kind = PolicyKind::threshold;
    p.x_bar = x_bar;
    return p;
}

PolicySpec PolicySpec::red(double min_th, double max_th, double p_max, double step) {
    PolicySpec p;
    p.kind = PolicyKind::red;
    p.min_th = min_th;
    p.max_th = max_th;
    p.p_max = p_max;
    p.step = step;
    return p;
}

PolicySpec PolicySpec::fixed_period(double period) {
    PolicySpec p;
    p.kind = PolicyKind::fixed_period;
    p.period = period;
    return p;
}

PolicySpec PolicySpec::none() { return PolicySpec{}; }

void PolicySpec::validate() const {
    switch (kind) {
        case PolicyKind::threshold:
            if (!(x_bar > 0.0)) throw validation_error("threshold policy needs x_bar > 0");
            break;
        case PolicyKind::red:
            if (!(min_th > 0.0 && max_th > min_th))
                throw validation_error("red policy needs 0 < min_th < max_th");
            if (!(p_max > 0.0 && p_max <= 1.0))
                throw validation_error("red policy needs p_max in (0,1]");
            if (!(step > 0.0)) throw validation_error("red policy needs a positive time step");
            break;
        case PolicyKind::fixed_period:
            if (!(period > 0.0)) throw validation_error("fixed_period policy needs period > 0");
            break;
        case PolicyKind::none:
            break;
    }
}

void SimConfig::validate() const {
    network.validate();
    const int n = network.num_flows();
    if (static_cast<int>(policies.size()) != n) throw validation_error("need one policy per flow");
    if (static_cast<int>(initial_rates.size()) != n)
        throw validation_error("need one initial rate per flow");
    for (const PolicySpec& p : policies) p.validate();
    for (double x0 : initial_rates)
        if (!(std::isfinite(x0) && x0 > 0.0)) throw validation_error("initial rates must be > 0");
    if (!(std::isfinite(horizon) && horizon > 0.0)) throw validation_error("horizon must be > 0");
    if (criterion == Criterion::discounted && !(rho > 0.0))
        throw validation_error("discounted criterion needs rho > 0");
    if (!(warmup_time >= 0.0) || warmup_time >= horizon)
        throw validation_error("warmup must lie in [0, horizon)");
}

std::vector<double> decouple_prices(const NetworkSpec& net) {
    net.validate();
    std::vector<double> prices(net.num_flows(), 0.0);
    for (int l = 0; l < net.num_links(); ++l)
        for (int k = 0; k < net.num_flows(); ++k)
            if (net.routing[l][k] == 1) prices[k] += net.link_weights[l];
    return prices;
}

namespace {

constexpr std::int64_t kEventCap = 50'000'000;

struct FlowRun {
    double reward = 0.0;       // full-horizon accumulated reward
    double warm_reward = 0.0;  // portion accumulated in [0, warmup), average mode
    std::vector<ImpulseEvent> events;
    std::vector<TraceRow> trace;
    double final_rate = 0.0;
    double min_rate = kInf;  // observed from the first impulse onward
    double max_rate = -kInf;
    double trunc_bound = 0.0;  // discounted tail bound, this flow
};

class SegmentAccumulator {
public:
    SegmentAccumulator(const FlowParams& fp, const CriterionParams& cp, Criterion mode,
                       double warmup)
        : fp_(fp), cp_(cp), mode_(mode), warmup_(warmup) {}

    // Growth segment starting at rate x0, absolute time t0, ending at rate x1.
    void add(FlowRun& run, double x0, double x1, double t0) const {
        if (x1 <= x0) return;
        run.reward += segment_reward(x0, x1, fp_, cp_, mode_, t0);
        if (mode_ == Criterion::average && warmup_ > 0.0 && t0 < warmup_) {
            const double t1 = t0 + time_to_reach(x0, x1, fp_);
            if (t1 <= warmup_) {
                run.warm_reward += segment_reward(x0, x1, fp_, cp_, mode_, t0);
            } else {
                const double x_warm = grow(x0, warmup_ - t0, fp_);
                run.warm_reward += segment_reward(x0, x_warm, fp_, cp_, mode_, t0);
            }
        }
    }

private:
    const FlowParams& fp_;
    const CriterionParams& cp_;
    Criterion mode_;
    double warmup_;
};

double abs_reward_rate_sup(double lo, double hi, const CriterionParams& cp) {
    double sup = std::max(std::abs(reward_rate(lo, cp)), std::abs(reward_rate(hi, cp)));
    if (cp.lambda > 0.0) {
        const double x_peak = std::pow(cp.lambda, -1.0 / cp.alpha);
        if (x_peak > lo && x_peak < hi) sup = std::max(sup, std::abs(reward_rate(x_peak, cp)));
    }
    return sup;
}

FlowRun simulate_flow(int flow_idx, const FlowParams& fp, const CriterionParams& cp,
                      const PolicySpec& policy, double x0, double horizon, Criterion mode,
                      std::uint64_t seed, double warmup, bool capture_trace) {
    FlowRun run;
    SegmentAccumulator acc(fp, cp, mode, warmup);
    // An event exactly on the horizon counts as inside it; the tolerance
    // absorbs rounding drift in long periodic runs without admitting real
    // overshoot at the scales the tests verify.
    const double t_edge = horizon * (1.0 + 1e-12);

    double t = 0.0;
    double x = x0;
    auto note_impulse = [&](double at, int count, double before, double after) {
        run.events.push_back({at, flow_idx, count});
        if (capture_trace) run.trace.push_back({at, flow_idx, before, after, count, run.reward});
        if (static_cast<std::int64_t>(run.events.size()) > kEventCap)
            throw numeric_error("impulse count exceeded the per-flow event cap");
    };
    auto track_range = [&](double rate) {
        if (!run.events.empty()) {
            run.min_rate = std::min(run.min_rate, rate);
            run.max_rate = std::max(run.max_rate, rate);
        }
    };

    switch (policy.kind) {
        case PolicyKind::none:
            break;

        case PolicyKind::threshold: {
            const ThresholdPolicy pol{policy.x_bar, fp.b};
            if (pol.triggers(x)) {
                const int k = pol.impulse_count(x);
                const double before = x;
                x = apply_impulse(x, k, fp.b);
                note_impulse(t, k, before, x);
                track_range(x);
            }
            while (true) {
                const double transit = time_to_reach(x, pol.x_bar, fp);
                if (t + transit > t_edge) break;
                acc.add(run, x, pol.x_bar, t);
                t += transit;
                track_range(pol.x_bar);
                x = apply_impulse(pol.x_bar, 1, fp.b);
                note_impulse(t, 1, pol.x_bar, x);
                track_range(x);
            }
            break;
        }

        case PolicyKind::fixed_period: {
            std::int64_t m = 1;
            while (true) {
                const double t_ev = static_cast<double>(m) * policy.period;
                if (t_ev > t_edge) break;
                const double x_ev = grow(x, t_ev - t, fp);
                acc.add(run, x, x_ev, t);
                track_range(x_ev);
                x = apply_impulse(x_ev, 1, fp.b);
                note_impulse(t_ev, 1, x_ev, x);
                track_range(x);
                t = t_ev;
                ++m;
            }
            break;
        }

        case PolicyKind::red: {
            std::int64_t i = 1;
            std::uint64_t draws = 0;
            while (true) {
                const double t_step = static_cast<double>(i) * policy.step;
                if (t_step > t_edge) break;
                const double x_end = grow(x, t_step - t, fp);
                acc.add(run, x, x_end, t);
                track_range(x_end);
                x = x_end;
                t = t_step;
                double p = 0.0;
                if (x >= policy.max_th) {
                    p = policy.p_max;
                } else if (x > policy.min_th) {
                    p = policy.p_max * (x - policy.min_th) / (policy.max_th - policy.min_th);
                }
                const double u = uniform01(seed, static_cast<std::uint64_t>(flow_idx), draws++);
                if (u < p) {
                    const double before = x;
                    x = apply_impulse(x, 1, fp.b);
                    note_impulse(t, 1, before, x);
                    track_range(x);
                }
                ++i;
            }
            break;
        }
    }

    if (t < horizon) {
        const double x_end = grow(x, horizon - t, fp);
        acc.add(run, x, x_end, t);
        track_range(x_end);
        x = x_end;
    }
    run.final_rate = x;
    if (capture_trace) run.trace.push_back({horizon, flow_idx, x, x, 0, run.reward});

    if (mode == Criterion::discounted) {
        const double decay = std::exp(-cp.rho * horizon);
        if (!run.events.empty()) {
            // Confined trajectory: the tail integrand is bounded by sup |c|
            // over the observed post-impulse range.
            run.trunc_bound = decay * abs_reward_rate_sup(run.min_rate, run.max_rate, cp) / cp.rho;
        } else {
            // Unconfined growth from the horizon state x_T = x. Bound |c| along
            // the tail by |c(x_T)| + (x_T^{-alpha}+lambda)(x(t)-x_T) and the
            // trajectory by the exponential envelope x_T e^{kappa (t-T)} with
            // kappa = a x_T^{gamma-1} (exact for gamma=1, conservative below).
            const double c_edge = std::abs(reward_rate(x, cp));
            const double slope = std::pow(x, -cp.alpha) + cp.lambda;
            if (fp.gamma == 0.0) {
                run.trunc_bound = decay * (c_edge / cp.rho + slope * fp.a / (cp.rho * cp.rho));
            } else {
                const double kappa = fp.a * std::pow(x, fp.gamma - 1.0);
                run.trunc_bound = cp.rho > kappa
                                      ? decay * (c_edge / cp.rho +
                                                 slope * x * kappa / (cp.rho * (cp.rho - kappa)))
                                      : kInf;
            }
        }
    }
    return run;
}

}  // namespace

SimReport simulate(const SimConfig& cfg) {
    std::vector<TraceRow> unused;
    return simulate(cfg, unused);
}

SimReport simulate(const SimConfig& cfg, std::vector<TraceRow>& trace) {
    cfg.validate();
    trace.clear();
    const std::vector<double> prices = decouple_prices(cfg.network);
    const int n = cfg.network.num_flows();

    SimReport report;
    report.horizon = cfg.horizon;
    report.per_flow.resize(n);

    double total_net_reward = 0.0;
    double total_bound = 0.0;
    const double span = cfg.horizon - cfg.warmup_time;
    for (int k = 0; k < n; ++k) {
        CriterionParams cp;
        cp.alpha = cfg.network.alpha;
        cp.lambda = prices[k];
        cp.rho = cfg.rho;
        FlowRun run = simulate_flow(k, cfg.network.flows[k], cp, cfg.policies[k],
                                    cfg.initial_rates[k], cfg.horizon, cfg.criterion, cfg.seed,
                                    cfg.warmup_time, cfg.capture_trace);
        FlowOutcome& out = report.per_flow[k];
        out.impulses = static_cast<std::int64_t>(run.events.size());
        out.final_rate = run.final_rate;
        out.min_rate = run.min_rate;
        out.max_rate = run.max_rate;
        if (cfg.criterion == Criterion::average) {
            out.reward = (run.reward - run.warm_reward) / span;
        } else {
            out.reward = run.reward;
            total_bound += run.trunc_bound;
        }
        total_net_reward += run.reward - run.warm_reward;
        report.total_impulses += out.impulses;
        report.impulse_times.insert(report.impulse_times.end(), run.events.begin(),
                                    run.events.end());
        trace.insert(trace.end(), run.trace.begin(), run.trace.end());
    }

    std::sort(report.impulse_times.begin(), report.impulse_times.end(),
              [](const ImpulseEvent& a, const ImpulseEvent& b) {
                  return a.time < b.time || (a.time == b.time && a.flow < b.flow);
              });
    std::sort(trace.begin(), trace.end(), [](const TraceRow& a, const TraceRow& b) {
        return a.time < b.time || (a.time == b.time && a.flow < b.flow);
    });

    if (cfg.criterion == Criterion::average) {
        report.avg_reward = total_net_reward / span;
    } else {
        report.disc_reward = total_net_reward;
        report.truncation_bound = total_bound;
    }
    return report;
}

std::vector<PolicyComparison> compare_policies(
    const std::vector<std::pair<std::string, SimConfig>>& variants) {
    if (variants.empty()) throw validation_error("compare_policies: no variants given");
    const double horizon = variants.front().second.horizon;
    const int n = variants.front().second.network.num_flows();
    for (const auto& [label, cfg] : variants) {
        if (cfg.horizon != horizon)
            throw validation_error("compare_policies: variants must share the horizon");
        if (cfg.network.num_flows() != n)
            throw validation_error("compare_policies: variants must share the flow count");
    }
    std::vector<PolicyComparison> rows;
    rows.reserve(variants.size());
    for (const auto& [label, cfg] : variants) rows.push_back({label, simulate(cfg)});
    return rows;
}

}  // namespace sawtooth
