#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sawtooth/average_policy.hpp"
#include "sawtooth/discounted_policy.hpp"
#include "sawtooth/errors.hpp"
#include "sawtooth/model.hpp"
#include "sawtooth/netsim.hpp"
#include "sawtooth/verify.hpp"

using nlohmann::json;
using namespace sawtooth;

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// Flat `key = value` configuration with `#` comments; command-line flags
// override file entries.
class KeyValues {
public:
    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw validation_error("cannot open config file: " + path);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string entry = trim(line);
            if (entry.empty()) continue;
            const auto eq = entry.find('=');
            if (eq == std::string::npos)
                throw validation_error(path + ":" + std::to_string(lineno) +
                                       ": expected `key = value`");
            const std::string key = trim(entry.substr(0, eq));
            const std::string value = trim(entry.substr(eq + 1));
            if (key.empty())
                throw validation_error(path + ":" + std::to_string(lineno) + ": empty key");
            kv_[key] = value;
        }
    }

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    void set(const std::string& key, double value) { kv_[key] = fmt17(value); }
    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string str(const std::string& key) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) throw validation_error("missing required parameter: " + key);
        return it->second;
    }

    std::string str_or(const std::string& key, const std::string& fallback) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }

    double num(const std::string& key) const {
        const std::string raw = str(key);
        try {
            std::size_t pos = 0;
            const double v = std::stod(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw validation_error("parameter " + key + " is not a number: `" + raw + "`");
        }
    }

    double num_or(const std::string& key, double fallback) const {
        return has(key) ? num(key) : fallback;
    }

private:
    std::map<std::string, std::string> kv_;
};

std::vector<double> parse_number_list(const std::string& raw, const std::string& what) {
    std::vector<double> out;
    std::istringstream in(raw);
    std::string tok;
    while (in >> tok) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw validation_error(what + ": bad number `" + tok + "`");
        }
    }
    return out;
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw validation_error("cannot open output file: " + path);
    return file;
}

FlowParams flow_from(const KeyValues& kv, const std::string& prefix = "") {
    FlowParams fp;
    fp.a = kv.num(prefix + "a");
    fp.b = kv.num(prefix + "b");
    fp.gamma = kv.num_or(prefix + "gamma", 0.0);
    return fp;
}

PolicySpec policy_from(const KeyValues& kv, const std::string& prefix = "") {
    const std::string kind = kv.str_or(prefix + "policy", "none");
    if (kind == "threshold") return PolicySpec::threshold(kv.num(prefix + "x_bar"));
    if (kind == "red")
        return PolicySpec::red(kv.num(prefix + "min_th"), kv.num(prefix + "max_th"),
                               kv.num(prefix + "p_max"), kv.num(prefix + "step"));
    if (kind == "fixed_period") return PolicySpec::fixed_period(kv.num(prefix + "period"));
    if (kind == "none") return PolicySpec::none();
    throw validation_error("unknown policy kind: " + kind);
}

Criterion criterion_from(const KeyValues& kv) {
    const std::string c = kv.str("criterion");
    if (c == "average") return Criterion::average;
    if (c == "discounted") {
        if (!kv.has("rho")) throw validation_error("missing required parameter: rho");
        return Criterion::discounted;
    }
    throw validation_error("criterion must be `average` or `discounted`, got `" + c + "`");
}

SimConfig sim_config_from(const KeyValues& kv) {
    SimConfig cfg;
    cfg.criterion = criterion_from(kv);
    cfg.rho = kv.num_or("rho", 0.0);
    cfg.horizon = kv.num("horizon");
    cfg.seed = static_cast<std::uint64_t>(kv.num_or("seed", 0.0));
    cfg.warmup_time = kv.num_or("warmup", 0.0);

    if (kv.has("flows")) {
        const int n = static_cast<int>(kv.num("flows"));
        const int links = static_cast<int>(kv.num("links"));
        if (n < 1 || links < 1) throw validation_error("flows and links must be >= 1");
        cfg.network.alpha = kv.num("alpha");
        {
            std::istringstream rows(kv.str("routing"));
            std::string row;
            while (std::getline(rows, row, ';')) {
                std::vector<double> entries = parse_number_list(row, "routing");
                cfg.network.routing.emplace_back(entries.begin(), entries.end());
            }
            if (static_cast<int>(cfg.network.routing.size()) != links)
                throw validation_error("routing must have one `;`-separated row per link");
        }
        std::vector<double> weights = parse_number_list(kv.str("link_weights"), "link_weights");
        cfg.network.link_weights = weights;
        for (int k = 1; k <= n; ++k) {
            const std::string p = "flow." + std::to_string(k) + ".";
            cfg.network.flows.push_back(flow_from(kv, p));
            cfg.policies.push_back(policy_from(kv, p));
            cfg.initial_rates.push_back(kv.num(p + "x0"));
        }
    } else {
        // Single flow through one link priced at lambda.
        cfg.network.routing = {{1}};
        cfg.network.link_weights = {kv.num("lambda")};
        cfg.network.alpha = kv.num("alpha");
        cfg.network.flows = {flow_from(kv)};
        cfg.policies = {policy_from(kv)};
        cfg.initial_rates = {kv.num("x0")};
    }
    return cfg;
}

json report_to_json(const SimReport& report, const SimConfig& cfg) {
    json j;
    j["horizon"] = report.horizon;
    j["criterion"] = cfg.criterion == Criterion::average ? "average" : "discounted";
    j["seed"] = cfg.seed;
    j["total_impulses"] = report.total_impulses;
    if (report.avg_reward) j["avg_reward"] = *report.avg_reward;
    if (report.disc_reward) j["disc_reward"] = *report.disc_reward;
    if (report.truncation_bound) j["truncation_bound"] = *report.truncation_bound;
    json flows = json::array();
    for (const FlowOutcome& f : report.per_flow) {
        flows.push_back({{"reward", f.reward},
                         {"impulses", f.impulses},
                         {"final_rate", f.final_rate}});
    }
    j["per_flow"] = flows;
    return j;
}

json scan_to_json(const ScanReport& r) {
    return json{{"grid", {{"lo", r.grid.lo}, {"hi", r.grid.hi}, {"points", r.grid.points}}},
                {"max_positive_residual", r.max_positive_residual},
                {"worst_x", r.worst_x},
                {"flow_equality_max", r.flow_equality_max},
                {"flow_equality_x", r.flow_equality_x},
                {"impulse_equality_max", r.impulse_equality_max},
                {"impulse_equality_x", r.impulse_equality_x},
                {"continuity_max", r.continuity_max},
                {"continuity_x", r.continuity_x},
                {"tolerances",
                 {{"residual", r.tolerances.residual},
                  {"equality", r.tolerances.equality},
                  {"continuity", r.tolerances.continuity}}},
                {"pass", r.pass}};
}

int cmd_threshold(const KeyValues& kv, const std::string& out_path) {
    const Criterion crit = criterion_from(kv);
    CriterionParams cp;
    cp.alpha = kv.num("alpha");
    cp.lambda = kv.num("lambda");
    cp.rho = kv.num_or("rho", 0.0);

    json j;
    if (crit == Criterion::average) {
        FlowParams fp;
        fp.a = kv.num_or("a", 1.0);  // the average threshold and gain do not depend on a
        fp.b = kv.num("b");
        fp.gamma = kv.num_or("gamma", 0.0);
        const AverageSolution sol = threshold_avg(fp, cp);
        j = json{{"criterion", "average"}, {"x_bar", sol.x_bar}, {"g", sol.gain}};
    } else {
        FlowParams fp = flow_from(kv);
        const DiscountedSolution sol = solve_threshold_disc(fp, cp);
        j = json{{"criterion", "discounted"}, {"x_bar", sol.x_bar}, {"w1", sol.w1}};
    }
    std::ofstream file;
    open_out(file, out_path) << j.dump(2) << "\n";
    return 0;
}

int cmd_simulate(const KeyValues& kv, const std::string& out_path, const std::string& csv_path) {
    SimConfig cfg = sim_config_from(kv);
    cfg.capture_trace = !csv_path.empty();
    std::vector<TraceRow> trace;
    const SimReport report = simulate(cfg, trace);

    if (!csv_path.empty()) {
        std::ofstream csv_file;
        std::ostream& csv = open_out(csv_file, csv_path);
        csv << "time,flow,rate_before,rate_after,impulse_count,cumulative_reward\n";
        for (const TraceRow& row : trace) {
            csv << fmt17(row.time) << ',' << row.flow << ',' << fmt17(row.rate_before) << ','
                << fmt17(row.rate_after) << ',' << row.impulse_count << ','
                << fmt17(row.cumulative_reward) << '\n';
        }
    }
    std::ofstream file;
    open_out(file, out_path) << report_to_json(report, cfg).dump(2) << "\n";
    return 0;
}

int cmd_verify(const KeyValues& kv, const std::string& out_path,
               const std::string& perturbation, int grid_points) {
    const Criterion crit = criterion_from(kv);
    CriterionParams cp;
    cp.alpha = kv.num("alpha");
    cp.lambda = kv.num("lambda");
    cp.rho = kv.num_or("rho", 0.0);

    std::string mutate_field;
    double mutate_factor = 1.0;
    if (!perturbation.empty()) {
        const auto colon = perturbation.find(':');
        if (colon == std::string::npos)
            throw validation_error("--inject-perturbation expects field:factor");
        mutate_field = perturbation.substr(0, colon);
        mutate_factor = std::stod(perturbation.substr(colon + 1));
    }

    json bundle;
    bool pass = true;
    const auto one_step = [](const ThresholdSearchResult& sr, double x_ref) {
        const double step =
            std::log(sr.thresholds.back() / sr.thresholds.front()) / (sr.thresholds.size() - 1);
        return std::abs(std::log(sr.best_threshold / x_ref)) <= step * (1.0 + 1e-9);
    };

    if (crit == Criterion::average) {
        FlowParams fp;
        fp.a = kv.num_or("a", 1.0);
        fp.b = kv.num("b");
        fp.gamma = kv.num_or("gamma", 0.0);
        AverageSolution sol = threshold_avg(fp, cp);
        const double x_true = sol.x_bar;
        if (mutate_field == "g") sol.gain *= mutate_factor;
        else if (mutate_field == "x_bar") sol.x_bar *= mutate_factor;
        else if (!mutate_field.empty())
            throw validation_error("average criterion perturbation must target g or x_bar");

        const RelativeValueProfile profile(sol);
        const double b5 = std::pow(fp.b, 5);
        const ScanReport scan = bellman_scan(
            profile, GridSpec{sol.x_bar / 100.0, sol.x_bar / b5, grid_points});
        pass = pass && scan.pass;
        bundle["scan"] = scan_to_json(scan);

        GridSpec search_grid{0.5 * x_true, 1.5 * x_true, 200};
        const ThresholdSearchResult sr =
            grid_search_threshold(fp, cp, Criterion::average, search_grid);
        const bool search_ok = one_step(sr, x_true);
        pass = pass && search_ok;
        bundle["grid_search"] = {{"best_threshold", sr.best_threshold},
                                 {"reference", x_true},
                                 {"within_one_step", search_ok}};

        std::vector<double> fd_grid = GridSpec{sol.x_bar / 50.0, sol.x_bar * 0.98, 64}.make();
        const double fd = fd_check([&](double x) { return profile.value(x); },
                                   [&](double x) { return profile.derivative(x); }, fd_grid, 1);
        const bool fd_ok = fd <= 1e-6;
        pass = pass && fd_ok;
        bundle["fd"] = {{"max_relative_deviation", fd}, {"pass", fd_ok}};
        bundle["solution"] = {{"x_bar", sol.x_bar}, {"g", sol.gain}};
    } else {
        FlowParams fp = flow_from(kv);
        DiscountedSolution sol = solve_threshold_disc(fp, cp);
        const double x_true = sol.x_bar;
        if (mutate_field == "w1") sol.w1 *= mutate_factor;
        else if (mutate_field == "x_bar") sol.x_bar *= mutate_factor;
        else if (!mutate_field.empty())
            throw validation_error("discounted criterion perturbation must target w1 or x_bar");

        const ValueFunctionW vf(sol);
        const double b5 = std::pow(fp.b, 5);
        const ScanReport scan =
            bellman_scan(vf, GridSpec{sol.x_bar / 100.0, sol.x_bar / b5, grid_points});
        pass = pass && scan.pass;
        bundle["scan"] = scan_to_json(scan);

        const PastingResiduals pr = pasting_check(sol);
        const bool paste_ok = pr.value_rel <= 1e-7 && pr.derivative_rel <= 1e-7;
        pass = pass && paste_ok;
        bundle["pasting"] = {{"value_rel", pr.value_rel},
                             {"derivative_rel", pr.derivative_rel},
                             {"pass", paste_ok}};

        GridSpec search_grid{0.5 * x_true, 1.5 * x_true, 200};
        const ThresholdSearchResult sr =
            grid_search_threshold(fp, cp, Criterion::discounted, search_grid);
        const bool search_ok = one_step(sr, x_true);
        pass = pass && search_ok;
        bundle["grid_search"] = {{"best_threshold", sr.best_threshold},
                                 {"reference", x_true},
                                 {"within_one_step", search_ok}};

        std::vector<double> fd_grid = GridSpec{sol.x_bar / 50.0, sol.x_bar * 0.98, 64}.make();
        const double fd = fd_check([&](double x) { return vf.tilde(x); },
                                   [&](double x) { return vf.tilde_prime(x); }, fd_grid, 1);
        const bool fd_ok = fd <= 1e-5;
        pass = pass && fd_ok;
        bundle["fd"] = {{"max_relative_deviation", fd}, {"pass", fd_ok}};
        bundle["solution"] = {{"x_bar", sol.x_bar}, {"w1", sol.w1}};
    }

    bundle["pass"] = pass;
    if (!perturbation.empty()) bundle["injected_perturbation"] = perturbation;
    std::ofstream file;
    open_out(file, out_path) << bundle.dump(2) << "\n";
    return pass ? 0 : 4;
}

int cmd_figure(const KeyValues& kv, const std::string& out_path, double lo, double hi,
               int points) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2)
        throw validation_error("figure grid needs 0 < grid-lo < grid-hi and grid-points >= 2");
    CriterionParams cp;
    cp.alpha = kv.num("alpha");
    cp.lambda = kv.num("lambda");
    cp.rho = kv.num("rho");
    FlowParams fp = flow_from(kv);
    const DiscountedSolution sol = solve_threshold_disc(fp, cp);
    const ValueFunctionW vf(sol);

    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i) grid[i] = lo + (hi - lo) * i / (points - 1);
    const std::vector<DiagnosticRow> rows = diagnostic_curves(grid, vf);

    std::ofstream file;
    std::ostream& out = open_out(file, out_path);
    out << "x,W,z,v_infl\n";
    for (const DiagnosticRow& r : rows)
        out << fmt17(r.x) << ',' << fmt17(r.W) << ',' << fmt17(r.z) << ',' << fmt17(r.v_infl)
            << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal impulsive congestion control: threshold solvers, "
                 "fluid-network simulator, and Bellman verification scans"};
    app.require_subcommand(1);

    // Shared flag plumbing: every numeric flag lands in the KeyValues map so
    // config files and flags resolve identically (flags win).
    KeyValues kv;
    std::string config_path, out_path, csv_path, perturbation;
    double fig_lo = 0.05, fig_hi = 3.0;
    int fig_points = 500, grid_points = 10000;

    const std::vector<std::string> numeric_keys = {
        "a",     "b",     "gamma",  "alpha", "lambda", "rho",    "x0",   "horizon",
        "x_bar", "period", "min_th", "max_th", "p_max",  "step",  "seed", "warmup"};
    std::map<std::string, double> flag_values;

    auto add_common = [&](CLI::App* cmd, bool with_sim_flags) {
        cmd->add_option("--config", config_path, "flat key = value configuration file");
        cmd->add_option("--out", out_path, "output path (default: stdout)");
        cmd->add_option("--criterion", [&kv](const std::vector<std::string>& v) {
            kv.set("criterion", v.back());
            return true;
        }, "average | discounted");
        for (const std::string& key : numeric_keys) {
            if (!with_sim_flags &&
                (key == "x0" || key == "horizon" || key == "x_bar" || key == "period" ||
                 key == "min_th" || key == "max_th" || key == "p_max" || key == "step" ||
                 key == "seed" || key == "warmup"))
                continue;
            cmd->add_option("--" + key, [&kv, key](const std::vector<std::string>& v) {
                kv.set(key, v.back());
                return true;
            });
        }
    };

    CLI::App* threshold = app.add_subcommand("threshold", "closed-form / free-boundary threshold");
    add_common(threshold, false);

    CLI::App* sim = app.add_subcommand("simulate", "event-driven fluid simulation");
    add_common(sim, true);
    sim->add_option("--policy", [&kv](const std::vector<std::string>& v) {
        kv.set("policy", v.back());
        return true;
    }, "threshold | red | fixed_period | none");
    sim->add_option("--out-csv", csv_path, "trajectory CSV path");

    CLI::App* verify = app.add_subcommand("verify", "Bellman scans, pasting, oracle search");
    add_common(verify, false);
    verify->add_option("--inject-perturbation", perturbation,
                       "field:factor mutation hook, e.g. g:1.01");
    verify->add_option("--grid-points", grid_points, "scan grid size");

    CLI::App* figure = app.add_subcommand("figure", "value-function diagnostic curves (CSV)");
    add_common(figure, false);
    figure->add_option("--grid-lo", fig_lo);
    figure->add_option("--grid-hi", fig_hi);
    figure->add_option("--grid-points", fig_points);

    try {
        // Config file must be merged before flag callbacks run, so parse the
        // flag set twice: once to learn --config, once to overlay flags.
        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            return app.exit(e) == 0 ? 0 : 2;
        }
        if (!config_path.empty()) {
            KeyValues from_file;
            from_file.load_file(config_path);
            app.clear();
            kv = from_file;  // file entries first, then the re-parse overlays flags
            try {
                app.parse(argc, argv);
            } catch (const CLI::ParseError& e) {
                return app.exit(e) == 0 ? 0 : 2;
            }
        }

        if (threshold->parsed()) return cmd_threshold(kv, out_path);
        if (sim->parsed()) return cmd_simulate(kv, out_path, csv_path);
        if (verify->parsed()) return cmd_verify(kv, out_path, perturbation, grid_points);
        if (figure->parsed()) return cmd_figure(kv, out_path, fig_lo, fig_hi, fig_points);
        return 2;
    } catch (const no_root_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
