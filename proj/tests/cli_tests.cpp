// End-to-end checks of the command-line tool: exit codes, JSON/CSV output,
// determinism, and the config-file/flag override contract.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

using nlohmann::json;

namespace {

int failures = 0;

void require(bool cond, const std::string& what) {
    if (cond) {
        std::cout << "[ok] " << what << "\n";
    } else {
        std::cerr << "[FAIL] " << what << "\n";
        ++failures;
    }
}

int run(const std::string& args, const std::string& out_file, const std::string& err_file = "") {
    std::string cmd = std::string(SAWTOOTH_CLI_PATH) + " " + args;
    if (!out_file.empty()) cmd += " > " + out_file;
    cmd += err_file.empty() ? " 2>/dev/null" : " 2> " + err_file;
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

int main() {
    // threshold: discounted reference values
    {
        const int rc = run(
            "threshold --criterion discounted --a 0.2 --b 0.5 --alpha 1.3 --lambda 2 --rho 1",
            "cli_thr_disc.json");
        require(rc == 0, "threshold discounted exits 0");
        const json j = json::parse(slurp("cli_thr_disc.json"));
        require(std::abs(j["x_bar"].get<double>() - 0.7901) <= 5e-4,
                "threshold discounted x_bar matches Fig. 1 rounding");
        require(std::abs(j["w1"].get<double>() - (-4.928917598989575)) <= 1e-6,
                "threshold discounted w1 matches the smooth-pasting value");
    }

    // threshold: average closed form, written through --out
    {
        const int rc = run(
            "threshold --criterion average --gamma 0 --alpha 0.5 --b 0.5 --lambda 2 "
            "--out cli_thr_avg.json",
            "");
        require(rc == 0, "threshold average exits 0");
        const json j = json::parse(slurp("cli_thr_avg.json"));
        require(std::abs(j["x_bar"].get<double>() - 0.33018723461803656) <= 1e-9,
                "threshold average x_bar");
        require(std::abs(j["g"].get<double>() - 0.49528085192705484) <= 1e-9,
                "threshold average gain");
    }

    // missing required key names the key and exits 2
    {
        const int rc = run("threshold --criterion average --b 0.5 --alpha 0.5",
                           "cli_missing.json", "cli_missing.err");
        require(rc == 2, "missing lambda exits 2");
        require(slurp("cli_missing.err").find("lambda") != std::string::npos,
                "missing-lambda diagnostic names the key");
    }

    // simulate: determinism of a seeded RED run, byte-identical outputs
    {
        const std::string args =
            "simulate --criterion average --a 0.2 --b 0.5 --gamma 0 --alpha 0.5 --lambda 2 "
            "--policy red --min_th 0.26 --max_th 0.40 --p_max 0.5 --step 0.05 "
            "--x0 0.3 --horizon 150 --seed 7";
        require(run(args + " --out-csv cli_red_a.csv", "cli_red_a.json") == 0,
                "seeded RED run exits 0");
        require(run(args + " --out-csv cli_red_b.csv", "cli_red_b.json") == 0,
                "repeat RED run exits 0");
        require(slurp("cli_red_a.json") == slurp("cli_red_b.json"),
                "RED JSON byte-identical across runs");
        require(slurp("cli_red_a.csv") == slurp("cli_red_b.csv"),
                "RED CSV byte-identical across runs");
        require(!parse_csv(slurp("cli_red_a.csv")).empty(), "RED CSV has rows");
    }

    // simulate: discounted without rho is a config error
    {
        const int rc = run(
            "simulate --criterion discounted --a 0.2 --b 0.5 --alpha 1.3 --lambda 2 "
            "--policy none --x0 1 --horizon 10",
            "cli_norho.json", "cli_norho.err");
        require(rc == 2, "discounted simulate without rho exits 2");
    }

    // simulate: threshold run at the average optimum reproduces the gain, and
    // the JSON summary round-trips
    {
        const int rc = run(
            "simulate --criterion average --a 0.2 --b 0.5 --gamma 0 --alpha 0.5 --lambda 2 "
            "--policy threshold --x_bar 0.33018723461803656 --x0 0.16509361730901828 "
            "--horizon 82.546808654509145",
            "cli_sim_opt.json");
        require(rc == 0, "optimum simulate exits 0");
        const json j = json::parse(slurp("cli_sim_opt.json"));
        require(std::abs(j["avg_reward"].get<double>() - 0.49528085192705484) <=
                    1e-9 * 0.49528085192705484,
                "simulated average reward equals the gain");
        require(j["total_impulses"].get<long long>() == 100, "exact cycle count");
        const json reparsed = json::parse(j.dump());
        require(reparsed == j, "JSON summary round-trips");
    }

    // verify: clean parameters pass, injected perturbations fail with exit 4
    {
        require(run("verify --criterion average --a 0.2 --b 0.5 --gamma 0 --alpha 0.5 "
                    "--lambda 2 --grid-points 2000",
                    "cli_verify_avg.json") == 0,
                "verify average exits 0");
        require(run("verify --criterion average --a 0.2 --b 0.5 --gamma 1 --alpha 0.5 "
                    "--lambda 2 --grid-points 2000",
                    "cli_verify_mimd.json") == 0,
                "verify average gamma=1 exits 0");
        require(run("verify --criterion average --a 0.2 --b 0.5 --gamma 0 --alpha 0.5 "
                    "--lambda 2 --grid-points 2000 --inject-perturbation g:1.01",
                    "cli_verify_mut.json") == 4,
                "verify with g:1.01 perturbation exits 4");
        require(run("verify --criterion discounted --a 0.2 --b 0.5 --alpha 1.3 --lambda 2 "
                    "--rho 1 --grid-points 2000",
                    "cli_verify_disc.json") == 0,
                "verify discounted exits 0");
        require(run("verify --criterion discounted --a 0.2 --b 0.5 --alpha 1.3 --lambda 2 "
                    "--rho 1 --grid-points 2000 --inject-perturbation w1:1.01",
                    "cli_verify_disc_mut.json") == 4,
                "verify with w1:1.01 perturbation exits 4");
        const json j = json::parse(slurp("cli_verify_disc.json"));
        require(j["pass"].get<bool>(), "verify bundle reports pass");
        require(j["scan"]["max_positive_residual"].get<double>() <= 1e-6,
                "scan residual within tolerance");
    }

    // figure: curves CSV with the Fig. 1 shape
    {
        require(run("figure --a 0.2 --b 0.5 --alpha 1.3 --lambda 2 --rho 1 "
                    "--grid-lo 0.05 --grid-hi 3 --grid-points 500",
                    "cli_figure.csv") == 0,
                "figure exits 0");
        const auto rows = parse_csv(slurp("cli_figure.csv"));
        require(rows.size() == 501, "figure emits header plus 500 rows");
        require(rows[0] == std::vector<std::string>{"x", "W", "z", "v_infl"},
                "figure header");
        bool z_ok = true;
        for (std::size_t i = 1; i < rows.size(); i += 97) {
            const double x = std::stod(rows[i][0]);
            const double z = std::stod(rows[i][2]);
            const double ref = -(std::pow(x, -0.3) / 0.3 + 2.0 * x) / 1.0;
            if (std::abs(z - ref) > 1e-9 * std::max(1.0, std::abs(ref))) z_ok = false;
        }
        require(z_ok, "figure z column matches its formula");

        // W increases, decreases, then increases again below the threshold.
        std::vector<double> w_below;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double x = std::stod(rows[i][0]);
            if (x < 0.789) w_below.push_back(std::stod(rows[i][1]));
        }
        int sign_changes = 0;
        int prev_sign = 0;
        for (std::size_t i = 1; i < w_below.size(); ++i) {
            const double d = w_below[i] - w_below[i - 1];
            const int sign = d > 0 ? 1 : (d < 0 ? -1 : 0);
            if (sign != 0 && prev_sign != 0 && sign != prev_sign) ++sign_changes;
            if (sign != 0) prev_sign = sign;
        }
        require(sign_changes == 2, "W has the increase/decrease/increase shape below x_bar");

        // continuity across the threshold breakpoint on a tight grid
        require(run("figure --a 0.2 --b 0.5 --alpha 1.3 --lambda 2 --rho 1 "
                    "--grid-lo 0.790096 --grid-hi 0.790099 --grid-points 7",
                    "cli_figure_bp.csv") == 0,
                "tight figure exits 0");
        const auto bp_rows = parse_csv(slurp("cli_figure_bp.csv"));
        // W itself has slope ~O(1) over this window; continuity means the
        // consecutive differences stay uniform, with no 1e-7 outlier where the
        // grid crosses the breakpoint.
        std::vector<double> diffs;
        for (std::size_t i = 2; i < bp_rows.size(); ++i)
            diffs.push_back(std::stod(bp_rows[i][1]) - std::stod(bp_rows[i - 1][1]));
        std::vector<double> sorted = diffs;
        std::sort(sorted.begin(), sorted.end());
        const double median = sorted[sorted.size() / 2];
        double worst_jump = 0.0;
        for (double d : diffs) worst_jump = std::max(worst_jump, std::abs(d - median));
        require(worst_jump <= 1e-7, "W continuous across the breakpoint");
    }

    // no sign change within the expanded scan: exit 3
    {
        const int rc = run(
            "threshold --criterion discounted --a 0.2 --b 0.5 --alpha 1.3 --lambda 1e-30 "
            "--rho 1",
            "cli_noroot.json", "cli_noroot.err");
        require(rc == 3, "unreachable root exits 3");
    }

    // simulate: trajectory CSV rows carry the threshold-cycle geometry
    {
        const int rc = run(
            "simulate --criterion average --a 0.2 --b 0.5 --gamma 0 --alpha 0.5 --lambda 2 "
            "--policy threshold --x_bar 0.33018723461803656 --x0 0.16509361730901828 "
            "--horizon 82.546808654509145 --out-csv cli_trace.csv",
            "cli_trace.json");
        require(rc == 0, "trace simulate exits 0");
        const auto rows = parse_csv(slurp("cli_trace.csv"));
        require(rows.size() == 102, "trace has 100 events plus header and closing row");
        bool geometry_ok = true;
        for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
            const double before = std::stod(rows[i][2]);
            const double after = std::stod(rows[i][3]);
            if (std::abs(before - 0.33018723461803656) > 1e-12 ||
                std::abs(after - 0.16509361730901828) > 1e-12 || rows[i][4] != "1")
                geometry_ok = false;
        }
        require(geometry_ok, "every cycle event drops from x_bar to b*x_bar");
        const auto& closing = rows.back();
        require(closing[4] == "0", "closing row carries no impulse");
        const json j = json::parse(slurp("cli_trace.json"));
        const double cumulative = std::stod(closing[5]);
        const double mean_from_trace = cumulative / std::stod(closing[0]);
        require(std::abs(mean_from_trace - j["avg_reward"].get<double>()) <= 1e-9,
                "closing cumulative reward matches the reported mean");
    }

    // simulate: multi-flow network from a config file
    {
        std::ofstream cfg("cli_net.cfg");
        cfg << "criterion = average\n"
            << "alpha = 0.5\n"
            << "horizon = 60\n"
            << "flows = 3\n"
            << "links = 2\n"
            << "routing = 1 0 1 ; 1 1 0\n"
            << "link_weights = 1 2\n"
            << "flow.1.a = 0.2\nflow.1.b = 0.5\nflow.1.gamma = 0\nflow.1.x0 = 0.2\n"
            << "flow.1.policy = threshold\nflow.1.x_bar = 0.3\n"
            << "flow.2.a = 0.3\nflow.2.b = 0.6\nflow.2.gamma = 1\nflow.2.x0 = 0.3\n"
            << "flow.2.policy = fixed_period\nflow.2.period = 3\n"
            << "flow.3.a = 0.15\nflow.3.b = 0.4\nflow.3.gamma = 0.5\nflow.3.x0 = 0.25\n"
            << "flow.3.policy = none\n";
        cfg.close();
        require(run("simulate --config cli_net.cfg", "cli_net.json") == 0,
                "multi-flow simulate exits 0");
        const json j = json::parse(slurp("cli_net.json"));
        require(j["per_flow"].size() == 3, "three per-flow records");
        double sum = 0.0;
        for (const auto& f : j["per_flow"]) sum += f["reward"].get<double>();
        require(std::abs(sum - j["avg_reward"].get<double>()) <= 1e-12 * std::abs(sum),
                "network mean equals the per-flow sum");
        require(j["per_flow"][2]["impulses"].get<int>() == 0, "none policy never notifies");
        require(j["per_flow"][1]["impulses"].get<int>() == 20, "fixed-period clock fires 20 times");
    }

    // config file + flag override
    {
        std::ofstream cfg("cli_test.cfg");
        cfg << "# discounted Fig. 1 parameters\n"
            << "criterion = discounted\n"
            << "a = 0.2\nb = 0.5\nalpha = 1.3\nlambda = 2\nrho = 1\n";
        cfg.close();
        require(run("threshold --config cli_test.cfg", "cli_cfg.json") == 0,
                "config-file run exits 0");
        const json j = json::parse(slurp("cli_cfg.json"));
        require(std::abs(j["x_bar"].get<double>() - 0.7901) <= 5e-4, "config-file x_bar");

        require(run("threshold --config cli_test.cfg --rho 0.01", "cli_cfg_override.json") == 0,
                "flag-over-config run exits 0");
        const json jo = json::parse(slurp("cli_cfg_override.json"));
        require(std::abs(jo["x_bar"].get<double>() - j["x_bar"].get<double>()) > 1e-4,
                "flag overrides the config value");
    }

    if (failures == 0) {
        std::cout << "all cli checks passed\n";
        return 0;
    }
    std::cerr << failures << " cli check(s) failed\n";
    return 1;
}
