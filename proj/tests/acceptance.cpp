// One pass/fail line per acceptance criterion. Each criterion runs a shipped
// config through the same experiment runner as the CLI and then inspects the
// named result rows. Usage: acceptance [criterion numbers...]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include "qc/config.hpp"
#include "qc/error.hpp"
#include "qc/experiments.hpp"

using namespace qc;

namespace {

struct Criterion {
    int id;
    std::string title;
    std::string config;
    std::vector<std::string> rows; // quantities that must be present and pass
    double time_limit = 0.0;       // seconds, 0: none
};

const std::vector<Criterion>& criteria()
{
    static const std::vector<Criterion> c{
        {1, "skew-rotation exactness", "skew_rotation.toml", {"u_error", "v_sup"}, 60.0},
        {2, "Anosov degeneration", "anosov_perturbed.toml", {"residual_sup", "distance_to_id", "uniqueness_norm1"}, 30.0},
        {3, "contraction bound", "contract_check.toml", {"phi_lipschitz", "phi_image_norm1"}, 0.0},
        {4, "operator-norm bound", "contract_check.toml", {"Ph_inverse_norm1"}, 0.0},
        {5, "eta vanishing and Lipschitz decay", "contract_check.toml",
         {"eta_sup_linear", "C_eps_decreasing", "K_h_decreasing"}, 0.0},
        {6, "flow case", "suspension_bprime.toml", {"tau_error", "v_sup"}, 0.0},
        {7, "entropy local constancy", "entropy_scan.toml",
         {"chi_u", "chi_u_r_spread", "chi_u_deviation", "bowen_chi_gap"}, 120.0},
        {8, "Bowen time scaling", "bowen_scaling.toml", {"bowen_ratio(t=1.02)"}, 0.0},
        {9, "almost-parallel modulus", "holonomy_modulus.toml",
         {"alpha(0.1)", "alpha(0.05)", "alpha(0.01)", "equicontinuous"}, 0.0},
        {10, "volume comparison", "volume_comparison.toml",
         {"volume_comparison(n=1)", "volume_comparison(n=2)", "volume_comparison(n=3)", "volume_comparison(n=4)",
          "volume_comparison(n=5)", "negative_control_unmet"},
         0.0},
        {11, "leaf conjugacy", "skew_B_leaf.toml", {"leaf_deviation", "injectivity_proxy"}, 0.0},
    };
    return c;
}

struct Cached {
    ExperimentResult result;
    double seconds = 0.0;
    std::string error;
};

} // namespace

int main(int argc, char** argv)
{
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    const std::string dir = QC_CONFIG_DIR;

    std::vector<std::pair<std::string, Cached>> cache;
    auto run = [&](const std::string& name) -> const Cached& {
        for (auto& [k, v] : cache)
            if (k == name) return v;
        Cached c;
        auto t0 = std::chrono::steady_clock::now();
        try {
            Config cfg = Config::load(dir + "/" + name);
            c.result = run_experiment(cfg.get_string("", "experiment", ""), cfg);
        } catch (const Error& e) {
            c.error = e.what();
        }
        c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        cache.emplace_back(name, std::move(c));
        return cache.back().second;
    };

    int failed = 0;
    for (const Criterion& cr : criteria()) {
        if (!only.empty() && !only.count(cr.id)) continue;
        const Cached& c = run(cr.config);
        bool ok = c.error.empty();
        std::string detail = c.error;
        if (ok) {
            for (const std::string& q : cr.rows) {
                int seen = 0;
                double worst = 0.0;
                for (const CsvRow& row : c.result.rows) {
                    if (row.quantity != q) continue;
                    ++seen;
                    worst = row.value;
                    if (!row.pass) ok = false;
                }
                if (seen == 0) ok = false;
                char buf[128];
                std::snprintf(buf, sizeof buf, "%s%s=%.4g", detail.empty() ? "" : " ", q.c_str(), worst);
                detail += seen ? buf : " " + q + "=missing";
            }
            if (!c.result.pass()) {
                ok = false;
                detail += " (other rows failed)";
            }
        }
        if (cr.time_limit > 0.0 && c.seconds > cr.time_limit) {
            ok = false;
            detail += " over time limit";
        }
        std::printf("%s criterion %2d %-34s %7.1f s  %s\n", ok ? "PASS" : "FAIL", cr.id, cr.title.c_str(), c.seconds,
                    detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failed;
    }
    std::printf("%d criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
