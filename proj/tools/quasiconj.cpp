#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qc/config.hpp"
#include "qc/error.hpp"
#include "qc/experiments.hpp"

namespace {

struct Overrides {
    std::string config;
    long long seed = -1;
    std::string out_dir;
    int resolution = -1;
};

int run(const std::string& experiment, const Overrides& o)
{
    qc::Config c = qc::Config::load(o.config);
    if (o.seed >= 0) c.set("", "seed", std::to_string(o.seed));
    if (o.resolution >= 0) c.set("solver", "resolution", std::to_string(o.resolution));
    std::string name = experiment;
    if (name.empty()) {
        name = c.get_string("", "experiment", "");
        if (name.empty()) throw qc::ConfigError("config has no 'experiment' key");
    }
    std::string dir = o.out_dir.empty() ? c.get_string("output", "dir", "results") : o.out_dir;
    auto formats = c.get_strings("output", "formats", {"json", "csv"});

    qc::ExperimentResult r = qc::run_experiment(name, c);
    qc::write_outputs(r, dir, formats);
    int failed = 0;
    for (const auto& row : r.rows)
        if (!row.pass) {
            std::cerr << "FAIL " << row.system << " " << row.quantity << " = " << row.value << " (tolerance "
                      << row.tolerance << ")\n";
            ++failed;
        }
    std::cout << name << ": " << r.rows.size() - failed << "/" << r.rows.size() << " checks passed, results in " << dir
              << "\n";
    return failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"quasi-conjugacy experiments on tori"};
    app.require_subcommand(1);

    Overrides o;
    std::string chosen;
    auto add_common = [&o](CLI::App* s) {
        s->add_option("config", o.config, "configuration file")->required();
        s->add_option("--seed", o.seed, "override the config seed")->check(CLI::NonNegativeNumber);
        s->add_option("--out-dir", o.out_dir, "output directory");
        s->add_option("--resolution", o.resolution, "override solver.resolution")->check(CLI::NonNegativeNumber);
    };
    CLI::App* run_cmd = app.add_subcommand("run", "run the experiment named by the config");
    add_common(run_cmd);
    std::vector<std::pair<std::string, CLI::App*>> experiments;
    for (const auto& n : qc::experiment_names()) {
        CLI::App* s = app.add_subcommand(n, "run " + n + " on a config");
        add_common(s);
        experiments.emplace_back(n, s);
    }
    bool as_json = false;
    CLI::App* list = app.add_subcommand("list-catalog", "print the available system kinds");
    list->add_flag("--json", as_json, "JSON array of descriptors");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    if (*list) {
        if (as_json)
            std::cout << qc::catalog_json().dump(2) << "\n";
        else
            std::cout << qc::catalog_text();
        return 0;
    }
    for (const auto& [n, s] : experiments)
        if (*s) chosen = n;
    try {
        return run(chosen, o);
    } catch (const qc::ConfigError& e) {
        std::cerr << o.config << ": " << e.what() << "\n";
        return 2;
    } catch (const qc::GuardError& e) {
        std::cerr << "guard failed: " << e.what() << "\n";
        return 1;
    } catch (const qc::ConvergenceError& e) {
        std::cerr << "no convergence: " << e.what() << "\n";
        return 1;
    } catch (const qc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
