#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qc/config.hpp"
#include "qc/dynamics.hpp"
#include "qc/solver.hpp"
#include "qc/splitting.hpp"

namespace qc {

// one line of the flat CSV summary
struct CsvRow {
    std::string system;
    std::string quantity;
    double value = 0.0;
    double tolerance = 0.0; // NaN: informational
    bool pass = true;
};

struct ExperimentResult {
    std::string experiment;
    std::string json_name;
    nlohmann::json report;
    std::vector<CsvRow> rows;
    std::vector<std::pair<std::string, Section>> sections; // written when "bin" is requested
    bool pass() const;
};

struct SystemBuild {
    std::string id;
    std::string kind;
    MapSpec f;
    std::optional<FlowSpec> flow;
    Splitting S;
    Mat base; // hyperbolic block (2x2) or the full matrix
};

struct PerturbationBuild {
    std::string id;
    double parameter = 0.0;
    MapSpec g;
    Splitting S;
};

const std::vector<std::string>& experiment_names();

// named smooth fields: cat-shear (T^2), stable-wave (T^2), skew-shear (T^3)
VectorField field_preset(const std::string& name, int d);
// sum of log |eigenvalue| over eigenvalues outside the unit circle
double log_unstable_growth(const Mat& m);

// configuration errors (bad kinds, matrices, ...) surface as ConfigError
SystemBuild build_system(const Config& c);
std::vector<PerturbationBuild> build_perturbations(const Config& c, const SystemBuild& sys);
SolverParams solver_params(const Config& c);

ExperimentResult run_experiment(const std::string& name, const Config& c);

std::string csv_text(const std::vector<CsvRow>& rows);
void write_outputs(const ExperimentResult& r, const std::string& dir, const std::vector<std::string>& formats);

nlohmann::json catalog_json();
std::string catalog_text();

} // namespace qc
