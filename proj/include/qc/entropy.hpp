#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qc/dynamics.hpp"
#include "qc/section.hpp"
#include "qc/splitting.hpp"

namespace qc {

// Discretized k-manifold (k = 1 polyline, k = 2 triangulated patch) in the
// chart of its map. Cells index into pts; consecutive vertices of a cell are
// closer than the injectivity radius.
struct Mesh {
    int k = 1;
    std::vector<TorusPoint> pts;
    std::vector<std::array<int, 3>> cells; // k = 1 uses the first two entries
    std::shared_ptr<const Chart> chart;

    double volume() const;
    double cell_volume(std::size_t c) const;
    // volume of the part of the mesh inside the open ball B(y, r), r < 1/4
    double ball_volume(const TorusPoint& y, double r) const;
    double distance_to(const TorusPoint& p) const;
};

struct DiskOptions {
    double segment_cap = 1.0 / 64.0;
    std::size_t max_vertices = 4'000'000;
};

struct GrowthSeries {
    std::vector<int> n_values;
    std::vector<double> volumes;
    double slope = 0.0;
    int unstable_dim = 1;
    bool budget_exceeded = false; // series stops before n_max
    nlohmann::json to_json() const;
};

// least squares slope of log(volume) against n over the last half of the series
double fit_growth_slope(const std::vector<int>& n, const std::vector<double>& volumes);

// Pushes the local unstable disk at x (segment for du = 1, square patch of
// half-side r for du = 2, spanned by the E^u basis of S at x) through f,
// bisecting any cell edge longer than the cap; new vertices are evaluated
// from their parameters so no interpolation error enters.
GrowthSeries iterate_unstable_disk(const MapSpec& f, const Splitting& S, const TorusPoint& x, double r, int n_max,
                                   const DiskOptions& opt = {});
// the refined image f^n(W^u(x, r)); nullopt if the budget is exceeded
std::optional<Mesh> unstable_disk_image(const MapSpec& f, const Splitting& S, const TorusPoint& x, double r, int n,
                                        const DiskOptions& opt = {});

struct ChiReport {
    double value = 0.0;      // max slope at r
    double value_half = 0.0; // max slope at r/2
    double spread = 0.0;
    double r = 0.0;
    int n_max = 0;
    std::vector<double> slopes, slopes_half;
    bool budget_exceeded = false;
    nlohmann::json to_json() const;
};

ChiReport chi_u(const MapSpec& f, const Splitting& S, const std::vector<TorusPoint>& samples, double r, int n_max,
                const DiskOptions& opt = {});
std::vector<TorusPoint> random_points(int d, int n, std::uint64_t seed);

struct BowenOptions {
    double box = 0.0; // side of the sampling box; 0: half the smallest epsilon
    // per-axis sides overriding box; a side of 1 spans the whole circle
    std::vector<double> extent;
    std::optional<TorusPoint> center;
    double saturation = 0.05; // counts above this fraction of the cloud are not fitted
    int min_count = 8;        // counts below this are in the transient
    std::uint64_t seed = 42;
};

struct BowenCount {
    int n = 0;
    double epsilon = 0.0;
    std::size_t count = 0;
    bool fitted = false;
};

struct BowenEstimate {
    double value = 0.0;   // pooled slope of log N(n, eps) in n
    double raw = 0.0;     // (1/n) log N(n, eps_min)
    std::size_t cloud = 0;
    std::size_t full_cloud = 0; // 128^d
    std::vector<double> extent;
    std::vector<BowenCount> counts;
    int fitted_points = 0;
    bool flagged = false; // too few unsaturated counts to fit
    std::string note;
    nlohmann::json to_json() const;
};

// Greedy maximal (n, eps)-separated subsets of a random cloud in a box. The
// growth of the count in n is fitted with one slope shared by all epsilons.
BowenEstimate bowen_entropy(const MapSpec& f, int n, const std::vector<double>& epsilon_list, int sample_budget,
                            const BowenOptions& opt = {});

struct ThomasBracket {
    double low = 0.0, high = 0.0;               // (1 + min tau)^2 h_f, (1 + max tau)^2 h_f
    double low_single = 0.0, high_single = 0.0; // single power
    bool squared_contains(double h, double tol = 0.0) const { return h >= low - tol && h <= high + tol; }
    bool single_contains(double h, double tol = 0.0) const
    {
        return h >= low_single - tol && h <= high_single + tol;
    }
    nlohmann::json to_json() const;
};

ThomasBracket thomas_bracket(double h_f, double tau_min, double tau_max);
ThomasBracket thomas_bracket(double h_f, const Section& tau_tilde);

struct Perturbation {
    std::string name;
    MapSpec g;
    Splitting S;
};

struct ConstancyOptions {
    int samples = 4;
    double r = 0.05;
    int n_max = 12;
    DiskOptions disk;
    int bowen_n = 8;
    std::vector<double> epsilons{0.1, 0.07, 0.05};
    int bowen_budget = 1 << 16;
    bool bowen = true;
    std::uint64_t seed = 42;
};

struct ConstancyEntry {
    std::string name;
    ChiReport chi;
    std::optional<BowenEstimate> bowen;
    double chi_deviation = 0.0;
    double bowen_deviation = 0.0;
};

struct ConstancyReport {
    ConstancyEntry base;
    std::vector<ConstancyEntry> perturbed;
    double max_chi_deviation = 0.0;
    double max_bowen_deviation = 0.0;
    nlohmann::json to_json() const;
};

ConstancyReport entropy_local_constancy_experiment(const MapSpec& f, const Splitting& S,
                                                   const std::vector<Perturbation>& perturbations,
                                                   const ConstancyOptions& opt = {});

} // namespace qc
