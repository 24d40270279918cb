#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "qc/dynamics.hpp"
#include "qc/entropy.hpp"
#include "qc/splitting.hpp"

namespace qc {

using PointMap = std::function<TorusPoint(const TorusPoint&)>;

// One-dimensional center foliation given by a unit direction field.
struct CenterFoliation {
    std::function<Vec(const TorusPoint&)> direction;
    std::shared_ptr<const Chart> chart;
    double step = 0.02; // RK4 step along leaves
    bool constant = false;
};

// constant E^c when f is affine with a constant splitting, otherwise the
// pointwise orbit estimate of E^c(f) oriented by S
CenterFoliation center_foliation(const MapSpec& f, const Splitting& S, int orbit_length = 40);
// point at signed leaf distance t from x
TorusPoint slide(const CenterFoliation& F, const TorusPoint& x, double t);

// affine plane {y : normal . offset(anchor, y) = 0} transverse to the leaves
struct Transversal {
    TorusPoint anchor;
    Vec normal;
    Mat basis; // in-plane directions (columns)
};
// the E^s + E^u plane of a frame through p
Transversal us_plane(const TorusPoint& p, const Frame& frame);

struct HolonomySpec {
    Transversal source, target;
    CenterFoliation leaves;
    double max_leaf_distance = 0.5;
};

// intersection of the leaf through x with the target transversal; throws
// DomainError when the leaf misses it within max_leaf_distance
TorusPoint holonomy_map(const HolonomySpec& spec, const TorusPoint& x);

struct ModulusRow {
    double beta = 0.0;
    double alpha = 0.0;
    int pairs = 0;
};

struct ModulusOptions {
    int transversal_pairs = 8;
    double max_height = 0.25; // leaf distance between source and target anchors
    double patch = 0.15;      // source points within this in-plane radius of the anchor
    std::uint64_t seed = 42;
};

struct ModulusReport {
    std::vector<ModulusRow> rows;
    double lipschitz_factor = 0.0; // max alpha / beta
    double exponent = 0.0;         // fitted alpha ~ beta^p
    bool equicontinuous = false;
    nlohmann::json to_json() const;
};

ModulusReport almost_parallel_modulus(const MapSpec& f, const Splitting& S, const std::vector<double>& beta_list,
                                      int sample_budget, const ModulusOptions& opt = {});

struct VolumeComparisonOptions {
    int samples = 256;
    double membership_tol = 1e-8; // psi(y) in W'
    double cover_tol = 1e-6;      // W' inside psi(W)
    std::uint64_t seed = 42;
};

struct VolumeComparisonReport {
    int k = 1;
    double alpha = 0.0, beta = 0.0;
    double C_upper = 0.0; // max Vol W'(y', alpha) / alpha^k
    double C_lower = 0.0; // min Vol W(y, beta) / beta^k
    double C = 0.0;
    double vol_W = 0.0, vol_W_prime = 0.0;
    bool injective = false;
    bool covers = false;
    bool condition_a = false;
    bool condition_b = false;
    int b_checked = 0;
    int b_violations = 0;
    bool hypotheses_met() const { return injective && covers && condition_a && condition_b; }
    bool inequality = false; // evaluated only when the hypotheses hold
    bool passed() const { return hypotheses_met() && inequality; }
    nlohmann::json to_json() const;
};

// Condition (b) is checked with psi(W(y, beta)) inside the alpha-ball of
// psi(y) and, when W_star is given, on W_star rather than on W'.
VolumeComparisonReport volume_comparison_check(const Mesh& W, const Mesh& W_prime, const PointMap& psi, double alpha,
                                               double beta, const Mesh* W_star = nullptr,
                                               const VolumeComparisonOptions& opt = {});

struct DiskTriple {
    Mesh W;       // g^n W^u_g(x, r)
    Mesh W_prime; // f^n W^u_f(pi(x), r')
    Mesh W_star;  // f^n W^u_f(pi(x), r*)
    PointMap psi; // theta^c_n o pi
    int n = 0;
};

// f affine with a constant splitting; pi a quasi-conjugacy from g to f
DiskTriple unstable_disk_triple(const MapSpec& f, const Splitting& Sf, const MapSpec& g, const Splitting& Sg,
                                         const PointMap& pi, const TorusPoint& x, double r, double r_prime,
                                         double r_star, int n, const DiskOptions& disk = {});

} // namespace qc
