#pragma once

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

enum class Variant { A, Bprime, B };
const char* to_string(Variant v);

struct SolverParams {
    double epsilon = 0.45;
    int resolution = 0; // 0: 256 for d=2, 64 for d=3, 16 for d=4
    double fixpoint_tol = 1e-10;
    int max_iterations = 200;
    std::optional<int> neumann_depth; // empty: auto, tail bound below 1e-12
    int residual_sample_count = 10000;
    double residual_tol = 1e-6;
    double L_margin = 1.1;
    double safety_factor = 2.0; // applied to measured C(eps), K(h)
    int lipschitz_samples = 10000;
    std::uint64_t seed = 42;
    bool verify = true; // residual and distance checks after convergence

    void validate() const;
    Grid grid(int d) const;
};

// Contraction rates of the block operators behind the P_h^{-1} series,
// sampled over grid nodes.
struct BlockRates {
    double q_s = 0.0;
    double q_u = 0.0;
    double j = 1.0;     // measured |J_h|_1
    double j_inv = 1.0; // measured |J_h^{-1}|_1
    double q() const { return std::max(q_s, q_u); }
};

// One term of a pointwise operator evaluation, recorded along an orbit.
struct OrbitTerm {
    enum Kind { q_term, eta_b, linear };
    Kind kind = linear;
    TorusPoint x, xm, hx;
    int id_x = -1, id_xm = -1, id_hx = -1;
    Mat W, Fe, Je, P_x, P_xm, P_hx;
    Vec tau_row, ugen; // flow-time variant only
};

struct NodeOrbit {
    std::vector<OrbitTerm> terms;
    int ids = 0;
};

// Recorded orbits for every node of a grid; replaying them avoids re-running
// the maps when the same operator is applied many times on a small grid.
struct OrbitPlan {
    Grid grid;
    bool inverse_only = false;
    std::vector<NodeOrbit> nodes;
};

// Pointwise evaluation of the operators of the fixed-point problem for one
// (f, g, S) triple. Every operator is a function of a Field and a point, so
// Neumann series are composed along orbits instead of being re-gridded.
class QuasiConjugacyOperator {
public:
    QuasiConjugacyOperator(MapSpec f, MapSpec g, Splitting S, Variant variant = Variant::A,
                           std::optional<FlowSpec> flow = std::nullopt);
    // operator for the displacement h directly: g = h o f
    static QuasiConjugacyOperator from_h(MapSpec f, MapSpec h, Splitting S);

    const MapSpec& f() const { return f_; }
    const MapSpec& g() const { return g_; }
    const MapSpec& h() const { return h_; }
    const Splitting& splitting() const { return S_; }
    Variant variant() const { return variant_; }
    const Chart& chart() const { return f_.chart(); }
    const std::optional<FlowSpec>& flow() const { return flow_; }
    bool calibrated() const { return calibrated_; }

    int depth() const { return depth_; }
    void set_depth(int depth);
    const BlockRates& rates() const { return rates_; }
    // measures block rates on `grid`, checks the (1+lambda)/2 guard, and
    // sets the depth (explicit or from the tail bound)
    BlockRates calibrate(const Grid& grid, std::optional<int> depth = std::nullopt);

    Vec beta(const Field& w, const TorusPoint& x) const;
    Vec F(const Field& w, const TorusPoint& x) const;
    Vec eta(const Field& w, const TorusPoint& x) const;
    Vec Jh(const Field& w, const TorusPoint& x) const;
    Vec Jh_inv(const Field& w, const TorusPoint& x) const;
    Vec theta(const Field& w, const TorusPoint& x) const;
    Vec Ph(const Field& w, const TorusPoint& x) const;
    Vec Ph_inv(const Field& w, const TorusPoint& x) const;
    Vec Phi(const Field& omega, const TorusPoint& x) const;

    Section apply_Phi(const Section& omega) const;
    Section apply_Ph_inv(const Section& w) const;

    OrbitPlan plan(const Grid& grid, bool inverse_only) const;
    Section apply(const OrbitPlan& plan, const Section& w) const;

    // center coefficient along the flow generator (B' variant)
    double tau_of(const Vec& center_part, const TorusPoint& x) const;

    Frame frame(const TorusPoint& x) const { return S_.is_constant() ? S_.constant_frame() : S_.at(x); }

private:
    template <class Emit> void walk(const TorusPoint& y0, bool inverse_only, Emit&& emit) const;
    Vec accumulate(const NodeOrbit& orbit, const Field& w, bool inverse_only) const;
    NodeOrbit record(const TorusPoint& y0, bool inverse_only) const;
    void build_tables();

    MapSpec f_, g_, h_;
    Splitting S_;
    Variant variant_;
    std::optional<FlowSpec> flow_;
    int depth_ = 40;
    BlockRates rates_;
    bool calibrated_ = false;
    bool uniform_ = false;  // constant frames and constant differential
    bool skip_eta_ = false; // eta vanishes identically
    struct Tables;
    std::shared_ptr<const Tables> tables_;
};

// Section-level operators sampled on the grid of the input
Section op_beta(const MapSpec& f, const Section& w);
Section op_F(const MapSpec& f, const Section& w);
Section op_eta(const MapSpec& f, const Section& w);
Section op_Jh(const MapSpec& h, const Splitting& S, const Section& w);
Section op_thetah(const MapSpec& h, const Splitting& S, const Section& w);
Section op_Ph(const MapSpec& f, const MapSpec& h, const Splitting& S, const Section& w);
Section op_Ph_inverse(const MapSpec& f, const MapSpec& h, const Splitting& S, const Section& w,
                      std::optional<int> depth = std::nullopt);
Section op_Phi(const MapSpec& f, const MapSpec& h, const Splitting& S, const Section& omega,
               std::optional<int> depth = std::nullopt);

// smallest depth with q^{depth+1}/(1-q) < target
int neumann_depth_for(double q, double target = 1e-12);

// Lipschitz constants of eta (C(eps)) and theta_h (K(h)) sampled over random
// (x, w, w') triples; the safety factor is not applied here.
double measure_C_eps(const MapSpec& f, const Splitting& S, double eps, int samples = 10000, std::uint64_t seed = 42);
double measure_K_h(const MapSpec& h, const Splitting& S, double eps, int samples = 10000, std::uint64_t seed = 42);

struct GuardReport {
    double lambda = 0.0;
    double L = 0.0; // with margin
    double C_eps = 0.0;
    double K_h = 0.0;
    double theta0 = 0.0; // theta0_us + theta0_c
    double theta0_us = 0.0;
    double theta0_c = 0.0;
    double gamma = 0.0;
    BlockRates rates;
    double rate_bound = 0.0;
    double j_bound = 0.0;
    bool contraction_C = false, ball = false, contraction_K = false, rates_ok = false, j_ok = false;
    bool ok() const { return contraction_C && ball && contraction_K && rates_ok && j_ok; }
    std::string describe() const;
    nlohmann::json to_json() const;
};

struct ResidualStats {
    double sup = 0.0;
    double mean = 0.0;
    double grid_sup = 0.0;   // at grid nodes with the stored values
    double interp_sup = 0.0; // diagnostic: plain multilinear interpolation
    double interp_mean = 0.0;
};

struct QuasiConjugacy {
    Variant variant = Variant::A;
    Section u;         // center section (A), zero for B
    Section tau_tilde; // scalar time function (B'), empty otherwise
    Section v;         // us section, pi(x) = exp_x(v(x))
    int iterations = 0;
    std::vector<double> contraction_trace;
    ResidualStats residual;
    bool surjectivity_ok = false;
    double distance_to_id = 0.0;
    double center_leak = 0.0; // max |Pi^c v| over nodes
    double fixed_point_norm = 0.0;
    double K1 = 0.0;            // B: measured slide constant (operator norm)
    double K1_sampled = 0.0;    // B: sampled ratio d(tau(y),x)/d(y,x)
    GuardReport guard;
    int depth = 0;
    std::shared_ptr<const QuasiConjugacyOperator> op;

    Field omega_field; // interpolant of u + v; rebuilt by refresh()

    void refresh();
    // off-grid extension: omega_hat = Phi(omega_interp)(x)
    Vec omega_at(const TorusPoint& x) const;
    Vec v_at(const TorusPoint& x) const;
    TorusPoint pi(const TorusPoint& x) const;
    Section omega() const { return u + v; }
};

struct VerifyReport {
    ResidualStats residual;
    double distance_to_id = 0.0;
    double center_leak = 0.0;
    double epsilon = 0.0;
    bool residual_ok = false;
    bool surjectivity_ok = false;
    bool distance_ok = false;
    bool center_ok = false;
    bool ok() const { return residual_ok && surjectivity_ok && distance_ok && center_ok; }
    nlohmann::json to_json() const;
};

GuardReport guard_check(const QuasiConjugacyOperator& op, const SolverParams& p, const Grid& grid);

QuasiConjugacy solve_theorem_A(const MapSpec& f, const MapSpec& g, const Splitting& S, const SolverParams& p,
                               const Section* initial = nullptr);
QuasiConjugacy solve_theorem_Bprime(const MapSpec& f, const MapSpec& g, const FlowSpec& flow, const Splitting& S,
                                    const SolverParams& p, const Section* initial = nullptr);
QuasiConjugacy solve_theorem_B_transversal(const MapSpec& f, const MapSpec& g, const Splitting& S,
                                           const SolverParams& p, const Section* initial = nullptr);

VerifyReport verify_quasi_conjugacy(const QuasiConjugacy& r, const SolverParams& p);

struct LeafReport {
    double max_leaf_deviation = 0.0;
    double injectivity_proxy = 0.0;
    int leaf_samples = 0;
    int pairs = 0;
    nlohmann::json to_json() const;
};

// center foliation of f is assumed linear (constant E^c of f's splitting);
// leaves of g are traced along its estimated center direction
LeafReport verify_leaf_conjugacy(const QuasiConjugacy& r, const MapSpec& f, const MapSpec& g, int samples,
                                 int pairs = 10000, std::uint64_t seed = 42);

struct ContractionReport {
    double lipschitz = 0.0;
    double max_image_norm1 = 0.0;
    double epsilon = 0.0;
    int pairs = 0;
};

ContractionReport empirical_contraction(const MapSpec& f, const MapSpec& h, const Splitting& S,
                                        const SolverParams& p, int n_pairs);

// max over random unit-|.|_1 sections of |P_h^{-1} w|_1
double measure_Ph_inverse_norm(const MapSpec& f, const MapSpec& h, const Splitting& S, const Grid& grid, int n,
                               std::uint64_t seed = 42);

// random section with |w|_1 = radius
Section random_section(const Grid& grid, const Splitting& S, double radius, std::uint64_t seed);

nlohmann::json to_json(const QuasiConjugacy& r, const SolverParams& p);

} // namespace qc
