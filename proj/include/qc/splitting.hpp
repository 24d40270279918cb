#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qc/dynamics.hpp"
#include "qc/grid.hpp"
#include "qc/torus.hpp"

namespace qc {

enum class Block { s = 0, c = 1, u = 2 };
const char* to_string(Block b);

// Basis of T_x split as [E^s | E^c | E^u] (orthonormal columns inside each
// block) together with its inverse; rows of the dual give the oblique
// projection coefficients.
struct Frame {
    Mat basis;
    Mat dual;
    int ds = 0, dc = 0, du = 0;

    int first(Block b) const { return b == Block::s ? 0 : b == Block::c ? ds : ds + dc; }
    int count(Block b) const { return b == Block::s ? ds : b == Block::c ? dc : du; }
    Mat block_basis(Block b) const { return basis.middleCols(first(b), count(b)); }
    Mat block_dual(Block b) const { return dual.middleRows(first(b), count(b)); }
    Mat projector(Block b) const { return block_basis(b) * block_dual(b); }
    Vec part(Block b, const Vec& w) const
    {
        if (count(b) == 0) return Vec::Zero(w.size());
        return block_basis(b) * (block_dual(b) * w);
    }
    Vec us_part(const Vec& w) const { return w - part(Block::c, w); }
};

struct HyperbolicityConstants {
    double lambda = 0.0;
    double lambda_prime = 1.0;
    double mu_prime = 1.0;
    double mu = 0.0;
    double L = 1.0; // measured norm-equivalence constant (no safety margin)
};

class Splitting {
public:
    enum class Representation { constant, per_grid_point };

    Splitting() = default;
    static Splitting constant(Frame frame, HyperbolicityConstants k);
    static Splitting per_grid(Grid grid, std::vector<Frame> frames, HyperbolicityConstants k);

    Representation representation() const { return d_->rep; }
    bool is_constant() const { return d_->rep == Representation::constant; }
    int dim() const { return d_->ds + d_->dc + d_->du; }
    int ds() const { return d_->ds; }
    int dc() const { return d_->dc; }
    int du() const { return d_->du; }
    const HyperbolicityConstants& constants() const { return d_->k; }
    void set_L(double L);

    // frame at an arbitrary point; per-grid frames interpolate the stored
    // bases and re-orthonormalize inside each block
    Frame at(const TorusPoint& x) const;
    const Grid& grid() const { return d_->grid; }
    const Frame& node_frame(std::size_t i) const { return d_->frames[i]; }
    const Frame& constant_frame() const { return d_->frames[0]; }

private:
    struct Data {
        Representation rep = Representation::constant;
        int ds = 0, dc = 0, du = 0;
        HyperbolicityConstants k;
        Grid grid;
        std::vector<Frame> frames;
    };
    std::shared_ptr<Data> d_;
};

Frame make_frame(const Mat& bs, const Mat& bc, const Mat& bu);

Splitting exact_splitting(const MapSpec& f, double band_lo = 1.0, double band_hi = 1.0, std::uint64_t seed = 42);

struct EstimateOptions {
    int orbit_length = 40;
    int resolution = 0; // 0: 64 for d=2, 16 for d=3, 8 for d=4
    double band_lo = 0.8;
    double band_hi = 1.25;
    // relative widening of the sampled extreme growth factors; the grid
    // maximum underestimates the supremum between nodes
    double constant_margin = 1e-3;
    int ds = -1, dc = -1, du = -1; // -1: classify from growth rates
    std::uint64_t seed = 42;
};

Splitting estimate_splitting(const MapSpec& f, const EstimateOptions& opt = {});

// pointwise estimate of the splitting at x by subspace iteration along orbits;
// `reference` (optional) orients the returned block bases
Frame estimate_frame_at(const MapSpec& f, const TorusPoint& x, int ds, int dc, int du, int orbit_length,
                        const Frame* reference = nullptr);

// growth factors per step sorted descending (QR iteration along a forward orbit)
std::vector<double> growth_factors(const MapSpec& f, const TorusPoint& x, int n);

TangentVector project(const Splitting& S, const TorusPoint& x, const TangentVector& w, Block which);

// sup|Pi^c| + sup|Pi^us|: the constant with |s|_1 <= L |s| for sections
double measure_L(const Splitting& S, int samples = 100000, std::uint64_t seed = 42);
// max of (|Pi^c w| + |Pi^us w|) / |w| over random single vectors
double measure_L_pointwise(const Splitting& S, int samples = 100000, std::uint64_t seed = 42);

struct HyperbolicityReport {
    double worst_margin = 0.0; // relative; negative means violation
    std::string worst_block;
    int worst_n = 0;
    int checks = 0;
    int violations = 0;
    double tolerance = 0.0;
    bool ok() const { return violations == 0; }
};

HyperbolicityReport verify_hyperbolicity(const MapSpec& f, const Splitting& S, int n_max, double tolerance = 1e-6,
                                         int samples = 256, std::uint64_t seed = 42);

} // namespace qc
