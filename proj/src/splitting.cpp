#include "qc/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "qc/error.hpp"

namespace qc {

namespace {

// modified Gram-Schmidt, keeps column order and orientation
Mat gram_schmidt(Mat m)
{
    for (int j = 0; j < m.cols(); ++j) {
        for (int i = 0; i < j; ++i) m.col(j) -= m.col(i).dot(m.col(j)) * m.col(i);
        double n = m.col(j).norm();
        if (n < 1e-14) throw DomainError("splitting: degenerate basis");
        m.col(j) /= n;
    }
    return m;
}

Mat orth(const Mat& m)
{
    Eigen::HouseholderQR<Mat> qr(m);
    Mat q = qr.householderQ() * Mat::Identity(m.rows(), m.cols());
    return q;
}

Vec generic_vector(int d, int j)
{
    Vec g(d);
    for (int i = 0; i < d; ++i) g[i] = std::sin(1.0 + 1.7 * i + 2.3 * j) + 0.25 * (i == j);
    return g;
}

Mat generic_matrix(int d, int k)
{
    Mat g(d, k);
    for (int j = 0; j < k; ++j) g.col(j) = generic_vector(d, j);
    return g;
}

// orient an orthonormal block basis: project the reference onto the span, or
// fall back to a fixed generic direction
Mat orient(const Mat& q, const Mat* ref)
{
    if (q.cols() == 0) return q;
    Mat r = ref ? *ref : generic_matrix(q.rows(), q.cols());
    return gram_schmidt(q * (q.transpose() * r));
}

struct Dims {
    int ds, dc, du;
};

Dims classify(const std::vector<double>& growth, double lo, double hi)
{
    Dims d{0, 0, 0};
    for (double g : growth) {
        if (g < lo) ++d.ds;
        else if (g > hi) ++d.du;
        else ++d.dc;
    }
    return d;
}

void check_ordering(const HyperbolicityConstants& k, const char* who)
{
    bool ok = k.lambda > 0.0 && k.lambda < 1.0 && k.mu > 1.0 && k.lambda < k.lambda_prime &&
              k.lambda_prime <= k.mu_prime && k.mu_prime < k.mu;
    if (!ok) throw DomainError(std::string(who) + ": growth-factor bands overlap (no spectral gap)");
}

} // namespace

const char* to_string(Block b)
{
    return b == Block::s ? "s" : b == Block::c ? "c" : "u";
}

Frame make_frame(const Mat& bs, const Mat& bc, const Mat& bu)
{
    Frame f;
    f.ds = static_cast<int>(bs.cols());
    f.dc = static_cast<int>(bc.cols());
    f.du = static_cast<int>(bu.cols());
    const int d = static_cast<int>(std::max({bs.rows(), bc.rows(), bu.rows()}));
    f.basis.resize(d, f.ds + f.dc + f.du);
    if (f.basis.cols() != d) throw DomainError("make_frame: block dimensions do not add up to d");
    f.basis << bs, bc, bu;
    Eigen::FullPivLU<Mat> lu(f.basis);
    if (!lu.isInvertible()) throw DomainError("make_frame: subspaces are not complementary");
    f.dual = lu.inverse();
    return f;
}

Splitting Splitting::constant(Frame frame, HyperbolicityConstants k)
{
    Splitting s;
    s.d_ = std::make_shared<Data>();
    s.d_->rep = Representation::constant;
    s.d_->ds = frame.ds;
    s.d_->dc = frame.dc;
    s.d_->du = frame.du;
    s.d_->k = k;
    s.d_->frames.push_back(std::move(frame));
    return s;
}

Splitting Splitting::per_grid(Grid grid, std::vector<Frame> frames, HyperbolicityConstants k)
{
    if (frames.size() != grid.size() || frames.empty()) throw DomainError("Splitting: frame count mismatch");
    Splitting s;
    s.d_ = std::make_shared<Data>();
    s.d_->rep = Representation::per_grid_point;
    s.d_->ds = frames[0].ds;
    s.d_->dc = frames[0].dc;
    s.d_->du = frames[0].du;
    s.d_->k = k;
    s.d_->grid = std::move(grid);
    s.d_->frames = std::move(frames);
    return s;
}

void Splitting::set_L(double L)
{
    auto nd = std::make_shared<Data>(*d_);
    nd->k.L = L;
    d_ = nd;
}

Frame Splitting::at(const TorusPoint& x) const
{
    if (d_->rep == Representation::constant) return d_->frames[0];
    std::size_t idx[16];
    double w[16];
    int n = d_->grid.stencil(x, idx, w);
    const int d = dim();
    Mat b = Mat::Zero(d, d);
    for (int c = 0; c < n; ++c)
        if (w[c] != 0.0) b += w[c] * d_->frames[idx[c]].basis;
    Mat bs = gram_schmidt(b.leftCols(d_->ds));
    Mat bc = d_->dc ? gram_schmidt(b.middleCols(d_->ds, d_->dc)) : Mat(d, 0);
    Mat bu = gram_schmidt(b.rightCols(d_->du));
    Frame f;
    f.ds = d_->ds;
    f.dc = d_->dc;
    f.du = d_->du;
    f.basis.resize(d, d);
    f.basis << bs, bc, bu;
    f.dual = f.basis.inverse();
    return f;
}

Splitting exact_splitting(const MapSpec& f, double band_lo, double band_hi, std::uint64_t seed)
{
    if (!f.affine()) throw DomainError("exact_splitting: map has no constant differential");
    if (!(band_lo <= 1.0 && 1.0 <= band_hi)) throw DomainError("exact_splitting: band must contain 1");
    const Mat& a = f.matrix();
    const int d = static_cast<int>(a.rows());
    Eigen::EigenSolver<Mat> es(a, false);
    using C = std::complex<double>;
    std::vector<C> ev(d);
    std::vector<int> cls(d);
    const double tol = 1e-9;
    HyperbolicityConstants k;
    k.lambda = 0.0;
    k.mu = 1e300;
    double lp = 1e300, mp = 0.0;
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < d; ++i) {
        ev[i] = es.eigenvalues()[i];
        double m = std::abs(ev[i]);
        if (band_lo == band_hi) {
            cls[i] = std::abs(m - band_lo) < tol ? 1 : m < band_lo ? 0 : 2;
        } else {
            if (std::abs(m - band_lo) < tol || std::abs(m - band_hi) < tol)
                throw DomainError("exact_splitting: eigenvalue modulus on a band boundary");
            cls[i] = m < band_lo ? 0 : m > band_hi ? 2 : 1;
        }
        ++counts[cls[i]];
        if (cls[i] == 0) k.lambda = std::max(k.lambda, m);
        if (cls[i] == 2) k.mu = std::min(k.mu, m);
        if (cls[i] == 1) {
            lp = std::min(lp, m);
            mp = std::max(mp, m);
        }
    }
    if (counts[0] == 0 || counts[2] == 0) throw DomainError("exact_splitting: no stable or no unstable direction");
    k.lambda_prime = counts[1] ? lp : 1.0;
    k.mu_prime = counts[1] ? mp : 1.0;
    check_ordering(k, "exact_splitting");

    // generalized eigenspace of a block = range of the product over the other eigenvalues
    Mat blocks[3];
    for (int b = 0; b < 3; ++b) {
        if (counts[b] == 0) {
            blocks[b] = Mat(d, 0);
            continue;
        }
        Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(d, d);
        for (int i = 0; i < d; ++i)
            if (cls[i] != b) p = (a.cast<C>() - ev[i] * Eigen::MatrixXcd::Identity(d, d)) * p;
        Eigen::MatrixXd pr = p.real();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(pr, Eigen::ComputeFullU);
        Mat q = svd.matrixU().leftCols(counts[b]);
        blocks[b] = orient(q, nullptr);
    }
    Frame fr = make_frame(blocks[0], blocks[1], blocks[2]);
    Splitting s = Splitting::constant(fr, k);
    s.set_L(measure_L(s, 100000, seed));
    return s;
}

std::vector<double> growth_factors(const MapSpec& f, const TorusPoint& x0, int n)
{
    const int d = f.dim();
    Mat q = Mat::Identity(d, d);
    Vec acc = Vec::Zero(d);
    TorusPoint x = x0;
    for (int k = 0; k < n; ++k) {
        Eigen::HouseholderQR<Mat> qr(f.differential(x) * q);
        Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
        q = qr.householderQ() * Mat::Identity(d, d);
        for (int i = 0; i < d; ++i) acc[i] += std::log(std::abs(r(i, i)));
        x = f.forward(x);
    }
    std::vector<double> g(d);
    for (int i = 0; i < d; ++i) g[i] = std::exp(acc[i] / n);
    std::sort(g.rbegin(), g.rend());
    return g;
}

Frame estimate_frame_at(const MapSpec& f, const TorusPoint& x, int ds, int dc, int du, int n, const Frame* reference)
{
    const int d = f.dim();
    std::vector<TorusPoint> back(n + 1), fwd(n + 1);
    back[n] = x;
    for (int k = n - 1; k >= 0; --k) back[k] = f.inverse(back[k + 1]);
    fwd[0] = x;
    for (int k = 0; k < n; ++k) fwd[k + 1] = f.forward(fwd[k]);

    auto push = [&](int cols) {
        Mat q = orth(generic_matrix(d, cols));
        for (int k = 0; k < n; ++k) q = orth(f.differential(back[k]) * q);
        return q;
    };
    auto pull = [&](int cols) {
        Mat q = orth(generic_matrix(d, cols));
        for (int k = n - 1; k >= 0; --k) q = orth(f.differential(fwd[k]).partialPivLu().solve(q));
        return q;
    };

    Mat qu = push(du);
    Mat qs = pull(ds);
    Mat qc(d, 0);
    if (dc > 0) {
        Mat qcu = push(du + dc);
        Mat qcs = pull(ds + dc);
        Mat m(d, qcu.cols() + qcs.cols());
        m << qcu, -qcs;
        Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
        Mat v = svd.matrixV().rightCols(dc);
        qc = orth(qcu * v.topRows(qcu.cols()));
    }
    Mat rs, rc, ru;
    if (reference) {
        rs = reference->block_basis(Block::s);
        rc = reference->block_basis(Block::c);
        ru = reference->block_basis(Block::u);
    }
    return make_frame(orient(qs, reference ? &rs : nullptr), orient(qc, reference ? &rc : nullptr),
                      orient(qu, reference ? &ru : nullptr));
}

Splitting estimate_splitting(const MapSpec& f, const EstimateOptions& opt)
{
    const int d = f.dim();
    int ds = opt.ds, dc = opt.dc, du = opt.du;
    if (ds < 0 || dc < 0 || du < 0) {
        Vec x0(d);
        for (int i = 0; i < d; ++i) x0[i] = 0.1234 + 0.2113 * i;
        Dims dims = classify(growth_factors(f, TorusPoint(x0), std::max(200, opt.orbit_length)), opt.band_lo,
                             opt.band_hi);
        ds = dims.ds;
        dc = dims.dc;
        du = dims.du;
    }
    if (ds + dc + du != d || ds == 0 || du == 0)
        throw DomainError("estimate_splitting: no spectral gap detected");
    int res = opt.resolution > 0 ? opt.resolution : (d == 2 ? 64 : d == 3 ? 16 : 8);
    Grid grid = Grid::cube(d, res);
    std::vector<Frame> frames(grid.size());
    Frame ref = estimate_frame_at(f, grid.node(0), ds, dc, du, opt.orbit_length);
    for (std::size_t i = 0; i < grid.size(); ++i)
        frames[i] = estimate_frame_at(f, grid.node(i), ds, dc, du, opt.orbit_length, &ref);

    HyperbolicityConstants k;
    k.lambda = 0.0;
    k.mu = 1e300;
    k.lambda_prime = 1e300;
    k.mu_prime = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Mat df = f.differential(grid.node(i));
        const Frame& fr = frames[i];
        Eigen::JacobiSVD<Mat> ss(Mat(df * fr.block_basis(Block::s)));
        Eigen::JacobiSVD<Mat> su(Mat(df * fr.block_basis(Block::u)));
        k.lambda = std::max(k.lambda, ss.singularValues()[0]);
        k.mu = std::min(k.mu, su.singularValues()[du - 1]);
        if (dc > 0) {
            Eigen::JacobiSVD<Mat> sc(Mat(df * fr.block_basis(Block::c)));
            k.lambda_prime = std::min(k.lambda_prime, sc.singularValues()[dc - 1]);
            k.mu_prime = std::max(k.mu_prime, sc.singularValues()[0]);
        }
    }
    const double m = 1.0 + opt.constant_margin;
    k.lambda *= m;
    k.mu /= m;
    if (dc > 0) {
        k.lambda_prime /= m;
        k.mu_prime *= m;
    } else {
        k.lambda_prime = k.mu_prime = 1.0;
    }
    check_ordering(k, "estimate_splitting");
    Splitting s = Splitting::per_grid(grid, std::move(frames), k);
    s.set_L(measure_L(s, 100000, opt.seed));
    return s;
}

TangentVector project(const Splitting& S, const TorusPoint& x, const TangentVector& w, Block which)
{
    if (w.base.dim() != x.dim() || torus_offset(x, w.base).norm() > 1e-12)
        throw DomainError("project: vector is not based at x");
    return {x, S.at(x).part(which, w.components)};
}

// |u|+|v| over sections takes the two sups at different points, so the
// constant is sup|Pi^c| + sup|Pi^us| in operator norm, not the pointwise ratio
double measure_L(const Splitting& S, int samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    const int d = S.dim();
    double pc = 0.0, pus = 0.0;
    auto visit = [&](const Frame& fr) {
        Mat c = fr.projector(Block::c);
        Mat us = Mat::Identity(d, d) - c;
        if (fr.dc > 0) pc = std::max(pc, Eigen::JacobiSVD<Mat>(c).singularValues()[0]);
        pus = std::max(pus, Eigen::JacobiSVD<Mat>(us).singularValues()[0]);
    };
    if (S.is_constant()) {
        visit(S.constant_frame());
    } else {
        for (std::size_t i = 0; i < S.grid().size(); ++i) visit(S.node_frame(i));
        for (int i = 0; i < std::max(1, samples / 64); ++i) {
            Vec x(d);
            for (int k = 0; k < d; ++k) x[k] = ud(rng);
            visit(S.at(TorusPoint(x)));
        }
    }
    return std::max(1.0, pc + pus);
}

double measure_L_pointwise(const Splitting& S, int samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    const int d = S.dim();
    double L = 1.0;
    Frame fr = S.constant_frame();
    for (int i = 0; i < samples; ++i) {
        if (!S.is_constant() && i % 64 == 0) {
            Vec x(d);
            for (int k = 0; k < d; ++k) x[k] = ud(rng);
            fr = S.at(TorusPoint(x));
        }
        Vec w(d);
        for (int k = 0; k < d; ++k) w[k] = nd(rng);
        w.normalize();
        Vec c = fr.part(Block::c, w);
        L = std::max(L, c.norm() + (w - c).norm());
    }
    return L;
}

HyperbolicityReport verify_hyperbolicity(const MapSpec& f, const Splitting& S, int n_max, double tolerance, int samples,
                                         std::uint64_t seed)
{
    const auto& k = S.constants();
    const int d = f.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::normal_distribution<double> nd(0.0, 1.0);

    std::vector<TorusPoint> pts;
    if (S.is_constant()) {
        for (int i = 0; i < samples; ++i) {
            Vec x(d);
            for (int j = 0; j < d; ++j) x[j] = ud(rng);
            pts.emplace_back(x);
        }
    } else {
        const Grid& g = S.grid();
        std::size_t stride = std::max<std::size_t>(1, g.size() / samples);
        for (std::size_t i = 0; i < g.size(); i += stride) pts.push_back(g.node(i));
    }

    HyperbolicityReport rep;
    rep.tolerance = tolerance;
    rep.worst_margin = 1e300;
    auto record = [&](double margin, const char* block, int n) {
        ++rep.checks;
        if (margin < rep.worst_margin) {
            rep.worst_margin = margin;
            rep.worst_block = block;
            rep.worst_n = n;
        }
        if (margin < -tolerance) ++rep.violations;
    };

    for (const auto& x : pts) {
        Frame fr = S.at(x);
        for (Block b : {Block::s, Block::c, Block::u}) {
            if (fr.count(b) == 0) continue;
            Mat bb = fr.block_basis(b);
            std::vector<Vec> vs;
            for (int j = 0; j < bb.cols(); ++j) vs.push_back(bb.col(j));
            if (bb.cols() > 1) {
                Vec r(bb.cols());
                for (int j = 0; j < r.size(); ++j) r[j] = nd(rng);
                vs.push_back(bb * r.normalized());
            }
            for (Vec v : vs) {
                TorusPoint y = x;
                for (int n = 1; n <= n_max; ++n) {
                    v = f.differential(y) * v;
                    y = f.forward(y);
                    double nv = v.norm();
                    if (b == Block::s) {
                        double bound = std::pow(k.lambda, n);
                        record((bound - nv) / bound, "s", n);
                    } else if (b == Block::u) {
                        double bound = std::pow(k.mu, n);
                        record((nv - bound) / bound, "u", n);
                    } else {
                        double lo = std::pow(k.lambda_prime, n), hi = std::pow(k.mu_prime, n);
                        record(std::min((nv - lo) / lo, (hi - nv) / hi), "c", n);
                    }
                }
            }
        }
    }
    return rep;
}

} // namespace qc
