#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SVD>

#include "qc/error.hpp"
#include "qc/solver.hpp"

namespace qc {

namespace {

Mat identity(int d) { return Mat::Identity(d, d); }

double spectral_norm(const Mat& m)
{
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()[0];
}

Mat proj(const Frame& fr, Block b)
{
    const int d = static_cast<int>(fr.basis.rows());
    if (fr.count(b) == 0) return Mat::Zero(d, d);
    return fr.projector(b);
}

Mat proj_us(const Frame& fr) { return identity(static_cast<int>(fr.basis.rows())) - proj(fr, Block::c); }

// B_i(y) (D_i(x) B_i(y))^{-1} D_i(x): inverse of the block of J_h between x and y
Mat block_transfer(const Frame& fy, const Frame& fx, Block b)
{
    const int d = static_cast<int>(fy.basis.rows());
    if (fy.count(b) == 0) return Mat::Zero(d, d);
    Mat by = fy.block_basis(b);
    Mat dx = fx.block_dual(b);
    Mat core = dx * by;
    return by * core.inverse() * dx;
}

// B_u(z) (D_u(z') Df B_u(z))^{-1} D_u(z'): inverse of the unstable block of Df
Mat unstable_inverse(const Frame& fz, const Frame& fz1, const Mat& df)
{
    const int d = static_cast<int>(fz.basis.rows());
    if (fz.count(Block::u) == 0) return Mat::Zero(d, d);
    Mat bz = fz.block_basis(Block::u);
    Mat dz1 = fz1.block_dual(Block::u);
    Mat core = dz1 * df * bz;
    return bz * core.inverse() * dz1;
}

// block-diagonal part of Df between the splittings at xm and x, on E^s + E^u
Mat f_eff(const Frame& fx, const Mat& df, const Frame& fxm)
{
    return proj(fx, Block::s) * df * proj(fxm, Block::s) + proj(fx, Block::u) * df * proj(fxm, Block::u);
}

Mat j_eff(const Frame& fx, const Frame& fhx)
{
    return proj(fx, Block::s) * proj(fhx, Block::s) + proj(fx, Block::u) * proj(fhx, Block::u);
}

MapSpec compose(const MapSpec& h, const MapSpec& f)
{
    MapSpec::Data d;
    d.kind = MapKind::composite;
    d.dim = f.dim();
    d.center_dimension = f.center_dimension();
    d.affine = f.affine() && h.affine();
    d.chart = f.chart_ptr();
    d.name = "g";
    if (d.affine) d.matrix = h.matrix() * f.matrix();
    d.forward = [f, h](const TorusPoint& x) { return h.forward(f.forward(x)); };
    d.inverse = [f, h](const TorusPoint& x) { return f.inverse(h.inverse(x)); };
    d.differential = [f, h](const TorusPoint& x) { return Mat(h.differential(f.forward(x)) * f.differential(x)); };
    return MapSpec(std::move(d));
}

bool flat(const MapSpec& f) { return f.chart_ptr() == flat_chart(); }

TorusPoint random_point(int d, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = u(rng);
    return TorusPoint(x);
}

Vec gaussian(int d, std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = n(rng);
    return v;
}

std::vector<std::size_t> node_sample(const Grid& grid, std::size_t cap)
{
    std::vector<std::size_t> out;
    std::size_t stride = std::max<std::size_t>(1, (grid.size() + cap - 1) / cap);
    for (std::size_t i = 0; i < grid.size(); i += stride) out.push_back(i);
    return out;
}

} // namespace

struct QuasiConjugacyOperator::Tables {
    std::vector<Mat> Ws, Wu;
    Mat Wc, Fe, Je, Pus;
};

const char* to_string(Variant v)
{
    return v == Variant::A ? "A" : v == Variant::Bprime ? "Bprime" : "B";
}

int neumann_depth_for(double q, double target)
{
    if (!(q > 0.0)) return 1;
    if (q >= 1.0) throw GuardError("Neumann series: rate " + std::to_string(q) + " is not below 1");
    int n = 0;
    while (std::pow(q, n + 1) / (1.0 - q) >= target) {
        ++n;
        if (n > 100000) throw GuardError("Neumann series: depth overflow");
    }
    return std::max(n, 1);
}

QuasiConjugacyOperator::QuasiConjugacyOperator(MapSpec f, MapSpec g, Splitting S, Variant variant,
                                               std::optional<FlowSpec> flow)
    : f_(std::move(f)), g_(std::move(g)), S_(std::move(S)), variant_(variant), flow_(std::move(flow))
{
    if (f_.dim() != g_.dim() || f_.dim() != S_.dim()) throw DomainError("operator: dimension mismatch");
    h_ = compose_with_inverse(g_, f_);
    if (variant_ == Variant::Bprime) {
        if (!flow_) throw DomainError("flow-time variant needs a flow");
        if (S_.dc() != 1) throw DomainError("flow-time variant needs a one-dimensional center");
    }
    if (variant_ == Variant::B && !S_.is_constant())
        throw DomainError("transversal variant needs the constant center bundle of a linear center foliation");
    uniform_ = S_.is_constant() && f_.affine();
    skip_eta_ = variant_ == Variant::A && f_.affine() && flat(f_);
    build_tables();
}

QuasiConjugacyOperator QuasiConjugacyOperator::from_h(MapSpec f, MapSpec h, Splitting S)
{
    MapSpec g = compose(h, f);
    QuasiConjugacyOperator op(f, g, std::move(S));
    op.h_ = std::move(h);
    return op;
}

void QuasiConjugacyOperator::set_depth(int depth)
{
    if (depth < 1) throw DomainError("Neumann depth must be positive");
    depth_ = depth;
    build_tables();
}

void QuasiConjugacyOperator::build_tables()
{
    tables_.reset();
    if (!uniform_) return;
    auto t = std::make_shared<Tables>();
    const Frame& fr = S_.constant_frame();
    const int d = S_.dim();
    Mat df = f_.matrix();
    Mat ps = proj(fr, Block::s), pu = proj(fr, Block::u);
    Mat ls = ps * df * ps;
    Mat lu = unstable_inverse(fr, fr, df);
    Mat m = identity(d);
    t->Ws.resize(depth_ + 1);
    t->Wu.resize(depth_ + 1);
    for (int k = 0; k <= depth_; ++k) {
        t->Ws[k] = m * ps;
        m = m * ls;
    }
    m = identity(d);
    t->Wu[0] = Mat::Zero(d, d);
    for (int k = 1; k <= depth_; ++k) {
        m = m * lu;
        t->Wu[k] = -m * pu;
    }
    t->Wc = -proj(fr, Block::c);
    t->Fe = f_eff(fr, df, fr);
    t->Je = j_eff(fr, fr);
    t->Pus = proj_us(fr);
    tables_ = t;
}

double QuasiConjugacyOperator::tau_of(const Vec& center_part, const TorusPoint& x) const
{
    Vec u = flow_->generator(x);
    return center_part.dot(u) / u.squaredNorm();
}

template <class Emit>
void QuasiConjugacyOperator::walk(const TorusPoint& y0, bool inverse_only, Emit&& emit) const
{
    const int D = depth_;
    const int d = S_.dim();
    const Tables* T = tables_.get();
    const bool B = variant_ == Variant::B;
    const bool flowv = variant_ == Variant::Bprime;
    OrbitTerm t;
    auto set_flow = [&](const TorusPoint& x, const Frame& fx) {
        Vec u = flow_->generator(x);
        Mat pc = T ? Mat(-T->Wc) : proj(fx, Block::c);
        t.tau_row = pc.transpose() * u / u.squaredNorm();
        t.ugen = u;
    };

    // stable series along the backward orbit of g
    if (S_.ds() > 0) {
        TorusPoint y = y0;
        Frame fy = T ? Frame{} : frame(y);
        Mat m = identity(d);
        for (int k = 0; k <= D; ++k) {
            TorusPoint y1 = g_.inverse(y);
            Frame fy1, fx;
            Mat df, rs;
            if (!T) {
                fy1 = frame(y1);
                df = f_.differential(y1);
            }
            if (B) {
                if (inverse_only) {
                    t.kind = OrbitTerm::linear;
                    t.hx = y;
                    t.id_hx = k;
                    t.W = T ? T->Ws[k] : Mat(m * proj(fy, Block::s));
                } else {
                    t.kind = OrbitTerm::eta_b;
                    t.x = y;
                    t.xm = y1;
                    t.id_xm = k + 1;
                    t.W = T ? T->Ws[k] : Mat(m * proj(fy, Block::s));
                    t.Fe = T ? T->Fe : f_eff(fy, df, fy1);
                    t.P_x = T ? T->Pus : proj_us(fy);
                    t.P_xm = T ? T->Pus : proj_us(fy1);
                }
                emit(t);
                if (!T) m = m * proj(fy, Block::s) * df * proj(fy1, Block::s);
            } else {
                TorusPoint x = f_.forward(y1);
                if (!T) {
                    fx = frame(x);
                    rs = block_transfer(fy, fx, Block::s);
                }
                if (inverse_only) {
                    t.kind = OrbitTerm::linear;
                    t.hx = y;
                    t.id_hx = k;
                    t.W = T ? T->Ws[k] : Mat(m * proj(fy, Block::s));
                } else {
                    t.kind = OrbitTerm::q_term;
                    t.x = x;
                    t.id_x = -1;
                    t.xm = y1;
                    t.id_xm = k + 1;
                    t.hx = y;
                    t.id_hx = k;
                    t.W = T ? T->Ws[k] : Mat(m * rs);
                    t.Fe = T ? T->Fe : f_eff(fx, df, fy1);
                    t.Je = T ? T->Je : j_eff(fx, fy);
                    t.P_xm = T ? T->Pus : proj_us(fy1);
                    t.P_hx = T ? T->Pus : proj_us(fy);
                    if (flowv) set_flow(x, fx);
                }
                emit(t);
                if (!T) m = m * rs * df * proj(fy1, Block::s);
            }
            y = y1;
            fy = fy1;
        }
    }

    // unstable series along the forward orbit of g
    if (S_.du() > 0) {
        TorusPoint z = y0;
        int id_z = 0;
        Frame fz = T ? Frame{} : frame(z);
        Mat m = identity(d);
        for (int k = 1; k <= D; ++k) {
            TorusPoint z1 = g_.forward(z);
            const int id_z1 = D + 1 + k;
            Frame fz1, ffx;
            Mat df;
            TorusPoint fx;
            if (!B) fx = f_.forward(z);
            if (!T) {
                fz1 = frame(z1);
                df = f_.differential(z);
                if (B) {
                    m = m * unstable_inverse(fz, fz1, df);
                } else {
                    ffx = frame(fx);
                    m = m * unstable_inverse(fz, ffx, df);
                }
            }
            if (inverse_only) {
                t.kind = OrbitTerm::linear;
                t.hx = z1;
                t.id_hx = id_z1;
                t.W = T ? T->Wu[k] : Mat(-m * proj(fz1, Block::u));
            } else if (B) {
                t.kind = OrbitTerm::eta_b;
                t.x = z1;
                t.xm = z;
                t.id_xm = id_z;
                t.W = T ? T->Wu[k] : Mat(-m * proj(fz1, Block::u));
                t.Fe = T ? T->Fe : f_eff(fz1, df, fz);
                t.P_x = T ? T->Pus : proj_us(fz1);
                t.P_xm = T ? T->Pus : proj_us(fz);
            } else {
                t.kind = OrbitTerm::q_term;
                t.x = fx;
                t.id_x = -1;
                t.xm = z;
                t.id_xm = id_z;
                t.hx = z1;
                t.id_hx = id_z1;
                t.W = T ? T->Wu[k] : Mat(-m * block_transfer(fz1, ffx, Block::u));
                t.Fe = T ? T->Fe : f_eff(ffx, df, fz);
                t.Je = T ? T->Je : j_eff(ffx, fz1);
                t.P_xm = T ? T->Pus : proj_us(fz);
                t.P_hx = T ? T->Pus : proj_us(fz1);
                if (flowv) set_flow(fx, ffx);
            }
            emit(t);
            z = z1;
            fz = fz1;
            id_z = id_z1;
        }
    }

    // center block: P_h^{-1} = -J_h^c there
    if (!B && S_.dc() > 0) {
        TorusPoint xm = f_.inverse(y0);
        TorusPoint hy = g_.forward(xm);
        Frame fy0, fxm, fhy;
        if (!T) {
            fy0 = frame(y0);
            fhy = frame(hy);
        }
        if (inverse_only) {
            t.kind = OrbitTerm::linear;
            t.hx = hy;
            t.id_hx = 2 * D + 3;
            t.W = T ? T->Wc : Mat(-proj(fy0, Block::c) * proj(fhy, Block::c));
        } else {
            if (!T) fxm = frame(xm);
            t.kind = OrbitTerm::q_term;
            t.x = y0;
            t.id_x = 0;
            t.xm = xm;
            t.id_xm = 2 * D + 2;
            t.hx = hy;
            t.id_hx = 2 * D + 3;
            t.W = T ? T->Wc : Mat(-proj(fy0, Block::c));
            t.Fe = T ? T->Fe : f_eff(fy0, f_.differential(xm), fxm);
            t.Je = T ? T->Je : j_eff(fy0, fhy);
            t.P_xm = T ? T->Pus : proj_us(fxm);
            t.P_hx = T ? T->Pus : proj_us(fhy);
            if (flowv) set_flow(y0, fy0);
        }
        emit(t);
    }
}

namespace {

struct Accumulator {
    const QuasiConjugacyOperator& op;
    const Field& w;
    bool skip_eta;
    std::vector<Vec> cache;
    std::vector<char> have;
    Vec out;

    Accumulator(const QuasiConjugacyOperator& o, const Field& field, int ids, bool skip)
        : op(o), w(field), skip_eta(skip), cache(ids), have(ids, 0), out(Vec::Zero(o.splitting().dim()))
    {
    }

    const Vec& value(int id, const TorusPoint& p)
    {
        if (!have[id]) {
            cache[id] = w(p);
            have[id] = 1;
        }
        return cache[id];
    }

    void add(const OrbitTerm& t)
    {
        const Chart& ch = op.chart();
        switch (t.kind) {
        case OrbitTerm::linear:
            out += t.W * value(t.id_hx, t.hx);
            break;
        case OrbitTerm::eta_b: {
            Vec wxm = value(t.id_xm, t.xm);
            TorusPoint p = op.f().forward(ch.advance(t.xm, t.P_xm * wxm));
            out += t.W * (t.P_x * ch.offset(t.x, p) - t.Fe * wxm);
            break;
        }
        case OrbitTerm::q_term: {
            Vec wxm = value(t.id_xm, t.xm);
            Vec whx = value(t.id_hx, t.hx);
            Vec q = t.Je * whx - ch.offset(t.x, ch.advance(t.hx, t.P_hx * whx));
            if (!skip_eta) {
                TorusPoint p = op.f().forward(ch.advance(t.xm, t.P_xm * wxm));
                double tau = 0.0;
                if (t.tau_row.size() > 0) {
                    Vec wx = t.id_x >= 0 ? value(t.id_x, t.x) : w(t.x);
                    tau = t.tau_row.dot(wx);
                    p = op.flow()->time_map(p, tau);
                }
                q += ch.offset(t.x, p) - t.Fe * wxm;
                if (t.tau_row.size() > 0) q -= tau * t.ugen;
            }
            out += t.W * q;
            break;
        }
        }
    }
};

} // namespace

Vec QuasiConjugacyOperator::accumulate(const NodeOrbit& orbit, const Field& w, bool) const
{
    Accumulator acc(*this, w, orbit.ids, skip_eta_);
    for (const auto& t : orbit.terms) acc.add(t);
    return acc.out;
}

NodeOrbit QuasiConjugacyOperator::record(const TorusPoint& y0, bool inverse_only) const
{
    NodeOrbit o;
    o.ids = 2 * depth_ + 4;
    walk(y0, inverse_only, [&](const OrbitTerm& t) {
        o.terms.push_back(t);
        if (variant_ != Variant::Bprime) {
            o.terms.back().tau_row = Vec();
            o.terms.back().ugen = Vec();
        }
    });
    return o;
}

Vec QuasiConjugacyOperator::Phi(const Field& omega, const TorusPoint& x) const
{
    Accumulator acc(*this, omega, 2 * depth_ + 4, skip_eta_);
    walk(x, false, [&](const OrbitTerm& t) { acc.add(t); });
    return acc.out;
}

Vec QuasiConjugacyOperator::Ph_inv(const Field& w, const TorusPoint& x) const
{
    Accumulator acc(*this, w, 2 * depth_ + 4, skip_eta_);
    walk(x, true, [&](const OrbitTerm& t) { acc.add(t); });
    return acc.out;
}

Section QuasiConjugacyOperator::apply_Phi(const Section& omega) const
{
    Field w = omega.field();
    const Grid& grid = omega.grid();
    Section out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) out.set(i, Phi(w, grid.node(i)));
    return out;
}

Section QuasiConjugacyOperator::apply_Ph_inv(const Section& w) const
{
    Field fw = w.field();
    const Grid& grid = w.grid();
    Section out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) out.set(i, Ph_inv(fw, grid.node(i)));
    return out;
}

OrbitPlan QuasiConjugacyOperator::plan(const Grid& grid, bool inverse_only) const
{
    OrbitPlan p;
    p.grid = grid;
    p.inverse_only = inverse_only;
    p.nodes.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) p.nodes.push_back(record(grid.node(i), inverse_only));
    return p;
}

Section QuasiConjugacyOperator::apply(const OrbitPlan& plan, const Section& w) const
{
    if (!(plan.grid == w.grid())) throw DomainError("apply: plan and section grids differ");
    Field fw = w.field();
    Section out(plan.grid);
    for (std::size_t i = 0; i < plan.nodes.size(); ++i) out.set(i, accumulate(plan.nodes[i], fw, plan.inverse_only));
    return out;
}

BlockRates QuasiConjugacyOperator::calibrate(const Grid& grid, std::optional<int> depth)
{
    BlockRates r;
    r.j = r.j_inv = 1.0;
    const bool B = variant_ == Variant::B;
    double j = 0.0, jinv = 0.0;
    for (std::size_t i : node_sample(grid, 16384)) {
        TorusPoint y = grid.node(i);
        Frame fy = frame(y);
        if (S_.ds() > 0 || !B) {
            TorusPoint y1 = g_.inverse(y);
            Frame fy1 = frame(y1);
            Mat df = f_.differential(y1);
            if (B) {
                r.q_s = std::max(r.q_s, spectral_norm(proj(fy, Block::s) * df * fy1.block_basis(Block::s)));
            } else {
                TorusPoint x = f_.forward(y1);
                Frame fx = frame(x);
                if (S_.ds() > 0)
                    r.q_s = std::max(r.q_s, spectral_norm(block_transfer(fy, fx, Block::s) * df *
                                                          fy1.block_basis(Block::s)));
                for (Block b : {Block::s, Block::c, Block::u}) {
                    if (fy.count(b) == 0) continue;
                    Mat core = fx.block_dual(b) * fy.block_basis(b);
                    j = std::max(j, spectral_norm(core));
                    jinv = std::max(jinv, spectral_norm(core.inverse()));
                }
            }
        }
        if (S_.du() > 0) {
            TorusPoint z1 = g_.forward(y);
            Frame fz1 = frame(z1);
            Mat df = f_.differential(y);
            Mat l = B ? unstable_inverse(fy, fz1, df) : unstable_inverse(fy, frame(f_.forward(y)), df);
            r.q_u = std::max(r.q_u, spectral_norm(l * fz1.block_basis(Block::u)));
        }
    }
    if (!B) {
        r.j = j;
        r.j_inv = jinv;
    }
    const double lambda = S_.constants().lambda;
    const double bound = 0.5 * (1.0 + lambda);
    if (r.q() > bound)
        throw GuardError("contraction guard: block rate " + std::to_string(r.q()) + " exceeds (1+lambda)/2 = " +
                         std::to_string(bound));
    rates_ = r;
    calibrated_ = true;
    set_depth(depth ? *depth : neumann_depth_for(std::min(bound, 1.05 * r.q())));
    return r;
}

// pointwise operators

Vec QuasiConjugacyOperator::beta(const Field& w, const TorusPoint& x) const
{
    TorusPoint xm = f_.inverse(x);
    return chart().offset(x, f_.forward(chart().advance(xm, w(xm))));
}

Vec QuasiConjugacyOperator::F(const Field& w, const TorusPoint& x) const
{
    TorusPoint xm = f_.inverse(x);
    return f_.differential(xm) * w(xm);
}

Vec QuasiConjugacyOperator::eta(const Field& w, const TorusPoint& x) const
{
    if (f_.affine() && flat(f_)) return Vec::Zero(x.dim());
    TorusPoint xm = f_.inverse(x);
    Vec wxm = w(xm);
    return chart().offset(x, f_.forward(chart().advance(xm, wxm))) - f_.differential(xm) * wxm;
}

Vec QuasiConjugacyOperator::Jh(const Field& w, const TorusPoint& x) const
{
    TorusPoint hx = h_.forward(x);
    Frame fx = frame(x), fh = frame(hx);
    Vec wh = w(hx);
    Vec out = Vec::Zero(x.dim());
    for (Block b : {Block::s, Block::c, Block::u}) out += proj(fx, b) * (proj(fh, b) * wh);
    return out;
}

Vec QuasiConjugacyOperator::Jh_inv(const Field& w, const TorusPoint& y) const
{
    TorusPoint x = f_.forward(g_.inverse(y));
    Frame fy = frame(y), fx = frame(x);
    Vec wx = w(x);
    Vec out = Vec::Zero(y.dim());
    for (Block b : {Block::s, Block::c, Block::u}) out += block_transfer(fy, fx, b) * wx;
    return out;
}

Vec QuasiConjugacyOperator::theta(const Field& w, const TorusPoint& x) const
{
    TorusPoint hx = h_.forward(x);
    return chart().offset(x, chart().advance(hx, w(hx))) - Jh(w, x);
}

Vec QuasiConjugacyOperator::Ph(const Field& w, const TorusPoint& y) const
{
    TorusPoint xm = g_.inverse(y);
    Frame fy = frame(y), fxm = frame(xm);
    Mat df = f_.differential(xm);
    Vec wxm = w(xm);
    Vec out = proj_us(fy) * w(y);
    if (variant_ == Variant::B) {
        for (Block b : {Block::s, Block::u}) out -= proj(fy, b) * df * (proj(fxm, b) * wxm);
        return out;
    }
    TorusPoint x = f_.forward(xm);
    Frame fx = frame(x);
    out -= block_transfer(fy, fx, Block::c) * w(x);
    for (Block b : {Block::s, Block::u}) out -= block_transfer(fy, fx, b) * df * (proj(fxm, b) * wxm);
    return out;
}

// section-level wrappers

namespace {

Section sample_op(const Section& w, const std::function<Vec(const Field&, const TorusPoint&)>& op)
{
    Field fw = w.field();
    Section out(w.grid(), w.components());
    for (std::size_t i = 0; i < w.size(); ++i) out.set(i, op(fw, w.grid().node(i)));
    return out;
}

Splitting trivial_splitting(int d)
{
    // operators that ignore the splitting still need one to build the operator
    Frame fr = make_frame(Mat(d, 0), Mat::Identity(d, d), Mat(d, 0));
    HyperbolicityConstants k;
    k.lambda = 0.5;
    k.mu = 2.0;
    return Splitting::constant(fr, k);
}

void check_small(const Section& w, const char* who)
{
    if (sup_norm(w) >= kInjectivityRadius)
        throw InjectivityError(std::string(who) + ": section leaves the injectivity radius");
}

QuasiConjugacyOperator calibrated(const MapSpec& f, const MapSpec& h, const Splitting& S, const Grid& grid,
                                  std::optional<int> depth)
{
    auto op = QuasiConjugacyOperator::from_h(f, h, S);
    op.calibrate(grid, depth);
    return op;
}

} // namespace

Section op_beta(const MapSpec& f, const Section& w)
{
    check_small(w, "op_beta");
    auto op = QuasiConjugacyOperator::from_h(f, make_identity(f.dim()), trivial_splitting(f.dim()));
    return sample_op(w, [&](const Field& fw, const TorusPoint& x) { return op.beta(fw, x); });
}

Section op_F(const MapSpec& f, const Section& w)
{
    auto op = QuasiConjugacyOperator::from_h(f, make_identity(f.dim()), trivial_splitting(f.dim()));
    return sample_op(w, [&](const Field& fw, const TorusPoint& x) { return op.F(fw, x); });
}

Section op_eta(const MapSpec& f, const Section& w)
{
    check_small(w, "op_eta");
    auto op = QuasiConjugacyOperator::from_h(f, make_identity(f.dim()), trivial_splitting(f.dim()));
    return sample_op(w, [&](const Field& fw, const TorusPoint& x) { return op.eta(fw, x); });
}

Section op_Jh(const MapSpec& h, const Splitting& S, const Section& w)
{
    auto op = QuasiConjugacyOperator::from_h(make_identity(h.dim()), h, S);
    return sample_op(w, [&](const Field& fw, const TorusPoint& x) { return op.Jh(fw, x); });
}

Section op_thetah(const MapSpec& h, const Splitting& S, const Section& w)
{
    if (c0_distance(h, make_identity(h.dim()), 32) + sup_norm(w) >= kInjectivityRadius)
        throw InjectivityError("op_thetah: displacement plus section leaves the injectivity radius");
    auto op = QuasiConjugacyOperator::from_h(make_identity(h.dim()), h, S);
    return sample_op(w, [&](const Field& fw, const TorusPoint& x) { return op.theta(fw, x); });
}

Section op_Ph(const MapSpec& f, const MapSpec& h, const Splitting& S, const Section& w)
{
    auto op = QuasiConjugacyOperator::from_h(f, h, S);
    return sample_op(w, [&](const Field& fw, const TorusPoint& x) { return op.Ph(fw, x); });
}

Section op_Ph_inverse(const MapSpec& f, const MapSpec& h, const Splitting& S, const Section& w,
                      std::optional<int> depth)
{
    return calibrated(f, h, S, w.grid(), depth).apply_Ph_inv(w);
}

Section op_Phi(const MapSpec& f, const MapSpec& h, const Splitting& S, const Section& omega, std::optional<int> depth)
{
    return calibrated(f, h, S, omega.grid(), depth).apply_Phi(omega);
}

// Lipschitz measurements

namespace {

// the same unit directions and radii for every eps, so the sweep is monotone
// in the sampled quantities
struct UnitPair {
    Vec a, b;
    double ra, rb;
};

UnitPair unit_pair(const Frame& fr, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int d = static_cast<int>(fr.basis.rows());
    UnitPair p;
    for (Vec* v : {&p.a, &p.b}) {
        do {
            *v = fr.us_part(gaussian(d, rng));
        } while (v->norm() < 1e-8);
        v->normalize();
    }
    p.ra = u(rng);
    p.rb = u(rng);
    return p;
}

} // namespace

double measure_C_eps(const MapSpec& f, const Splitting& S, double eps, int samples, std::uint64_t seed)
{
    // affine maps commute with both charts (the suspension seam is glued by
    // the same matrix), so exp^{-1} f exp is exactly linear
    if (f.affine()) return 0.0;
    std::mt19937_64 rng(seed);
    const Chart& ch = f.chart();
    double best = 0.0;
    for (int i = 0; i < samples; ++i) {
        TorusPoint xm = random_point(f.dim(), rng);
        Frame fr = S.is_constant() ? S.constant_frame() : S.at(xm);
        UnitPair up = unit_pair(fr, rng);
        Vec w = eps * up.ra * up.a, w2 = eps * up.rb * up.b;
        double den = (w2 - w).norm();
        if (den < 1e-12) continue;
        TorusPoint x = f.forward(xm);
        Mat df = f.differential(xm);
        Vec e1 = ch.offset(x, f.forward(ch.advance(xm, w))) - df * w;
        Vec e2 = ch.offset(x, f.forward(ch.advance(xm, w2))) - df * w2;
        best = std::max(best, (e2 - e1).norm() / den);
    }
    return best;
}

double measure_K_h(const MapSpec& h, const Splitting& S, double eps, int samples, std::uint64_t seed)
{
    // flat chart and constant projections: theta_h(w) = exp_x^{-1} h(x) for every w
    if (S.is_constant() && flat(h)) return 0.0;
    std::mt19937_64 rng(seed);
    const Chart& ch = h.chart();
    double best = 0.0;
    for (int i = 0; i < samples; ++i) {
        TorusPoint x = random_point(h.dim(), rng);
        TorusPoint hx = h.forward(x);
        Frame fx = S.is_constant() ? S.constant_frame() : S.at(x);
        Frame fh = S.is_constant() ? S.constant_frame() : S.at(hx);
        UnitPair up = unit_pair(fh, rng);
        Vec w = eps * up.ra * up.a, w2 = eps * up.rb * up.b;
        double den = (w2 - w).norm();
        if (den < 1e-12) continue;
        Mat j = Mat::Zero(h.dim(), h.dim());
        Mat tr = ch.transport(x, hx);
        for (Block b : {Block::s, Block::c, Block::u}) j += proj(fx, b) * tr * proj(fh, b);
        Vec t1 = ch.offset(x, ch.advance(hx, w)) - j * w;
        Vec t2 = ch.offset(x, ch.advance(hx, w2)) - j * w2;
        best = std::max(best, (t2 - t1).norm() / den);
    }
    return best;
}

GuardReport guard_check(const QuasiConjugacyOperator& op, const SolverParams& p, const Grid& grid)
{
    GuardReport g;
    const Splitting& S = op.splitting();
    g.rates = op.rates();
    g.lambda = S.constants().lambda;
    g.L = S.constants().L * p.L_margin;
    g.C_eps = p.safety_factor * measure_C_eps(op.f(), S, p.epsilon, p.lipschitz_samples, p.seed);
    g.K_h = op.variant() == Variant::B
                ? 0.0
                : p.safety_factor * measure_K_h(op.h(), S, p.epsilon, p.lipschitz_samples, p.seed + 1);
    const Chart& ch = op.chart();
    for (std::size_t i : node_sample(grid, 16384)) {
        TorusPoint x = grid.node(i);
        if (op.variant() == Variant::B) {
            Vec off = ch.offset(x, op.f().forward(op.g().inverse(x)));
            g.theta0_us = std::max(g.theta0_us, op.frame(x).us_part(off).norm());
        } else {
            Vec off = ch.offset(x, op.h().forward(x));
            Frame fr = op.frame(x);
            g.theta0_us = std::max(g.theta0_us, fr.us_part(off).norm());
            g.theta0_c = std::max(g.theta0_c, fr.part(Block::c, off).norm());
        }
    }
    g.theta0 = g.theta0_us + g.theta0_c;
    g.gamma = 2.0 * g.rates.j_inv / (1.0 - g.lambda);
    g.rate_bound = 0.5 * (1.0 + g.lambda);
    g.j_bound = std::min(2.0, 0.5 * (1.0 + 1.0 / g.lambda));
    const double k = g.gamma * g.L;
    g.contraction_C = k * g.C_eps < 0.25;
    // P_h is block diagonal with center block -J_h^{-1}, so the center part of
    // theta_h(0) is not amplified by the Neumann series bound
    g.ball = k * g.theta0_us + g.L * g.rates.j * g.rates.j_inv * g.theta0_c < p.epsilon / 4.0;
    g.contraction_K = k * g.K_h < 0.25;
    g.rates_ok = g.rates.q() <= g.rate_bound;
    g.j_ok = std::max(g.rates.j, g.rates.j_inv) <= g.j_bound;
    return g;
}

std::string GuardReport::describe() const
{
    std::string s = "guard: gamma*L = " + std::to_string(gamma * L);
    s += ", C(eps) = " + std::to_string(C_eps) + (contraction_C ? " ok" : " FAIL");
    s += ", |theta_h(0)| = " + std::to_string(theta0) + (ball ? " ok" : " FAIL");
    s += ", K(h) = " + std::to_string(K_h) + (contraction_K ? " ok" : " FAIL");
    s += ", block rate = " + std::to_string(rates.q()) + (rates_ok ? " ok" : " FAIL");
    s += ", |J|, |J^-1| = " + std::to_string(rates.j) + ", " + std::to_string(rates.j_inv) + (j_ok ? " ok" : " FAIL");
    return s;
}

nlohmann::json GuardReport::to_json() const
{
    return {{"lambda", lambda},          {"L_with_margin", L},     {"C_eps", C_eps},
            {"K_h", K_h},                {"theta0_sup", theta0},   {"theta0_us", theta0_us}, {"theta0_c", theta0_c},   {"gamma", gamma},
            {"q_s", rates.q_s},          {"q_u", rates.q_u},       {"J_norm", rates.j},
            {"J_inv_norm", rates.j_inv}, {"rate_bound", rate_bound}, {"J_bound", j_bound},
            {"contraction_C", contraction_C}, {"ball", ball},      {"contraction_K", contraction_K},
            {"rates_ok", rates_ok},      {"J_ok", j_ok},           {"ok", ok()}};
}

} // namespace qc
