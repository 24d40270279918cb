#include "qc/foliation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "qc/error.hpp"

namespace qc {

namespace {

Frame frame_at(const Splitting& S, const TorusPoint& x) { return S.is_constant() ? S.constant_frame() : S.at(x); }

Vec unit_random(int d, std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Vec v(d);
    do {
        for (int i = 0; i < d; ++i) v[i] = n(rng);
    } while (v.norm() < 1e-8);
    return v.normalized();
}

std::vector<std::size_t> pick(std::size_t n, int samples, std::mt19937_64& rng)
{
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (static_cast<std::size_t>(samples) < n) {
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(samples);
        std::sort(idx.begin(), idx.end());
    }
    return idx;
}

} // namespace

CenterFoliation center_foliation(const MapSpec& f, const Splitting& S, int orbit_length)
{
    if (S.dc() != 1) throw DomainError("center_foliation: needs a one-dimensional center");
    if (S.dim() != f.dim()) throw DomainError("center_foliation: splitting dimension mismatch");
    CenterFoliation F;
    F.chart = f.chart_ptr();
    if (f.affine() && S.is_constant()) {
        Vec e = S.constant_frame().block_basis(Block::c).col(0).normalized();
        F.constant = true;
        F.direction = [e](const TorusPoint&) { return e; };
        return F;
    }
    const int ds = S.ds(), du = S.du();
    F.direction = [f, S, ds, du, orbit_length](const TorusPoint& y) {
        Frame ref = frame_at(S, y);
        Frame fr = estimate_frame_at(f, y, ds, 1, du, orbit_length, &ref);
        Vec e = fr.block_basis(Block::c).col(0).normalized();
        if (e.dot(ref.block_basis(Block::c).col(0)) < 0.0) e = -e;
        return e;
    };
    return F;
}

TorusPoint slide(const CenterFoliation& F, const TorusPoint& x, double t)
{
    const Chart& ch = *F.chart;
    if (t == 0.0) return x;
    if (F.constant) return ch.advance(x, t * F.direction(x));
    int n = std::max(1, static_cast<int>(std::ceil(std::abs(t) / F.step)));
    double h = t / n;
    TorusPoint y = x;
    for (int i = 0; i < n; ++i) {
        Vec k1 = F.direction(y);
        Vec k2 = F.direction(ch.advance(y, 0.5 * h * k1));
        Vec k3 = F.direction(ch.advance(y, 0.5 * h * k2));
        Vec k4 = F.direction(ch.advance(y, h * k3));
        y = ch.advance(y, (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    return y;
}

Transversal us_plane(const TorusPoint& p, const Frame& frame)
{
    if (frame.dc != 1) throw DomainError("us_plane: needs a one-dimensional center");
    Transversal T;
    T.anchor = p;
    T.normal = frame.block_dual(Block::c).row(0).transpose().normalized();
    T.basis.resize(frame.basis.rows(), frame.ds + frame.du);
    T.basis << frame.block_basis(Block::s), frame.block_basis(Block::u);
    return T;
}

TorusPoint holonomy_map(const HolonomySpec& spec, const TorusPoint& x)
{
    const Chart& ch = *spec.leaves.chart;
    const Transversal& T = spec.target;
    TorusPoint y = x;
    double t = 0.0;
    for (int it = 0; it < 60; ++it) {
        double phi = T.normal.dot(ch.offset(T.anchor, y));
        if (std::abs(phi) < 1e-14) return y;
        double slope = T.normal.dot(spec.leaves.direction(y));
        if (std::abs(slope) < 1e-12) throw DomainError("holonomy_map: leaf tangent to the target transversal");
        double dt = -phi / slope;
        t += dt;
        if (std::abs(t) > spec.max_leaf_distance)
            throw DomainError("holonomy_map: center leaf does not reach the target transversal");
        y = slide(spec.leaves, y, dt);
    }
    throw ConvergenceError("holonomy_map: crossing did not converge");
}

ModulusReport almost_parallel_modulus(const MapSpec& f, const Splitting& S, const std::vector<double>& beta_list,
                                      int sample_budget, const ModulusOptions& opt)
{
    if (beta_list.empty()) throw DomainError("almost_parallel_modulus: empty beta list");
    for (double b : beta_list)
        if (!(b > 0.0 && b < 0.25)) throw DomainError("almost_parallel_modulus: beta must lie in (0, 1/4)");
    if (opt.transversal_pairs < 1 || sample_budget < 1) throw DomainError("almost_parallel_modulus: empty budget");
    CenterFoliation F = center_foliation(f, S);
    const Chart& ch = *F.chart;
    const int d = f.dim();
    const int per = std::max(1, sample_budget / (opt.transversal_pairs * static_cast<int>(beta_list.size())));

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ModulusReport rep;
    for (double b : beta_list) rep.rows.push_back({b, 0.0, 0});
    for (int tp = 0; tp < opt.transversal_pairs; ++tp) {
        Vec a(d);
        for (int i = 0; i < d; ++i) a[i] = u(rng);
        TorusPoint p1(a);
        double h = opt.max_height * (0.1 + 0.9 * u(rng)) * (u(rng) < 0.5 ? -1.0 : 1.0);
        TorusPoint p2 = slide(F, p1, h);
        HolonomySpec spec{us_plane(p1, frame_at(S, p1)), us_plane(p2, frame_at(S, p2)), F};
        const Mat& B = spec.source.basis;
        for (auto& row : rep.rows) {
            for (int k = 0; k < per; ++k) {
                Vec c = unit_random(static_cast<int>(B.cols()), rng) * (opt.patch * u(rng));
                TorusPoint x = ch.advance(p1, B * c);
                Vec w = B * unit_random(static_cast<int>(B.cols()), rng);
                TorusPoint y = ch.advance(x, row.beta * w.normalized());
                double dist = ch.distance(holonomy_map(spec, x), holonomy_map(spec, y));
                row.alpha = std::max(row.alpha, dist);
                ++row.pairs;
            }
        }
    }
    std::vector<ModulusRow> sorted = rep.rows;
    std::sort(sorted.begin(), sorted.end(), [](const ModulusRow& l, const ModulusRow& r) { return l.beta < r.beta; });
    bool monotone = true;
    for (std::size_t i = 1; i < sorted.size(); ++i) monotone = monotone && sorted[i].alpha >= sorted[i - 1].alpha;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : sorted) {
        rep.lipschitz_factor = std::max(rep.lipschitz_factor, r.alpha / r.beta);
        double x = std::log(r.beta), y = std::log(std::max(r.alpha, 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(sorted.size());
    double den = n * sxx - sx * sx;
    rep.exponent = den > 0.0 ? (n * sxy - sx * sy) / den : 0.0;
    // alpha ~ beta^p with p bounded away from zero extrapolates to alpha -> 0
    rep.equicontinuous = sorted.size() >= 2 && monotone && rep.exponent >= 0.5;
    return rep;
}

nlohmann::json ModulusReport::to_json() const
{
    nlohmann::json r = nlohmann::json::array();
    for (const auto& row : rows) r.push_back({{"beta", row.beta}, {"alpha", row.alpha}, {"pairs", row.pairs}});
    return {{"rows", r},
            {"lipschitz_factor", lipschitz_factor},
            {"exponent", exponent},
            {"equicontinuous", equicontinuous}};
}

VolumeComparisonReport volume_comparison_check(const Mesh& W, const Mesh& W_prime, const PointMap& psi, double alpha,
                                               double beta, const Mesh* W_star, const VolumeComparisonOptions& opt)
{
    if (W.k != W_prime.k || (W_star && W_star->k != W.k)) throw DomainError("volume_comparison_check: dimension mismatch");
    if (!(alpha > 0.0 && alpha < 0.25 && beta > 0.0 && beta < 0.25))
        throw DomainError("volume_comparison_check: alpha and beta must lie in (0, 1/4)");
    if (W.pts.empty() || W_prime.pts.empty()) throw DomainError("volume_comparison_check: empty manifold");
    const Chart& ch = *W.chart;
    std::mt19937_64 rng(opt.seed);
    VolumeComparisonReport rep;
    rep.k = W.k;
    rep.alpha = alpha;
    rep.beta = beta;
    rep.vol_W = W.volume();
    rep.vol_W_prime = W_prime.volume();
    const double ak = std::pow(alpha, W.k), bk = std::pow(beta, W.k);

    auto sw = pick(W.pts.size(), opt.samples, rng);
    auto swp = pick(W_prime.pts.size(), opt.samples, rng);
    rep.C_lower = std::numeric_limits<double>::infinity();
    for (std::size_t i : swp) rep.C_upper = std::max(rep.C_upper, W_prime.ball_volume(W_prime.pts[i], alpha) / ak);
    for (std::size_t i : sw) rep.C_lower = std::min(rep.C_lower, W.ball_volume(W.pts[i], beta) / bk);
    rep.condition_a = rep.C_lower > 0.0 && std::isfinite(rep.C_upper);
    rep.C = rep.condition_a ? rep.C_upper * std::pow(2.0 * alpha, W.k) / (rep.C_lower * bk)
                            : std::numeric_limits<double>::infinity();

    Mesh image = W;
    for (auto& p : image.pts) p = psi(p);

    rep.injective = true;
    for (std::size_t a = 0; a < sw.size() && rep.injective; ++a)
        for (std::size_t b = a + 1; b < sw.size(); ++b) {
            if (ch.distance(W.pts[sw[a]], W.pts[sw[b]]) <= 1e-9) continue;
            if (ch.distance(image.pts[sw[a]], image.pts[sw[b]]) <= 1e-12) {
                rep.injective = false;
                break;
            }
        }

    rep.covers = true;
    for (std::size_t i : swp)
        if (image.distance_to(W_prime.pts[i]) > opt.cover_tol) {
            rep.covers = false;
            break;
        }

    for (std::size_t i : sw) {
        const TorusPoint& py = image.pts[i];
        if (W_prime.distance_to(py) > opt.membership_tol) continue;
        ++rep.b_checked;
        for (std::size_t z = 0; z < W.pts.size(); ++z) {
            if (ch.distance(W.pts[z], W.pts[i]) >= beta) continue;
            bool ok = ch.distance(image.pts[z], py) < alpha;
            if (ok && W_star) ok = W_star->distance_to(image.pts[z]) <= opt.membership_tol;
            if (!ok) {
                ++rep.b_violations;
                break;
            }
        }
    }
    rep.condition_b = rep.b_checked > 0 && rep.b_violations == 0;
    rep.inequality = rep.hypotheses_met() && rep.vol_W_prime <= rep.C * rep.vol_W;
    return rep;
}

nlohmann::json VolumeComparisonReport::to_json() const
{
    return {{"k", k},
            {"alpha", alpha},
            {"beta", beta},
            {"C_upper", C_upper},
            {"C_lower", C_lower},
            {"C", C},
            {"vol_W", vol_W},
            {"vol_W_prime", vol_W_prime},
            {"injective", injective},
            {"covers", covers},
            {"condition_a", condition_a},
            {"condition_b", condition_b},
            {"b_checked", b_checked},
            {"b_violations", b_violations},
            {"hypotheses_met", hypotheses_met()},
            {"inequality", inequality},
            {"passed", passed()}};
}

DiskTriple unstable_disk_triple(const MapSpec& f, const Splitting& Sf, const MapSpec& g, const Splitting& Sg,
                                         const PointMap& pi, const TorusPoint& x, double r, double r_prime,
                                         double r_star, int n, const DiskOptions& disk)
{
    if (!f.affine() || !Sf.is_constant()) throw DomainError("unstable_disk_triple: f must be affine with a constant splitting");
    if (Sf.du() != 1) throw DomainError("unstable_disk_triple: needs a one-dimensional unstable bundle");
    if (!(r_prime < r && r < r_star)) throw DomainError("unstable_disk_triple: needs r' < r < r*");
    TorusPoint px = pi(x);
    DiskTriple c;
    c.n = n;
    auto image = [&](const MapSpec& m, const Splitting& S, const TorusPoint& p, double rad) {
        auto mesh = unstable_disk_image(m, S, p, rad, n, disk);
        if (!mesh) throw DomainError("unstable_disk_triple: refinement budget exceeded");
        return *mesh;
    };
    c.W = image(g, Sg, x, r);
    c.W_prime = image(f, Sf, px, r_prime);
    c.W_star = image(f, Sf, px, r_star);

    const Frame& fr = Sf.constant_frame();
    Vec eu = fr.block_basis(Block::u).col(0);
    Vec du = fr.block_dual(Block::u).row(0).transpose();
    auto chart = f.chart_ptr();
    // theta_n = f^n o theta o f^{-n}, theta the center slide onto the leaf through pi(x)
    c.psi = [f, pi, px, eu, du, chart, n](const TorusPoint& y) {
        TorusPoint q = pi(y);
        for (int i = 0; i < n; ++i) q = f.inverse(q);
        q = chart->advance(px, du.dot(chart->offset(px, q)) * eu);
        for (int i = 0; i < n; ++i) q = f.forward(q);
        return q;
    };
    return c;
}

} // namespace qc
