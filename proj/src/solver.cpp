#include "qc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/SVD>

#include "qc/error.hpp"

namespace qc {

namespace {

TorusPoint random_point(int d, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = u(rng);
    return TorusPoint(x);
}

Vec random_unit(int d, std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Vec v(d);
    do {
        for (int i = 0; i < d; ++i) v[i] = n(rng);
    } while (v.norm() < 1e-8);
    return v.normalized();
}

QuasiConjugacy run_iteration(QuasiConjugacyOperator op, const SolverParams& p, const Section* initial)
{
    p.validate();
    const int d = op.f().dim();
    Grid grid = p.grid(d);
    op.calibrate(grid, p.neumann_depth);
    GuardReport guard = guard_check(op, p, grid);
    if (!guard.ok()) throw GuardError(guard.describe());

    const Splitting& S = op.splitting();
    Section omega = initial ? *initial : zero_section(grid);
    if (!(omega.grid() == grid) || omega.components() != d)
        throw DomainError("initial section does not live on the solver grid");
    if (!in_ball1(omega, S, p.epsilon)) throw DomainError("initial section lies outside the |.|_1 ball of radius epsilon");

    QuasiConjugacy r;
    r.variant = op.variant();
    r.guard = guard;
    r.depth = op.depth();
    bool converged = false;
    for (int k = 0; k < p.max_iterations; ++k) {
        Section next = op.apply_Phi(omega);
        double diff = norm1(next - omega, S);
        r.contraction_trace.push_back(diff);
        omega = std::move(next);
        r.iterations = k + 1;
        if (diff < p.fixpoint_tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "fixed-point iteration did not converge in " << p.max_iterations << " steps; trace:";
        for (double t : r.contraction_trace) msg << ' ' << t;
        throw ConvergenceError(msg.str());
    }

    SplitSection parts = split(omega, S);
    r.u = parts.u_part;
    r.v = parts.v_part;
    r.fixed_point_norm = norm1(omega, S);
    r.op = std::make_shared<const QuasiConjugacyOperator>(std::move(op));
    if (r.variant == Variant::Bprime) {
        const auto& opr = *r.op;
        Section tau(grid, 1);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            Vec t(1);
            t[0] = opr.tau_of(r.u.value(i), grid.node(i));
            tau.set(i, t);
        }
        r.tau_tilde = tau;
    }
    r.refresh();
    if (!p.verify) return r;

    VerifyReport rep = verify_quasi_conjugacy(r, p);
    r.residual = rep.residual;
    r.surjectivity_ok = rep.surjectivity_ok;
    r.distance_to_id = rep.distance_to_id;
    r.center_leak = rep.center_leak;
    return r;
}

} // namespace

void SolverParams::validate() const
{
    if (!(epsilon > 0.0 && epsilon < kInjectivityRadius)) throw DomainError("epsilon must lie in (0, 1/2)");
    if (resolution < 0) throw DomainError("resolution must be non-negative");
    if (!(fixpoint_tol > 0.0)) throw DomainError("fixpoint_tol must be positive");
    if (max_iterations < 1) throw DomainError("max_iterations must be positive");
    if (neumann_depth && *neumann_depth < 1) throw DomainError("neumann_depth must be positive");
    if (residual_sample_count < 1) throw DomainError("residual_sample_count must be positive");
    if (!(residual_tol > 0.0)) throw DomainError("residual_tol must be positive");
    if (!(L_margin >= 1.0)) throw DomainError("L_margin must be at least 1");
    if (!(safety_factor >= 1.0)) throw DomainError("safety_factor must be at least 1");
    if (lipschitz_samples < 1) throw DomainError("lipschitz_samples must be positive");
}

Grid SolverParams::grid(int d) const
{
    int n = resolution > 0 ? resolution : d == 2 ? 256 : d == 3 ? 64 : 16;
    return Grid::cube(d, n);
}

void QuasiConjugacy::refresh()
{
    omega_field = (u + v).field();
}

Vec QuasiConjugacy::omega_at(const TorusPoint& x) const { return op->Phi(omega_field, x); }

Vec QuasiConjugacy::v_at(const TorusPoint& x) const { return op->frame(x).us_part(omega_at(x)); }

TorusPoint QuasiConjugacy::pi(const TorusPoint& x) const { return op->chart().advance(x, v_at(x)); }

QuasiConjugacy solve_theorem_A(const MapSpec& f, const MapSpec& g, const Splitting& S, const SolverParams& p,
                               const Section* initial)
{
    return run_iteration(QuasiConjugacyOperator(f, g, S, Variant::A), p, initial);
}

QuasiConjugacy solve_theorem_Bprime(const MapSpec& f, const MapSpec& g, const FlowSpec& flow, const Splitting& S,
                                    const SolverParams& p, const Section* initial)
{
    return run_iteration(QuasiConjugacyOperator(f, g, S, Variant::Bprime, flow), p, initial);
}

QuasiConjugacy solve_theorem_B_transversal(const MapSpec& f, const MapSpec& g, const Splitting& S,
                                           const SolverParams& p, const Section* initial)
{
    QuasiConjugacy r = run_iteration(QuasiConjugacyOperator(f, g, S, Variant::B), p, initial);
    // slide constant: tau2_x(y) = exp_x(Pi^us_x exp_x^{-1} y)
    const Frame& fr = S.constant_frame();
    Mat pus = Mat::Identity(S.dim(), S.dim()) - fr.projector(Block::c);
    r.K1 = Eigen::JacobiSVD<Mat>(pus).singularValues()[0];
    std::mt19937_64 rng(p.seed + 7);
    std::uniform_real_distribution<double> lr(std::log(1e-3), std::log(0.1));
    const Chart& ch = f.chart();
    for (int i = 0; i < 1000; ++i) {
        TorusPoint x = random_point(S.dim(), rng);
        TorusPoint y = ch.advance(x, std::exp(lr(rng)) * random_unit(S.dim(), rng));
        TorusPoint t = ch.advance(x, pus * ch.offset(x, y));
        r.K1_sampled = std::max(r.K1_sampled, ch.distance(t, x) / ch.distance(y, x));
    }
    return r;
}

namespace {

// distance between the two sides of the conjugacy equation at x, given the
// evaluator for omega used at x (stored or extended) and at g(x), f(x)
double residual_at(const QuasiConjugacyOperator& op, const TorusPoint& x, const Vec& wx,
                   const std::function<Vec(const TorusPoint&)>& w)
{
    const Chart& ch = op.chart();
    TorusPoint px = ch.advance(x, op.frame(x).us_part(wx));
    TorusPoint gx = op.g().forward(x);
    TorusPoint pgx = ch.advance(gx, op.frame(gx).us_part(w(gx)));
    TorusPoint fpx = op.f().forward(px);
    TorusPoint target;
    if (op.variant() == Variant::B) {
        target = ch.advance(gx, op.frame(gx).us_part(ch.offset(gx, fpx)));
    } else {
        TorusPoint fx = op.f().forward(x);
        Vec ufx = op.frame(fx).part(Block::c, w(fx));
        if (op.variant() == Variant::Bprime)
            target = op.flow()->time_map(fpx, op.tau_of(ufx, fx));
        else
            target = ch.advance(fx, ufx + ch.offset(fx, fpx));
    }
    return ch.distance(pgx, target);
}

} // namespace

VerifyReport verify_quasi_conjugacy(const QuasiConjugacy& r, const SolverParams& p)
{
    if (!r.op) throw DomainError("verify_quasi_conjugacy: result carries no operator");
    const QuasiConjugacyOperator& op = *r.op;
    VerifyReport rep;
    rep.epsilon = p.epsilon;
    Section omega = r.u + r.v;
    Field interp = omega.field();
    auto nystrom = [&](const TorusPoint& x) { return op.Phi(interp, x); };

    std::mt19937_64 rng(p.seed + 1);
    const int d = op.f().dim();
    double sum = 0.0, isum = 0.0;
    for (int i = 0; i < p.residual_sample_count; ++i) {
        TorusPoint x = random_point(d, rng);
        double e = residual_at(op, x, nystrom(x), nystrom);
        rep.residual.sup = std::max(rep.residual.sup, e);
        sum += e;
        double ie = residual_at(op, x, interp(x), interp);
        rep.residual.interp_sup = std::max(rep.residual.interp_sup, ie);
        isum += ie;
    }
    rep.residual.mean = sum / p.residual_sample_count;
    rep.residual.interp_mean = isum / p.residual_sample_count;

    const Grid& grid = omega.grid();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        TorusPoint x = grid.node(i);
        Vec wx = omega.value(i);
        rep.residual.grid_sup = std::max(rep.residual.grid_sup, residual_at(op, x, wx, nystrom));
        Frame fr = op.frame(x);
        Vec vx = r.v.value(i);
        rep.distance_to_id = std::max(rep.distance_to_id, vx.norm());
        rep.center_leak = std::max(rep.center_leak, fr.part(Block::c, vx).norm());
    }
    rep.residual_ok = rep.residual.sup < p.residual_tol && rep.residual.grid_sup < p.residual_tol;
    // degree argument on the torus: a map within 1/2 of the identity is onto
    rep.surjectivity_ok = rep.distance_to_id < kInjectivityRadius;
    rep.distance_ok = rep.distance_to_id < p.epsilon;
    rep.center_ok = rep.center_leak <= 1e-10;
    return rep;
}

nlohmann::json VerifyReport::to_json() const
{
    return {{"residual_sup", residual.sup},
            {"residual_mean", residual.mean},
            {"residual_grid_sup", residual.grid_sup},
            {"residual_interp_sup", residual.interp_sup},
            {"residual_interp_mean", residual.interp_mean},
            {"distance_to_id", distance_to_id},
            {"center_leak", center_leak},
            {"epsilon", epsilon},
            {"residual_ok", residual_ok},
            {"surjectivity_ok", surjectivity_ok},
            {"distance_ok", distance_ok},
            {"center_ok", center_ok},
            {"ok", ok()}};
}

LeafReport verify_leaf_conjugacy(const QuasiConjugacy& r, const MapSpec& f, const MapSpec& g, int samples, int pairs,
                                 std::uint64_t seed)
{
    const Splitting& S = r.op->splitting();
    if (!S.is_constant() || S.dc() != 1) throw DomainError("verify_leaf_conjugacy: needs a linear one-dimensional center");
    (void)f;
    const Frame& ref = S.constant_frame();
    Mat ec = ref.block_basis(Block::c);
    const Chart& ch = r.op->chart();
    const int d = S.dim();
    auto center_dir = [&](const TorusPoint& y) {
        Frame fr = estimate_frame_at(g, y, S.ds(), S.dc(), S.du(), 40, &ref);
        return Vec(fr.block_basis(Block::c).col(0));
    };

    LeafReport rep;
    std::mt19937_64 rng(seed);
    const double step = 0.02;
    const int steps = 10;
    for (int i = 0; i < samples; ++i) {
        TorusPoint x = random_point(d, rng);
        TorusPoint px = r.pi(x);
        TorusPoint y = x;
        for (int k = 0; k < steps; ++k) {
            Vec k1 = center_dir(y);
            Vec k2 = center_dir(ch.advance(y, 0.5 * step * k1));
            Vec k3 = center_dir(ch.advance(y, 0.5 * step * k2));
            Vec k4 = center_dir(ch.advance(y, step * k3));
            y = ch.advance(y, step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4));
            Vec off = ch.offset(px, r.pi(y));
            Vec perp = off - ec * (ec.transpose() * off);
            rep.max_leaf_deviation = std::max(rep.max_leaf_deviation, perp.norm());
            ++rep.leaf_samples;
        }
    }

    std::uniform_real_distribution<double> lr(std::log(1e-3), std::log(5e-2));
    rep.injectivity_proxy = 1e300;
    for (int i = 0; i < pairs; ++i) {
        TorusPoint x = random_point(d, rng);
        TorusPoint y = ch.advance(x, std::exp(lr(rng)) * random_unit(d, rng));
        double ratio = ch.distance(r.pi(x), r.pi(y)) / ch.distance(x, y);
        rep.injectivity_proxy = std::min(rep.injectivity_proxy, ratio);
    }
    rep.pairs = pairs;
    return rep;
}

nlohmann::json LeafReport::to_json() const
{
    return {{"max_leaf_deviation", max_leaf_deviation},
            {"injectivity_proxy", injectivity_proxy},
            {"leaf_samples", leaf_samples},
            {"pairs", pairs}};
}

Section random_section(const Grid& grid, const Splitting& S, double radius, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Section s(grid);
    auto& raw = s.raw_mut();
    for (double& x : raw) x = n(rng);
    double nn = norm1(s, S);
    if (nn > 0.0) s *= radius / nn;
    return s;
}

ContractionReport empirical_contraction(const MapSpec& f, const MapSpec& h, const Splitting& S,
                                        const SolverParams& p, int n_pairs)
{
    auto op = QuasiConjugacyOperator::from_h(f, h, S);
    Grid grid = p.grid(f.dim());
    op.calibrate(grid, p.neumann_depth);
    OrbitPlan plan = op.plan(grid, false);
    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ContractionReport rep;
    rep.epsilon = p.epsilon;
    rep.pairs = n_pairs;
    for (int i = 0; i < n_pairs; ++i) {
        Section a = random_section(grid, S, p.epsilon * u(rng), rng());
        Section b = random_section(grid, S, p.epsilon * u(rng), rng());
        Section pa = op.apply(plan, a), pb = op.apply(plan, b);
        double den = norm1(a - b, S);
        if (den > 0.0) rep.lipschitz = std::max(rep.lipschitz, norm1(pa - pb, S) / den);
        rep.max_image_norm1 = std::max({rep.max_image_norm1, norm1(pa, S), norm1(pb, S)});
    }
    return rep;
}

double measure_Ph_inverse_norm(const MapSpec& f, const MapSpec& h, const Splitting& S, const Grid& grid, int n,
                               std::uint64_t seed)
{
    auto op = QuasiConjugacyOperator::from_h(f, h, S);
    op.calibrate(grid);
    OrbitPlan plan = op.plan(grid, true);
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
        Section w = random_section(grid, S, 1.0, seed + i);
        best = std::max(best, norm1(op.apply(plan, w), S));
    }
    return best;
}

nlohmann::json to_json(const QuasiConjugacy& r, const SolverParams& p)
{
    nlohmann::json j;
    j["params"] = {{"epsilon", p.epsilon},
                   {"resolution", r.v.grid().resolution()},
                   {"fixpoint_tol", p.fixpoint_tol},
                   {"max_iterations", p.max_iterations},
                   {"neumann_depth", r.depth},
                   {"residual_sample_count", p.residual_sample_count},
                   {"seed", p.seed}};
    j["variant"] = to_string(r.variant);
    j["iterations"] = r.iterations;
    j["contraction_trace"] = r.contraction_trace;
    j["residual"] = {{"sup", r.residual.sup},
                     {"mean", r.residual.mean},
                     {"grid_sup", r.residual.grid_sup},
                     {"interp_sup", r.residual.interp_sup},
                     {"interp_mean", r.residual.interp_mean}};
    j["surjectivity_ok"] = r.surjectivity_ok;
    j["distance_to_id"] = r.distance_to_id;
    j["center_leak"] = r.center_leak;
    j["fixed_point_norm1"] = r.fixed_point_norm;
    j["guard"] = r.guard.to_json();
    const Grid& grid = r.v.grid();
    std::vector<double> umin(grid.dim(), 1e300), umax(grid.dim(), -1e300);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Vec u = r.u.value(i);
        for (int k = 0; k < grid.dim(); ++k) {
            umin[k] = std::min(umin[k], u[k]);
            umax[k] = std::max(umax[k], u[k]);
        }
    }
    j["u_min"] = umin;
    j["u_max"] = umax;
    j["u_sup"] = sup_norm(r.u);
    j["v_sup"] = sup_norm(r.v);
    if (r.variant == Variant::Bprime) {
        double lo = 1e300, hi = -1e300;
        for (double t : r.tau_tilde.raw()) {
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
        j["tau_tilde_min"] = lo;
        j["tau_tilde_max"] = hi;
    }
    if (r.variant == Variant::B) {
        j["K1"] = r.K1;
        j["K1_sampled"] = r.K1_sampled;
    }
    return j;
}

} // namespace qc
