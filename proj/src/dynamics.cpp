#include "qc/dynamics.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "qc/error.hpp"
#include "qc/grid.hpp"

namespace qc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Mat integer_inverse(const Mat& a)
{
    Mat inv = a.inverse();
    for (int i = 0; i < inv.rows(); ++i)
        for (int j = 0; j < inv.cols(); ++j) inv(i, j) = std::round(inv(i, j));
    return inv;
}

void require_unimodular(const Mat& a, const char* who)
{
    if (a.rows() != a.cols() || a.rows() < 1 || a.rows() > 4)
        throw DomainError(std::string(who) + ": matrix must be square of size 1..4");
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            if (!std::isfinite(a(i, j)) || a(i, j) != std::round(a(i, j)))
                throw DomainError(std::string(who) + ": matrix entries must be integers");
    double det = a.determinant();
    if (std::abs(std::abs(det) - 1.0) > 1e-9)
        throw DomainError(std::string(who) + ": |det| != 1, not a torus diffeomorphism");
}

int unit_modulus_count(const Mat& a)
{
    Eigen::EigenSolver<Mat> es(a, false);
    int n = 0;
    for (int i = 0; i < a.rows(); ++i)
        if (std::abs(std::abs(es.eigenvalues()[i]) - 1.0) < 1e-9) ++n;
    return n;
}

int default_resolution(int d)
{
    return d == 2 ? 256 : d == 3 ? 64 : 16;
}

// (p, s) ~ (A p, s - 1) for s >= 1
class SuspensionChart : public Chart {
public:
    SuspensionChart(Mat a, Mat a_inv) : a_(std::move(a)), ai_(std::move(a_inv)) {}

    Vec offset(const TorusPoint& x, const TorusPoint& y) const override { return lift(x, y).first; }

    Mat transport(const TorusPoint& x, const TorusPoint& y) const override
    {
        int side = lift(x, y).second;
        Mat t = Mat::Identity(3, 3);
        if (side > 0) t.topLeftCorner(2, 2) = ai_;
        if (side < 0) t.topLeftCorner(2, 2) = a_;
        return t;
    }

    TorusPoint advance(const TorusPoint& x, const Vec& v) const override
    {
        double s = x[2] + v[2];
        int k = static_cast<int>(std::floor(s));
        Vec p(2);
        p << x[0] + v[0], x[1] + v[1];
        p = integer_power_apply(a_, ai_, k, p);
        s -= k;
        if (s >= 1.0) {
            s -= 1.0;
            p = integer_power_apply(a_, ai_, 1, p);
        }
        Vec out(3);
        out << p[0], p[1], s;
        return TorusPoint(out);
    }

    int alternates(const TorusPoint& x, double margin, TorusPoint* out) const override
    {
        Vec p(2);
        p << x[0], x[1];
        int n = 0;
        if (x[2] < margin) {
            Vec b = integer_power_apply(a_, ai_, -1, p);
            out[n++] = TorusPoint(Vec{{b[0], b[1], x[2]}});
        }
        if (x[2] > 1.0 - margin) {
            Vec b = integer_power_apply(a_, ai_, 1, p);
            out[n++] = TorusPoint(Vec{{b[0], b[1], x[2]}});
        }
        return n;
    }

private:
    // offset and the level (0, +1, -1) at which y was seen
    std::pair<Vec, int> lift(const TorusPoint& x, const TorusPoint& y) const
    {
        // same level: the height difference is not wrapped
        Vec best = torus_offset(x, y);
        best[2] = y[2] - x[2];
        double bn = best.squaredNorm();
        int level = 0;
        Vec q(2);
        q << y[0], y[1];
        for (int side : {1, -1}) {
            // side = +1: y seen one level up, (A^{-1} q, s + 1)
            Vec qb = wrap(side > 0 ? Vec(ai_ * q) : Vec(a_ * q)).coords();
            Vec c(3);
            c[0] = qb[0] - x[0];
            c[1] = qb[1] - x[1];
            c[0] -= std::floor(c[0] + 0.5);
            c[1] -= std::floor(c[1] + 0.5);
            c[2] = y[2] + side - x[2];
            double cn = c.squaredNorm();
            if (cn < bn) {
                bn = cn;
                best = c;
                level = side;
            }
        }
        return {best, level};
    }

    Mat a_, ai_;
};

} // namespace

// ---------------------------------------------------------------------------
// TrigFunction / VectorField

TrigFunction::TrigFunction(int dim, std::vector<TrigTerm> terms) : dim_(dim), terms_(std::move(terms))
{
    for (const auto& t : terms_) {
        if (static_cast<int>(t.k.size()) != dim_) throw DomainError("TrigFunction: wave vector size mismatch");
        if (!std::isfinite(t.amplitude)) throw DomainError("TrigFunction: non-finite amplitude");
    }
}

TrigFunction TrigFunction::constant(int dim, double c)
{
    return TrigFunction(dim, {TrigTerm{c, std::vector<int>(dim, 0), true}});
}

TrigFunction TrigFunction::cos_wave(int dim, double a, std::vector<int> k)
{
    return TrigFunction(dim, {TrigTerm{a, std::move(k), true}});
}

TrigFunction TrigFunction::sin_wave(int dim, double a, std::vector<int> k)
{
    return TrigFunction(dim, {TrigTerm{a, std::move(k), false}});
}

double TrigFunction::value(const Vec& x) const
{
    double s = 0.0;
    for (const auto& t : terms_) {
        double ph = 0.0;
        for (int i = 0; i < dim_; ++i) ph += t.k[i] * x[i];
        ph *= kTwoPi;
        s += t.amplitude * (t.cosine ? std::cos(ph) : std::sin(ph));
    }
    return s;
}

Vec TrigFunction::gradient(const Vec& x) const
{
    Vec g = Vec::Zero(dim_);
    for (const auto& t : terms_) {
        double ph = 0.0;
        for (int i = 0; i < dim_; ++i) ph += t.k[i] * x[i];
        ph *= kTwoPi;
        double dv = t.amplitude * kTwoPi * (t.cosine ? -std::sin(ph) : std::cos(ph));
        for (int i = 0; i < dim_; ++i) g[i] += dv * t.k[i];
    }
    return g;
}

double TrigFunction::sup_bound() const
{
    double s = 0.0;
    for (const auto& t : terms_) s += std::abs(t.amplitude);
    return s;
}

double TrigFunction::gradient_bound() const
{
    double s = 0.0;
    for (const auto& t : terms_) {
        double kn = 0.0;
        for (int k : t.k) kn += double(k) * k;
        s += kTwoPi * std::abs(t.amplitude) * std::sqrt(kn);
    }
    return s;
}

bool TrigFunction::is_constant() const
{
    for (const auto& t : terms_) {
        bool zero_k = true;
        for (int k : t.k) zero_k = zero_k && k == 0;
        if (!zero_k && t.amplitude != 0.0) return false;
    }
    return true;
}

VectorField::VectorField(std::vector<TrigFunction> components) : comp_(std::move(components))
{
    for (const auto& c : comp_)
        if (c.dim() != dim()) throw DomainError("VectorField: component dimension mismatch");
}

Vec VectorField::value(const TorusPoint& x) const
{
    Vec v(dim());
    for (int i = 0; i < dim(); ++i) v[i] = comp_[i].value(x.coords());
    return v;
}

Mat VectorField::jacobian(const TorusPoint& x) const
{
    Mat j(dim(), dim());
    for (int i = 0; i < dim(); ++i) j.row(i) = comp_[i].gradient(x.coords()).transpose();
    return j;
}

double VectorField::sup_bound() const
{
    double s = 0.0;
    for (const auto& c : comp_) s += c.sup_bound() * c.sup_bound();
    return std::sqrt(s);
}

double VectorField::jacobian_bound() const
{
    double s = 0.0;
    for (const auto& c : comp_) s += c.gradient_bound() * c.gradient_bound();
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// MapSpec

const char* to_string(MapKind k)
{
    switch (k) {
    case MapKind::linear: return "linear";
    case MapKind::skew_product: return "skew_product";
    case MapKind::perturbed: return "perturbed";
    case MapKind::flow_time: return "flow_time";
    case MapKind::composite: return "composite";
    }
    return "?";
}

MapSpec::MapSpec(Data d)
{
    if (!d.chart) d.chart = flat_chart();
    d_ = std::make_shared<const Data>(std::move(d));
}

Vec integer_power_apply(const Mat& a, const Mat& a_inv, int k, const Vec& x)
{
    Vec p = x;
    const Mat& m = k >= 0 ? a : a_inv;
    for (int i = 0; i < std::abs(k); ++i) p = wrap(m * p).coords();
    if (k == 0) p = wrap(p).coords();
    return p;
}

MapSpec make_linear_ph(const Mat& matrix)
{
    require_unimodular(matrix, "make_linear_ph");
    MapSpec::Data d;
    d.kind = MapKind::linear;
    d.dim = static_cast<int>(matrix.rows());
    d.center_dimension = unit_modulus_count(matrix);
    d.is_linear = true;
    d.affine = true;
    d.matrix = matrix;
    d.name = "linear";
    Mat inv = integer_inverse(matrix);
    d.forward = [matrix](const TorusPoint& x) { return TorusPoint(matrix * x.coords()); };
    d.inverse = [inv](const TorusPoint& x) { return TorusPoint(inv * x.coords()); };
    d.differential = [matrix](const TorusPoint&) { return matrix; };
    return MapSpec(std::move(d));
}

MapSpec make_identity(int dim)
{
    return make_linear_ph(Mat::Identity(dim, dim));
}

MapSpec make_skew_product(const Mat& base, const TrigFunction& fiber_shift)
{
    require_unimodular(base, "make_skew_product");
    if (base.rows() != 2) throw DomainError("make_skew_product: base must be 2x2");
    if (unit_modulus_count(base) > 0) throw DomainError("make_skew_product: base is not hyperbolic");
    {
        Eigen::EigenSolver<Mat> es(base, false);
        for (int i = 0; i < 2; ++i)
            if (std::abs(es.eigenvalues()[i].imag()) > 1e-12)
                throw DomainError("make_skew_product: base is not hyperbolic");
    }
    if (fiber_shift.dim() != 2) throw DomainError("make_skew_product: fiber shift must live on T^2");
    Mat inv = integer_inverse(base);
    MapSpec::Data d;
    d.kind = MapKind::skew_product;
    d.dim = 3;
    d.center_dimension = 1;
    d.affine = fiber_shift.is_constant();
    d.is_linear = d.affine && fiber_shift.sup_bound() == 0.0;
    d.matrix = block_diag(base, Mat::Identity(1, 1));
    d.name = "skew_product";
    d.forward = [base, fiber_shift](const TorusPoint& x) {
        Vec b(2);
        b << x[0], x[1];
        Vec nb = base * b;
        return TorusPoint(Vec{{nb[0], nb[1], x[2] + fiber_shift.value(b)}});
    };
    d.inverse = [inv, fiber_shift](const TorusPoint& y) {
        Vec b(2);
        b << y[0], y[1];
        Vec pb = wrap(inv * b).coords();
        return TorusPoint(Vec{{pb[0], pb[1], y[2] - fiber_shift.value(pb)}});
    };
    d.differential = [base, fiber_shift](const TorusPoint& x) {
        Vec b(2);
        b << x[0], x[1];
        Vec g = fiber_shift.gradient(b);
        Mat m = Mat::Zero(3, 3);
        m.topLeftCorner(2, 2) = base;
        m(2, 0) = g[0];
        m(2, 1) = g[1];
        m(2, 2) = 1.0;
        return m;
    };
    return MapSpec(std::move(d));
}

MapSpec make_perturbed(const MapSpec& f, const VectorField& field, double amplitude)
{
    if (!std::isfinite(amplitude)) throw DomainError("make_perturbed: non-finite amplitude");
    if (field.dim() != f.dim()) throw DomainError("make_perturbed: field dimension mismatch");
    if (std::abs(amplitude) * field.sup_bound() >= kInjectivityRadius)
        throw InjectivityError("make_perturbed: displacement reaches the injectivity radius");
    const int dim = f.dim();

    MapSpec::Data d;
    d.kind = MapKind::perturbed;
    d.dim = dim;
    d.center_dimension = f.center_dimension();
    d.affine = amplitude == 0.0 && f.affine();
    d.is_linear = amplitude == 0.0 && f.is_linear();
    d.matrix = f.matrix();
    d.chart = f.chart_ptr();
    d.name = "perturbed";
    auto chart = f.chart_ptr();
    d.forward = [f, field, amplitude, chart](const TorusPoint& x) {
        TorusPoint fx = f.forward(x);
        return chart->advance(fx, amplitude * field.value(fx));
    };
    d.differential = [f, field, amplitude, dim](const TorusPoint& x) {
        TorusPoint fx = f.forward(x);
        Mat m = Mat::Identity(dim, dim) + amplitude * field.jacobian(fx);
        return Mat(m * f.differential(x));
    };
    d.inverse = [f, field, amplitude, chart, dim](const TorusPoint& y) {
        // invert the displacement z -> exp_z(a field(z)) by damped Newton, then f
        auto disp = [&](const TorusPoint& z) { return chart->advance(z, amplitude * field.value(z)); };
        TorusPoint z = chart->advance(y, -amplitude * field.value(y));
        Vec r = chart->offset(disp(z), y);
        double rn = r.norm();
        for (int it = 0; it < 50 && rn > 1e-15; ++it) {
            Mat j = Mat::Identity(dim, dim) + amplitude * field.jacobian(z);
            Vec step = j.partialPivLu().solve(r);
            double t = 1.0;
            bool improved = false;
            for (int k = 0; k < 12; ++k, t *= 0.5) {
                TorusPoint zn = chart->advance(z, t * step);
                Vec rv = chart->offset(disp(zn), y);
                double n = rv.norm();
                if (n < rn) {
                    z = zn;
                    r = rv;
                    rn = n;
                    improved = true;
                    break;
                }
            }
            if (!improved) break;
        }
        if (rn > 1e-12) throw ConvergenceError("make_perturbed: Newton inverse did not converge");
        return f.inverse(z);
    };

    // Jacobian check on a sample grid
    Grid grid = Grid::cube(dim, dim == 2 ? 64 : dim == 3 ? 16 : 8);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        TorusPoint x = grid.node(i);
        Mat j = Mat::Identity(dim, dim) + amplitude * field.jacobian(f.forward(x));
        if (std::abs(j.determinant()) < 1e-8) throw DomainError("make_perturbed: singular Jacobian on sample grid");
    }
    return MapSpec(std::move(d));
}

MapSpec compose_with_inverse(const MapSpec& g, const MapSpec& f)
{
    if (g.dim() != f.dim()) throw DomainError("compose_with_inverse: dimension mismatch");
    MapSpec::Data d;
    d.kind = MapKind::composite;
    d.dim = f.dim();
    d.center_dimension = f.center_dimension();
    d.affine = f.affine() && g.affine();
    d.is_linear = false;
    d.chart = f.chart_ptr();
    d.name = "h";
    if (d.affine) d.matrix = g.matrix() * f.matrix().inverse();
    d.forward = [f, g](const TorusPoint& x) { return g.forward(f.inverse(x)); };
    d.inverse = [f, g](const TorusPoint& x) { return f.forward(g.inverse(x)); };
    d.differential = [f, g](const TorusPoint& x) {
        TorusPoint y = f.inverse(x);
        return Mat(g.differential(y) * f.differential(y).inverse());
    };
    return MapSpec(std::move(d));
}

double c0_distance(const MapSpec& f, const MapSpec& g, int resolution)
{
    if (f.dim() != g.dim()) throw DomainError("c0_distance: dimension mismatch");
    Grid grid = Grid::cube(f.dim(), resolution > 0 ? resolution : default_resolution(f.dim()));
    double m = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        TorusPoint x = grid.node(i);
        m = std::max(m, f.chart().distance(f.forward(x), g.forward(x)));
    }
    return m;
}

double c1_distance(const MapSpec& f, const MapSpec& g, int resolution)
{
    Grid grid = Grid::cube(f.dim(), resolution > 0 ? resolution : default_resolution(f.dim()));
    double m = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        TorusPoint x = grid.node(i);
        Mat diff = f.differential(x) - g.differential(x);
        Eigen::JacobiSVD<Mat> svd(diff);
        m = std::max(m, svd.singularValues()[0]);
    }
    return c0_distance(f, g, resolution) + m;
}

// ---------------------------------------------------------------------------
// Flows

std::shared_ptr<const Chart> suspension_chart(const Mat& base)
{
    return std::make_shared<const SuspensionChart>(base, integer_inverse(base));
}

FlowSpec suspension_flow(const Mat& base, const TrigFunction& roof)
{
    require_unimodular(base, "suspension_flow");
    if (base.rows() != 2) throw DomainError("suspension_flow: base must be 2x2");
    if (unit_modulus_count(base) > 0) throw DomainError("suspension_flow: base is not hyperbolic");
    if (roof.dim() != 2) throw DomainError("suspension_flow: roof must live on T^2");
    Grid grid = Grid::cube(2, 128);
    double rmin = 1e300;
    for (std::size_t i = 0; i < grid.size(); ++i) rmin = std::min(rmin, roof.value(grid.node(i).coords()));
    if (!(rmin > 0.0)) throw DomainError("suspension_flow: roof must be positive");
    auto d = std::make_shared<FlowSpec::Data>();
    d->dim = 3;
    d->suspension = true;
    d->base = base;
    d->base_inv = integer_inverse(base);
    d->roof = roof;
    d->roof_is_const = roof.is_constant();
    d->roof_const = roof.is_constant() ? roof.value(Vec::Zero(2)) : 0.0;
    d->chart = suspension_chart(base);
    d->name = "suspension";
    return FlowSpec(d);
}

FlowSpec vertical_flow(int dim)
{
    if (dim < 2 || dim > 4) throw DomainError("vertical_flow: dimension must be 2..4");
    auto d = std::make_shared<FlowSpec::Data>();
    d->dim = dim;
    d->suspension = false;
    d->roof = TrigFunction::constant(dim - 1, 1.0);
    d->chart = flat_chart();
    d->name = "vertical";
    return FlowSpec(d);
}

double FlowSpec::roof(const TorusPoint& x) const
{
    if (!d_->suspension || d_->roof_is_const) return d_->suspension ? d_->roof_const : 1.0;
    return d_->roof.value(Vec{{x[0], x[1]}});
}

Vec FlowSpec::generator(const TorusPoint& x) const
{
    Vec u = Vec::Zero(dim());
    u[dim() - 1] = 1.0 / roof(x);
    return u;
}

TorusPoint FlowSpec::time_map(const TorusPoint& x, double t) const
{
    if (!std::isfinite(t)) throw DomainError("time_map: non-finite time");
    const int n = dim();
    if (!d_->suspension) {
        Vec v = Vec::Zero(n);
        v[n - 1] = t;
        return translate(x, v);
    }
    Vec p(2);
    p << x[0], x[1];
    double s = x[2];
    if (d_->roof_is_const) {
        s += t / d_->roof_const;
        int k = static_cast<int>(std::floor(s));
        s -= k;
        if (s >= 1.0) {
            s -= 1.0;
            ++k;
        }
        p = integer_power_apply(d_->base, d_->base_inv, k, p);
        return TorusPoint(Vec{{p[0], p[1], s}});
    }
    // variable roof: walk level by level in normalized height
    double r = d_->roof.value(p);
    if (t >= 0.0) {
        while (t > 0.0) {
            double remaining = (1.0 - s) * r;
            if (t < remaining) {
                s += t / r;
                t = 0.0;
            } else {
                t -= remaining;
                p = integer_power_apply(d_->base, d_->base_inv, 1, p);
                s = 0.0;
                r = d_->roof.value(p);
            }
        }
    } else {
        double tt = -t;
        while (tt > 0.0) {
            double back = s * r;
            if (tt <= back) {
                s -= tt / r;
                tt = 0.0;
            } else {
                tt -= back;
                p = integer_power_apply(d_->base, d_->base_inv, -1, p);
                s = 1.0;
                r = d_->roof.value(p);
            }
        }
        if (s >= 1.0) {
            s = 0.0;
            p = integer_power_apply(d_->base, d_->base_inv, 1, p);
        }
    }
    return TorusPoint(Vec{{p[0], p[1], s}});
}

MapSpec FlowSpec::time_map_spec(double t) const
{
    FlowSpec self = *this;
    MapSpec::Data d;
    d.kind = MapKind::flow_time;
    d.dim = dim();
    d.center_dimension = 1;
    d.chart = d_->chart;
    d.name = "flow_time";
    d.forward = [self, t](const TorusPoint& x) { return self.time_map(x, t); };
    d.inverse = [self, t](const TorusPoint& x) { return self.time_map(x, -t); };
    const int n = dim();
    if (!d_->suspension) {
        d.affine = true;
        d.is_linear = t == 0.0;
        d.matrix = Mat::Identity(n, n);
        d.differential = [n](const TorusPoint&) { return Mat(Mat::Identity(n, n)); };
    } else if (d_->roof_is_const) {
        double c = d_->roof_const;
        Mat a = d_->base, ai = d_->base_inv;
        if (t / c == std::round(t / c)) {
            int k = static_cast<int>(std::round(t / c));
            Mat ak = Mat::Identity(2, 2);
            for (int i = 0; i < std::abs(k); ++i) ak = (k > 0 ? a : ai) * ak;
            d.affine = true;
            d.is_linear = true;
            d.matrix = block_diag(ak, Mat::Identity(1, 1));
        }
        d.differential = [a, ai, t, c](const TorusPoint& x) {
            double s = x[2] + t / c;
            int k = static_cast<int>(std::floor(s));
            if (s - k >= 1.0) ++k;
            Mat ak = Mat::Identity(2, 2);
            for (int i = 0; i < std::abs(k); ++i) ak = (k > 0 ? a : ai) * ak;
            return block_diag(ak, Mat::Identity(1, 1));
        };
    } else {
        auto chart = d_->chart;
        d.differential = [self, t, chart](const TorusPoint& x) {
            const double h = 1e-6;
            TorusPoint fx = self.time_map(x, t);
            Mat m(3, 3);
            for (int j = 0; j < 3; ++j) {
                Vec e = Vec::Zero(3);
                e[j] = h;
                Vec up = chart->offset(fx, self.time_map(chart->advance(x, e), t));
                Vec dn = chart->offset(fx, self.time_map(chart->advance(x, -e), t));
                m.col(j) = (up - dn) / (2 * h);
            }
            return m;
        };
    }
    return MapSpec(std::move(d));
}

// ---------------------------------------------------------------------------
// Catalog

Mat cat_matrix()
{
    Mat a(2, 2);
    a << 2, 1, 1, 1;
    return a;
}

Mat block_diag(const Mat& a, const Mat& b)
{
    Mat m = Mat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    m.topLeftCorner(a.rows(), a.cols()) = a;
    m.bottomRightCorner(b.rows(), b.cols()) = b;
    return m;
}

std::vector<CatalogEntry> catalog()
{
    return {
        {"linear", "hyperbolic or partially hyperbolic automorphism x -> A x of T^d",
         {"matrix (d*d integers, |det| = 1)"}},
        {"skew_product", "(x, s) -> (B x, s + phi(x)) on T^3 over a hyperbolic base",
         {"matrix (2*2 integers)", "fiber = constant | cos-wave | sin-wave", "fiber_amplitude", "fiber_k"}},
        {"perturbed", "x -> exp_{f(x)}(a * field(f(x))) for a linear or skew_product map f",
         {"base_kind = linear | skew_product", "field = cat-shear | stable-wave | skew-shear",
          "field_formula, field_k, field_coef (per-component waves, instead of field)", "amplitude"}},
        {"suspension_time1", "time-t map of the suspension flow of a hyperbolic base",
         {"matrix (2*2 integers)", "roof (constant part, default 1)",
          "roof_formula = constant | cos-wave | sin-wave", "roof_amplitude", "roof_k", "time"}},
    };
}

} // namespace qc
