#include "qc/torus.hpp"

#include <cmath>

#include "qc/error.hpp"

namespace qc {

namespace {

inline double wrap1(double a)
{
    double r = a - std::floor(a);
    if (r >= 1.0) r = 0.0; // -1e-17 rounds up to 1.0
    return r;
}

inline double centered(double a) { return a - std::floor(a + 0.5); }

} // namespace

TorusPoint::TorusPoint(const Vec& raw) : c_(raw.size())
{
    for (int i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i])) throw DomainError("wrap: non-finite coordinate");
        c_[i] = wrap1(raw[i]);
    }
}

TorusPoint wrap(const Vec& raw) { return TorusPoint(raw); }

Vec torus_offset(const TorusPoint& p, const TorusPoint& q)
{
    Vec d(p.dim());
    for (int i = 0; i < p.dim(); ++i) d[i] = centered(q[i] - p[i]);
    return d;
}

double dist(const TorusPoint& p, const TorusPoint& q) { return torus_offset(p, q).norm(); }

TorusPoint translate(const TorusPoint& x, const Vec& v) { return TorusPoint(x.coords() + v); }

TangentVector exp_inv(const TorusPoint& x, const TorusPoint& y)
{
    Vec d = torus_offset(x, y);
    if (d.norm() >= kInjectivityRadius) throw InjectivityError("exp_inv: d(x,y) >= 1/2");
    return {x, d};
}

TorusPoint exp_map(const TorusPoint& x, const TangentVector& v)
{
    if (v.base.dim() != x.dim() || torus_offset(x, v.base).norm() > 1e-12)
        throw DomainError("exp_map: vector is not based at x");
    if (v.norm() >= kInjectivityRadius) throw InjectivityError("exp_map: |v| >= 1/2");
    return translate(x, v.components);
}

Vec Chart::offset(const TorusPoint& x, const TorusPoint& y) const { return torus_offset(x, y); }

TorusPoint Chart::advance(const TorusPoint& x, const Vec& v) const { return translate(x, v); }

Mat Chart::transport(const TorusPoint& x, const TorusPoint&) const { return Mat::Identity(x.dim(), x.dim()); }

int Chart::alternates(const TorusPoint&, double, TorusPoint*) const { return 0; }

std::shared_ptr<const Chart> flat_chart()
{
    static const auto chart = std::make_shared<const Chart>();
    return chart;
}

} // namespace qc
