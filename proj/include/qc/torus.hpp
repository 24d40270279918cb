#pragma once

#include <memory>

#include <Eigen/Dense>

namespace qc {

// Small fixed-capacity vectors/matrices; the models live on T^2, T^3 or T^4.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

constexpr double kInjectivityRadius = 0.5;

class TorusPoint {
public:
    TorusPoint() = default;
    // wraps every coordinate into [0,1); throws DomainError on non-finite input
    explicit TorusPoint(const Vec& raw);

    int dim() const { return static_cast<int>(c_.size()); }
    double operator[](int i) const { return c_[i]; }
    const Vec& coords() const { return c_; }

private:
    Vec c_;
};

struct TangentVector {
    TorusPoint base;
    Vec components;

    double norm() const { return components.norm(); }
};

TorusPoint wrap(const Vec& raw);

// shortest representative of q - p, each component in [-1/2, 1/2)
Vec torus_offset(const TorusPoint& p, const TorusPoint& q);
double dist(const TorusPoint& p, const TorusPoint& q);

// unchecked translation x + v (wrapped)
TorusPoint translate(const TorusPoint& x, const Vec& v);

TangentVector exp_inv(const TorusPoint& x, const TorusPoint& y);
TorusPoint exp_map(const TorusPoint& x, const TangentVector& v);

// Local coordinates used by the operators. On the flat torus offset/advance are
// exp^{-1}/exp; the mapping torus of a suspension overrides them so that
// offsets across the identification seam stay short.
class Chart {
public:
    virtual ~Chart() = default;
    virtual Vec offset(const TorusPoint& x, const TorusPoint& y) const;
    virtual TorusPoint advance(const TorusPoint& x, const Vec& v) const;
    double distance(const TorusPoint& x, const TorusPoint& y) const { return offset(x, y).norm(); }
    // coordinates at x of a tangent vector given in coordinates at y, for the
    // lift of y that offset(x, y) uses
    virtual Mat transport(const TorusPoint& x, const TorusPoint& y) const;
    // Other coordinate representatives of x that are close to the fundamental
    // domain boundary; used by spatial hashing. Flat charts have none.
    virtual int alternates(const TorusPoint& x, double margin, TorusPoint* out) const;
};

std::shared_ptr<const Chart> flat_chart();

} // namespace qc
