#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "qc/torus.hpp"

namespace qc {

// c * trig(2 pi k.x), trig in {sin, cos}; a constant term uses cosine with k = 0
struct TrigTerm {
    double amplitude = 0.0;
    std::vector<int> k;
    bool cosine = true;
};

// Scalar trigonometric polynomial on T^m with analytic gradient.
class TrigFunction {
public:
    TrigFunction() = default;
    explicit TrigFunction(int dim, std::vector<TrigTerm> terms = {});

    static TrigFunction constant(int dim, double c);
    // a*cos(2 pi k.x) / a*sin(2 pi k.x), the fixed expression set of the configs
    static TrigFunction cos_wave(int dim, double a, std::vector<int> k);
    static TrigFunction sin_wave(int dim, double a, std::vector<int> k);

    int dim() const { return dim_; }
    double value(const Vec& x) const;
    Vec gradient(const Vec& x) const;
    double sup_bound() const;      // sum of |amplitudes|
    double gradient_bound() const; // sum of 2 pi |a| |k|
    bool is_constant() const;
    const std::vector<TrigTerm>& terms() const { return terms_; }

private:
    int dim_ = 0;
    std::vector<TrigTerm> terms_;
};

// Smooth vector field on T^d with one TrigFunction per component.
class VectorField {
public:
    VectorField() = default;
    explicit VectorField(std::vector<TrigFunction> components);

    int dim() const { return static_cast<int>(comp_.size()); }
    Vec value(const TorusPoint& x) const;
    Mat jacobian(const TorusPoint& x) const;
    double sup_bound() const;
    double jacobian_bound() const;

private:
    std::vector<TrigFunction> comp_;
};

enum class MapKind { linear, skew_product, perturbed, flow_time, composite };
const char* to_string(MapKind k);

class MapSpec {
public:
    struct Data {
        MapKind kind = MapKind::linear;
        int dim = 0;
        int center_dimension = 0;
        bool is_linear = false;
        bool affine = false; // constant differential
        Mat matrix;          // defining matrix when affine
        std::string name;
        std::shared_ptr<const Chart> chart;
        std::function<TorusPoint(const TorusPoint&)> forward;
        std::function<TorusPoint(const TorusPoint&)> inverse;
        std::function<Mat(const TorusPoint&)> differential;
    };

    MapSpec() = default;
    explicit MapSpec(Data d);

    MapKind kind() const { return d_->kind; }
    int dim() const { return d_->dim; }
    int center_dimension() const { return d_->center_dimension; }
    bool is_linear() const { return d_->is_linear; }
    bool affine() const { return d_->affine; }
    const Mat& matrix() const { return d_->matrix; }
    const std::string& name() const { return d_->name; }
    const Chart& chart() const { return *d_->chart; }
    std::shared_ptr<const Chart> chart_ptr() const { return d_->chart; }

    TorusPoint forward(const TorusPoint& x) const { return d_->forward(x); }
    TorusPoint inverse(const TorusPoint& x) const { return d_->inverse(x); }
    Mat differential(const TorusPoint& x) const { return d_->differential(x); }

    bool valid() const { return d_ != nullptr; }

private:
    std::shared_ptr<const Data> d_;
};

MapSpec make_linear_ph(const Mat& matrix);
MapSpec make_skew_product(const Mat& base, const TrigFunction& fiber_shift);
MapSpec make_perturbed(const MapSpec& f, const VectorField& field, double amplitude);
MapSpec make_identity(int d);
// h = g o f^{-1}, the displacement map of the solver
MapSpec compose_with_inverse(const MapSpec& g, const MapSpec& f);

double c0_distance(const MapSpec& f, const MapSpec& g, int resolution = 0);
double c1_distance(const MapSpec& f, const MapSpec& g, int resolution = 0);

// Unit-speed vertical flow; either the suspension of a hyperbolic base matrix
// (mapping torus chart) or the plain vertical translation flow on T^d.
class FlowSpec {
public:
    struct Data {
        int dim = 3;
        bool suspension = true;
        Mat base;     // 2x2
        Mat base_inv; // 2x2
        TrigFunction roof;
        double roof_const = 1.0;
        bool roof_is_const = true;
        std::shared_ptr<const Chart> chart;
        std::string name;
    };

    FlowSpec() = default;
    explicit FlowSpec(std::shared_ptr<const Data> d) : d_(std::move(d)) {}

    int dim() const { return d_->dim; }
    bool is_suspension() const { return d_->suspension; }
    const Chart& chart() const { return *d_->chart; }
    std::shared_ptr<const Chart> chart_ptr() const { return d_->chart; }
    const std::string& name() const { return d_->name; }
    const Mat& base() const { return d_->base; }

    Vec generator(const TorusPoint& x) const;
    double roof(const TorusPoint& x) const;
    TorusPoint time_map(const TorusPoint& x, double t) const;
    MapSpec time_map_spec(double t) const;

private:
    std::shared_ptr<const Data> d_;
};

FlowSpec suspension_flow(const Mat& base, const TrigFunction& roof);
FlowSpec vertical_flow(int d);

// the mapping-torus chart (x,1) ~ (A x, 0)
std::shared_ptr<const Chart> suspension_chart(const Mat& base);

// Catalog helpers
Mat cat_matrix();
Mat block_diag(const Mat& a, const Mat& b);
Vec integer_power_apply(const Mat& a, const Mat& a_inv, int k, const Vec& x); // wrapped A^k x

struct CatalogEntry {
    std::string kind;
    std::string description;
    std::vector<std::string> parameters;
};
std::vector<CatalogEntry> catalog();

} // namespace qc
