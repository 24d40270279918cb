#pragma once

// Hand-rolled generators for the property tests. Every generator draws from a
// caller-owned engine so a failing case can be replayed from its seed.

#include <random>
#include <vector>

#include "qc/dynamics.hpp"
#include "qc/torus.hpp"

namespace gen {

using Rng = std::mt19937_64;

inline double uniform(Rng& r, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(r); }

inline int integer(Rng& r, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(r); }

inline qc::TorusPoint point(Rng& r, int d)
{
    qc::Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = uniform(r, 0.0, 1.0);
    return qc::TorusPoint(v);
}

inline qc::Vec vec(Rng& r, int d, double radius)
{
    qc::Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = uniform(r, -1.0, 1.0);
    return radius * uniform(r, 0.0, 1.0) * v / std::max(v.norm(), 1e-12);
}

// hyperbolic SL(2, Z) matrix as a product of positive shears, trace > 2
inline qc::Mat hyperbolic2(Rng& r)
{
    qc::Mat m = qc::Mat::Identity(2, 2);
    int steps = integer(r, 2, 4);
    for (int i = 0; i < steps; ++i) {
        qc::Mat s = qc::Mat::Identity(2, 2);
        s(i % 2, (i + 1) % 2) = integer(r, 1, 2);
        m = s * m;
    }
    return m;
}

// wave field with small integer frequencies on T^d
inline qc::VectorField field(Rng& r, int d)
{
    std::vector<qc::TrigFunction> comp;
    for (int i = 0; i < d; ++i) {
        std::vector<int> k(d, 0);
        k[integer(r, 0, d - 1)] = integer(r, 1, 2);
        double a = uniform(r, -1.0, 1.0);
        comp.push_back(integer(r, 0, 1) ? qc::TrigFunction::sin_wave(d, a, k) : qc::TrigFunction::cos_wave(d, a, k));
    }
    return qc::VectorField(comp);
}

// one of the catalog maps with random parameters
inline qc::MapSpec catalog_map(Rng& r)
{
    switch (integer(r, 0, 3)) {
    case 0:
        return qc::make_linear_ph(hyperbolic2(r));
    case 1:
        return qc::make_skew_product(hyperbolic2(r), qc::TrigFunction::cos_wave(2, uniform(r, -0.05, 0.05), {1, 0}));
    case 2:
        return qc::make_perturbed(qc::make_linear_ph(hyperbolic2(r)), field(r, 2), uniform(r, 0.0, 0.01));
    default: {
        auto fl = qc::suspension_flow(hyperbolic2(r), qc::TrigFunction::constant(2, 1.0));
        return fl.time_map_spec(uniform(r, 0.5, 1.5));
    }
    }
}

} // namespace gen
