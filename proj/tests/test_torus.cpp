#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "qc/dynamics.hpp"
#include "qc/error.hpp"
#include "qc/grid.hpp"
#include "qc/torus.hpp"

using namespace qc;

TEST_SUITE("torus-geometry")
{
    TEST_CASE("wrap and offset on the unit torus")
    {
        TorusPoint p(Vec{{1.25, -0.25}});
        CHECK(p[0] == doctest::Approx(0.25));
        CHECK(p[1] == doctest::Approx(0.75));

        TorusPoint a(Vec{{0.95, 0.1}}), b(Vec{{0.05, 0.9}});
        Vec o = torus_offset(a, b);
        CHECK(o[0] == doctest::Approx(0.1));
        CHECK(o[1] == doctest::Approx(-0.2));
        CHECK(dist(a, b) == doctest::Approx(std::sqrt(0.05)));
    }

    TEST_CASE("non-finite coordinates are rejected")
    {
        CHECK_THROWS_AS(TorusPoint(Vec{{NAN, 0.0}}), DomainError);
        CHECK_THROWS_AS(TorusPoint(Vec{{0.0, INFINITY}}), DomainError);
    }

    TEST_CASE("distance examples")
    {
        CHECK(dist(TorusPoint(Vec{{0.9, 0.0}}), TorusPoint(Vec{{0.1, 0.0}})) == doctest::Approx(0.2));
        CHECK(dist(TorusPoint(Vec{{0.0, 0.0}}), TorusPoint(Vec{{0.5, 0.5}})) == doctest::Approx(std::sqrt(0.5)));
        TorusPoint q(Vec{{2.0, 3.0}});
        CHECK(q[0] == 0.0);
        CHECK(q[1] == 0.0);
    }

    TEST_CASE("exp beyond the injectivity radius is rejected")
    {
        TorusPoint x(Vec{{0.5, 0.5}});
        CHECK_THROWS_AS(exp_map(x, TangentVector{x, Vec{{0.7, 0.0}}}), InjectivityError);
        TangentVector z{x, Vec::Zero(2)};
        CHECK(dist(exp_map(x, z), x) == 0.0);
        TorusPoint b(Vec{{0.9, 0.9}});
        TorusPoint y = exp_map(b, TangentVector{b, Vec{{0.2, 0.2}}});
        CHECK(y[0] == doctest::Approx(0.1));
        CHECK(y[1] == doctest::Approx(0.1));
    }

    TEST_CASE("exp and its inverse")
    {
        TorusPoint x(Vec{{0.9, 0.2, 0.5}});
        TangentVector v{x, Vec{{0.2, -0.3, 0.1}}};
        TorusPoint y = exp_map(x, v);
        CHECK(y[0] == doctest::Approx(0.1));
        CHECK(y[1] == doctest::Approx(0.9));
        TangentVector w = exp_inv(x, y);
        CHECK((w.components - v.components).norm() < 1e-14);
    }

    TEST_CASE("grid indexing")
    {
        Grid g({4, 8});
        CHECK(g.size() == 32);
        TorusPoint n = g.node(9);
        CHECK(n[0] == doctest::Approx(0.25));
        CHECK(n[1] == doctest::Approx(0.125));
        auto m = g.multi_index(9);
        CHECK(g.flat_index(m) == 9);
        CHECK(g.flat_index({5, -7, 0, 0}) == g.flat_index({1, 1, 0, 0}));
    }

    TEST_CASE("interpolation stencil weights")
    {
        Grid g = Grid::cube(3, 8);
        std::size_t idx[8];
        double w[8];
        int k = g.stencil(TorusPoint(Vec{{0.3, 0.999, 0.0625}}), idx, w);
        CHECK(k == 8);
        double s = 0.0;
        for (int i = 0; i < k; ++i) s += w[i];
        CHECK(s == doctest::Approx(1.0));
    }

    TEST_CASE("property: flat chart round trip")
    {
        gen::Rng rng(42);
        auto ch = flat_chart();
        for (int t = 0; t < 500; ++t) {
            int d = gen::integer(rng, 2, 4);
            TorusPoint x = gen::point(rng, d);
            Vec v = gen::vec(rng, d, 0.49);
            TorusPoint y = ch->advance(x, v);
            CHECK((ch->offset(x, y) - v).norm() < 1e-12);
            CHECK(dist(x, y) == doctest::Approx(dist(y, x)));
        }
    }

    TEST_CASE("property: offset components lie in [-1/2, 1/2]")
    {
        gen::Rng rng(7);
        for (int t = 0; t < 500; ++t) {
            TorusPoint a = gen::point(rng, 3), b = gen::point(rng, 3);
            Vec o = torus_offset(a, b);
            CHECK(o.cwiseAbs().maxCoeff() <= 0.5);
            CHECK(dist(a, b) <= std::sqrt(3.0) / 2.0 + 1e-15);
        }
    }

    TEST_CASE("property: suspension chart round trip and tangent transport")
    {
        gen::Rng rng(11);
        for (int t = 0; t < 300; ++t) {
            Mat a = gen::hyperbolic2(rng);
            auto ch = suspension_chart(a);
            TorusPoint x = gen::point(rng, 3);
            // short vectors stay in one lift even across the seam
            double r = 0.45 / a.lpNorm<Eigen::Infinity>() / 2.0;
            Vec v = gen::vec(rng, 3, r);
            TorusPoint y = ch->advance(x, v);
            CHECK((ch->offset(x, y) - v).norm() < 1e-10);
            // offset(x, advance(y, w)) = offset(x, y) + T(x, y) w
            Vec w = gen::vec(rng, 3, 1e-3);
            Vec lhs = ch->offset(x, ch->advance(y, w));
            Vec rhs = ch->offset(x, y) + ch->transport(x, y) * w;
            CHECK((lhs - rhs).norm() < 1e-10);
        }
    }

    TEST_CASE("suspension chart: height differences are not wrapped within a level")
    {
        auto ch = suspension_chart(cat_matrix());
        TorusPoint x(Vec{{0.3, 0.4, 0.98}}), y(Vec{{0.31, 0.4, 0.02}});
        // y sits one level up: its base point is seen through A^{-1}
        Vec o = ch->offset(x, y);
        CHECK(o[2] == doctest::Approx(0.04));
        Mat t = ch->transport(x, y);
        CHECK((t.topLeftCorner(2, 2) * cat_matrix() - Mat::Identity(2, 2)).norm() < 1e-14);
    }
}
