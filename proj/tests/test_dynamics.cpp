#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "qc/dynamics.hpp"
#include "qc/error.hpp"

using namespace qc;

namespace {
const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;
}

TEST_SUITE("dynamics-catalog")
{
    TEST_CASE("cat map forward and inverse")
    {
        MapSpec f = make_linear_ph(cat_matrix());
        TorusPoint y = f.forward(TorusPoint(Vec{{0.5, 0.5}}));
        CHECK(y[0] == doctest::Approx(0.5));
        CHECK(y[1] == doctest::Approx(0.0));
        CHECK(dist(f.inverse(y), TorusPoint(Vec{{0.5, 0.5}})) < 1e-14);
        CHECK(f.center_dimension() == 0);
        CHECK(f.is_linear());
    }

    TEST_CASE("identity matrix has full center")
    {
        MapSpec f = make_linear_ph(Mat::Identity(3, 3));
        CHECK(f.center_dimension() == 3);
        TorusPoint x(Vec{{0.1, 0.2, 0.3}});
        CHECK(dist(f.forward(x), x) == 0.0);
    }

    TEST_CASE("non-unimodular and non-integer matrices are rejected")
    {
        Mat a(2, 2);
        a << 2, 0, 0, 1;
        CHECK_THROWS_AS(make_linear_ph(a), DomainError);
        a << 2, 1, 1, 1.5;
        CHECK_THROWS_AS(make_linear_ph(a), DomainError);
    }

    TEST_CASE("skew products")
    {
        MapSpec f = make_skew_product(cat_matrix(), TrigFunction::constant(2, 0.0));
        MapSpec g = make_skew_product(cat_matrix(), TrigFunction::constant(2, 0.02));
        CHECK(f.center_dimension() == 1);
        CHECK(c0_distance(f, g) == doctest::Approx(0.02).epsilon(1e-12));
        CHECK(c0_distance(g, f) == doctest::Approx(c0_distance(f, g)));
        CHECK(c0_distance(f, f) == 0.0);
        MapSpec h = make_skew_product(cat_matrix(), TrigFunction::cos_wave(2, 0.02, {1, 0}));
        TorusPoint y = h.forward(TorusPoint(Vec{{0.0, 0.0, 0.0}}));
        CHECK(y[2] == doctest::Approx(0.02));
        Mat id = Mat::Identity(2, 2);
        CHECK_THROWS_AS(make_skew_product(id, TrigFunction::constant(2, 0.0)), DomainError);
    }

    TEST_CASE("perturbed maps")
    {
        MapSpec f = make_linear_ph(cat_matrix());
        VectorField fld({TrigFunction::sin_wave(2, 1.0, {0, 1}), TrigFunction::constant(2, 0.0)});
        MapSpec z = make_perturbed(f, fld, 0.0);
        CHECK(c0_distance(z, f) == 0.0);
        MapSpec g = make_perturbed(f, fld, 0.01);
        CHECK(c0_distance(g, f) <= 0.01 * fld.sup_bound() + 1e-15);
        gen::Rng rng(3);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            TorusPoint x = gen::point(rng, 2);
            worst = std::max(worst, dist(g.inverse(g.forward(x)), x));
        }
        CHECK(worst < 1e-10);
        CHECK_THROWS_AS(make_perturbed(f, fld, 0.6), InjectivityError);
    }

    TEST_CASE("trig function gradient against central differences")
    {
        TrigFunction t(2, {{0.3, {1, 2}, true}, {-0.7, {0, 1}, false}, {0.1, {0, 0}, true}});
        Vec x{{0.17, 0.61}};
        Vec g = t.gradient(x);
        const double h = 1e-6;
        for (int i = 0; i < 2; ++i) {
            Vec e = Vec::Zero(2);
            e[i] = h;
            CHECK(g[i] == doctest::Approx((t.value(x + e) - t.value(x - e)) / (2 * h)).epsilon(1e-7));
        }
        CHECK(t.sup_bound() == doctest::Approx(1.1));
        CHECK_FALSE(t.is_constant());
    }

    TEST_CASE("roof-1 suspension")
    {
        FlowSpec fl = suspension_flow(cat_matrix(), TrigFunction::constant(2, 1.0));
        TorusPoint p(Vec{{0.5, 0.5, 0.3}});
        TorusPoint q = fl.time_map(p, 1.0);
        CHECK(q[0] == doctest::Approx(0.5));
        CHECK(q[1] == doctest::Approx(0.0));
        CHECK(q[2] == doctest::Approx(0.3));
        TorusPoint r = fl.time_map(p, 0.25);
        CHECK(r[2] == doctest::Approx(0.55));
        CHECK(r[0] == doctest::Approx(0.5));
        CHECK(fl.time_map_spec(1.0).affine());
        CHECK_FALSE(fl.time_map_spec(1.02).affine());
        CHECK_THROWS_AS(suspension_flow(cat_matrix(), TrigFunction::constant(2, -1.0)), DomainError);
    }

    TEST_CASE("property: flow composition on suspensions with variable roof")
    {
        gen::Rng rng(5);
        for (int t = 0; t < 200; ++t) {
            Mat a = gen::hyperbolic2(rng);
            TrigFunction roof(2, {{1.0, {0, 0}, true}, {gen::uniform(rng, -0.3, 0.3), {1, 0}, true}});
            FlowSpec fl = suspension_flow(a, roof);
            TorusPoint p = gen::point(rng, 3);
            double s = gen::uniform(rng, -2.0, 2.0), u = gen::uniform(rng, -2.0, 2.0);
            TorusPoint lhs = fl.time_map(fl.time_map(p, s), u);
            TorusPoint rhs = fl.time_map(p, s + u);
            CHECK(fl.chart().distance(lhs, rhs) < 1e-8);
        }
    }

    TEST_CASE("property: forward and inverse are mutually inverse on catalog maps")
    {
        gen::Rng rng(9);
        for (int t = 0; t < 100; ++t) {
            MapSpec f = gen::catalog_map(rng);
            for (int i = 0; i < 10; ++i) {
                TorusPoint x = gen::point(rng, f.dim());
                CHECK(f.chart().distance(f.inverse(f.forward(x)), x) < 1e-9);
            }
        }
    }

    TEST_CASE("property: differential matches central differences")
    {
        gen::Rng rng(13);
        for (int t = 0; t < 60; ++t) {
            MapSpec f = gen::catalog_map(rng);
            TorusPoint x = gen::point(rng, f.dim());
            // keep away from the suspension seam where the differential jumps
            if (f.dim() == 3 && (x[2] < 0.05 || x[2] > 0.95)) continue;
            Mat df = f.differential(x);
            const double h = 1e-6;
            for (int j = 0; j < f.dim(); ++j) {
                Vec e = Vec::Zero(f.dim());
                e[j] = h;
                Vec fd = (f.chart().offset(f.forward(x), f.forward(f.chart().advance(x, e))) -
                          f.chart().offset(f.forward(x), f.forward(f.chart().advance(x, -e)))) /
                         (2 * h);
                CHECK((fd - df.col(j)).norm() < 1e-5 * (1.0 + df.norm()));
            }
        }
    }

    TEST_CASE("catalog lists the four kinds")
    {
        auto c = catalog();
        REQUIRE(c.size() == 4);
        CHECK(c[0].kind == "linear");
        CHECK(c[1].kind == "skew_product");
        CHECK(c[2].kind == "perturbed");
        CHECK(c[3].kind == "suspension_time1");
    }

    TEST_CASE("eigenvalues of the cat map multiply to one")
    {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es{Eigen::Matrix2d(cat_matrix())};
        CHECK(es.eigenvalues()[1] == doctest::Approx(kGolden * kGolden));
        CHECK(es.eigenvalues()[0] * es.eigenvalues()[1] == doctest::Approx(1.0));
    }
}
