#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "gen.hpp"
#include "qc/section.hpp"
#include "qc/solver.hpp"
#include "qc/splitting.hpp"

using namespace qc;

namespace {
Splitting product_split()
{
    return exact_splitting(make_skew_product(cat_matrix(), TrigFunction::constant(2, 0.0)));
}
} // namespace

TEST_SUITE("section-space")
{
    TEST_CASE("zero and constant sections")
    {
        Grid g = Grid::cube(3, 8);
        Splitting S = product_split();
        Section z = zero_section(g);
        CHECK(sup_norm(z) == 0.0);
        CHECK(norm1(z, S) == 0.0);
        Vec c{{0.1, -0.2, 0.3}};
        Section s = sample_section(g, [&](const TorusPoint&) { return c; });
        CHECK((s.eval(TorusPoint(Vec{{0.123, 0.456, 0.789}})) - c).norm() < 1e-15);
    }

    TEST_CASE("interpolation: nodes, edge midpoints, second-order error")
    {
        Grid g = Grid::cube(3, 64);
        auto fn = [](const TorusPoint& x) { return Vec{{std::sin(2 * M_PI * x[0]), 0.0, 0.0}}; };
        Section s = sample_section(g, fn);
        CHECK((s.eval(g.node(1234)) - s.value(1234)).norm() == 0.0);
        TorusPoint mid(Vec{{1.5 / 64, 0.0, 0.0}});
        Vec avg = 0.5 * (s.eval(TorusPoint(Vec{{1.0 / 64, 0.0, 0.0}})) + s.eval(TorusPoint(Vec{{2.0 / 64, 0.0, 0.0}})));
        CHECK((s.eval(mid) - avg).norm() < 1e-15);
        gen::Rng rng(2);
        double worst = 0.0;
        for (int i = 0; i < 2000; ++i) {
            TorusPoint x = gen::point(rng, 3);
            worst = std::max(worst, (s.eval(x) - fn(x)).norm());
        }
        CHECK(worst <= std::pow(2 * M_PI / 64, 2));
    }

    TEST_CASE("center-valued sections have norm1 equal to the sup norm")
    {
        Grid g = Grid::cube(3, 8);
        Splitting S = product_split();
        Section s = sample_section(g, [](const TorusPoint& x) { return Vec{{0.0, 0.0, 0.1 * std::cos(2 * M_PI * x[0])}}; });
        CHECK(norm1(s, S) == doctest::Approx(sup_norm(s)));
        SplitSection p = split(sample_section(g, [](const TorusPoint&) { return Vec{{0.0, 0.0, 0.05}}; }), S);
        CHECK(sup_norm(p.v_part) < 1e-15);
        CHECK(sup_norm(p.u_part) == doctest::Approx(0.05));
    }

    TEST_CASE("balls")
    {
        Grid g = Grid::cube(3, 4);
        Splitting S = product_split();
        Section s = sample_section(g, [](const TorusPoint&) { return Vec{{0.1, 0.0, 0.0}}; });
        CHECK(in_ball(s, 0.11));
        CHECK_FALSE(in_ball(s, 0.09));
        CHECK(in_ball_us(s, S, 0.11));
        Section c = sample_section(g, [](const TorusPoint&) { return Vec{{0.0, 0.0, 0.1}}; });
        CHECK_FALSE(in_ball_us(c, S, 0.11));
        CHECK(in_ball1(c, S, 0.11));
    }

    TEST_CASE("binary and JSON round trips")
    {
        Grid g({4, 5, 6});
        gen::Rng rng(4);
        Section s = sample_section(g, [&](const TorusPoint&) { return gen::vec(rng, 3, 1.0); });
        std::string path = "section_roundtrip.bin";
        write_binary(s, path);
        Section r = read_binary(path);
        std::remove(path.c_str());
        CHECK(r.grid() == s.grid());
        CHECK(r.raw() == s.raw());
        Section j = section_from_json(to_json(s));
        CHECK(j.raw() == s.raw());
    }

    TEST_CASE("property: sup <= norm1 <= L sup and split/combine is the identity")
    {
        gen::Rng rng(21);
        Splitting S = product_split();
        Grid g = Grid::cube(3, 6);
        for (int t = 0; t < 100; ++t) {
            Section s = sample_section(g, [&](const TorusPoint&) { return gen::vec(rng, 3, 0.3); });
            double sup = sup_norm(s), n1 = norm1(s, S);
            CHECK(sup <= n1 + 1e-15);
            CHECK(n1 <= S.constants().L * sup + 1e-12);
            Section back = combine(split(s, S));
            CHECK(sup_norm(back - s) < 1e-10);
        }
    }

    TEST_CASE("property: interpolation is linear")
    {
        gen::Rng rng(23);
        Grid g = Grid::cube(2, 10);
        for (int t = 0; t < 50; ++t) {
            Section a = sample_section(g, [&](const TorusPoint&) { return gen::vec(rng, 2, 1.0); });
            Section b = sample_section(g, [&](const TorusPoint&) { return gen::vec(rng, 2, 1.0); });
            double k = gen::uniform(rng, -2.0, 2.0);
            Section c = a + k * b;
            TorusPoint x = gen::point(rng, 2);
            CHECK((c.eval(x) - a.eval(x) - k * b.eval(x)).norm() < 1e-13);
        }
    }

    TEST_CASE("random sections have the requested norm1")
    {
        Splitting S = product_split();
        Section s = random_section(Grid::cube(3, 6), S, 0.1, 42);
        CHECK(norm1(s, S) == doctest::Approx(0.1));
    }
}
