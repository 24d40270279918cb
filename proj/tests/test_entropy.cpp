#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "qc/entropy.hpp"
#include "qc/error.hpp"

using namespace qc;

namespace {
const double kLogMu = 0.9624236501192069; // log((3 + sqrt 5) / 2)

MapSpec cat() { return make_linear_ph(cat_matrix()); }
MapSpec product() { return make_skew_product(cat_matrix(), TrigFunction::constant(2, 0.0)); }
MapSpec rotated(double a) { return make_skew_product(cat_matrix(), TrigFunction::constant(2, a)); }
} // namespace

TEST_SUITE("entropy-foliation")
{
    TEST_CASE("oracle constant")
    {
        CHECK(std::log((3.0 + std::sqrt(5.0)) / 2.0) == doctest::Approx(kLogMu).epsilon(1e-15));
    }

    TEST_CASE("unstable disk growth of the cat map")
    {
        MapSpec f = cat();
        Splitting S = exact_splitting(f);
        // images of a segment under a linear map stay straight, so a coarse cap is exact
        DiskOptions opt;
        opt.segment_cap = 0.18;
        GrowthSeries g = iterate_unstable_disk(f, S, TorusPoint(Vec{{0.3, 0.4}}), 0.1, 15, opt);
        CHECK_FALSE(g.budget_exceeded);
        CHECK(std::abs(g.slope - kLogMu) < 0.01);
        for (std::size_t i = 1; i < g.volumes.size(); ++i) CHECK(g.volumes[i] >= g.volumes[i - 1]);
        CHECK(g.volumes.front() > 0.0);
    }

    TEST_CASE("identity has constant disk volume")
    {
        MapSpec id = make_identity(2);
        Splitting S = exact_splitting(cat());
        GrowthSeries g = iterate_unstable_disk(id, S, TorusPoint(Vec{{0.3, 0.4}}), 0.1, 8);
        for (double v : g.volumes) CHECK(v == doctest::Approx(g.volumes.front()));
        CHECK(std::abs(g.slope) < 1e-12);
    }

    TEST_CASE("rotation in the fiber does not change disk growth")
    {
        Splitting S = exact_splitting(product());
        TorusPoint x(Vec{{0.3, 0.4, 0.5}});
        GrowthSeries a = iterate_unstable_disk(product(), S, x, 0.1, 12);
        GrowthSeries b = iterate_unstable_disk(rotated(0.02), S, x, 0.1, 12);
        CHECK(std::abs(a.slope - b.slope) < 0.005);
        CHECK(std::abs(a.slope - kLogMu) < 0.01);
    }

    TEST_CASE("chi_u on catalog systems")
    {
        for (const MapSpec& f : {cat(), product()}) {
            Splitting S = exact_splitting(f);
            ChiReport c = chi_u(f, S, random_points(f.dim(), 3, 7), 0.05, 12);
            CHECK(std::abs(c.value - kLogMu) < 0.01);
            CHECK(c.spread < 0.005);
        }
    }

    TEST_CASE("Bowen entropy")
    {
        BowenEstimate id = bowen_entropy(make_identity(2), 8, {0.1, 0.07, 0.05}, 4096);
        CHECK(std::abs(id.value) < 1e-12);
        BowenEstimate c = bowen_entropy(cat(), 12, {0.1, 0.07, 0.05}, 1 << 14);
        CHECK(std::abs(c.value - kLogMu) < 0.05);
    }

    TEST_CASE("Thomas brackets")
    {
        ThomasBracket z = thomas_bracket(kLogMu, 0.0, 0.0);
        CHECK(z.low == kLogMu);
        CHECK(z.high == kLogMu);
        CHECK(z.low_single == kLogMu);
        CHECK(z.high_single == kLogMu);
        ThomasBracket c = thomas_bracket(0.9624, 0.02, 0.02);
        CHECK(c.low == doctest::Approx(1.0013).epsilon(1e-4));
        CHECK(c.high == doctest::Approx(1.0013).epsilon(1e-4));
        CHECK(c.low_single == doctest::Approx(0.9817).epsilon(1e-4));
        ThomasBracket w = thomas_bracket(0.9624, -0.02, 0.02);
        CHECK(w.low == doctest::Approx(0.9243).epsilon(1e-4));
        CHECK(w.high == doctest::Approx(1.0013).epsilon(1e-4));
        CHECK(w.squared_contains(0.95));
        CHECK_FALSE(w.squared_contains(1.01));
        CHECK_THROWS_AS(thomas_bracket(0.9, 0.1, -0.1), DomainError);
    }

    TEST_CASE("property: brackets are ordered and contain h_f for tau ranges around zero")
    {
        gen::Rng rng(31);
        for (int t = 0; t < 200; ++t) {
            double h = gen::uniform(rng, 0.0, 3.0);
            double a = gen::uniform(rng, -0.4, 0.0), b = gen::uniform(rng, 0.0, 0.4);
            ThomasBracket br = thomas_bracket(h, a, b);
            CHECK(br.low <= br.low_single + 1e-15);
            CHECK(br.high_single <= br.high + 1e-15);
            CHECK(br.single_contains(h));
            CHECK(br.squared_contains(h));
        }
    }

    TEST_CASE("property: disk volumes are positive and nondecreasing on catalog maps")
    {
        gen::Rng rng(37);
        for (int t = 0; t < 6; ++t) {
            MapSpec f = gen::integer(rng, 0, 1) ? make_linear_ph(gen::hyperbolic2(rng))
                                                : make_skew_product(gen::hyperbolic2(rng),
                                                                    TrigFunction::constant(2, 0.01));
            Splitting S = exact_splitting(f.kind() == MapKind::linear ? f : make_skew_product(f.matrix().topLeftCorner(2, 2), TrigFunction::constant(2, 0.0)));
            GrowthSeries g = iterate_unstable_disk(f, S, gen::point(rng, f.dim()), 0.05, 5);
            CHECK(g.volumes.front() > 0.0);
            for (std::size_t i = 1; i < g.volumes.size(); ++i) CHECK(g.volumes[i] >= g.volumes[i - 1] * (1 - 1e-12));
        }
    }
}
