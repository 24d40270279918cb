#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "qc/dynamics.hpp"
#include "qc/error.hpp"
#include "qc/splitting.hpp"

using namespace qc;

namespace {
// eigenvalues of [[2,1],[1,1]] and the expanding eigendirection (1, (sqrt5-1)/2)
const double kMu = (3.0 + std::sqrt(5.0)) / 2.0;
const double kLambda = (3.0 - std::sqrt(5.0)) / 2.0;

double angle(const Vec& a, const Vec& b)
{
    double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
    return std::acos(std::min(1.0, c));
}
} // namespace

TEST_SUITE("splitting")
{
    TEST_CASE("exact splitting of the cat map")
    {
        Splitting S = exact_splitting(make_linear_ph(cat_matrix()));
        CHECK(S.ds() == 1);
        CHECK(S.dc() == 0);
        CHECK(S.du() == 1);
        CHECK(S.constants().lambda == doctest::Approx(kLambda).epsilon(1e-12));
        CHECK(S.constants().mu == doctest::Approx(kMu).epsilon(1e-12));
        CHECK(S.constants().lambda * S.constants().mu == doctest::Approx(1.0));
        Vec eu{{1.0, (std::sqrt(5.0) - 1.0) / 2.0}};
        CHECK(angle(S.constant_frame().block_basis(Block::u).col(0), eu) < 1e-12);
    }

    TEST_CASE("A x id has a vertical center")
    {
        MapSpec f = make_skew_product(cat_matrix(), TrigFunction::constant(2, 0.0));
        Splitting S = exact_splitting(f);
        CHECK(S.dc() == 1);
        CHECK(S.constants().lambda_prime == doctest::Approx(1.0));
        CHECK(S.constants().mu_prime == doctest::Approx(1.0));
        Vec c = S.constant_frame().block_basis(Block::c).col(0);
        CHECK(std::abs(c[2]) == doctest::Approx(1.0));
        TorusPoint x(Vec{{0.1, 0.2, 0.3}});
        TangentVector pc = project(S, x, TangentVector{x, Vec{{1.0, 1.0, 1.0}}}, Block::c);
        CHECK((pc.components - Vec{{0.0, 0.0, 1.0}}).norm() < 1e-12);
        double lp = measure_L_pointwise(S, 20000);
        CHECK(lp <= std::sqrt(2.0) + 1e-12);
        CHECK(lp > 1.4);
        // orthogonal blocks: both projections have norm one
        CHECK(S.constants().L == doctest::Approx(2.0));
    }

    TEST_CASE("band edges on an eigenvalue modulus are rejected")
    {
        MapSpec f = make_linear_ph(cat_matrix());
        CHECK_THROWS_AS(exact_splitting(f, kLambda, 2.0), DomainError);
        CHECK_THROWS_AS(exact_splitting(make_perturbed(f, VectorField({TrigFunction::constant(2, 0.0),
                                                                        TrigFunction::constant(2, 0.0)}),
                                                        1e-3)),
                        DomainError);
    }

    TEST_CASE("estimated splitting of the cat map matches the eigenvector")
    {
        MapSpec f = make_linear_ph(cat_matrix());
        EstimateOptions o;
        o.orbit_length = 20;
        o.resolution = 16;
        Splitting S = estimate_splitting(f, o);
        Vec eu{{1.0, (std::sqrt(5.0) - 1.0) / 2.0}};
        for (std::size_t i = 0; i < S.grid().size(); i += 17)
            CHECK(angle(S.node_frame(i).block_basis(Block::u).col(0), eu) < 1e-8);
    }

    TEST_CASE("rotation preserves the splitting of A x id")
    {
        MapSpec g = make_skew_product(cat_matrix(), TrigFunction::constant(2, 0.02));
        EstimateOptions o;
        o.resolution = 8;
        Splitting Se = estimate_splitting(g, o);
        Splitting Sx = exact_splitting(make_skew_product(cat_matrix(), TrigFunction::constant(2, 0.0)));
        for (Block b : {Block::s, Block::c, Block::u})
            for (std::size_t i = 0; i < Se.grid().size(); i += 37)
                CHECK((Se.node_frame(i).projector(b) - Sx.constant_frame().projector(b)).norm() < 1e-8);
    }

    TEST_CASE("perturbed cat: constants and invariance")
    {
        MapSpec f = make_linear_ph(cat_matrix());
        VectorField fld({TrigFunction::sin_wave(2, 1.0, {0, 1}), TrigFunction::constant(2, 0.0)});
        MapSpec g = make_perturbed(f, fld, 0.01);
        EstimateOptions o;
        o.resolution = 32;
        Splitting S = estimate_splitting(g, o);
        CHECK(std::abs(S.constants().lambda - kLambda) < 0.05);
        CHECK(std::abs(S.constants().mu - kMu) < 0.1);
        HyperbolicityReport r = verify_hyperbolicity(g, S, 10, 1e-6, 128);
        CHECK(r.ok());
    }

    TEST_CASE("exact splittings pass the hyperbolicity check")
    {
        MapSpec f = make_linear_ph(cat_matrix());
        HyperbolicityReport r = verify_hyperbolicity(f, exact_splitting(f), 10);
        CHECK(r.ok());
        CHECK(r.worst_margin >= -1e-12);
        MapSpec p = make_skew_product(cat_matrix(), TrigFunction::constant(2, 0.0));
        CHECK(verify_hyperbolicity(p, exact_splitting(p), 10).ok());
    }

    TEST_CASE("property: projections resolve the identity and are idempotent")
    {
        gen::Rng rng(17);
        for (int t = 0; t < 200; ++t) {
            MapSpec f = gen::integer(rng, 0, 1) ? make_linear_ph(gen::hyperbolic2(rng))
                                                : make_skew_product(gen::hyperbolic2(rng),
                                                                    TrigFunction::constant(2, 0.0));
            Splitting S = exact_splitting(f);
            TorusPoint x = gen::point(rng, f.dim());
            TangentVector w{x, gen::vec(rng, f.dim(), 1.0)};
            Vec sum = Vec::Zero(f.dim());
            for (Block b : {Block::s, Block::c, Block::u}) {
                TangentVector p = project(S, x, w, b);
                sum += p.components;
                CHECK((project(S, x, p, b).components - p.components).norm() < 1e-12);
            }
            CHECK((sum - w.components).norm() < 1e-12);
            double n1 = project(S, x, w, Block::c).components.norm() +
                        (w.components - project(S, x, w, Block::c).components).norm();
            CHECK(w.components.norm() <= n1 + 1e-12);
            CHECK(n1 <= S.constants().L * w.components.norm() + 1e-12);
        }
    }

    TEST_CASE("property: the exact splitting is invariant under the differential")
    {
        gen::Rng rng(19);
        for (int t = 0; t < 100; ++t) {
            MapSpec f = make_linear_ph(gen::hyperbolic2(rng));
            Splitting S = exact_splitting(f);
            const Frame& fr = S.constant_frame();
            for (Block b : {Block::s, Block::u}) {
                Vec v = fr.block_basis(b).col(0);
                Vec w = f.matrix() * v;
                CHECK((fr.part(b, w) - w).norm() < 1e-9 * w.norm());
            }
        }
    }
}
