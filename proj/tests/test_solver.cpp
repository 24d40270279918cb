#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "qc/error.hpp"
#include "qc/solver.hpp"

using namespace qc;

namespace {
const double kLambda = (3.0 - std::sqrt(5.0)) / 2.0;

MapSpec cat() { return make_linear_ph(cat_matrix()); }
MapSpec product() { return make_skew_product(cat_matrix(), TrigFunction::constant(2, 0.0)); }
MapSpec rotated(double a) { return make_skew_product(cat_matrix(), TrigFunction::constant(2, a)); }
Splitting product_split() { return exact_splitting(product()); }

Section constant(const Grid& g, Vec c)
{
    return sample_section(g, [c](const TorusPoint&) { return c; }, static_cast<int>(c.size()));
}

MapSpec perturbed_cat(double a)
{
    VectorField fld({TrigFunction::sin_wave(2, 1.0, {0, 1}), TrigFunction::constant(2, 0.0)});
    return make_perturbed(cat(), fld, a);
}

SolverParams small(int res, double eps = 0.45)
{
    SolverParams p;
    p.epsilon = eps;
    p.resolution = res;
    p.residual_sample_count = 2000;
    p.lipschitz_samples = 2000;
    return p;
}
} // namespace

TEST_SUITE("quasiconj-solver")
{
    TEST_CASE("beta, F and eta on linear maps")
    {
        Grid g = Grid::cube(2, 8);
        Section b = op_beta(cat(), constant(g, Vec{{0.1, 0.0}}));
        for (std::size_t i = 0; i < g.size(); ++i)
            CHECK((b.value(i) - Vec{{0.2, 0.1}}).norm() < 1e-15);
        CHECK(sup_norm(op_beta(cat(), zero_section(g, 2))) == 0.0);

        gen::Rng rng(3);
        Section w = sample_section(g, [&](const TorusPoint&) { return gen::vec(rng, 2, 0.2); });
        CHECK(sup_norm(op_F(cat(), w) - op_beta(cat(), w)) < 1e-14);
        CHECK(sup_norm(op_eta(cat(), w)) < 1e-14);
        Section direct = sample_section(g, [&](const TorusPoint& x) {
            return Vec(cat_matrix() * w.eval(cat().inverse(x)));
        });
        CHECK(sup_norm(b - op_beta(cat(), constant(g, Vec{{0.1, 0.0}}))) == 0.0);
        CHECK(sup_norm(op_beta(cat(), w) - direct) < 1e-14);

        Grid g3 = Grid::cube(3, 4);
        Section c = op_F(product(), constant(g3, Vec{{0.0, 0.0, 0.03}}));
        CHECK(sup_norm(c - constant(g3, Vec{{0.0, 0.0, 0.03}})) < 1e-15);
    }

    TEST_CASE("eta of the perturbed cat map shrinks with epsilon")
    {
        MapSpec f = perturbed_cat(0.01);
        Splitting S = exact_splitting(cat());
        double c1 = measure_C_eps(f, S, 0.1, 2000);
        double c2 = measure_C_eps(f, S, 0.05, 2000);
        double c3 = measure_C_eps(f, S, 0.025, 2000);
        CHECK(c1 > c2);
        CHECK(c2 > c3);
        CHECK(c3 > 0.0);
        CHECK(measure_C_eps(cat(), S, 0.1, 100) == 0.0);
        CHECK(sup_norm(op_eta(f, zero_section(Grid::cube(2, 8), 2))) < 1e-15);
    }

    TEST_CASE("J_h and theta_h")
    {
        Splitting S = product_split();
        Grid g = Grid::cube(3, 16);
        Section w = sample_section(g, [](const TorusPoint& x) { return Vec{{std::sin(2 * M_PI * x[2]), 0.0, 0.0}}; });
        CHECK(sup_norm(op_Jh(make_identity(3), S, w) - w) < 1e-15);

        // a shift by one grid step keeps h(x) on the nodes, so no interpolation enters
        MapSpec step = compose_with_inverse(rotated(1.0 / 16), product());
        Section j = op_Jh(step, S, w);
        Section expect = sample_section(g, [](const TorusPoint& x) {
            return Vec{{std::sin(2 * M_PI * (x[2] + 1.0 / 16)), 0.0, 0.0}};
        });
        CHECK(sup_norm(j - expect) < 1e-12);

        MapSpec h = compose_with_inverse(rotated(0.02), product());

        Section t0 = op_thetah(h, S, zero_section(g));
        CHECK(sup_norm(t0 - constant(g, Vec{{0.0, 0.0, 0.02}})) < 1e-14);
        gen::Rng rng(5);
        Section r = sample_section(g, [&](const TorusPoint&) { return gen::vec(rng, 3, 0.2); });
        CHECK(sup_norm(op_thetah(h, S, r) - constant(g, Vec{{0.0, 0.0, 0.02}})) < 1e-12);
        CHECK(sup_norm(op_thetah(make_identity(3), S, r)) < 1e-14);
        CHECK(measure_K_h(make_identity(3), S, 0.2, 500) == 0.0);
    }

    TEST_CASE("P_h inverse")
    {
        Splitting S = exact_splitting(cat());
        MapSpec f = cat();
        MapSpec h = make_identity(2);
        Grid g = Grid::cube(2, 8);
        for (int t = 0; t < 20; ++t) {
            Section w = random_section(g, S, 1.0, 100 + t);
            Section inv = op_Ph_inverse(f, h, S, w);
            CHECK(sup_norm(op_Ph(f, h, S, inv) - w) < 1e-10);
        }
        double n = measure_Ph_inverse_norm(f, h, S, g, 100);
        CHECK(n <= 2.0 / (1.0 - kLambda));

        Splitting Sp = product_split();
        Grid g3 = Grid::cube(3, 4);
        Section c = sample_section(g3, [](const TorusPoint& x) { return Vec{{0.0, 0.0, std::cos(2 * M_PI * x[0])}}; });
        CHECK(sup_norm(op_Ph_inverse(product(), make_identity(3), Sp, c) + c) < 1e-14);
    }

    TEST_CASE("Phi at zero for the skew rotation is already the fixed point")
    {
        Splitting S = product_split();
        MapSpec h = compose_with_inverse(rotated(0.02), product());
        Grid g = Grid::cube(3, 8);
        Section p0 = op_Phi(product(), h, S, zero_section(g));
        CHECK(sup_norm(p0 - constant(g, Vec{{0.0, 0.0, 0.02}})) < 1e-14);
        Section p1 = op_Phi(product(), h, S, p0);
        CHECK(sup_norm(p1 - p0) < 1e-14);
        CHECK(sup_norm(op_Phi(cat(), make_identity(2), exact_splitting(cat()), zero_section(Grid::cube(2, 8)))) ==
              0.0);
    }

    TEST_CASE("center-section solves")
    {
        SUBCASE("g = f")
        {
            QuasiConjugacy r = solve_theorem_A(product(), product(), product_split(), small(8));
            CHECK(sup_norm(r.u) == 0.0);
            CHECK(sup_norm(r.v) == 0.0);
            CHECK(r.iterations == 1);
            CHECK(r.residual.grid_sup == 0.0);
            CHECK(r.residual.sup < 1e-15);
        }
        SUBCASE("skew rotation")
        {
            QuasiConjugacy r = solve_theorem_A(product(), rotated(0.02), product_split(), small(8));
            CHECK(sup_norm(r.u - constant(r.u.grid(), Vec{{0.0, 0.0, 0.02}})) < 1e-12);
            CHECK(sup_norm(r.v) < 1e-12);
            CHECK(r.residual.sup < 1e-8);
            CHECK(r.center_leak < 1e-10);
            CHECK(norm1(r.omega(), product_split()) <= 0.45);
            VerifyReport v = verify_quasi_conjugacy(r, small(8));
            CHECK(v.ok());

            QuasiConjugacy bad = r;
            std::vector<double>& raw = bad.v.raw_mut();
            std::vector<double> copy = raw;
            bad.v = Section(r.v.grid(), r.v.components());
            bad.v.raw_mut() = copy;
            bad.v.raw_mut()[0] += 0.05;
            bad.refresh();
            CHECK_FALSE(verify_quasi_conjugacy(bad, small(8)).residual_ok);
        }
        SUBCASE("perturbed cat map is conjugate")
        {
            MapSpec g = perturbed_cat(0.01);
            QuasiConjugacy r = solve_theorem_A(cat(), g, exact_splitting(cat()), small(64, 0.2));
            CHECK(r.residual.sup < 1e-6);
            CHECK(r.surjectivity_ok);
            CHECK(r.distance_to_id <= 0.2);
        }
    }

    TEST_CASE("guard rejects a large perturbation")
    {
        CHECK_THROWS_AS(solve_theorem_A(product(), rotated(0.2), product_split(), small(8)), GuardError);
    }

    TEST_CASE("time-change solves")
    {
        FlowSpec fl = suspension_flow(cat_matrix(), TrigFunction::constant(2, 1.0));
        MapSpec f = fl.time_map_spec(1.0);
        Splitting S = exact_splitting(f);
        QuasiConjugacy same = solve_theorem_Bprime(f, f, fl, S, small(8, 0.2));
        CHECK(sup_norm(same.tau_tilde) == 0.0);
        QuasiConjugacy r = solve_theorem_Bprime(f, fl.time_map_spec(1.02), fl, S, small(8, 0.2));
        CHECK(sup_norm(r.tau_tilde - constant(r.tau_tilde.grid(), Vec{{0.02}})) < 1e-12);
        CHECK(sup_norm(r.v) < 1e-12);
        CHECK(r.residual.sup < 1e-8);

        MapSpec g = make_skew_product(cat_matrix(), TrigFunction::cos_wave(2, 0.02, {1, 0}));
        QuasiConjugacy c = solve_theorem_Bprime(product(), g, vertical_flow(3), product_split(), small(16));
        CHECK(c.residual.sup < 1e-6);
        double lo = 1e9, hi = -1e9;
        for (std::size_t i = 0; i < c.tau_tilde.size(); ++i) {
            lo = std::min(lo, c.tau_tilde.value(i)[0]);
            hi = std::max(hi, c.tau_tilde.value(i)[0]);
        }
        CHECK(hi - lo > 1e-3);
    }

    TEST_CASE("transversal slide solves")
    {
        QuasiConjugacy same = solve_theorem_B_transversal(product(), product(), product_split(), small(8));
        CHECK(sup_norm(same.v) == 0.0);
        QuasiConjugacy r = solve_theorem_B_transversal(product(), rotated(0.02), product_split(), small(8));
        CHECK(sup_norm(r.v) < 1e-12);
        CHECK(std::abs(r.K1 - 1.0) < 1e-10);
        LeafReport lr = verify_leaf_conjugacy(r, product(), rotated(0.02), 50, 500);
        CHECK(lr.max_leaf_deviation < 1e-9);
        CHECK(lr.injectivity_proxy > 0.0);
    }

    TEST_CASE("contraction of Phi")
    {
        ContractionReport lin = empirical_contraction(cat(), compose_with_inverse(perturbed_cat(0.005), cat()),
                                                      exact_splitting(cat()), small(8, 0.1), 50);
        CHECK(lin.lipschitz < 0.5);
        MapSpec f = perturbed_cat(0.01);
        VectorField wave({TrigFunction::constant(2, 0.0), TrigFunction::sin_wave(2, 1.0, {1, 0})});
        MapSpec g = make_perturbed(f, wave, 0.01);
        Splitting S = estimate_splitting(f, EstimateOptions{});
        ContractionReport r = empirical_contraction(f, compose_with_inverse(g, f), S, small(8, 0.1), 50);
        CHECK(r.lipschitz <= 0.5);
        CHECK(r.max_image_norm1 <= 0.75 * 0.1);
    }

    TEST_CASE("neumann depth")
    {
        CHECK(neumann_depth_for(0.5, 1e-12) >= 40);
        CHECK(std::pow(0.5, neumann_depth_for(0.5, 1e-12) + 1) / 0.5 < 1e-12);
        CHECK(neumann_depth_for(0.0) <= 1);
    }

    TEST_CASE("parameter validation")
    {
        SolverParams p;
        p.epsilon = -1;
        CHECK_THROWS_AS(p.validate(), DomainError);
        p.epsilon = 0.6;
        CHECK_THROWS_AS(p.validate(), DomainError);
        p.epsilon = 0.2;
        CHECK_NOTHROW(p.validate());
    }

    TEST_CASE("property: Phi of the skew rotation is independent of the starting section")
    {
        gen::Rng rng(29);
        Splitting S = product_split();
        for (int t = 0; t < 10; ++t) {
            double a = gen::uniform(rng, -0.03, 0.03);
            MapSpec h = compose_with_inverse(rotated(a), product());
            Grid g = Grid::cube(3, 4);
            Section w = random_section(g, S, 0.3, 1000 + t);
            Section p = op_Phi(product(), h, S, w);
            CHECK(sup_norm(p - constant(g, Vec{{0.0, 0.0, a}})) < 1e-12);
        }
    }
}
