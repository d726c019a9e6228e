#include "doctest.h"

#include "flathiggs/correspondence.hpp"
#include "support.hpp"

using namespace fh;
using namespace fh::testing;

namespace {

Connection polystable_constant(const TorusPtr& base, Rng& rng, int r) {
    MatC P;
    return Connection(constant_one_form(base, conjugated_diagonal_family(rng, r, 4, &P, 0.5)));
}

}  // namespace

TEST_CASE("Chern numbers") {
    Rng rng(40);
    SUBCASE("flat connections have none") {
        auto base = surface(8);
        MetricG g = MetricG::with_volume(base, 1.0);
        Connection D = random_flat_lattice(base, rng, 2);
        auto rep = chern_numbers(connection_curvature(D.A), g);
        CHECK(std::abs(rep.c1_sq) < 1e-8);
        CHECK(std::abs(rep.c2) < 1e-8);
    }
    SUBCASE("independent of the metric and of the connection") {
        auto base = surface(8);
        MetricG g = MetricG::with_volume(base, 1.0);
        HiggsOp dpp = random_integrable_lattice(base, rng, 2, 1, 0.05);
        auto a = chern_numbers(curvature_higgs(dpp, random_metric_lattice(base, rng, 2, 1, 0.05)), g);
        auto b = chern_numbers(curvature_higgs(dpp, random_metric_lattice(base, rng, 2, 1, 0.05)), g);
        CHECK(std::abs(a.c1_sq - b.c1_sq) < 1e-7);
        CHECK(std::abs(a.c2 - b.c2) < 1e-7);
        // an arbitrary, non-flat connection on the trivial bundle
        Connection A(smooth_form(base, rng, 1, 2, 2, 1, 0.3));
        auto c = chern_numbers(connection_curvature(A.A), g);
        CHECK(c.curvature_norm > 1e-2);
        CHECK(std::abs(c.c1_sq) < 1e-8);
        CHECK(std::abs(c.c2) < 1e-8);
        CHECK(c.imaginary_residue < 1e-8);
        // and of the base metric
        auto e = chern_numbers(connection_curvature(A.A), smooth_metric(base, rng));
        CHECK(std::abs(e.c2) < 1e-8);
    }
    SUBCASE("line bundles of prescribed degrees") {
        auto base = product_surface(8);
        MetricG g = MetricG::with_volume(base, 1.0);
        for (int d1 = -1; d1 <= 2; ++d1)
            for (int d2 = -1; d2 <= 2; ++d2) {
                auto bg = LineBackground::surface_degrees(d1, d2);
                auto rep = chern_numbers(bg.curvature(base), g);
                // c1 = d1 [E1] + d2 [E2] with [E1]^2 = [E2]^2 = 0 and [E1][E2] = 1
                CHECK(rep.c1_sq == doctest::Approx(2.0 * d1 * d2).epsilon(1e-10));
                CHECK(std::abs(rep.c2) < 1e-10);
            }
    }
    SUBCASE("surfaces only") {
        auto base = curve(8);
        CHECK_THROWS_AS(chern_numbers(FormField::zeros(base, 2, 1, 1, true), MetricG::with_volume(base, 1.0)),
                        BundleError);
    }
}

TEST_CASE("self-duality split") {
    Rng rng(41);
    auto base = surface(8);
    MetricG g = MetricG::with_volume(base, 1.0);
    SUBCASE("zero") {
        auto s = selfduality_split(FormField::zeros(base, 2, 2, 2, true), g, HermitianMetric::identity(base, 2));
        CHECK(s.max() == 0.0);
    }
    SUBCASE("adjoint relations hold for any metric, the star relations need an Einstein metric") {
        auto fine = surface(12);
        MetricG gf = MetricG::with_volume(fine, 1.0);
        Connection D = polystable_constant(fine, rng, 2);
        HermitianMetric h = random_metric_lattice(fine, rng, 2);
        auto s = selfduality_split(pseudocurvature(D, h), gf, h);
        CHECK(s.adjoint_G11 < 1e-6);
        CHECK(s.adjoint_G2 < 1e-6);
        CHECK(rms_norm(s.G11) > 1e-3);
        CHECK(s.star_G11 > 1e-3);
    }
    SUBCASE("Einstein flat configuration") {
        Connection D = polystable_constant(base, rng, 2);
        auto sol = solve_flat_einstein(D, g, random_metric_constant(base, rng, 2));
        REQUIRE(sol.report.converged);
        auto s = selfduality_split(pseudocurvature(D, sol.h), g, sol.h);
        CHECK(s.max() < 1e-6);
    }
    SUBCASE("star on the pieces of a random 2-form") {
        FormField G = smooth_form(base, rng, 2, 2, 2, 1, 0.5);
        // an anti-self-dual (1,1) piece: primitive part of G11
        FormField G11 = G.part(1, 1);
        FormField lam = lambda_contract(G11, g);
        FormField prim = G11 - wedge(cd(0.5) * lam, g.omega());
        CHECK(rms_norm(hodge_star(prim, g) + prim) < 1e-12);
        FormField G2 = G.part(2, 0) + G.part(0, 2);
        CHECK(rms_norm(hodge_star(G2, g) - G2) < 1e-12);
    }
}

TEST_CASE("epsilon family") {
    Rng rng(42);
    auto base = surface(8);
    MetricG g = MetricG::with_volume(base, 1.0);
    SUBCASE("zero Higgs field") {
        Connection D = Connection::trivial(base, 2);
        auto t = epsilon_family_check(D, HermitianMetric::identity(base, 2), g);
        CHECK(t.max_entry() == 0.0);
    }
    SUBCASE("Einstein configuration") {
        Connection D = polystable_constant(base, rng, 2);
        auto sol = solve_flat_einstein(D, g, random_metric_constant(base, rng, 2));
        REQUIRE(sol.report.converged);
        auto t = epsilon_family_check(D, sol.h, g);
        REQUIRE(t.rows.size() == 3);
        CHECK(t.max_entry() < 1e-6);
    }
    SUBCASE("the integral identities do not need flatness or an Einstein metric") {
        // any connection on the trivial bundle: the topological integrals vanish while G_h does not
        Connection D(smooth_form(base, rng, 1, 2, 2, 1, 0.1));
        HermitianMetric h = random_metric_lattice(base, rng, 2, 1, 0.05);
        auto t = epsilon_family_check(D, h, g);
        CHECK(rms_norm(pseudocurvature(D, h)) > 1e-2);
        for (const auto& row : t.rows) {
            CHECK(std::abs(row.trace_F_squared) < 1e-8);
            CHECK(std::abs(row.trace_nabla_fourth) < 1e-8);
            CHECK(row.scaling_residual < 1e-10);
        }
        CHECK(std::abs(t.direct) < 1e-8);
        CHECK(std::abs(t.extrapolated - t.direct) < 1e-6);
    }
}

TEST_CASE("flat to Higgs on a surface") {
    Rng rng(43);
    auto base = surface();
    MetricG g = MetricG::with_volume(base, 1.0);
    SUBCASE("trivial connection") {
        auto out = flat_to_higgs_surface(Connection::trivial(base, 2), g, HermitianMetric::identity(base, 2));
        CHECK(out.max_certificate() == 0.0);
        CHECK(out.higgs.total().max_abs() == 0.0);
    }
    SUBCASE("polystable constant connections") {
        for (int trial = 0; trial < 4; ++trial) {
            Connection D = polystable_constant(base, rng, 1 + trial % 2);
            auto out = flat_to_higgs_surface(D, g, random_metric_constant(base, rng, D.rank()));
            CHECK(out.max_certificate() < 1e-6);
            CHECK(decompose(D, out.h).theta().max_abs() > 1e-3);
        }
    }
    SUBCASE("non-polystable input diverges with a witness") {
        Connection D = random_flat_constant(base, rng, 2, true);
        CorrespondenceOptions opts;
        opts.schedule.max_iters = 1000;
        try {
            flat_to_higgs_surface(D, g, random_metric_constant(base, rng, 2), opts);
            FAIL("expected divergence");
        } catch (const DivergenceError& e) {
            CHECK_FALSE(e.report().converged);
            REQUIRE(e.witness().has_value());
            CHECK(e.witness()->violates_stability);
        }
    }
    SUBCASE("lattice input") {
        auto fine = surface(12);
        MetricG gf = MetricG::with_volume(fine, 1.0);
        Connection D0 = polystable_constant(fine, rng, 2);
        FormField f = smooth_gauge(fine, rng, 2, 1, 0.05);
        auto out = flat_to_higgs_surface(gauge(D0, f), gf, random_metric_lattice(fine, rng, 2, 1, 0.05));
        CHECK(out.max_certificate() < 1e-6);
    }
}

TEST_CASE("Higgs to flat on a surface") {
    Rng rng(44);
    auto base = product_surface();
    MetricG g = MetricG::with_volume(base, 1.0);
    SUBCASE("trivial operator") {
        auto out = higgs_to_flat_surface(HiggsOp::trivial(base, 2), g, HermitianMetric::identity(base, 2));
        CHECK(out.max_certificate() == 0.0);
        CHECK(out.flat.A.max_abs() == 0.0);
    }
    SUBCASE("polystable constant operators") {
        for (int trial = 0; trial < 4; ++trial) {
            HiggsOp dpp = random_integrable_constant(base, rng, 1 + trial % 2);
            auto out = higgs_to_flat_surface(dpp, g, random_metric_constant(base, rng, dpp.rank()));
            CHECK(out.max_certificate() < 1e-6);
        }
    }
    SUBCASE("nonzero Chern numbers are refused") {
        HiggsOp dpp(FormField::zeros(base, 1, 1, 1, true).part(0, 1), FormField::zeros(base, 1, 1, 1, true).part(1, 0),
                    LineBackground::surface_degrees(1, 1));
        CHECK_THROWS_WITH_AS(higgs_to_flat_surface(dpp, g, HermitianMetric::identity(base, 1)),
                             doctest::Contains("Chern"), BundleError);
        // c1^2 = 0 but nonzero degree
        HiggsOp line(FormField::zeros(base, 1, 1, 1, true).part(0, 1),
                     FormField::zeros(base, 1, 1, 1, true).part(1, 0), LineBackground::surface_degrees(1, 0));
        CHECK_THROWS_WITH_AS(higgs_to_flat_surface(line, g, HermitianMetric::identity(base, 1)),
                             doctest::Contains("degree"), BundleError);
    }
}

TEST_CASE("round trips and isomorphism preservation") {
    Rng rng(45);
    auto base = surface();
    MetricG g = MetricG::with_volume(base, 1.0);
    SUBCASE("flat to Higgs to flat returns an isomorphic connection") {
        Connection D = polystable_constant(base, rng, 2);
        auto fwd = flat_to_higgs_surface(D, g, random_metric_constant(base, rng, 2));
        auto back = higgs_to_flat_surface(fwd.higgs, g, random_metric_constant(base, rng, 2));
        auto iso = find_isomorphism(D, back.flat);
        REQUIRE(iso.has_value());
        CHECK(intertwining_residual(D, back.flat, *iso) < 1e-8 * (1.0 + iso->max_abs()));
    }
    SUBCASE("gauge-conjugated input gives outputs related by the same gauge") {
        Connection D = polystable_constant(base, rng, 2);
        HermitianMetric h0 = random_metric_constant(base, rng, 2);
        const FormField f = FormField::constant_matrix(base, random_matrix(rng, 2, 2) + 2.0 * MatC::Identity(2, 2));
        auto a = flat_to_higgs_surface(D, g, h0);
        auto b = flat_to_higgs_surface(gauge(D, f), g, h0.pullback(f));
        // d''_b = f^{-1} d''_a f, i.e. f intertwines b with a
        CHECK(intertwining_residual(b.higgs, a.higgs, f) < 1e-7);
    }
    SUBCASE("intertwiner modes for Higgs operators live on the (0,1) slots") {
        HiggsOp d1 = random_integrable_constant(base, rng, 1);
        // adding the (0,1) part of 2 pi i dx_1 is undone by a Fourier mode in x_1
        FormField shift = FormField::zeros(base, 1, 1, 1, true);
        for (int a = 2; a < 4; ++a)
            shift.mat(0, shift.slot_of(1u << a))(0, 0) = cd(0.0, 2.0 * kPi) * base->complex_from_axes()(a, 0);
        HiggsOp d2(d1.B + shift, d1.theta);
        auto iso = find_isomorphism(d1, d2);
        REQUIRE(iso.has_value());
        CHECK(intertwining_residual(d1, d2, *iso) < 1e-8);
        // the connection rule would also demand the (1,0) slots
        CHECK_FALSE(find_isomorphism(components(d1), components(d2), base).has_value());
    }
}

TEST_CASE("moduli round-trip suite") {
    Rng rng(46);
    auto base = surface();
    MetricG g = MetricG::with_volume(base, 1.0);
    SUBCASE("trivial sample") {
        auto rep = moduli_roundtrip_suite({Connection::trivial(base, 2)}, g);
        CHECK(rep.passed == 1);
    }
    SUBCASE("random polystable samples") {
        std::vector<Connection> samples;
        for (int i = 0; i < 6; ++i) samples.push_back(polystable_constant(base, rng, 1 + i % 2));
        auto rep = moduli_roundtrip_suite(samples, g, 7);
        CHECK(rep.passed == 6);
        for (const auto& s : rep.samples) CHECK(s.error.empty());
    }
    SUBCASE("a failing sample is reported, not thrown") {
        auto rep = moduli_roundtrip_suite({random_flat_constant(base, rng, 2, true)}, g);
        CHECK(rep.passed == 0);
        CHECK_FALSE(rep.samples[0].error.empty());
    }
}
