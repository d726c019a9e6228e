#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "flathiggs/bundle_calculus.hpp"
#include "flathiggs/fixtures.hpp"

using namespace fh;

namespace {

TorusPtr surface(int N = 6) {
    MatC tau(2, 2);
    tau << cd(0.2, 1.0), cd(0.05, 0.1), cd(-0.1, 0.05), cd(0.1, 1.2);
    return LatticeTorus::make(2, N, tau);
}

TorusPtr curve(int N = 32) {
    MatC tau(1, 1);
    tau << cd(0.3, 0.9);
    return LatticeTorus::make(1, N, tau);
}

FormField random_section(const TorusPtr& base, Rng& rng, int r) { return smooth_form(base, rng, 0, r, 1, 1); }

}  // namespace

TEST_CASE("adjoint connection of the trivial connection is trivial") {
    auto base = surface();
    FormField B = adjoint_connection(Connection::trivial(base, 3), HermitianMetric::identity(base, 3));
    CHECK(B.max_abs() == 0.0);
}

TEST_CASE("adjoint connection satisfies its defining identity") {
    Rng rng(21);
    auto base = surface();
    for (int trial = 0; trial < 4; ++trial) {
        const int r = 1 + trial % 3;
        Connection D = random_connection_constant(base, rng, r);
        HermitianMetric h = random_metric_constant(base, rng, r);
        for (int k = 0; k < 5; ++k) {
            FormField s = random_section(base, rng, r);
            FormField t = random_section(base, rng, r);
            CHECK(adjoint_identity_defect(D, h, s, t) < 1e-10);
            CHECK(unitarity_defect(D, h, s, t) < 1e-10);
        }
    }
    // lattice connection and metric
    auto c = curve();
    Connection D = random_flat_lattice(c, rng, 2);
    HermitianMetric h = random_metric_lattice(c, rng, 2);
    FormField s = random_section(c, rng, 2);
    FormField t = random_section(c, rng, 2);
    CHECK(adjoint_identity_defect(D, h, s, t) < 1e-9);
}

TEST_CASE("decomposition of the trivial connection") {
    auto base = surface();
    Decomposition dec = decompose(Connection::trivial(base, 2), HermitianMetric::identity(base, 2));
    CHECK(dec.unitary.max_abs() == 0.0);
    CHECK(dec.selfadjoint.max_abs() == 0.0);
}

TEST_CASE("decomposition reassembles and has the right symmetry") {
    Rng rng(22);
    auto base = surface();
    for (int r = 1; r <= 3; ++r) {
        Connection D = random_connection_constant(base, rng, r);
        HermitianMetric h = random_metric_constant(base, rng, r);
        Decomposition dec = decompose(D, h);
        CHECK(max_difference(dec.unitary + dec.selfadjoint, D.A) < 1e-14);
        CHECK(selfadjointness_defect(dec.selfadjoint, h) < 1e-12);
        // unitary part: h-antiselfadjoint form
        CHECK((dec.unitary + h.adjoint(dec.unitary)).max_abs() < 1e-12);
    }
}

TEST_CASE("flat identities hold in constant mode") {
    Rng rng(23);
    for (int n = 1; n <= 2; ++n) {
        auto base = n == 1 ? LatticeTorus::make(1, 4) : LatticeTorus::make(2, 4);
        for (int trial = 0; trial < 8; ++trial) {
            const int r = 1 + trial % 4;
            Connection D = random_flat_constant(base, rng, r, trial % 2 == 1);
            CHECK(flatness_residual(D) < 1e-10);
            HermitianMetric h = random_metric_constant(base, rng, r);
            CHECK(flat_identities(D, h).max() < 1e-9);
        }
    }
}

TEST_CASE("flat identities hold on the lattice") {
    Rng rng(24);
    auto c = curve();
    Connection D = random_flat_lattice(c, rng, 3);
    CHECK(flatness_residual(D) < 1e-10);
    CHECK(flat_identities(D, random_metric_lattice(c, rng, 3)).max() < 1e-9);
    // surface at modest resolution: discretization-level agreement
    auto base = surface(12);
    Connection Ds = random_flat_lattice(base, rng, 2);
    CHECK(flatness_residual(Ds) < 1e-4);
    CHECK(flat_identities(Ds, random_metric_lattice(base, rng, 2)).max() < 1e-3);
}

TEST_CASE("flat identities fail for a curved connection") {
    Rng rng(25);
    auto base = surface();
    Connection D = random_connection_constant(base, rng, 2);
    HermitianMetric h = random_metric_constant(base, rng, 2);
    CHECK(flatness_residual(D) > 1e-2);
    CHECK(flat_identities(D, h).delta_squared > 1e-3);
}

TEST_CASE("I_h is a bijection with explicit inverse") {
    Rng rng(26);
    auto base = surface();
    for (int trial = 0; trial < 10; ++trial) {
        const int r = 1 + trial % 3;
        Connection D = random_connection_constant(base, rng, r);
        HermitianMetric h = random_metric_constant(base, rng, r);
        Connection back = from_higgs(to_higgs(D, h), h);
        CHECK(max_difference(back.A, D.A) < 1e-12);
        HiggsOp dpp = random_higgs_constant(base, rng, r);
        HiggsOp fwd = to_higgs(from_higgs(dpp, h), h);
        CHECK(max_difference(fwd.B, dpp.B) < 1e-12);
        CHECK(max_difference(fwd.theta, dpp.theta) < 1e-12);
    }
    Connection D = random_flat_lattice(base, rng, 2);
    HermitianMetric h = random_metric_lattice(base, rng, 2);
    CHECK(max_difference(from_higgs(to_higgs(D, h), h).A, D.A) < 1e-10 * (1.0 + D.A.max_abs()));
}

TEST_CASE("trivial connection maps to the trivial Higgs operator") {
    auto base = surface();
    HiggsOp dpp = to_higgs(Connection::trivial(base, 2), HermitianMetric::identity(base, 2));
    CHECK(dpp.B.max_abs() == 0.0);
    CHECK(dpp.theta.max_abs() == 0.0);
    Connection D = from_higgs(HiggsOp::trivial(base, 2), HermitianMetric::identity(base, 2));
    CHECK(D.A.max_abs() == 0.0);
}

TEST_CASE("I_h is unchanged by constant rescaling of h") {
    Rng rng(27);
    auto base = surface();
    Connection D = random_flat_lattice(base, rng, 2);
    HermitianMetric h = random_metric_lattice(base, rng, 2);
    HermitianMetric h2(cd(3.7) * h.H());
    HiggsOp a = to_higgs(D, h);
    HiggsOp b = to_higgs(D, h2);
    CHECK(max_difference(a.B, b.B) < 1e-10);
    CHECK(max_difference(a.theta, b.theta) < 1e-10);
}

TEST_CASE("Higgs identities for integrable operators") {
    Rng rng(28);
    auto base = surface(4);
    for (int r = 1; r <= 3; ++r) {
        HiggsOp dpp = random_integrable_constant(base, rng, r);
        CHECK(integrability_residual(dpp) < 1e-12);
        HermitianMetric h = random_metric_constant(base, rng, r);
        CHECK(higgs_identities(dpp, h).max() < 1e-9);
    }
    auto c = curve();
    HiggsOp dpp = random_integrable_lattice(c, rng, 2);
    HermitianMetric h = random_metric_lattice(c, rng, 2);
    CHECK(integrability_residual(dpp) < 1e-10);
    CHECK(higgs_identities(dpp, h).max() < 1e-9);
    auto fine = surface(12);
    HiggsOp dps = random_integrable_lattice(fine, rng, 2);
    CHECK(higgs_identities(dps, random_metric_lattice(fine, rng, 2)).max() < 1e-3);
}

TEST_CASE("pseudocurvature: trivial input, selfadjointness, duality") {
    Rng rng(29);
    auto base = surface(6);
    CHECK(pseudocurvature(Connection::trivial(base, 2), HermitianMetric::identity(base, 2)).max_abs() == 0.0);
    auto c = curve();
    MetricG g = smooth_metric(c, rng, 1.0, 1, 0.2);
    Connection D = random_flat_lattice(c, rng, 2);
    HermitianMetric h = random_metric_lattice(c, rng, 2);
    FormField K = kI * lambda_contract(pseudocurvature(D, h), g);
    CHECK(selfadjointness_defect(K, h) < 1e-9 * (1.0 + K.max_abs()));
    // pseudocurvature of I_h^{-1}(d'') is (d'')^2
    HiggsOp dpp = random_higgs_constant(base, rng, 2);
    HermitianMetric hc = random_metric_constant(base, rng, 2);
    CHECK(max_difference(pseudocurvature(from_higgs(dpp, hc), hc), higgs_square(dpp)) < 1e-12);
}

TEST_CASE("both curvature formulas agree for integrable Higgs operators") {
    Rng rng(30);
    auto base = surface(4);
    CHECK(curvature_higgs(HiggsOp::trivial(base, 2), HermitianMetric::identity(base, 2)).max_abs() == 0.0);
    for (int r = 1; r <= 3; ++r) {
        HiggsOp dpp = random_integrable_constant(base, rng, r);
        HermitianMetric h = random_metric_constant(base, rng, r);
        CHECK(max_difference(curvature_higgs(dpp, h), curvature_higgs_expanded(dpp, h)) < 1e-9);
    }
    auto c = curve();
    HiggsOp dpp = random_integrable_lattice(c, rng, 2);
    HermitianMetric h = random_metric_lattice(c, rng, 2);
    CHECK(max_difference(curvature_higgs(dpp, h), curvature_higgs_expanded(dpp, h)) < 1e-9);
}

TEST_CASE("conformal change formula") {
    Rng rng(31);
    auto base = curve();
    Connection D = random_flat_lattice(base, rng, 2);
    HermitianMetric h = random_metric_lattice(base, rng, 2);
    SUBCASE("identity leaves I_h unchanged") {
        HiggsOp a = conformal_change_higgs(D, h, FormField::identity(base, 2, true));
        HiggsOp b = to_higgs(D, h);
        CHECK(max_difference(a.B, b.B) < 1e-12);
        CHECK(max_difference(a.theta, b.theta) < 1e-12);
    }
    SUBCASE("random h-selfadjoint positive f matches recomputation") {
        // f = H^{-1} P with P positive Hermitian is h-selfadjoint
        FormField P = smooth_positive_function(base, rng, 2, 1, 0.3);
        FormField f = wedge(h.H_inverse(), P);
        HiggsOp a = conformal_change_higgs(D, h, f);
        HiggsOp b = to_higgs(D, h.conformal(f));
        CHECK(max_difference(a.B, b.B) < 1e-9);
        CHECK(max_difference(a.theta, b.theta) < 1e-9);
    }
    SUBCASE("scalar factor shifts the pseudocurvature by half of dbar d") {
        Connection L = random_flat_lattice(base, rng, 1);
        HermitianMetric hl = random_metric_lattice(base, rng, 1);
        FormField phi = smooth_real_function(base, rng, 2, 0.5);
        FormField ephi = apply_pointwise(phi, [](const MatC& m) -> MatC { return m.array().exp().matrix(); });
        FormField lhs = pseudocurvature(L, hl.conformal(ephi));
        FormField rhs = pseudocurvature(L, hl) - 0.5 * delbar(del(phi));
        CHECK(max_difference(lhs, rhs) < 1e-9);
        FormField quarter = pseudocurvature(L, hl) - 0.25 * delbar(del(phi));
        CHECK(max_difference(lhs, quarter) > 1e-2);
    }
    SUBCASE("non-positive f is rejected") {
        CHECK_THROWS_AS(conformal_change_higgs(D, h, cd(-1.0) * FormField::identity(base, 2, true)), BundleError);
    }
}

TEST_CASE("flatness and integrability residuals") {
    Rng rng(32);
    auto base = surface(6);
    CHECK(flatness_residual(Connection::trivial(base, 2)) == 0.0);
    CHECK(integrability_residual(HiggsOp::trivial(base, 2)) == 0.0);
    // constant A: D^2 = A ^ A = sum_{a<b} [A_a, A_b] e_a ^ e_b
    Connection D = random_connection_constant(base, rng, 2);
    std::vector<MatC> comp;
    for (int a = 0; a < 4; ++a) comp.push_back(D.A.matrix(0, D.A.slot_of(1u << a)));
    double s = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) s += (comp[a] * comp[b] - comp[b] * comp[a]).squaredNorm();
    CHECK(std::abs(flatness_residual(D) - std::sqrt(s)) < 1e-12);
    // a (0,1)-form with dbar B != 0
    FormField B = smooth_form(base, rng, 1, 1, 1, 1).part(0, 1);
    HiggsOp bad(B, FormField::zeros(base, 1, 1, 1, true));
    CHECK(integrability_residual(bad) > 1e-2);
}

TEST_CASE("degree: trivial, metric independence and a Chern-Weil integer") {
    Rng rng(33);
    auto curve = LatticeTorus::make(1, 16);
    MetricG g1 = MetricG::with_volume(curve, 1.0);
    FormField zero = FormField::zeros(curve, 1, 2, 2, true);
    CHECK(std::abs(degree(zero, {}, g1, HermitianMetric::identity(curve, 2))) < 1e-10);

    for (int d = -2; d <= 2; ++d) {
        LineBackground bg = LineBackground::curve_degree(d);
        FormField B = FormField::zeros(curve, 1, 1, 1, true);
        HermitianMetric h = random_metric_lattice(curve, rng, 1);
        CHECK(std::abs(degree(B, bg, g1, h) - d) < 1e-8);
        // the three formulas on the Higgs side agree as well
        HiggsOp dpp(B, FormField::zeros(curve, 1, 1, 1, true), bg);
        CHECK(std::abs(degree_via_curvature(dpp, g1, h) - d) < 1e-8);
    }

    MetricG g = MetricG::euclidean(curve, 0.8);
    HiggsOp dpp = random_integrable_lattice(curve, rng, 2);
    const double d1 = degree_higgs(dpp, g, random_metric_lattice(curve, rng, 2));
    const double d2 = degree_higgs(dpp, g, random_metric_lattice(curve, rng, 2));
    CHECK(std::abs(d1 - d2) < 1e-8);
}

TEST_CASE("degree requires a Gauduchon base metric") {
    auto base = LatticeTorus::make(2, 8);
    FormField gm(base, 0, 2, 2, false);
    for (std::size_t p = 0; p < gm.npts(); ++p) {
        auto x = base->coords(p);
        const cd b = 0.25 * std::exp(kI * (2.0 * kPi * x[0])) + 0.1 * std::sin(2.0 * kPi * x[2]);
        MatC m(2, 2);
        m << 1.0 + 0.2 * std::cos(2.0 * kPi * x[3]), b, std::conj(b), 1.1;
        gm.mat(p, 0) = m;
    }
    MetricG g(gm);
    CHECK_THROWS_AS(degree(FormField::zeros(base, 1, 1, 1, true), {}, g, HermitianMetric::identity(base, 1)),
                    BundleError);
}

TEST_CASE("degree formulas agree and vanish for flat connections on the torus") {
    Rng rng(34);
    auto c = curve();
    MetricG gc = MetricG::with_volume(c, 1.0);
    for (int trial = 0; trial < 2; ++trial) {
        Connection D = random_flat_lattice(c, rng, 2);
        HermitianMetric h = random_metric_lattice(c, rng, 2);
        CHECK(std::abs(degree_flat(D, gc, h)) < 1e-9);
        CHECK(std::abs(degree_via_pseudocurvature(D, gc, h)) < 1e-9);
    }
    auto base = surface(12);
    MetricG g = MetricG::with_volume(base, 1.0);
    DegreeOptions loose;
    loose.residual_tol = 1e-3;
    Connection Dl = random_flat_lattice(base, rng, 2);
    HermitianMetric hl = random_metric_lattice(base, rng, 2);
    CHECK(std::abs(degree_flat(Dl, g, hl, loose)) < 1e-6);
    CHECK(std::abs(degree_via_pseudocurvature(Dl, g, hl, loose)) < 1e-6);
    Connection D = random_flat_constant(base, rng, 3);
    HermitianMetric h = random_metric_constant(base, rng, 3);
    CHECK(std::abs(degree_via_pseudocurvature(D, g, h)) < 1e-10);
    CHECK(std::abs(degree_flat(D, g, h)) < 1e-10);
}

TEST_CASE("degree is additive under direct sums") {
    Rng rng(35);
    auto curve = LatticeTorus::make(1, 16);
    MetricG g = MetricG::with_volume(curve, 2.0);
    LineBackground bg = LineBackground::curve_degree(1);
    HiggsOp a(smooth_form(curve, rng, 1, 1, 1, 1).part(0, 1), FormField::zeros(curve, 1, 1, 1, true), bg);
    HiggsOp b(FormField::zeros(curve, 1, 1, 1, true), FormField::zeros(curve, 1, 1, 1, true), bg);
    HermitianMetric ha = random_metric_lattice(curve, rng, 1);
    HermitianMetric hb = random_metric_lattice(curve, rng, 1);
    const double da = degree_higgs(a, g, ha);
    const double db = degree_higgs(b, g, hb);
    const double mu = slope_higgs(direct_sum(a, b), g, direct_sum(ha, hb));
    CHECK(std::abs(mu - 0.5 * (da + db)) < 1e-9);
    CHECK(std::abs(mu - 1.0) < 1e-8);
}

TEST_CASE("induced objects on Hom") {
    Rng rng(36);
    auto base = curve();
    SUBCASE("trivial in, trivial out") {
        Connection D = hom_connection(Connection::trivial(base, 2), Connection::trivial(base, 1));
        CHECK(D.A.max_abs() == 0.0);
        CHECK(D.rank() == 2);
    }
    SUBCASE("pseudocurvature and curvature act by G2 f - f G1") {
        Connection D1 = random_flat_lattice(base, rng, 2);
        Connection D2 = random_flat_constant(base, rng, 1);
        HermitianMetric h1 = random_metric_lattice(base, rng, 2);
        HermitianMetric h2 = random_metric_constant(base, rng, 1);
        Connection Dh = hom_connection(D1, D2);
        HermitianMetric hh = hom_metric(h1, h2);
        FormField f = smooth_form(base, rng, 0, 1, 2, 1);
        FormField G = pseudocurvature(Dh, hh);
        FormField expect = hom_action(pseudocurvature(D2, h2), f, pseudocurvature(D1, h1));
        CHECK(max_difference(apply_to_hom(G, f), expect) < 1e-10);

        HiggsOp a = random_integrable_lattice(base, rng, 2);
        HiggsOp b = random_integrable_constant(base, rng, 2);
        HermitianMetric hb = random_metric_constant(base, rng, 2);
        HiggsOp hom = hom_higgs(a, b);
        HermitianMetric hab = hom_metric(h1, hb);
        FormField f2 = smooth_form(base, rng, 0, 2, 2, 1);
        FormField F = curvature_higgs(hom, hab);
        FormField expectF = hom_action(curvature_higgs(b, hb), f2, curvature_higgs(a, h1));
        CHECK(max_difference(apply_to_hom(F, f2), expectF) < 1e-10);
    }
}

TEST_CASE("I_h is gauge equivariant but not invariant for a fixed metric") {
    Rng rng(37);
    auto base = curve();
    Connection D = random_flat_lattice(base, rng, 2);
    HermitianMetric h = random_metric_lattice(base, rng, 2);
    FormField g = smooth_gauge(base, rng, 2, 1, 0.3);
    HiggsOp moved = to_higgs(gauge(D, g), h.pullback(g));
    HiggsOp expect = gauge(to_higgs(D, h), g);
    CHECK(max_difference(moved.B, expect.B) < 1e-9);
    CHECK(max_difference(moved.theta, expect.theta) < 1e-9);

    // fixed metric, constant gauge: the resulting Higgs operators are not conjugate
    auto cbase = surface(4);
    Connection Dc = random_flat_constant(cbase, rng, 2);
    HermitianMetric hc = HermitianMetric::identity(cbase, 2);
    MatC gm = random_matrix(rng, 2, 2);
    FormField gc = FormField::constant_matrix(cbase, gm);
    const double same = higgs_invariant_distance(to_higgs(gauge(Dc, gc), hc.pullback(gc)), to_higgs(Dc, hc));
    const double fixed = higgs_invariant_distance(to_higgs(gauge(Dc, gc), hc), to_higgs(Dc, hc));
    CHECK(same < 1e-10);
    CHECK(fixed > 1e-3);
}

TEST_CASE("field files round trip through the sidecar format") {
    Rng rng(38);
    auto base = surface(4);
    FormField f = smooth_form(base, rng, 1, 2, 2, 1);
    const auto dir = std::filesystem::temp_directory_path() / "flathiggs_io_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "conn.bin").string();
    write_field(path, f, "connection");
    std::string role;
    FormField g = read_field(path, &role);
    CHECK(role == "connection");
    CHECK(g.torus().same_as(f.torus()));
    CHECK(g.degree() == 1);
    CHECK(max_difference(g, f) < 1e-6 * (1.0 + f.max_abs()));
    FormField c = FormField::constant_matrix(base, random_positive(rng, 3));
    write_field(path, c, "metric");
    CHECK(read_field(path).is_constant());
    std::filesystem::remove_all(dir);
}
