#include "doctest.h"

#include "flathiggs/line_moduli.hpp"
#include "support.hpp"

using namespace fh;
using namespace fh::testing;

namespace {

// d + alpha + d(phi): the gauge transform of d + alpha by e^phi, exactly flat on the grid.
Connection gauged(const Connection& D, const FormField& phi) { return Connection(D.A + d(phi)); }

// Einstein metric of the gauged connection when the identity is Einstein for D: |e^phi|^2.
HermitianMetric gauged_metric(const FormField& phi) {
    return HermitianMetric(hermitian_exp(cd(2.0) * FormField::scalar_function(phi.base(), [&](std::size_t p) {
        return cd(phi.at(p)(0, 0).real(), 0.0);
    })));
}

// Holonomy exponent along grid line `axis` through grid point 0: the sample mean of the
// axis component of the form along that line (exact for band-limited integrands).
cd line_period(const FormField& a, int axis) {
    const LatticeTorus& t = a.torus();
    const MatC U = t.axis_to_complex();
    const auto& dims = t.dims();
    std::size_t stride = 1;
    for (int k = t.real_dim() - 1; k > axis; --k) stride *= static_cast<std::size_t>(dims[k]);
    cd acc = 0.0;
    for (int i = 0; i < dims[axis]; ++i) {
        const std::size_t p = a.is_constant() ? 0 : static_cast<std::size_t>(i) * stride;
        for (int s = 0; s < 2 * t.n(); ++s) acc += U(axis, s) * a.block(p, a.slot_of(1u << s))[0];
    }
    return acc / static_cast<double>(dims[axis]);
}

}  // namespace

TEST_CASE("period matrix against axis derivatives") {
    for (const auto& base : {curve(8), surface(4)}) {
        Rng rng(50);
        const MatC P = period_matrix(*base);
        CHECK((P - base->axis_to_complex()).norm() < 1e-14);
        // periods along grid lines of a gauge-transformed lattice form match the constant part
        FormField alpha = one_form_from_coefficients(base, VecC::Random(2 * base->n()));
        FormField phi = smooth_function(base, rng, 1, 0.5);
        FormField lattice = alpha + d(phi);
        for (int k = 0; k < base->real_dim(); ++k)
            CHECK(std::abs(line_period(lattice, k) - (P * one_form_coefficients(alpha))(k)) < 1e-12);
    }
}

TEST_CASE("flat line classes") {
    Rng rng(51);
    for (const auto& base : {curve(16), surface(6)}) {
        SUBCASE("representative reproduces the holonomy") {
            for (int i = 0; i < 20; ++i) {
                FlatLineClass c = random_flat_line_class(*base, rng);
                CHECK(FlatLineClass::of(c.representative(base)).distance(c) < 1e-12);
            }
        }
        SUBCASE("gauge conjugation keeps the class") {
            FlatLineClass c = random_flat_line_class(*base, rng);
            Connection D = c.representative(base);
            Connection Dg = gauged(D, smooth_function(base, rng, 1, 0.4));
            CHECK(flatness_residual(Dg) < 1e-12);
            CHECK(FlatLineClass::of(Dg).distance(c) < 1e-12);
        }
        SUBCASE("line integrals agree with the class") {
            FlatLineClass c = random_flat_line_class(*base, rng, 0.5);
            Connection Dg = gauged(c.representative(base), smooth_function(base, rng, 1, 0.3));
            for (int k = 0; k < base->real_dim(); ++k)
                CHECK(std::abs(std::exp(line_period(Dg.A, k)) - c.holonomy(k)) < 1e-12);
        }
    }
    SUBCASE("rank 1 only") {
        auto base = curve(8);
        CHECK_THROWS_AS(FlatLineClass::of(Connection::trivial(base, 2)), BundleError);
    }
}

TEST_CASE("line Einstein metrics") {
    Rng rng(52);
    SUBCASE("constant connection: already Einstein") {
        auto base = surface(6);
        MetricG g = MetricG::with_volume(base, 1.0);
        Connection D = random_flat_line_class(*base, rng).representative(base);
        auto le = line_einstein(D, g, HermitianMetric::identity(base, 1));
        CHECK(le.f.max_abs() < 1e-14);
        CHECK(le.residual < 1e-12);
        CHECK(std::abs(le.c) < 1e-12);
    }
    SUBCASE("gauge-perturbed connection: the factor undoes the gauge") {
        for (bool on_surface : {false, true}) {
            auto base = on_surface ? surface(16) : curve(32);
            MetricG g = on_surface ? MetricG::with_volume(base, 1.0) : smooth_metric(base, rng);
            Connection D0 = random_flat_line_class(*base, rng).representative(base);
            FormField phi = smooth_function(base, rng, 1, on_surface ? 0.05 : 0.3);
            Connection D = gauged(D0, phi);
            auto le = line_einstein(D, g, HermitianMetric::identity(base, 1));
            CHECK(le.residual < 1e-8);
            CHECK(std::abs(le.c) < 1e-10);
            CHECK(uniqueness_probe(le.h, gauged_metric(phi)) < 1e-8);
        }
    }
    SUBCASE("from a lattice starting metric") {
        auto base = curve(32);
        MetricG g = smooth_metric(base, rng);
        Connection D = random_flat_line_class(*base, rng).representative(base);
        auto le = line_einstein(D, g, random_metric_lattice(base, rng, 1));
        CHECK(le.residual < 1e-9);
        CHECK(uniqueness_probe(le.h, HermitianMetric::identity(base, 1)) < 1e-9);
    }
    SUBCASE("Higgs line bundles of any degree") {
        auto base = curve(16);
        MetricG g = MetricG::with_volume(base, 1.0);
        for (int deg = -2; deg <= 2; ++deg) {
            FormField B = smooth_form(base, rng, 1, 1, 1, 1, 0.3).part(0, 1);
            FormField theta = one_form_from_coefficients(base, VecC::Constant(2, 0.3 * complex_normal(rng))).part(1, 0);
            HiggsOp dpp(B, theta, LineBackground::curve_degree(deg));
            auto le = line_einstein(dpp, g, random_metric_lattice(base, rng, 1));
            CHECK(le.residual < 1e-9);
            CHECK(std::abs(le.c - einstein_constant_higgs(dpp, g, le.h)) < 1e-9);
            CHECK(std::abs(le.c - 2.0 * kPi * deg) < 1e-9);
        }
    }
    SUBCASE("agrees with the iterative solver") {
        auto base = curve(32);
        MetricG g = MetricG::with_volume(base, 1.0);
        Connection D = gauged(random_flat_line_class(*base, rng).representative(base), smooth_function(base, rng, 1, 0.3));
        HermitianMetric h0 = random_metric_lattice(base, rng, 1);
        auto le = line_einstein(D, g, h0);
        auto sol = solve_flat_einstein(D, g, h0);
        REQUIRE(sol.report.converged);
        CHECK(uniqueness_probe(le.h, sol.h) < 1e-8);
    }
    SUBCASE("rank 1 only") {
        auto base = curve(8);
        CHECK_THROWS_AS(line_einstein(Connection::trivial(base, 2), MetricG::with_volume(base, 1.0),
                                      HermitianMetric::identity(base, 2)),
                        BundleError);
    }
}

TEST_CASE("degree-zero line correspondence") {
    Rng rng(53);
    SUBCASE("trivial class") {
        auto base = surface(4);
        FlatLineClass trivial{VecC::Ones(4)};
        auto h = flat_to_higgs_line(trivial, MetricG::with_volume(base, 1.0));
        CHECK((h.unitary_class - VecC::Ones(4)).norm() < 1e-14);
        CHECK(h.theta.norm() < 1e-14);
    }
    SUBCASE("unitary holonomy has no Higgs field") {
        auto base = surface(4);
        FlatLineClass c = random_flat_line_class(*base, rng);
        c.holonomy = c.holonomy.array() / c.holonomy.array().abs();
        auto h = flat_to_higgs_line(c, MetricG::with_volume(base, 1.0));
        CHECK(h.theta.norm() < 1e-13);
        CHECK((h.unitary_class - c.holonomy).norm() < 1e-13);
    }
    SUBCASE("round trips") {
        for (const auto& base : {curve(8), surface(4)}) {
            MetricG g = MetricG::with_volume(base, 1.0);
            for (int i = 0; i < 25; ++i) {
                FlatLineClass c = random_flat_line_class(*base, rng);
                CHECK(higgs_to_flat_line(flat_to_higgs_line(c, g), *base).distance(c) < 1e-9);
                HiggsLineClass hc = random_higgs_line_class(*base, rng);
                CHECK(flat_to_higgs_line(higgs_to_flat_line(hc, *base), g).distance(hc) < 1e-9);
            }
        }
    }
    SUBCASE("the inverse is the flat connection of the constant representative") {
        auto base = surface(4);
        HiggsLineClass hc = random_higgs_line_class(*base, rng);
        Connection D = from_higgs(hc.representative(base), HermitianMetric::identity(base, 1));
        CHECK(FlatLineClass::of(D).distance(higgs_to_flat_line(hc, *base)) < 1e-12);
    }
    SUBCASE("Einstein route and harmonic projection agree on lattice representatives") {
        for (bool on_surface : {false, true}) {
            auto base = on_surface ? surface(16) : curve(32);
            MetricG g = on_surface ? MetricG::with_volume(base, 1.0) : smooth_metric(base, rng);
            FlatLineClass c = random_flat_line_class(*base, rng);
            Connection D = gauged(c.representative(base), smooth_function(base, rng, 1, on_surface ? 0.05 : 0.3));
            HiggsLineClass via_metric = flat_to_higgs_line(D, g, random_metric_lattice(base, rng, 1));
            HiggsLineClass via_projection = harmonic_split(D);
            CHECK(via_metric.distance(via_projection) < 1e-8);
            CHECK(via_metric.distance(flat_to_higgs_line(c, g)) < 1e-8);
        }
    }
    SUBCASE("the Higgs field of the Einstein decomposition is the constant one") {
        auto base = curve(32);
        MetricG g = MetricG::with_volume(base, 1.0);
        FlatLineClass c = random_flat_line_class(*base, rng);
        Connection D = gauged(c.representative(base), smooth_function(base, rng, 1, 0.3));
        auto le = line_einstein(D, g, HermitianMetric::identity(base, 1));
        const FormField theta = decompose(D, le.h).theta();
        CHECK(theta.spatial_variation() < 1e-8);
    }
}

TEST_CASE("holomorphic structure of flat line classes") {
    Rng rng(54);
    for (const auto& base : {curve(8), surface(4)}) {
        const int n = base->n();
        SUBCASE("every degree-zero holomorphic structure has a unitary preimage") {
            for (int i = 0; i < 20; ++i) {
                VecC b(n);
                for (int j = 0; j < n; ++j) b(j) = complex_normal(rng);
                CHECK(same_holomorphic_structure(holomorphic_structure(unitary_lift(b, *base), *base), b, *base));
            }
        }
        SUBCASE("structures differing by a dual-lattice vector coincide") {
            // the (0,1) part of a form with periods in 2 pi i Z
            VecC periods = VecC::Zero(2 * n);
            periods(0) = 2.0 * kPi * kI;
            const VecC coeffs = period_matrix(*base).fullPivLu().solve(periods);
            VecC b(n);
            for (int j = 0; j < n; ++j) b(j) = complex_normal(rng);
            CHECK(same_holomorphic_structure(b + coeffs.tail(n), b, *base));
            CHECK_FALSE(same_holomorphic_structure(b + 0.5 * coeffs.tail(n), b, *base));
        }
        SUBCASE("the identity goes to the trivial structure") {
            FlatLineClass trivial{VecC::Ones(2 * n)};
            CHECK(same_holomorphic_structure(holomorphic_structure(trivial, *base), VecC::Zero(n), *base));
        }
        SUBCASE("homomorphism") {
            FlatLineClass a = random_flat_line_class(*base, rng);
            FlatLineClass b = random_flat_line_class(*base, rng);
            FlatLineClass ab{a.holonomy.cwiseProduct(b.holonomy)};
            CHECK(same_holomorphic_structure(holomorphic_structure(ab, *base),
                                             holomorphic_structure(a, *base) + holomorphic_structure(b, *base), *base));
        }
    }
}

TEST_CASE("abelian group model") {
    Rng rng(55);
    AbelianGroup G(RationalVec{0, 0, 1, Rational(5, 2)});
    SUBCASE("group laws") {
        for (int i = 0; i < 50; ++i) {
            auto a = G.random_element(rng);
            auto b = G.random_element(rng);
            auto c = G.random_element(rng);
            CHECK(G.compose(G.compose(a, b), c) == G.compose(a, G.compose(b, c)));
            CHECK(G.compose(a, b) == G.compose(b, a));
            CHECK(G.compose(a, G.identity()) == a);
            CHECK(G.compose(a, G.inverse(a)) == G.identity());
        }
    }
    SUBCASE("periodic coordinates wrap") {
        RationalVec x{Rational(7, 3), Rational(-1), Rational(-1, 4), Rational(6)};
        RationalVec n = G.normalize(x);
        CHECK(n[0] == Rational(7, 3));
        CHECK(n[1] == Rational(-1));
        CHECK(n[2] == Rational(3, 4));
        CHECK(n[3] == Rational(1));
    }
    SUBCASE("homomorphisms") {
        GroupHom ok{G, AbelianGroup(RationalVec{1}), RationalMat{{Rational(1, 3), 2, 3, Rational(2, 5)}}};
        CHECK(ok.well_defined());
        for (int i = 0; i < 20; ++i) {
            auto a = G.random_element(rng);
            auto b = G.random_element(rng);
            CHECK(ok(G.compose(a, b)) == ok.target.compose(ok(a), ok(b)));
        }
        GroupHom bad{G, AbelianGroup(RationalVec{1}), RationalMat{{0, 0, Rational(1, 2), 0}}};
        CHECK_FALSE(bad.well_defined());
        GroupHom to_free{G, AbelianGroup(RationalVec{0}), RationalMat{{0, 0, 1, 0}}};
        CHECK_FALSE(to_free.well_defined());
    }
}

TEST_CASE("degree splittings") {
    Rng rng(56);
    SyntheticLineModel model = synthetic_line_model(rng);
    const auto& pic = model.pic;
    const auto& flat = model.flat;
    SUBCASE("degree is a homomorphism and the section has the prescribed degree") {
        for (int i = 0; i < 50; ++i) {
            auto a = pic.group.random_element(rng);
            auto b = pic.group.random_element(rng);
            CHECK(pic.degree(pic.group.compose(a, b)) == pic.degree(a) + pic.degree(b));
            Rational lambda(static_cast<int>(rng() % 41) - 20, static_cast<int>(rng() % 7) + 1);
            CHECK(pic.degree(pic.degree_section(lambda)) == lambda);
            CHECK(flat.degree(flat.degree_section(lambda)) == lambda);
        }
    }
    SUBCASE("pulled-back degree is the composite") {
        for (int i = 0; i < 50; ++i) {
            auto a = flat.group.random_element(rng);
            auto b = flat.group.random_element(rng);
            CHECK(flat.degree(a) == pic.degree(model.forget(a)));
            CHECK(flat.degree(flat.group.compose(a, b)) == flat.degree(a) + flat.degree(b));
        }
    }
    SUBCASE("examples") {
        Rational lambda(7, 3);
        auto s = split_pic(pic, pic.degree_section(lambda));
        CHECK(s.degree_zero == pic.group.identity());
        CHECK(s.degree == lambda);
        auto x = split_pic(pic, pic.group.random_element(rng)).degree_zero;
        auto t = split_pic(pic, x);
        CHECK(t.degree_zero == x);
        CHECK(t.degree == 0);
        auto sf = split_flat(flat, flat.degree_section(lambda));
        CHECK(sf.degree_zero == flat.group.identity());
        CHECK(sf.degree == lambda);
        auto y = split_flat(flat, flat.group.random_element(rng)).degree_zero;
        CHECK(split_flat(flat, y).degree_zero == y);
        CHECK(split_flat(flat, y).degree == 0);
    }
    SUBCASE("bijections with commuting degree") {
        for (int i = 0; i < 50; ++i) {
            auto x = pic.group.random_element(rng);
            auto s = split_pic(pic, x);
            CHECK(pic.degree(s.degree_zero) == 0);
            CHECK(s.degree == pic.degree(x));
            CHECK(join_pic(pic, s) == x);
            SplitElement back = split_pic(pic, join_pic(pic, s));
            CHECK(back.degree_zero == s.degree_zero);
            CHECK(back.degree == s.degree);

            auto f = flat.group.random_element(rng);
            auto sf = split_flat(flat, f);
            CHECK(flat.degree(sf.degree_zero) == 0);
            CHECK(join_flat(flat, sf) == f);
        }
    }
    SUBCASE("joining needs a degree-zero first component") {
        CHECK_THROWS_AS(join_pic(pic, SplitElement{pic.unit_degree, 1}), BundleError);
    }
    SUBCASE("inconsistent data are refused") {
        AbstractModuliData broken = pic;
        broken.unit_degree = pic.group.identity();
        CHECK_THROWS_AS(broken.validate(), BundleError);
        broken = pic;
        broken.degree_weights[0] = 1;  // periodic coordinate
        CHECK_THROWS_AS(broken.validate(), BundleError);
    }
}

TEST_CASE("extended correspondence") {
    Rng rng(57);
    SyntheticLineModel model = synthetic_line_model(rng, 4, 3);
    auto ext = extended_correspondence(model.flat, model.pic, model.correspondence);
    std::vector<RationalVec> xs;
    std::vector<HiggsPoint> ys;
    for (int i = 0; i < 50; ++i) {
        xs.push_back(model.flat.group.random_element(rng));
        HiggsPoint y;
        y.pic = model.pic.group.random_element(rng);
        for (int j = 0; j < 3; ++j) y.theta.push_back(Rational(static_cast<int>(rng() % 61) - 30, 7));
        ys.push_back(y);
    }
    SUBCASE("bijective extension preserving degree") {
        ExtensionCheck c = check_extension(ext, xs, ys);
        CHECK(c.samples == 50);
        CHECK(c.degree_preserved == 50);
        CHECK(c.round_trips == 50);
        CHECK(c.reverse_round_trips == 50);
        CHECK(c.restricts_to_base == c.degree_zero_samples);
        CHECK(c.injective_on_samples);
        CHECK(c.passed());
    }
    SUBCASE("degree-zero elements map as before") {
        for (const auto& x : xs) {
            auto x0 = split_flat(model.flat, x).degree_zero;
            CHECK(ext(x0) == model.correspondence.forward(x0));
        }
    }
    SUBCASE("a different unit-degree choice gives a different map, related by reparametrization") {
        AbstractModuliData pic2 = model.pic;
        RationalVec shift = split_pic(model.pic, model.pic.group.random_element(rng)).degree_zero;
        RationalVec raw(model.pic.unit_degree.size());
        for (std::size_t k = 0; k < raw.size(); ++k) raw[k] = model.pic.unit_degree[k] + shift[k];
        pic2.unit_degree = model.pic.group.normalize(raw);
        RationalVec step(raw.size());
        for (std::size_t k = 0; k < raw.size(); ++k) step[k] = pic2.unit_degree[k] - model.pic.unit_degree[k];
        auto ext2 = extended_correspondence(model.flat, pic2, model.correspondence);
        int differ = 0;
        for (const auto& x : xs) {
            HiggsPoint a = ext(x);
            HiggsPoint b = ext2(x);
            if (!(a == b)) ++differ;
            HiggsPoint moved{model.pic.group.compose(a.pic, model.pic.group.power(step, model.pic.degree(a.pic))), a.theta};
            CHECK(moved == b);
        }
        CHECK(differ > 0);
    }
    SUBCASE("a broken base map is caught") {
        DegreeZeroCorrespondence skewed = model.correspondence;
        skewed.inverse = [base = model.correspondence.inverse, g = model.flat.group](const HiggsPoint& y) {
            RationalVec x = base(y);
            x.back() += Rational(1, 7);
            return g.normalize(x);
        };
        auto bad = extended_correspondence(model.flat, model.pic, skewed);
        CHECK_FALSE(check_extension(bad, xs, ys).passed());
    }
}

TEST_CASE("forgetful map: surjectivity and exactness data") {
    Rng rng(58);
    SyntheticLineModel model = synthetic_line_model(rng);
    SUBCASE("synthetic model passes") {
        auto rep = surjectivity_check(model.exactness, rng, 50);
        CHECK(rep.well_defined);
        CHECK(rep.components_covered);
        CHECK(rep.covering_in_identity_component);
        CHECK(rep.diagram_commutes == 50);
        CHECK(rep.passed());
    }
    SUBCASE("identity maps to identity") {
        CHECK(model.forget(model.flat.group.identity()) == model.pic.group.identity());
    }
    SUBCASE("a non-commuting diagram is detected") {
        ForgetfulMapData broken = model.exactness;
        broken.hodge_projection.matrix[0][0] += 1;
        auto rep = surjectivity_check(broken, rng, 50);
        CHECK(rep.diagram_commutes < 50);
        CHECK_FALSE(rep.passed());
    }
    SUBCASE("a missing component is detected") {
        ForgetfulMapData broken = model.exactness;
        broken.flat_preimages.back() = model.flat.group.identity();
        CHECK_FALSE(surjectivity_check(broken, rng, 10).components_covered);
    }
}
