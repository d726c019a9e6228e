#include "doctest.h"

#include "flathiggs/geometry.hpp"
#include "flathiggs/random_fields.hpp"

using namespace fh;

namespace {

MatC skewed_tau2() {
    MatC tau(2, 2);
    tau << cd(0.3, 1.1), cd(0.1, 0.2), cd(-0.2, 0.1), cd(0.15, 0.9);
    return tau;
}

FormField one_form(const TorusPtr& base, int slot_mask) {
    FormField f = FormField::zeros(base, 1, 1, 1, true);
    f.block(0, f.slot_of(static_cast<unsigned>(slot_mask)))[0] = 1.0;
    return f;
}

}  // namespace

TEST_CASE("torus axis derivatives match the complex chain rule") {
    MatC tau(1, 1);
    tau << cd(0.35, 0.8);
    auto base = LatticeTorus::make(1, 16, tau);
    FormField f = FormField::scalar_function(base, [&](std::size_t p) {
        return std::exp(kI * (2.0 * kPi * base->coords(p)[0]));
    });
    FormField df = d(f);
    const cd t = tau(0, 0);
    const cd du_dz = std::conj(t) / (std::conj(t) - t);
    const cd du_dzb = -t / (std::conj(t) - t);
    double err = 0.0;
    for (std::size_t p = 0; p < f.npts(); ++p) {
        const cd fv = f.block(p, 0)[0];
        err = std::max(err, std::abs(df.block(p, df.slot_of(1u))[0] - 2.0 * kPi * kI * du_dz * fv));
        err = std::max(err, std::abs(df.block(p, df.slot_of(2u))[0] - 2.0 * kPi * kI * du_dzb * fv));
    }
    CHECK(err < 1e-10);
}

TEST_CASE("d squares to zero and splits into del plus delbar") {
    Rng rng(11);
    for (int n = 1; n <= 2; ++n) {
        auto base = n == 1 ? LatticeTorus::make(1, 12) : LatticeTorus::make(2, 8, skewed_tau2());
        for (int trial = 0; trial < 3; ++trial) {
            FormField a = smooth_form(base, rng, 1, 2, 2, 2);
            CHECK(d(d(a)).max_abs() < 1e-9);
            CHECK(delbar(delbar(a)).max_abs() < 1e-9);
            CHECK(del(del(a)).max_abs() < 1e-9);
            CHECK(max_difference(d(a), del(a) + delbar(a)) < 1e-12);
        }
    }
}

TEST_CASE("Leibniz rule for the wedge product") {
    Rng rng(12);
    auto base = LatticeTorus::make(2, 8, skewed_tau2());
    FormField a = smooth_form(base, rng, 1, 2, 2, 1);
    FormField b = smooth_form(base, rng, 1, 2, 2, 1);
    FormField lhs = d(wedge(a, b));
    FormField rhs = wedge(d(a), b) - wedge(a, d(b));
    CHECK(max_difference(lhs, rhs) < 1e-9);
}

TEST_CASE("Lambda of omega equals the complex dimension") {
    Rng rng(13);
    for (int n = 1; n <= 2; ++n) {
        auto base = LatticeTorus::make(n, 8);
        MetricG g = smooth_metric(base, rng, 1.3, 1, 0.3);
        FormField l = lambda_contract(g.omega(), g);
        for (std::size_t p = 0; p < l.npts(); ++p) CHECK(std::abs(l.block(p, 0)[0] - cd(n)) < 1e-12);
        MetricG e = MetricG::euclidean(base, 0.7);
        CHECK(std::abs(lambda_contract(e.omega(), e).block(0, 0)[0] - cd(n)) < 1e-12);
    }
}

TEST_CASE("Lambda agrees with the inner product against omega") {
    Rng rng(14);
    auto base = LatticeTorus::make(2, 6, skewed_tau2());
    MetricG g = smooth_metric(base, rng, 0.8, 1, 0.3);
    FormField v = smooth_form(base, rng, 2, 1, 1, 1);
    FormField l = lambda_contract(v, g);
    FormField ip = pointwise_inner(v, g.omega().to_lattice(), g);
    CHECK(max_difference(l, ip) < 1e-12);
}

TEST_CASE("volume from omega^n / n! matches the metric determinant") {
    Rng rng(15);
    auto base = LatticeTorus::make(2, 6, skewed_tau2());
    MetricG g = smooth_metric(base, rng, 1.0, 1, 0.3);
    FormField top = 0.5 * g.omega_power(2);
    const cd via_top = integrate(top, g);
    CHECK(std::abs(via_top - cd(g.volume())) < 1e-10 * g.volume());
    FormField one = FormField::identity(base, 1, true);
    CHECK(std::abs(integrate(one, g) - cd(g.volume())) < 1e-12);
    CHECK(std::abs(MetricG::with_volume(base, 1.0).volume() - 1.0) < 1e-13);
}

TEST_CASE("Hodge star matches the Euclidean star on R^4") {
    auto base = LatticeTorus::make(2, 4);
    MetricG g = MetricG::euclidean(base, 2.5);
    // real coframe dx_k = (dz + dzbar)/2, dy_k = (dz - dzbar)/(2i), ordered x1 y1 x2 y2
    std::vector<FormField> e;
    for (int k = 0; k < 2; ++k) {
        FormField dz = one_form(base, 1 << k);
        FormField dzb = one_form(base, 1 << (2 + k));
        e.push_back(0.5 * (dz + dzb));
        e.push_back(cd(0.0, -0.5) * (dz - dzb));
    }
    auto e2 = [&](int i, int j) { return wedge(e[i], e[j]); };
    struct Row {
        int a, b, c, dd;
        double s;
    };
    const Row table[] = {{0, 1, 2, 3, 1}, {0, 2, 1, 3, -1}, {0, 3, 1, 2, 1},
                         {1, 2, 0, 3, 1}, {1, 3, 0, 2, -1}, {2, 3, 0, 1, 1}};
    for (const auto& r : table) {
        FormField lhs = hodge_star(e2(r.a, r.b), g);
        FormField rhs = cd(r.s) * e2(r.c, r.dd);
        CHECK(max_difference(lhs, rhs) < 1e-13);
    }
}

TEST_CASE("Hodge star is an involution and omega is self-dual") {
    Rng rng(16);
    auto base = LatticeTorus::make(2, 6, skewed_tau2());
    MetricG g = smooth_metric(base, rng, 1.0, 1, 0.3);
    FormField v = smooth_form(base, rng, 2, 2, 2, 1);
    CHECK(max_difference(hodge_star(hodge_star(v, g), g), v) < 1e-11);
    FormField w = g.omega();
    CHECK(max_difference(hodge_star(w, g), w) < 1e-12);
    // alpha ^ *alpha = |alpha|^2 vol
    FormField a = smooth_form(base, rng, 2, 1, 1, 1);
    const cd lhs = integrate(wedge(a, hodge_star(conj_transpose(a), g)), g);
    const double rhs = std::pow(l2_norm(a, g), 2);
    CHECK(std::abs(lhs - cd(rhs)) < 1e-10 * (1.0 + rhs));
}

TEST_CASE("P is a quarter Laplacian for the Euclidean metric") {
    auto base = LatticeTorus::make(2, 8);
    MetricG g = MetricG::euclidean(base);
    FormField f = FormField::scalar_function(base, [&](std::size_t p) {
        auto x = base->coords(p);
        return cd(std::cos(2.0 * kPi * (x[0] + 2.0 * x[3])));
    });
    // -1/4 * Laplacian in (x, y) with z = x + i y
    FormField pf = operator_P(f, g);
    CHECK(max_difference(pf, cd(kPi * kPi * 5.0) * f) < 1e-9);
}

namespace {

double solve_P_error(int n, int N, std::uint64_t seed, double* c_err) {
    Rng rng(seed);
    auto base = n == 1 ? LatticeTorus::make(1, N) : LatticeTorus::make(2, N, skewed_tau2());
    MetricG g = smooth_metric(base, rng, 1.0, 1, 0.3);
    FormField rhs = smooth_real_function(base, rng, 2, 1.0);
    SolvePResult s = solve_P(rhs, g);
    CHECK(s.residual < 1e-10);
    FormField back = operator_P(s.f, g) + FormField::scalar_function(base, [&](std::size_t) { return cd(s.c); });
    if (c_err) *c_err = std::abs(s.c - integrate(rhs, g).real() / g.volume());
    return max_difference(back, rhs);
}

FormField skew_hermitian_metric(const TorusPtr& base) {
    FormField gm(base, 0, 2, 2, false);
    for (std::size_t p = 0; p < gm.npts(); ++p) {
        auto x = base->coords(p);
        const cd b = 0.25 * std::exp(kI * (2.0 * kPi * x[0])) + 0.1 * std::sin(2.0 * kPi * x[2]);
        MatC m(2, 2);
        m << 1.0 + 0.2 * std::cos(2.0 * kPi * x[3]), b, std::conj(b), 1.1;
        gm.mat(p, 0) = m;
    }
    return gm;
}

}  // namespace

TEST_CASE("solve_P inverts P up to the constant") {
    double c_err = 1.0;
    // on a curve every metric is Kaehler, so c is the vol-average of rhs
    CHECK(solve_P_error(1, 32, 17, &c_err) < 1e-9);
    CHECK(c_err < 1e-10);
    // variable metric on a surface: the truncation error decays spectrally
    const double e8 = solve_P_error(2, 8, 18, nullptr);
    const double e16 = solve_P_error(2, 16, 18, nullptr);
    CHECK(e16 < 5e-3);
    CHECK(e16 < e8 / 50.0);
}

TEST_CASE("solve_P is exact for constant data") {
    auto base = LatticeTorus::make(2, 8);
    MetricG g = MetricG::euclidean(base);
    FormField rhs = FormField::scalar_function(base, [&](std::size_t p) {
        auto x = base->coords(p);
        return cd(0.3 + std::cos(2.0 * kPi * x[1]));
    });
    SolvePResult s = solve_P(rhs, g);
    CHECK(std::abs(s.c - 0.3) < 1e-12);
    FormField expect = FormField::scalar_function(base, [&](std::size_t p) {
        auto x = base->coords(p);
        return cd(std::cos(2.0 * kPi * x[1]) / (kPi * kPi));
    });
    CHECK(max_difference(s.f, expect) < 1e-11);
}

TEST_CASE("Gauduchon factor removes ddbar of omega") {
    auto coarse = LatticeTorus::make(2, 8);
    auto fine = LatticeTorus::make(2, 16);
    MetricG gc(skew_hermitian_metric(coarse));
    MetricG gf(skew_hermitian_metric(fine));
    GauduchonResult rc = gauduchon_factor(gc);
    GauduchonResult rf = gauduchon_factor(gf);
    CHECK(rf.residual_before > 1.0);
    CHECK(rf.residual_after < 1e-7 * rf.residual_before);
    CHECK(rf.residual_after < rc.residual_after / 1000.0);
    CHECK(std::abs(integrate(rf.phi, gf).real() - gf.volume()) < 1e-10);
    for (double v : real_values(rf.phi)) CHECK(v > 0.0);
}
