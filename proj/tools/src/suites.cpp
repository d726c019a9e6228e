#include "flathiggs/suites.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "flathiggs/correspondence.hpp"
#include "flathiggs/fixtures.hpp"
#include "flathiggs/line_moduli.hpp"
#include "flathiggs/stability.hpp"

namespace fh::suites {

Row& Row::set(const std::string& key, double v) {
    values.emplace_back(key, v);
    return *this;
}

Row& Row::tag(const std::string& key, const std::string& v) {
    tags.emplace_back(key, v);
    return *this;
}

Row& SuiteResult::add_row(const std::string& label) {
    rows.push_back(Row{label, {}, {}, true});
    return rows.back();
}

void SuiteResult::metric(const std::string& key, double v) { metrics.emplace_back(key, v); }

bool SuiteResult::require(bool ok, const std::string& what, Row* row) {
    if (!ok) {
        passed = false;
        failures.push_back(what);
        if (row) row->passed = false;
    }
    return ok;
}

namespace {

TorusPtr skew_surface(int N) {
    MatC tau(2, 2);
    tau << cd(0.2, 1.0), cd(0.05, 0.1), cd(-0.1, 0.05), cd(0.1, 1.2);
    return LatticeTorus::make(2, N, tau);
}

TorusPtr product_surface(int N) {
    MatC tau(2, 2);
    tau << cd(0.2, 1.0), cd(0.0, 0.0), cd(0.0, 0.0), cd(0.1, 1.2);
    return LatticeTorus::make(2, N, tau);
}

TorusPtr curve(int N) {
    MatC tau(1, 1);
    tau << cd(0.3, 0.9);
    return LatticeTorus::make(1, N, tau);
}

std::string indexed(const std::string& prefix, int i) { return prefix + "_" + std::to_string(i); }

double relative_difference(const FormField& a, const FormField& b) {
    return max_difference(a, b) / (1.0 + std::max(a.max_abs(), b.max_abs()));
}

// Commuting components P diag(l_a) P^{-1}: polystable, not normal for the identity metric.
Connection conjugated_diagonal(const TorusPtr& base, Rng& rng, int r, double scale) {
    const MatC P = random_matrix(rng, r, r) + 2.0 * MatC::Identity(r, r);
    const MatC Pinv = P.inverse();
    std::vector<MatC> comps;
    for (int a = 0; a < 2 * base->n(); ++a) {
        VecC l(r);
        for (int i = 0; i < r; ++i) l(i) = scale * complex_normal(rng);
        comps.push_back(P * l.asDiagonal() * Pinv);
    }
    return Connection(constant_one_form(base, comps));
}

// Degree from the background flux alone: r (i / 2 pi) integral of da ^ omega^{n-1}.
double background_degree(const HiggsOp& dpp, const MetricG& g) {
    if (dpp.background.empty()) return 0.0;
    const int n = g.n();
    FormField F = dpp.background.curvature(dpp.base());
    FormField top = n == 1 ? F : wedge(F, g.omega_power(n - 1));
    return dpp.rank() * ((kI / (2.0 * kPi)) * integrate(top, g)).real();
}

// Degree of the determinant line: Chern-Weil of tr B with the metric det H.
double determinant_degree(const Connection& D, const MetricG& g, const HermitianMetric& h) {
    const FormField& H = h.H();
    const FormField det = h.is_constant()
                              ? FormField::constant_matrix(h.base(), MatC::Constant(1, 1, H.at(0).determinant().real()))
                              : FormField::scalar_function(h.base(), [&](std::size_t p) {
                                    return cd(H.at(p).determinant().real());
                                });
    return degree(trace(D.antiholomorphic()), D.background.scaled(D.rank()), g, HermitianMetric(det));
}

void record_history(SuiteResult& s, const std::string& name, const EinsteinReport& rep) {
    s.histories.push_back(History{s.name + "_" + name, rep.history});
}

void report_solution(Row& row, const EinsteinSolution& sol) {
    row.set("c", sol.report.c)
        .set("residual", sol.report.residual_norm)
        .set("iterations", sol.report.iterations)
        .set("converged", sol.report.converged ? 1.0 : 0.0)
        .tag("status", sol.report.status);
    if (sol.witness) {
        row.set("witness_slope", sol.witness->slope)
            .set("witness_total_slope", sol.witness->total_slope)
            .set("witness_distance", sol.witness->distance)
            .set("witness_violates_stability", sol.witness->violates_stability ? 1.0 : 0.0)
            .set("witness_rank", static_cast<double>(sol.witness->basis.cols()));
    }
}

}  // namespace

// ------------------------------------------------------------------ identities

SuiteResult identity_suite(std::uint64_t seed) {
    SuiteResult s{"identities"};
    Rng rng(seed);
    double constant_max = 0.0;
    for (int i = 0; i < 50; ++i) {
        const int r = 1 + i % 4;
        auto base = i % 2 == 0 ? curve(4) : skew_surface(4);
        Connection D = random_flat_constant(base, rng, r, i % 3 == 2 && r > 1);
        HermitianMetric h = random_metric_constant(base, rng, r);
        const auto res = flat_identities(D, h);
        Row& row = s.add_row(indexed("constant", i));
        row.set("n", base->n())
            .set("rank", r)
            .set("delta_squared", res.delta_squared)
            .set("dh_theta", res.dh_theta)
            .set("del_theta", res.del_theta)
            .set("delbar_theta_star", res.delbar_theta_star)
            .set("mixed", res.mixed)
            .set("dh_squared_plus", res.dh_squared_plus);
        constant_max = std::max(constant_max, res.max());
        s.require(res.max() < 1e-9, row.label + ": identity residual " + std::to_string(res.max()), &row);
    }
    double lattice_max = 0.0;
    for (int i = 0; i < 5; ++i) {
        const bool on_surface = i >= 3;
        const int r = on_surface ? 1 + i % 2 : 1 + i;
        auto base = on_surface ? skew_surface(16) : curve(16);
        Connection D = random_flat_lattice(base, rng, r);
        HermitianMetric h = random_metric_lattice(base, rng, r);
        const auto res = flat_identities(D, h);
        Row& row = s.add_row(indexed("lattice", i));
        row.set("n", base->n())
            .set("grid", 16)
            .set("rank", r)
            .set("flatness", flatness_residual(D))
            .set("delta_squared", res.delta_squared)
            .set("dh_theta", res.dh_theta)
            .set("del_theta", res.del_theta)
            .set("delbar_theta_star", res.delbar_theta_star)
            .set("mixed", res.mixed)
            .set("dh_squared_plus", res.dh_squared_plus);
        lattice_max = std::max(lattice_max, res.max());
        s.require(res.max() < 1e-6, row.label + ": identity residual " + std::to_string(res.max()), &row);
    }
    s.metric("constant_samples", 50);
    s.metric("constant_max_residual", constant_max);
    s.metric("lattice_samples", 5);
    s.metric("lattice_max_residual", lattice_max);
    return s;
}

SuiteResult bijection_suite(std::uint64_t seed) {
    SuiteResult s{"bijection"};
    Rng rng(seed);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int r = 1 + i % 4;
        const bool lattice = i % 25 == 24;
        auto base = lattice ? curve(16) : (i % 3 == 0 ? curve(4) : skew_surface(4));
        HermitianMetric h = lattice ? random_metric_lattice(base, rng, r) : random_metric_constant(base, rng, r);
        Row& row = s.add_row(indexed(i % 2 == 0 ? "connection" : "higgs", i));
        row.set("n", base->n()).set("rank", r).set("lattice", lattice ? 1.0 : 0.0);
        double err = 0.0;
        if (i % 2 == 0) {
            Connection D = lattice ? Connection(smooth_form(base, rng, 1, r, r, 1, 0.5))
                                   : random_connection_constant(base, rng, r);
            err = relative_difference(from_higgs(to_higgs(D, h), h).A, D.A);
        } else {
            HiggsOp dpp = lattice ? HiggsOp(smooth_form(base, rng, 1, r, r, 1, 0.5).part(0, 1),
                                            smooth_form(base, rng, 1, r, r, 1, 0.5).part(1, 0))
                                  : random_higgs_constant(base, rng, r);
            HiggsOp back = to_higgs(from_higgs(dpp, h), h);
            err = std::max(relative_difference(back.B, dpp.B), relative_difference(back.theta, dpp.theta));
        }
        row.set("relative_error", err);
        worst = std::max(worst, err);
        s.require(err < 1e-12, row.label + ": round trip error " + std::to_string(err), &row);
    }
    s.metric("samples", 100);
    s.metric("max_relative_error", worst);
    return s;
}

// ---------------------------------------------------------------------- degree

SuiteResult degree_suite(std::uint64_t seed) {
    SuiteResult s{"degree"};
    Rng rng(seed);
    const double tol = 1e-7;
    double worst_spread = 0.0;
    double worst_flat = 0.0;
    auto spread = [](double a, double b, double c) {
        return std::max({std::abs(a - b), std::abs(b - c), std::abs(a - c)});
    };

    for (int i = 0; i < 20; ++i) {
        TorusPtr base;
        MetricG g;
        Connection D;
        HermitianMetric h;
        int r = 1 + i % 3;
        if (i < 10) {
            base = skew_surface(8);
            g = MetricG::with_volume(base, 1.0);
            D = random_flat_constant(base, rng, r, i % 2 == 1 && r > 1);
            h = random_metric_constant(base, rng, r);
        } else if (i < 16) {
            base = curve(32);
            g = smooth_metric(base, rng);
            D = random_flat_lattice(base, rng, r);
            h = random_metric_lattice(base, rng, r);
        } else {
            r = 1 + i % 2;
            base = skew_surface(12);
            g = MetricG::with_volume(base, 1.0);
            D = random_flat_lattice(base, rng, r, 1, 0.05);
            h = random_metric_lattice(base, rng, r, 1, 0.05);
        }
        const double holo = degree_flat(D, g, h);
        const double pseudo = degree_via_pseudocurvature(D, g, h);
        const double det = determinant_degree(D, g, h);
        Row& row = s.add_row(indexed("flat", i));
        row.set("n", base->n())
            .set("rank", r)
            .set("lattice", D.is_constant() ? 0.0 : 1.0)
            .set("holomorphic", holo)
            .set("pseudocurvature", pseudo)
            .set("determinant_line", det);
        const double sp = spread(holo, pseudo, det);
        const double mag = std::max({std::abs(holo), std::abs(pseudo), std::abs(det)});
        worst_spread = std::max(worst_spread, sp);
        worst_flat = std::max(worst_flat, mag);
        s.require(sp < tol, row.label + ": degree spread " + std::to_string(sp), &row);
        s.require(mag < tol, row.label + ": nonzero flat degree " + std::to_string(mag), &row);
    }

    for (int i = 0; i < 20; ++i) {
        TorusPtr base;
        MetricG g;
        HiggsOp dpp;
        HermitianMetric h;
        int r = 1;
        if (i < 5) {
            base = curve(16);
            g = MetricG::with_volume(base, 1.0);
            FormField B = smooth_form(base, rng, 1, 1, 1, 1, 0.3).part(0, 1);
            FormField theta = constant_one_form(base, {MatC::Constant(1, 1, 0.3 * complex_normal(rng)), MatC::Zero(1, 1)});
            dpp = HiggsOp(B, theta, LineBackground::curve_degree(i - 2));
            h = random_metric_lattice(base, rng, 1);
        } else if (i < 10) {
            r = 2;
            base = curve(32);
            g = smooth_metric(base, rng);
            HiggsOp d0 = random_integrable_lattice(base, rng, r);
            dpp = HiggsOp(d0.B, d0.theta, LineBackground::curve_degree(i - 7));
            h = random_metric_lattice(base, rng, r);
        } else if (i < 16) {
            r = 1 + i % 3;
            base = product_surface(8);
            g = MetricG::with_volume(base, 1.0);
            HiggsOp d0 = random_integrable_constant(base, rng, r, i % 2 == 1 && r > 1);
            dpp = HiggsOp(d0.B, d0.theta, LineBackground::surface_degrees(i % 3 - 1, i % 2));
            h = random_metric_constant(base, rng, r);
        } else {
            r = 1 + i % 2;
            base = product_surface(12);
            g = MetricG::with_volume(base, 1.0);
            HiggsOp d0 = random_integrable_lattice(base, rng, r, 1, 0.05);
            dpp = HiggsOp(d0.B, d0.theta, LineBackground::surface_degrees(1, i % 2 - 1));
            h = random_metric_lattice(base, rng, r, 1, 0.05);
        }
        const double holo = degree_higgs(dpp, g, h);
        const double curv = degree_via_curvature(dpp, g, h);
        const double flux = background_degree(dpp, g);
        Row& row = s.add_row(indexed("higgs", i));
        row.set("n", base->n())
            .set("rank", r)
            .set("lattice", dpp.is_constant() ? 0.0 : 1.0)
            .set("holomorphic", holo)
            .set("higgs_curvature", curv)
            .set("background_flux", flux);
        const double sp = spread(holo, curv, flux);
        worst_spread = std::max(worst_spread, sp);
        s.require(sp < tol, row.label + ": degree spread " + std::to_string(sp), &row);
    }
    s.metric("flat_samples", 20);
    s.metric("higgs_samples", 20);
    s.metric("max_pairwise_spread", worst_spread);
    s.metric("max_flat_degree", worst_flat);
    return s;
}

// -------------------------------------------------------------------- Einstein

SuiteResult einstein_constant_suite(std::uint64_t seed) {
    SuiteResult s{"einstein_constants"};
    Rng rng(seed);
    const double tol = 1e-8;

    // closed forms and their ratio
    for (int n = 1; n <= 2; ++n) {
        const double vol = n == 1 ? 1.0 : 2.0;
        const double mu = 1.5;
        Row& row = s.add_row(indexed("closed_form_n", n));
        const double cf = einstein_constant_flat(mu, n, vol);
        const double ch = einstein_constant_higgs(mu, n, vol);
        row.set("slope", mu).set("volume", vol).set("flat", cf).set("higgs", ch);
        s.require(std::abs(cf + kPi * mu / vol) < 1e-15, row.label + ": flat closed form", &row);
        s.require(std::abs(ch - 2.0 * kPi * mu / vol) < 1e-15, row.label + ": Higgs closed form", &row);
        s.require(std::abs(ch / cf + 2.0) < 1e-15, row.label + ": ratio of the closed forms", &row);
    }

    double worst = 0.0;
    // flat side: every flat bundle on the torus has slope zero
    for (int i = 0; i < 8; ++i) {
        TorusPtr base;
        Connection D;
        HermitianMetric h0;
        int r = 1 + i % 3;
        if (i < 5) {
            base = skew_surface(8);
            D = conjugated_diagonal(base, rng, r, 0.5);
            h0 = random_metric_constant(base, rng, r);
        } else {
            r = 1;
            base = curve(32);
            D = random_flat_lattice(base, rng, 1, 1, 0.3);
            h0 = random_metric_lattice(base, rng, 1);
        }
        MetricG g = MetricG::with_volume(base, 1.0);
        auto sol = solve_flat_einstein(D, g, h0);
        const double mu = slope_flat(D, g, h0);
        const double expected = einstein_constant_flat(mu, base->n(), g.volume());
        Row& row = s.add_row(indexed("flat", i));
        row.set("n", base->n()).set("rank", r).set("slope", mu).set("expected_c", expected);
        report_solution(row, sol);
        record_history(s, row.label, sol.report);
        const double err = std::abs(sol.report.c - expected);
        worst = std::max(worst, err);
        s.require(sol.report.converged, row.label + ": solver did not converge", &row);
        s.require(err < tol, row.label + ": |c - closed form| = " + std::to_string(err), &row);
    }

    // Higgs side: line bundles of any degree on a curve, rank two on a surface
    for (int i = 0; i < 9; ++i) {
        TorusPtr base;
        HiggsOp dpp;
        HermitianMetric h0;
        int r = 1;
        if (i < 5) {
            base = curve(16);
            FormField B = smooth_form(base, rng, 1, 1, 1, 1, 0.3).part(0, 1);
            FormField theta = constant_one_form(base, {MatC::Constant(1, 1, 0.3 * complex_normal(rng)), MatC::Zero(1, 1)});
            dpp = HiggsOp(B, theta, LineBackground::curve_degree(i - 2));
            h0 = random_metric_lattice(base, rng, 1);
        } else {
            r = 2;
            base = product_surface(8);
            Connection diag = conjugated_diagonal(base, rng, 2, 0.5);
            std::vector<MatC> comps = components(diag);
            std::vector<MatC> B(comps), theta(comps);
            for (int a = 0; a < 2; ++a) {
                B[a].setZero();
                theta[a + 2].setZero();
            }
            const int d1 = i - 6;
            const int d2 = (i % 2 == 0) ? 1 : 0;
            dpp = HiggsOp(constant_one_form(base, B), constant_one_form(base, theta),
                          LineBackground::surface_degrees(d1, d2));
            h0 = random_metric_constant(base, rng, 2);
        }
        MetricG g = MetricG::with_volume(base, 1.0);
        auto sol = solve_higgs_einstein(dpp, g, h0);
        const double mu = slope_higgs(dpp, g, h0);
        const double expected = einstein_constant_higgs(mu, base->n(), g.volume());
        const double flat_formula = einstein_constant_flat(mu, base->n(), g.volume());
        Row& row = s.add_row(indexed("higgs", i));
        row.set("n", base->n()).set("rank", r).set("slope", mu).set("expected_c", expected).set("flat_formula_c",
                                                                                                 flat_formula);
        if (i < 5) row.set("integer_degree", i - 2);
        report_solution(row, sol);
        record_history(s, row.label, sol.report);
        const double err = std::abs(sol.report.c - expected);
        worst = std::max(worst, err);
        s.require(sol.report.converged, row.label + ": solver did not converge", &row);
        s.require(err < tol, row.label + ": |c - closed form| = " + std::to_string(err), &row);
        if (i < 5)
            s.require(std::abs(sol.report.c - 2.0 * kPi * (i - 2)) < tol, row.label + ": c differs from 2 pi d", &row);
        if (std::abs(mu) > 0.1) {
            // the flat-side formula has the opposite sign and half the size
            s.require(std::abs(sol.report.c / flat_formula + 2.0) < 1e-8, row.label + ": sign/factor asymmetry",
                      &row);
            s.require(std::abs(sol.report.c - flat_formula) > 1.0, row.label + ": flat formula reproduced", &row);
        }
    }
    s.metric("max_c_error", worst);
    return s;
}

SuiteResult vanishing_suite(std::uint64_t seed) {
    SuiteResult s{"vanishing"};
    Rng rng(seed);
    double worst_ratio = 0.0;
    double smallest_sv = 1e300;

    auto flat_case = [&](const std::string& label, const Connection& D, const HermitianMetric& h, const MetricG& g,
                         int expected_kernel) {
        const auto einstein = einstein_residual_flat(D, g, h);
        const auto rep = flat_section_kernel(D, h);
        Row& row = s.add_row(label);
        row.set("c", einstein.c)
            .set("einstein_residual", einstein.residual_norm)
            .set("kernel_dimension", rep.kernel_dimension)
            .set("expected_kernel", expected_kernel)
            .set("max_higgs_ratio", rep.max_higgs_ratio);
        worst_ratio = std::max(worst_ratio, rep.max_higgs_ratio);
        s.require(std::abs(einstein.c) < 1e-8, label + ": Einstein constant is not zero", &row);
        s.require(einstein.residual_norm < 1e-7, label + ": metric is not Einstein", &row);
        s.require(rep.kernel_dimension == expected_kernel, label + ": kernel dimension", &row);
        s.require(rep.max_higgs_ratio < 1e-6, label + ": |d''s| / |s| = " + std::to_string(rep.max_higgs_ratio), &row);
    };

    {
        auto base = curve(16);
        MetricG g = MetricG::with_volume(base, 1.0);
        flat_case("trivial_rank2", Connection::trivial(base, 2), HermitianMetric::identity(base, 2), g, 2);

        std::vector<MatC> comps(2, MatC::Zero(2, 2));
        comps[0](1, 1) = 0.5 * complex_normal(rng);
        comps[1](1, 1) = 0.5 * complex_normal(rng);
        Connection D(constant_one_form(base, comps));
        HermitianMetric h = HermitianMetric::identity(base, 2);
        flat_case("trivial_plus_character", D, h, g, 1);

        FormField f = smooth_gauge(base, rng, 2, 1, 0.15);
        flat_case("trivial_plus_character_gauged", gauge(D, f), h.pullback(f), g, 1);
    }
    for (int i = 0; i < 3; ++i) {
        // trivial summands plus characters, in a non-normal frame; the Einstein metric comes from the solver
        auto base = skew_surface(8);
        MetricG g = MetricG::with_volume(base, 1.0);
        const int r = 2 + i % 2;
        const int trivial = 1 + i % 2;
        std::vector<MatC> comps(4, MatC::Zero(r, r));
        for (auto& m : comps)
            for (int k = trivial; k < r; ++k) m(k, k) = 0.5 * complex_normal(rng);
        const FormField P = FormField::constant_matrix(base, random_matrix(rng, r, r) + 2.0 * MatC::Identity(r, r));
        Connection D = gauge(Connection(constant_one_form(base, comps)), P);
        auto sol = solve_flat_einstein(D, g, random_metric_constant(base, rng, r));
        record_history(s, indexed("surface", i), sol.report);
        if (!s.require(sol.report.converged, indexed("surface", i) + ": solver did not converge")) continue;
        flat_case(indexed("surface", i), D, sol.h, g, trivial);
    }

    for (int i = 0; i < 3; ++i) {
        auto base = curve(16);
        MetricG g = MetricG::with_volume(base, 1.0);
        const int deg = i == 1 ? -2 : -1;
        FormField B = i == 2 ? smooth_form(base, rng, 1, 1, 1, 1, 0.3).part(0, 1)
                             : FormField::zeros(base, 1, 1, 1, true).part(0, 1);
        FormField theta = constant_one_form(base, {MatC::Constant(1, 1, 0.5 * complex_normal(rng)), MatC::Zero(1, 1)});
        HiggsOp dpp(B, theta, LineBackground::curve_degree(deg));
        auto sol = solve_higgs_einstein(dpp, g, HermitianMetric::identity(base, 1));
        const auto rep = higgs_section_kernel(dpp);
        const std::string label = indexed("negative_line", i);
        Row& row = s.add_row(label);
        row.set("degree", deg);
        report_solution(row, sol);
        record_history(s, label, sol.report);
        const double sv = rep.smallest_singular_values.empty() ? 0.0 : rep.smallest_singular_values.front();
        row.set("kernel_dimension", rep.kernel_dimension).set("smallest_singular_value", sv);
        smallest_sv = std::min(smallest_sv, sv);
        s.require(sol.report.converged, label + ": solver did not converge", &row);
        s.require(sol.report.c < 0.0, label + ": Einstein constant is not negative", &row);
        s.require(rep.kernel_dimension == 0, label + ": nonzero kernel", &row);
        s.require(sv > 1e-3, label + ": smallest singular value " + std::to_string(sv), &row);
    }
    s.metric("max_higgs_ratio", worst_ratio);
    s.metric("min_singular_value", smallest_sv);
    return s;
}

// ------------------------------------------------------------------- stability

SuiteResult stability_suite(std::uint64_t seed) {
    SuiteResult s{"stability"};
    Rng rng(seed);
    auto base = skew_surface(8);
    MetricG g = MetricG::with_volume(base, 1.0);
    int agree = 0;
    int label_match = 0;
    for (int i = 0; i < 30; ++i) {
        const int group = i / 10;  // 0 stable, 1 polystable, 2 not polystable
        const int r = group == 0 ? 1 : 2 + i % 2;
        Connection D = random_flat_constant(base, rng, r, group == 2);
        HermitianMetric h0 = random_metric_constant(base, rng, r);
        const auto cls = classify_flat(D, g, h0);
        auto sol = solve_flat_einstein(D, g, h0);
        const bool polystable =
            cls.classification == Classification::Stable || cls.classification == Classification::Polystable;
        const char* names[] = {"stable", "polystable", "not_polystable"};
        const std::string label = indexed(names[group], i);
        Row& row = s.add_row(label);
        row.set("rank", r).tag("label", names[group]).tag("classification", to_string(cls.classification));
        report_solution(row, sol);
        record_history(s, label, sol.report);

        const bool expected_label = group == 0   ? cls.classification == Classification::Stable
                                    : group == 1 ? cls.classification == Classification::Polystable
                                                 : !polystable;
        if (s.require(expected_label, label + ": classifier gave " + to_string(cls.classification), &row)) ++label_match;
        if (s.require(sol.report.converged == polystable, label + ": convergence disagrees with the classifier", &row))
            ++agree;
        if (!sol.report.converged) {
            if (s.require(sol.witness.has_value(), label + ": no witness", &row)) {
                const auto& w = *sol.witness;
                s.require(w.violates_stability, label + ": witness slope does not certify instability", &row);
                const double inv = invariance_residual(components(D), w.basis);
                row.set("witness_invariance", inv);
                s.require(inv < 1e-8, label + ": witness is not an invariant subbundle", &row);
                s.require(w.basis.cols() > 0 && w.basis.cols() < r, label + ": witness rank", &row);
            }
        }
    }
    s.metric("samples", 30);
    s.metric("agreement", agree / 30.0);
    s.metric("label_agreement", label_match / 30.0);
    return s;
}

// ------------------------------------------------------------- correspondence

namespace {

struct SurfaceSamples {
    TorusPtr base;
    MetricG g;
    std::vector<Connection> connections;
};

SurfaceSamples surface_samples(std::uint64_t seed) {
    SurfaceSamples out;
    out.base = skew_surface(12);
    out.g = MetricG::with_volume(out.base, 1.0);
    Rng rng(seed);
    for (int i = 0; i < 20; ++i) out.connections.push_back(conjugated_diagonal(out.base, rng, 1 + i % 2, 0.5));
    return out;
}

}  // namespace

SuiteResult surface_suite(std::uint64_t seed, bool lattice_sample) {
    SuiteResult s{"correspondence"};
    const SurfaceSamples samples = surface_samples(seed);
    const double cert_tol = 1e-6;
    const auto rep = moduli_roundtrip_suite(samples.connections, samples.g, seed, {}, cert_tol);
    int recovered = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < rep.samples.size(); ++i) {
        const auto& smp = rep.samples[i];
        const std::string label = indexed("sample", static_cast<int>(i));
        Row& row = s.add_row(label);
        row.set("rank", samples.connections[i].rank());
        if (!smp.error.empty()) {
            row.tag("error", smp.error);
            s.require(false, label + ": " + smp.error, &row);
            continue;
        }
        row.set("pseudocurvature_norm", smp.forward.pseudocurvature_norm)
            .set("integrability", smp.forward.integrability)
            .set("degree", smp.forward.degree)
            .set("higgs_einstein_residual", smp.forward.higgs_einstein_residual)
            .set("curvature_norm", smp.back.curvature_norm)
            .set("flatness", smp.back.flatness)
            .set("flat_einstein_residual", smp.back.flat_einstein_residual)
            .set("well_defined", smp.well_defined ? 1.0 : 0.0)
            .set("scaled_metric", smp.scaled_metric ? 1.0 : 0.0)
            .set("flat_round_trip", smp.flat_round_trip ? 1.0 : 0.0)
            .set("higgs_round_trip", smp.higgs_round_trip ? 1.0 : 0.0)
            .set("worst_certificate", smp.worst_certificate);
        record_history(s, label, smp.forward.report);
        worst = std::max(worst, smp.forward.max_certificate());
        s.require(smp.forward.max_certificate() < cert_tol,
                  label + ": forward certificate " + std::to_string(smp.forward.max_certificate()), &row);
        s.require(smp.flat_round_trip && smp.higgs_round_trip, label + ": round trip left the class", &row);
        s.require(smp.well_defined && smp.scaled_metric, label + ": map depends on the starting metric", &row);
        if (smp.passed(cert_tol)) ++recovered;
    }
    s.metric("samples", static_cast<double>(rep.samples.size()));
    s.metric("round_trip_rate", rep.samples.empty() ? 0.0 : recovered / static_cast<double>(rep.samples.size()));
    s.metric("max_forward_certificate", worst);

    if (lattice_sample) {
        // one gauge-transformed lattice object through the forward map at 12^4
        Rng rng(seed + 101);
        Connection D = gauge(conjugated_diagonal(samples.base, rng, 2, 0.5), smooth_gauge(samples.base, rng, 2, 1, 0.05));
        Row& row = s.add_row("lattice_forward");
        try {
            auto fwd = flat_to_higgs_surface(D, samples.g, HermitianMetric::identity(samples.base, 2));
            row.set("pseudocurvature_norm", fwd.pseudocurvature_norm)
                .set("integrability", fwd.integrability)
                .set("degree", fwd.degree)
                .set("higgs_einstein_residual", fwd.higgs_einstein_residual)
                .set("iterations", fwd.report.iterations);
            record_history(s, row.label, fwd.report);
            s.require(fwd.max_certificate() < cert_tol,
                      "lattice_forward: certificate " + std::to_string(fwd.max_certificate()), &row);
        } catch (const std::exception& e) {
            row.tag("error", e.what());
            s.require(false, std::string("lattice_forward: ") + e.what(), &row);
        }
    }
    return s;
}

SuiteResult selfduality_suite(std::uint64_t seed) {
    SuiteResult s{"selfduality"};
    const SurfaceSamples samples = surface_samples(seed);
    Rng rng(seed + 7);
    double worst_split = 0.0;
    double worst_eps = 0.0;
    for (std::size_t i = 0; i < samples.connections.size(); ++i) {
        const Connection& D = samples.connections[i];
        const std::string label = indexed("sample", static_cast<int>(i));
        Row& row = s.add_row(label);
        auto sol = solve_flat_einstein(D, samples.g, random_metric_constant(samples.base, rng, D.rank()),
                                       lattice_schedule());
        if (!s.require(sol.report.converged, label + ": solver did not converge", &row)) continue;
        const auto split = selfduality_split(pseudocurvature(D, sol.h), samples.g, sol.h);
        const auto table = epsilon_family_check(D, sol.h, samples.g);
        row.set("star_G11", split.star_G11)
            .set("star_G2", split.star_G2)
            .set("adjoint_G11", split.adjoint_G11)
            .set("adjoint_G2", split.adjoint_G2)
            .set("combined", split.combined);
        for (const auto& e : table.rows) {
            std::ostringstream key;
            key << "eps_" << e.eps;
            row.set(key.str() + "_trace_F_squared", std::abs(e.trace_F_squared))
                .set(key.str() + "_trace_nabla_fourth", std::abs(e.trace_nabla_fourth))
                .set(key.str() + "_scaling_residual", e.scaling_residual);
        }
        row.set("extrapolated", std::abs(table.extrapolated)).set("direct", std::abs(table.direct));
        worst_split = std::max(worst_split, split.max());
        worst_eps = std::max(worst_eps, table.max_entry());
        s.require(split.max() < 1e-6, label + ": self-duality residual " + std::to_string(split.max()), &row);
        s.require(table.max_entry() < 1e-6, label + ": eps-family entry " + std::to_string(table.max_entry()), &row);
    }
    s.metric("max_selfduality_residual", worst_split);
    s.metric("max_eps_entry", worst_eps);
    return s;
}

// ----------------------------------------------------------------- line moduli

SuiteResult line_suite(std::uint64_t seed) {
    SuiteResult s{"line_moduli"};
    Rng rng(seed);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        auto base = i % 2 == 0 ? curve(8) : skew_surface(4);
        MetricG g = MetricG::with_volume(base, 1.0);
        const FlatLineClass c = random_flat_line_class(*base, rng);
        const double forward = higgs_to_flat_line(flat_to_higgs_line(c, g), *base).distance(c);
        const HiggsLineClass hc = random_higgs_line_class(*base, rng);
        const double backward = flat_to_higgs_line(higgs_to_flat_line(hc, *base), g).distance(hc);
        Row& row = s.add_row(indexed("class", i));
        row.set("n", base->n()).set("flat_round_trip", forward).set("higgs_round_trip", backward);
        worst = std::max({worst, forward, backward});
        s.require(std::max(forward, backward) < 1e-9, row.label + ": line round trip", &row);
    }
    s.metric("line_classes", 50);
    s.metric("max_round_trip_distance", worst);

    // Einstein route on lattice representatives against the class-level map
    double worst_route = 0.0;
    for (int i = 0; i < 4; ++i) {
        auto base = curve(32);
        MetricG g = smooth_metric(base, rng);
        const FlatLineClass c = random_flat_line_class(*base, rng);
        Connection D(c.representative(base).A + d(smooth_function(base, rng, 1, 0.3)));
        const HiggsLineClass via_metric = flat_to_higgs_line(D, g, random_metric_lattice(base, rng, 1));
        const double dist = std::max(via_metric.distance(harmonic_split(D)), via_metric.distance(flat_to_higgs_line(c, g)));
        Row& row = s.add_row(indexed("einstein_route", i));
        row.set("distance", dist);
        worst_route = std::max(worst_route, dist);
        s.require(dist < 1e-8, row.label + ": Einstein route differs from the harmonic split", &row);
    }
    s.metric("max_einstein_route_distance", worst_route);

    // holomorphic structures: every degree-zero structure has a unitary flat preimage
    int lifted = 0;
    for (int i = 0; i < 50; ++i) {
        auto base = i % 2 == 0 ? curve(8) : skew_surface(4);
        VecC b(base->n());
        for (int j = 0; j < base->n(); ++j) b(j) = complex_normal(rng);
        if (same_holomorphic_structure(holomorphic_structure(unitary_lift(b, *base), *base), b, *base)) ++lifted;
    }
    s.metric("unitary_lifts", lifted);
    s.require(lifted == 50, "unitary lift missed a holomorphic structure");

    // exact abstract model
    SyntheticLineModel model = synthetic_line_model(rng, 4, 3);
    model.flat.validate();
    model.pic.validate();
    auto ext = extended_correspondence(model.flat, model.pic, model.correspondence);
    std::vector<RationalVec> xs;
    std::vector<HiggsPoint> ys;
    int split_ok = 0;
    for (int i = 0; i < 50; ++i) {
        xs.push_back(model.flat.group.random_element(rng));
        HiggsPoint y;
        y.pic = model.pic.group.random_element(rng);
        for (int j = 0; j < 3; ++j) y.theta.push_back(Rational(static_cast<int>(rng() % 61) - 30, 7));
        ys.push_back(y);
        const SplitElement sf = split_flat(model.flat, xs.back());
        const SplitElement sp = split_pic(model.pic, y.pic);
        const bool ok = model.flat.group.equal(join_flat(model.flat, sf), xs.back()) &&
                        model.flat.degree(sf.degree_zero) == 0 && sf.degree == model.flat.degree(xs.back()) &&
                        model.pic.group.equal(join_pic(model.pic, sp), y.pic) && model.pic.degree(sp.degree_zero) == 0 &&
                        sp.degree == model.pic.degree(y.pic);
        if (ok) ++split_ok;
    }
    const ExtensionCheck chk = check_extension(ext, xs, ys);
    Row& ext_row = s.add_row("extension");
    ext_row.set("samples", chk.samples)
        .set("splitting_bijections", split_ok)
        .set("degree_preserved", chk.degree_preserved)
        .set("round_trips", chk.round_trips)
        .set("reverse_round_trips", chk.reverse_round_trips)
        .set("restricts_to_base", chk.restricts_to_base)
        .set("degree_zero_samples", chk.degree_zero_samples)
        .set("injective_on_samples", chk.injective_on_samples ? 1.0 : 0.0);
    s.require(split_ok == 50, "splitting bijections failed on some samples", &ext_row);
    s.require(chk.samples == 50 && chk.degree_preserved == 50 && chk.round_trips == 50 &&
                  chk.reverse_round_trips == 50 && chk.passed(),
              "extension check failed", &ext_row);

    const SurjectivityReport surj = surjectivity_check(model.exactness, rng, 50);
    Row& surj_row = s.add_row("forgetful_map");
    surj_row.set("well_defined", surj.well_defined ? 1.0 : 0.0)
        .set("components_covered", surj.components_covered ? 1.0 : 0.0)
        .set("covering_in_identity_component", surj.covering_in_identity_component ? 1.0 : 0.0)
        .set("diagram_commutes", surj.diagram_commutes);
    s.require(surj.passed() && surj.diagram_commutes == 50, "forgetful map check failed", &surj_row);
    return s;
}

// ------------------------------------------------------------------ refinement

SuiteResult refinement_suite(std::uint64_t seed) {
    SuiteResult s{"refinement"};
    const double factor = 4.0;
    auto compare = [&](const std::string& label, int coarse, int fine, double rc, double rf) {
        Row& row = s.add_row(label);
        const double ratio = rf > 0.0 ? rc / rf : std::numeric_limits<double>::infinity();
        row.set("coarse_grid", coarse).set("fine_grid", fine).set("coarse", rc).set("fine", rf).set("reduction", ratio);
        s.require(rc > 1e-12, label + ": coarse residual already at round-off", &row);
        s.require(ratio >= factor, label + ": reduction " + std::to_string(ratio), &row);
    };

    struct SurfaceResiduals {
        double identities, flatness, integrability, higgs_identities;
    };
    auto on_surface = [&](int N) {
        auto base = skew_surface(N);
        Rng r1(seed), r2(seed + 1), r3(seed + 2), r4(seed + 3);
        Connection D = random_flat_lattice(base, r1, 2);
        HermitianMetric h = random_metric_lattice(base, r2, 2);
        HiggsOp H = random_integrable_lattice(base, r3, 2);
        HermitianMetric hh = random_metric_lattice(base, r4, 2);
        return SurfaceResiduals{flat_identities(D, h).max(), flatness_residual(D), integrability_residual(H),
                                higgs_identities(H, hh).max()};
    };
    const auto sc = on_surface(8);
    const auto sf = on_surface(16);
    compare("surface_flat_identities", 8, 16, sc.identities, sf.identities);
    compare("surface_flatness", 8, 16, sc.flatness, sf.flatness);
    compare("surface_integrability", 8, 16, sc.integrability, sf.integrability);
    compare("surface_higgs_identities", 8, 16, sc.higgs_identities, sf.higgs_identities);

    struct CurveResiduals {
        double identities, flatness, line_flat, line_higgs, gauged_einstein;
    };
    auto on_curve = [&](int N) {
        auto base = curve(N);
        MetricG g = MetricG::with_volume(base, 1.0);
        Rng r1(seed), r2(seed + 1), r3(seed + 2), r4(seed + 3), r5(seed + 4);
        Connection D = random_flat_lattice(base, r1, 2, 1, 0.3);
        HermitianMetric h = random_metric_lattice(base, r2, 2, 1, 0.3);
        Connection L = random_flat_lattice(base, r3, 1, 1, 0.3);
        const double line_flat = line_einstein(L, g, random_metric_lattice(base, r3, 1, 1, 0.3)).residual;
        FormField B = smooth_form(base, r4, 1, 1, 1, 1, 0.3).part(0, 1);
        HiggsOp line(B, FormField::zeros(base, 1, 1, 1, true).part(1, 0), LineBackground::curve_degree(1));
        const double line_higgs = line_einstein(line, g, HermitianMetric::identity(base, 1)).residual;
        // a normal constant connection is Einstein for the identity; gauge both
        std::vector<MatC> comps(2, MatC::Zero(2, 2));
        comps[0](0, 0) = cd(0.4, 0.1);
        comps[1](1, 1) = cd(-0.2, 0.3);
        Connection N0(constant_one_form(base, comps));
        FormField f = smooth_gauge(base, r5, 2, 1, 0.3);
        const double gauged =
            einstein_residual_flat(gauge(N0, f), g, HermitianMetric::identity(base, 2).pullback(f)).residual_norm;
        return CurveResiduals{flat_identities(D, h).max(), flatness_residual(D), line_flat, line_higgs, gauged};
    };
    const auto cc = on_curve(8);
    const auto cf = on_curve(16);
    compare("curve_flat_identities", 8, 16, cc.identities, cf.identities);
    compare("curve_flatness", 8, 16, cc.flatness, cf.flatness);
    compare("curve_line_einstein_flat", 8, 16, cc.line_flat, cf.line_flat);
    compare("curve_line_einstein_higgs", 8, 16, cc.line_higgs, cf.line_higgs);
    compare("curve_gauged_einstein", 8, 16, cc.gauged_einstein, cf.gauged_einstein);

    double min_ratio = std::numeric_limits<double>::infinity();
    for (const auto& r : s.rows)
        for (const auto& [k, v] : r.values)
            if (k == "reduction") min_ratio = std::min(min_ratio, v);
    s.metric("min_reduction", min_ratio);
    return s;
}

}  // namespace fh::suites
