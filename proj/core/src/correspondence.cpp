#include "flathiggs/correspondence.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

#include "flathiggs/fixtures.hpp"

namespace fh {

namespace {

void require_surface(const TorusPtr& base, const char* what) {
    if (base->n() != 2) throw BundleError(std::string(what) + ": complex surfaces only");
}

bool same_background(const LineBackground& a, const LineBackground& b) {
    if (a.empty() || b.empty()) return a.empty() && b.empty();
    return (a.slope() - b.slope()).norm() <= 1e-12;
}

cd integrate_top(const FormField& f, const MetricG& g) { return integrate(f, g); }

FormField trace_square(const FormField& F) { return trace(wedge(F, F)); }

// Lagrange extrapolation of (x_i, y_i) to x = 0.
cd extrapolate_to_zero(const std::vector<double>& x, const std::vector<cd>& y) {
    cd acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cd w = 1.0;
        for (std::size_t j = 0; j < x.size(); ++j)
            if (j != i) w *= (0.0 - x[j]) / (x[i] - x[j]);
        acc += w * y[i];
    }
    return acc;
}

}  // namespace

ChernReport chern_numbers(const FormField& F, const MetricG& g) {
    require_surface(F.base(), "chern_numbers");
    if (F.degree() != 2 || F.rows() != F.cols()) throw BundleError("chern_numbers: End-valued 2-form required");
    const FormField trF = trace(F);
    const cd trF_sq = integrate_top(wedge(trF, trF), g);
    const cd tr_F_sq = integrate_top(trace_square(F), g);
    const cd c1_sq = -trF_sq / (4.0 * kPi * kPi);
    const cd c2 = -(trF_sq - tr_F_sq) / (8.0 * kPi * kPi);
    ChernReport rep;
    rep.c1_sq = c1_sq.real();
    rep.c2 = c2.real();
    rep.imaginary_residue = std::max(std::abs(c1_sq.imag()), std::abs(c2.imag()));
    rep.trace_norm = rms_norm(trF);
    rep.curvature_norm = rms_norm(F);
    return rep;
}

double SelfDualitySplit::max() const {
    return std::max({star_G11, star_G2, adjoint_G11, adjoint_G2, combined});
}

SelfDualitySplit selfduality_split(const FormField& G, const MetricG& g, const HermitianMetric& h) {
    require_surface(G.base(), "selfduality_split");
    if (G.degree() != 2) throw BundleError("selfduality_split: 2-form required");
    SelfDualitySplit out;
    out.G11 = G.part(1, 1);
    out.G2 = G.part(2, 0) + G.part(0, 2);
    out.star_G11 = rms_norm(hodge_star(out.G11, g) + out.G11);
    out.star_G2 = rms_norm(hodge_star(out.G2, g) - out.G2);
    out.adjoint_G11 = rms_norm(out.G11 + h.adjoint(out.G11));
    out.adjoint_G2 = rms_norm(out.G2 - h.adjoint(out.G2));
    out.combined = rms_norm(hodge_star(h.adjoint(G), g) - G);
    return out;
}

double EpsilonTable::max_entry() const {
    double worst = std::abs(extrapolated - direct);
    for (const auto& r : rows)
        worst = std::max({worst, std::abs(r.trace_F_squared), std::abs(r.trace_nabla_fourth), r.scaling_residual});
    return worst;
}

EpsilonTable epsilon_family_check(const Connection& D, const HermitianMetric& h, const MetricG& g,
                                  const std::vector<double>& eps_list) {
    require_surface(D.base(), "epsilon_family_check");
    if (!D.background.empty()) throw BundleError("epsilon_family_check: degree backgrounds are not supported");
    if (eps_list.empty()) throw BundleError("epsilon_family_check: empty epsilon list");
    const Decomposition dec = decompose(D, h);
    const FormField theta = dec.theta();
    const FormField theta_star = dec.theta_star();
    const FormField lower = dec.unitary_01() + theta;      // d''_h - d''
    const FormField upper = dec.unitary_10() + theta_star; // d'_h - d'
    EpsilonTable table;
    std::vector<double> xs;
    std::vector<cd> ys;
    for (double eps : eps_list) {
        if (eps <= 0.0) throw BundleError("epsilon_family_check: epsilon must be positive");
        EpsilonRow row;
        row.eps = eps;
        const FormField B = dec.unitary + cd(1.0 / eps) * theta + cd(eps) * theta_star;
        const FormField F = connection_curvature(B);
        const FormField F2 = wedge(F, F);
        row.trace_F_squared = integrate_top(trace(F2), g);
        // nabla_eps^2 = (dbar + eps del) C + C ^ C
        const FormField C = lower + cd(eps) * upper;
        const FormField N = delbar(C) + cd(eps) * del(C) + wedge(C, C);
        const FormField N4 = wedge(N, N);
        row.trace_nabla_fourth = integrate_top(trace(N4), g);
        row.scaling_residual = rms_norm(N4 - cd(eps * eps) * F2);
        table.rows.push_back(row);
        xs.push_back(eps);
        ys.push_back(row.trace_nabla_fourth);
    }
    table.extrapolated = extrapolate_to_zero(xs, ys);
    const FormField G = pseudocurvature(D, h);
    table.direct = integrate_top(trace(wedge(G, G)), g);
    return table;
}

double FlatToHiggs::max_certificate() const {
    return std::max({pseudocurvature_norm, integrability, std::abs(degree), higgs_einstein_residual});
}

double HiggsToFlat::max_certificate() const {
    return std::max({curvature_norm, flatness, std::abs(degree), flat_einstein_residual});
}

FlatToHiggs flat_to_higgs_surface(const Connection& D, const MetricG& g, const HermitianMetric& h0,
                                  const CorrespondenceOptions& opts) {
    require_surface(D.base(), "flat_to_higgs_surface");
    const double deg = degree_flat(D, g, h0);
    if (std::abs(deg) > opts.degree_tol * D.rank())
        throw BundleError("flat_to_higgs_surface: connection has nonzero degree");
    auto sol = solve_flat_einstein(D, g, h0, opts.schedule);
    if (!sol.report.converged)
        throw DivergenceError("flat_to_higgs_surface: no Einstein metric found (" + sol.report.status + ")",
                              sol.report, sol.witness);
    FlatToHiggs out;
    out.h = sol.h;
    out.report = sol.report;
    out.higgs = to_higgs(D, sol.h);
    out.pseudocurvature_norm = rms_norm(pseudocurvature(D, sol.h));
    out.integrability = integrability_residual(out.higgs);
    out.degree = degree_higgs(out.higgs, g, sol.h);
    out.higgs_einstein_residual = einstein_residual_higgs(out.higgs, g, sol.h).residual_norm;
    return out;
}

HiggsToFlat higgs_to_flat_surface(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h0,
                                  const CorrespondenceOptions& opts) {
    require_surface(dpp.base(), "higgs_to_flat_surface");
    HiggsToFlat out;
    out.chern = chern_numbers(curvature_higgs(dpp, h0), g);
    if (std::abs(out.chern.c1_sq) > opts.chern_tol || std::abs(out.chern.c2) > opts.chern_tol)
        throw BundleError("higgs_to_flat_surface: Chern numbers do not vanish");
    const double deg = degree_higgs(dpp, g, h0);
    if (std::abs(deg) > opts.degree_tol * dpp.rank())
        throw BundleError("higgs_to_flat_surface: Higgs operator has nonzero degree");
    auto sol = solve_higgs_einstein(dpp, g, h0, opts.schedule);
    if (!sol.report.converged)
        throw DivergenceError("higgs_to_flat_surface: no Einstein metric found (" + sol.report.status + ")",
                              sol.report, sol.witness);
    out.h = sol.h;
    out.report = sol.report;
    out.flat = from_higgs(dpp, sol.h);
    out.curvature_norm = rms_norm(curvature_higgs(dpp, sol.h));
    out.flatness = flatness_residual(out.flat);
    out.degree = degree_flat(out.flat, g, sol.h);
    out.flat_einstein_residual = einstein_residual_flat(out.flat, g, sol.h).residual_norm;
    return out;
}

double intertwining_residual(const Connection& D1, const Connection& D2, const FormField& T) {
    if (!same_background(D1.background, D2.background))
        throw BundleError("intertwining_residual: objects must share the central background");
    return rms_norm(d(T) + wedge(D2.A, T) - wedge(T, D1.A));
}

double intertwining_residual(const HiggsOp& d1, const HiggsOp& d2, const FormField& T) {
    if (!same_background(d1.background, d2.background))
        throw BundleError("intertwining_residual: objects must share the central background");
    return rms_norm(delbar(T) + wedge(d2.total(), T) - wedge(T, d1.total()));
}

bool RoundTripSample::passed(double tol) const {
    return error.empty() && well_defined && scaled_metric && flat_round_trip && higgs_round_trip && worst_certificate < tol;
}

namespace {

RoundTripSample run_sample(const Connection& D, const MetricG& g, std::uint64_t seed, const CorrespondenceOptions& opts,
                           double tol) {
    Rng rng(seed);
    const TorusPtr& base = D.base();
    const int r = D.rank();
    RoundTripSample s;
    s.forward = flat_to_higgs_surface(D, g, random_metric_constant(base, rng, r), opts);
    const FlatToHiggs other = flat_to_higgs_surface(D, g, random_metric_constant(base, rng, r), opts);
    s.well_defined = find_isomorphism(s.forward.higgs, other.higgs).has_value();
    const HiggsOp doubled = to_higgs(D, HermitianMetric(cd(2.0) * s.forward.h.H()));
    s.scaled_metric = max_difference(doubled.total(), s.forward.higgs.total()) < tol;

    s.back = higgs_to_flat_surface(s.forward.higgs, g, random_metric_constant(base, rng, r), opts);
    s.flat_round_trip = find_isomorphism(D, s.back.flat).has_value();
    const FlatToHiggs again = flat_to_higgs_surface(s.back.flat, g, random_metric_constant(base, rng, r), opts);
    s.higgs_round_trip = find_isomorphism(s.forward.higgs, again.higgs).has_value();
    s.worst_certificate = std::max({s.forward.max_certificate(), other.max_certificate(), s.back.max_certificate(),
                                    again.max_certificate()});
    return s;
}

}  // namespace

RoundTripReport moduli_roundtrip_suite(const std::vector<Connection>& samples, const MetricG& g, std::uint64_t seed,
                                       const CorrespondenceOptions& opts, double tol) {
    for (const auto& D : samples) {
        require_surface(D.base(), "moduli_roundtrip_suite");
        if (!D.is_constant()) throw BundleError("moduli_roundtrip_suite: constant-mode samples required");
    }
    RoundTripReport rep;
    rep.samples.resize(samples.size());
    const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    for (std::size_t start = 0; start < samples.size(); start += workers) {
        std::vector<std::future<RoundTripSample>> jobs;
        const std::size_t stop = std::min(samples.size(), start + workers);
        for (std::size_t i = start; i < stop; ++i)
            jobs.push_back(std::async(std::launch::async, run_sample, std::cref(samples[i]), std::cref(g), seed + i,
                                      std::cref(opts), tol));
        for (std::size_t i = start; i < stop; ++i) {
            try {
                rep.samples[i] = jobs[i - start].get();
            } catch (const BundleError& e) {
                rep.samples[i].error = e.what();
            }
        }
    }
    for (const auto& s : rep.samples)
        if (s.passed(tol)) ++rep.passed;
    return rep;
}

}  // namespace fh
