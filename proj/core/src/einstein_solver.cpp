#include "flathiggs/einstein_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "flathiggs/stability.hpp"

namespace fh {

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

}  // namespace

double einstein_constant_flat(double slope, int n, double volume) {
    return -kPi * slope / (factorial(n - 1) * volume);
}

double einstein_constant_higgs(double slope, int n, double volume) {
    return 2.0 * kPi * slope / (factorial(n - 1) * volume);
}

double einstein_constant_flat(const Connection& D, const MetricG& g, const HermitianMetric& h) {
    return einstein_constant_flat(slope_flat(D, g, h), g.n(), g.volume());
}

double einstein_constant_higgs(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h) {
    return einstein_constant_higgs(slope_higgs(dpp, g, h), g.n(), g.volume());
}

FormField mean_curvature_flat(const Connection& D, const MetricG& g, const HermitianMetric& h) {
    return kI * lambda_contract(pseudocurvature(D, h), g);
}

FormField mean_curvature_higgs(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h) {
    return kI * lambda_contract(curvature_higgs(dpp, h), g);
}

namespace {

EinsteinReport report_for(const FormField& K, const MetricG& g, const HermitianMetric& h) {
    EinsteinReport rep;
    const int r = h.rank();
    rep.c = integrate(trace(K), g).real() / (r * g.volume());
    const FormField E = K - rep.c * FormField::identity(K.base(), r);
    rep.residual_norm = l2_norm_h(E, h.H(), g);
    rep.status = "evaluated";
    return rep;
}

FormField hermitian_part(const FormField& a) { return 0.5 * (a + adjoint_matrix(a)); }

double sup_abs_eigenvalue(const FormField& herm) {
    double worst = 0.0;
    for (std::size_t p = 0; p < herm.npts(); ++p) {
        Eigen::SelfAdjointEigenSolver<MatC> es(herm.matrix(p, 0), Eigen::EigenvaluesOnly);
        worst = std::max(worst, es.eigenvalues().cwiseAbs().maxCoeff());
    }
    return worst;
}

// K(e^phi h) = K(h) + sign * diffusion * P(phi) for scalar phi.
struct SideModel {
    std::function<FormField(const HermitianMetric&)> K;
    double sign = 1.0;
    double diffusion = 1.0;
    std::vector<MatC> family;  // constant-mode components, empty for lattice input
    std::function<double(const MatC&)> subspace_slope;
    double total_slope = 0.0;
    SlopeConvention convention = SlopeConvention::SubslopeLarger;
    // Lattice witness: invariance residual of a projector field.
    std::function<double(const FormField&)> projector_invariance;
};

FormField scalar_exp(const FormField& phi) {
    return apply_pointwise(phi, [](const MatC& m) {
        MatC out(1, 1);
        out(0, 0) = std::exp(m(0, 0).real());
        return out;
    });
}

// Conformal change making tr K = r c pointwise; returns the normalized metric.
HermitianMetric normalize_trace(const SideModel& m, const MetricG& g, const HermitianMetric& h, double* c) {
    const FormField K = m.K(h);
    const int r = h.rank();
    FormField rhs = (cd(-1.0 / (r * m.sign * m.diffusion))) * trace(K);
    if (!g.is_constant() && rhs.is_constant()) rhs = rhs.to_lattice();
    const SolvePResult sp = solve_P(rhs, g);
    *c = -m.sign * m.diffusion * sp.c;
    if (sp.f.is_constant() && sp.f.max_abs() == 0.0) return h;
    return HermitianMetric(wedge(scalar_exp(sp.f), h.H()));
}

struct FlowState {
    HermitianMetric h;
    FormField sqrtH;
    FormField R;
    double residual = 0.0;
    double objective = 0.0;
    double log_f_sup = 0.0;
    double K_sup = 0.0;
};

FlowState evaluate_state(const SideModel& m, const MetricG& g, const HermitianMetric& h, const FormField& ref_inv,
                         double eps) {
    FlowState st;
    st.h = h;
    const int r = h.rank();
    st.sqrtH = hermitian_sqrt(h.H());
    const FormField inv = hermitian_inv_sqrt(h.H());
    FormField Ksym = hermitian_part(wedge(wedge(st.sqrtH, m.K(h)), inv));
    st.K_sup = Ksym.max_abs();
    const double c = integrate(trace(Ksym), g).real() / (r * g.volume());
    const FormField E = Ksym - c * FormField::identity(h.base(), r);
    st.residual = l2_norm(E, g);
    const FormField X = hermitian_part(wedge(wedge(st.sqrtH, ref_inv), st.sqrtH));
    const FormField logf = hermitian_log(X);
    st.log_f_sup = sup_abs_eigenvalue(logf);
    st.R = m.sign * E + eps * logf;
    st.objective = l2_norm(st.R, g);
    return st;
}

double projector_distance(const MatC& a, const MatC& b) {
    return (a * a.adjoint() - b * b.adjoint()).norm();
}

MatC orthonormalize(const MatC& m) {
    Eigen::HouseholderQR<MatC> qr(m);
    return qr.householderQ() * MatC::Identity(m.rows(), m.cols());
}

Witness constant_witness(const SideModel& m, const HermitianMetric& h, const HermitianMetric& ref) {
    Witness w;
    w.total_slope = m.total_slope;
    const MatC H = h.H().at(0);
    const MatC Hr = ref.H().at(0);
    Eigen::SelfAdjointEigenSolver<MatC> sq(H);
    const MatC sqrtH = sq.operatorSqrt();
    const MatC isqrtH = sq.operatorInverseSqrt();
    MatC X = sqrtH * Hr.inverse() * sqrtH;
    X = 0.5 * (X + X.adjoint());
    Eigen::SelfAdjointEigenSolver<MatC> es(X);
    const MatC vecs = isqrtH * es.eigenvectors();  // eigenvectors of f, ascending eigenvalues
    const int r = static_cast<int>(H.rows());
    auto subs = invariant_subspaces(m.family);
    double best = std::numeric_limits<double>::infinity();
    for (int k = 1; k < r; ++k) {
        for (int top = 0; top < 2; ++top) {
            const MatC cand = orthonormalize(top ? vecs.rightCols(k) : vecs.leftCols(k));
            for (std::size_t i = 0; i < subs.size(); ++i) {
                if (subs[i].cols() != k) continue;
                const double dist = projector_distance(cand, subs[i]);
                if (dist < best) {
                    best = dist;
                    w.candidate = cand;
                    w.basis = subs[i];
                    w.distance = dist;
                    w.has_invariant_complement = false;
                    for (std::size_t j = 0; j < subs.size(); ++j) {
                        if (j == i || subs[j].cols() != r - k) continue;
                        MatC joined(r, r);
                        joined << subs[i], subs[j];
                        if (Eigen::FullPivLU<MatC>(joined).rank() == r) w.has_invariant_complement = true;
                    }
                }
            }
        }
    }
    if (w.basis.size() == 0) return w;
    w.candidate_invariance = invariance_residual(m.family, w.candidate);
    w.slope = m.subspace_slope(w.basis);
    const double margin =
        m.convention == SlopeConvention::SubslopeLarger ? w.slope - w.total_slope : w.total_slope - w.slope;
    w.violates_stability = margin <= 1e-8;
    return w;
}

Witness lattice_witness(const SideModel& m, const HermitianMetric& h, const HermitianMetric& ref) {
    Witness w;
    w.total_slope = m.total_slope;
    const int r = h.rank();
    const FormField H = h.H().is_constant() ? h.H().to_lattice() : h.H();
    const FormField Hr = ref.H().is_constant() ? ref.H().to_lattice() : ref.H();
    FormField proj = FormField::zeros(H.base(), 0, r, r);
    for (std::size_t p = 0; p < proj.npts(); ++p) {
        const MatC Hp = H.matrix(p, 0);
        Eigen::SelfAdjointEigenSolver<MatC> sq(Hp);
        MatC X = sq.operatorSqrt() * Hr.matrix(p, 0).inverse() * sq.operatorSqrt();
        Eigen::SelfAdjointEigenSolver<MatC> es(0.5 * (X + X.adjoint()));
        const VecC v = sq.operatorInverseSqrt() * es.eigenvectors().col(r - 1);
        const cd nrm = (v.adjoint() * Hp * v)(0, 0);
        proj.mat(p, 0) = v * v.adjoint() * Hp / nrm;
    }
    w.projector = proj;
    if (m.projector_invariance) w.projector_invariance = m.projector_invariance(proj);
    return w;
}

std::vector<double> epsilon_sequence(const SolverSchedule& s) {
    std::vector<double> eps;
    if (s.strategy == SolverStrategy::Continuity) {
        const int steps = std::max(2, s.continuity_steps);
        for (int k = 0; k < steps; ++k) eps.push_back(std::pow(1e-5, static_cast<double>(k) / (steps - 1)));
    } else {
        eps = s.epsilon_schedule;
    }
    if (eps.empty() || eps.back() != 0.0) eps.push_back(0.0);
    return eps;
}

// Real coordinates of a Hermitian field: diagonal, then real and imaginary upper entries.
std::vector<double> pack_hermitian(const FormField& f) {
    const int r = f.rows();
    std::vector<double> out;
    out.reserve(f.npts() * static_cast<std::size_t>(r * r));
    for (std::size_t p = 0; p < f.npts(); ++p) {
        const auto m = f.mat(p, 0);
        for (int i = 0; i < r; ++i) out.push_back(m(i, i).real());
        for (int i = 0; i < r; ++i)
            for (int j = i + 1; j < r; ++j) {
                out.push_back(m(i, j).real());
                out.push_back(m(i, j).imag());
            }
    }
    return out;
}

FormField unpack_hermitian(const std::vector<double>& v, const FormField& like) {
    const int r = like.rows();
    FormField out = FormField::zeros(like.base(), 0, r, r, like.is_constant());
    std::size_t k = 0;
    for (std::size_t p = 0; p < out.npts(); ++p) {
        auto m = out.mat(p, 0);
        for (int i = 0; i < r; ++i) m(i, i) = v[k++];
        for (int i = 0; i < r; ++i)
            for (int j = i + 1; j < r; ++j) {
                m(i, j) = cd(v[k], v[k + 1]);
                m(j, i) = std::conj(m(i, j));
                k += 2;
            }
    }
    return out;
}

double vector_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

class FlowEngine {
public:
    FlowEngine(const SideModel& m, const MetricG& g, const SolverSchedule& s) : m_(m), g_(g), s_(s) {
        sym_ = laplace_symbol(g.torus(), g.g_inverse().mean().at(0));
    }

    EinsteinSolution run(const HermitianMetric& h0) {
        EinsteinSolution out;
        double c = 0.0;
        HermitianMetric h = normalize_trace(m_, g_, h0, &c);
        out.reference = h;
        ref_inv_ = h.H_inverse();
        const auto eps_list = epsilon_sequence(s_);
        EinsteinReport& rep = out.report;
        int it = 0;
        std::string status;
        FlowState st = evaluate_state(m_, g_, h, ref_inv_, eps_list.front());
        eta_ = s_.eta0 > 0.0 ? s_.eta0 : 0.1 / (1.0 + st.K_sup);
        const int stage_cap = std::max(1, s_.max_iters / static_cast<int>(2 * eps_list.size()));

        for (std::size_t stage = 0; stage < eps_list.size() && status.empty(); ++stage) {
            const double eps = eps_list[stage];
            if (stage > 0) {
                h = normalize_trace(m_, g_, st.h, &c);
                st = evaluate_state(m_, g_, h, ref_inv_, eps);
            }
            const double target = eps > 0.0 ? std::max(s_.tol, 1e-4 * eps) : s_.tol;
            int stage_iters = 0;
            while (true) {
                rep.history.push_back(st.residual);
                if (eps == 0.0 && st.residual < s_.tol) {
                    status = "converged";
                    break;
                }
                if (eps > 0.0 && (st.objective < target || stage_iters >= stage_cap)) break;
                if (it >= s_.max_iters) {
                    status = "iteration_cap";
                    break;
                }
                if (st.log_f_sup > s_.blowup) {
                    status = "blowup";
                    break;
                }
                if (!step(st, eps)) {
                    if (eps == 0.0) status = "stagnation";
                    break;
                }
                ++it;
                ++stage_iters;
            }
            rep.epsilon_path.emplace_back(eps, st.log_f_sup);
            // Along epsilon -> 0, |log f_eps| stays bounded exactly when a solution exists; growth
            // proportional to log(1 / eps) signals a degenerating metric.
            const auto& path = rep.epsilon_path;
            if (status.empty() && eps > 0.0 && path.size() >= 2) {
                const auto& prev = path[path.size() - 2];
                const double decades = std::log10(prev.first / eps);
                if (decades > 0.0 && (path.back().second - prev.second) / decades > s_.growth_per_decade)
                    status = "blowup";
            }
        }

        out.h = st.h;
        const EinsteinReport final_rep = report_for(m_.K(st.h), g_, st.h);
        rep.residual_norm = final_rep.residual_norm;
        rep.c = final_rep.c;
        rep.iterations = it;
        rep.log_f_norm = st.log_f_sup;
        rep.converged = status == "converged" && rep.residual_norm < s_.tol;
        rep.status = status.empty() ? "iteration_cap" : status;
        if (status == "converged" && !rep.converged) rep.status = "stagnation";
        if (!rep.converged) {
            if (!m_.family.empty() && st.h.is_constant() && out.reference.is_constant())
                out.witness = constant_witness(m_, st.h, out.reference);
            else
                out.witness = lattice_witness(m_, st.h, out.reference);
        }
        return out;
    }

private:
    const SideModel& m_;
    const MetricG& g_;
    const SolverSchedule& s_;
    std::vector<double> sym_;
    FormField ref_inv_;
    double eta_ = 0.1;
    bool prefer_newton_ = false;

    FormField precondition(const FormField& R) const {
        if (!s_.precondition || R.is_constant()) return R;
        return hermitian_part(
            fourier_multiply(R, [&](std::size_t p) { return 1.0 / (1.0 + m_.diffusion * sym_[p]); }));
    }

    HermitianMetric moved(const FlowState& st, const FormField& Z) const {
        return HermitianMetric(hermitian_part(wedge(wedge(st.sqrtH, hermitian_exp(Z)), st.sqrtH)));
    }

    // One accepted update of st. Flow steps come first; once a Newton step has rescued a
    // stalled flow, Newton steps are tried first until one fails.
    bool step(FlowState& st, double eps) {
        if (s_.newton && prefer_newton_) {
            if (newton_step(st, eps)) return true;
            prefer_newton_ = false;
            return flow_step(st, eps);
        }
        const double before = st.objective;
        const bool flowed = flow_step(st, eps);
        if (flowed && st.objective < 0.7 * before) return true;
        if (s_.newton && newton_step(st, eps)) {
            prefer_newton_ = true;
            return true;
        }
        return flowed;
    }

    bool flow_step(FlowState& st, double eps) {
        const FormField Z = -1.0 * precondition(st.R);
        for (int tries = 0; tries < 12; ++tries) {
            FlowState trial = evaluate_state(m_, g_, moved(st, eta_ * Z), ref_inv_, eps);
            if (trial.objective < st.objective) {
                st = std::move(trial);
                eta_ = std::min(eta_ * 1.5, 1e3);
                return true;
            }
            eta_ *= 0.5;
            if (eta_ < 1e-12) break;
        }
        eta_ = std::max(eta_, 1e-6);
        return false;
    }

    // Inexact Newton on R_eps(Z) = 0 with central-difference Jacobian products, right
    // preconditioned GMRES and a backtracking line search on |R|.
    bool newton_step(FlowState& st, double eps) {
        const FormField like = st.R;
        auto residual_at = [&](const std::vector<double>& z) {
            return pack_hermitian(evaluate_state(m_, g_, moved(st, unpack_hermitian(z, like)), ref_inv_, eps).R);
        };
        const std::vector<double> r0 = pack_hermitian(st.R);
        LinearMap J = [&](const std::vector<double>& v) {
            const double nv = vector_norm(v);
            std::vector<double> out(v.size(), 0.0);
            if (nv == 0.0) return out;
            const double delta = 1e-4 / nv;
            std::vector<double> z(v);
            for (double& x : z) x *= delta;
            const std::vector<double> rp = residual_at(z);
            for (double& x : z) x = -x;
            const std::vector<double> rm = residual_at(z);
            for (std::size_t i = 0; i < v.size(); ++i) out[i] = (rp[i] - rm[i]) / (2.0 * delta);
            return out;
        };
        LinearMap M = [&](const std::vector<double>& v) { return pack_hermitian(precondition(unpack_hermitian(v, like))); };
        std::vector<double> b(r0);
        for (double& x : b) x = -x;
        SolveOptions opts;
        opts.tol = 1e-3;
        opts.max_iters = s_.krylov_iters;
        opts.restart = s_.krylov_iters;
        const GmresResult gr = gmres(J, M, b, opts);
        if (!(gr.residual < 0.999)) return false;
        const FormField dir = unpack_hermitian(gr.x, like);
        double lambda = 1.0;
        for (int k = 0; k < 8; ++k, lambda *= 0.5) {
            FlowState trial = evaluate_state(m_, g_, moved(st, lambda * dir), ref_inv_, eps);
            if (trial.objective < (1.0 - 1e-4 * lambda) * st.objective) {
                st = std::move(trial);
                return true;
            }
        }
        return false;
    }
};

EinsteinSolution run_flow(const SideModel& m, const MetricG& g, const HermitianMetric& h0, const SolverSchedule& s) {
    FlowEngine engine(m, g, s);
    return engine.run(h0);
}

SideModel flat_model(const Connection& D, const MetricG& g) {
    SideModel m;
    m.K = [D, g](const HermitianMetric& h) { return mean_curvature_flat(D, g, h); };
    m.sign = -1.0;
    m.diffusion = 0.5;
    m.convention = SlopeConvention::SubslopeLarger;
    if (D.is_constant()) {
        m.family = components(D);
        m.subspace_slope = [D, g](const MatC& basis) {
            return slope_flat(restrict_to(D, basis), g, HermitianMetric::identity(D.base(), static_cast<int>(basis.cols())));
        };
        m.total_slope = slope_flat(D, g, HermitianMetric::identity(D.base(), D.rank()));
    }
    m.projector_invariance = [D](const FormField& pi) {
        const int r = pi.rows();
        const FormField one = FormField::identity(pi.base(), r);
        return rms_norm(wedge(one - pi, d(pi) + wedge(D.A, pi)));
    };
    return m;
}

SideModel higgs_model(const HiggsOp& dpp, const MetricG& g) {
    SideModel m;
    m.K = [dpp, g](const HermitianMetric& h) { return mean_curvature_higgs(dpp, g, h); };
    m.sign = 1.0;
    m.diffusion = 1.0;
    m.convention = SlopeConvention::SubslopeSmaller;
    if (dpp.is_constant()) {
        m.family = components(dpp);
        m.subspace_slope = [dpp, g](const MatC& basis) {
            return slope_higgs(restrict_to(dpp, basis), g,
                               HermitianMetric::identity(dpp.base(), static_cast<int>(basis.cols())));
        };
        m.total_slope = slope_higgs(dpp, g, HermitianMetric::identity(dpp.base(), dpp.rank()));
    }
    m.projector_invariance = [dpp](const FormField& pi) {
        const int r = pi.rows();
        const FormField one = FormField::identity(pi.base(), r);
        return rms_norm(wedge(one - pi, delbar(pi) + wedge(dpp.total(), pi)));
    };
    return m;
}

}  // namespace

EinsteinReport einstein_residual_flat(const Connection& D, const MetricG& g, const HermitianMetric& h) {
    return report_for(mean_curvature_flat(D, g, h), g, h);
}

EinsteinReport einstein_residual_higgs(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h) {
    return report_for(mean_curvature_higgs(dpp, g, h), g, h);
}

EinsteinSolution solve_flat_einstein(const Connection& D, const MetricG& g, const HermitianMetric& h0,
                                     const SolverSchedule& schedule) {
    if (!D.background.empty()) throw BundleError("solve_flat_einstein: flat connections carry no background");
    if (flatness_residual(D) > schedule.input_tol) throw BundleError("solve_flat_einstein: connection is not flat");
    return run_flow(flat_model(D, g), g, h0, schedule);
}

EinsteinSolution solve_higgs_einstein(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h0,
                                      const SolverSchedule& schedule) {
    if (integrability_residual(dpp) > schedule.input_tol)
        throw BundleError("solve_higgs_einstein: Higgs operator is not integrable");
    return run_flow(higgs_model(dpp, g), g, h0, schedule);
}

namespace {

ConformalTransfer transfer(const SideModel& m, const EinsteinReport& rep, const MetricG& g, const HermitianMetric& h,
                           const FormField& phi, double einstein_tol) {
    if (rep.residual_norm > einstein_tol) throw BundleError("conformal transfer: input metric is not Einstein");
    const MetricG gt = g.conformal(phi);
    FormField rhs = apply_pointwise(phi, [&](const MatC& v) {
        MatC o(1, 1);
        o(0, 0) = -rep.c / (v(0, 0).real() * m.sign * m.diffusion);
        return o;
    });
    if (!gt.is_constant() && rhs.is_constant()) rhs = rhs.to_lattice();
    const SolvePResult sp = solve_P(rhs, gt);
    ConformalTransfer out;
    out.f = sp.f;
    out.c = -m.sign * m.diffusion * sp.c;
    out.h = HermitianMetric(wedge(scalar_exp(sp.f), h.H()));
    return out;
}

}  // namespace

ConformalTransfer conformal_transfer_flat(const Connection& D, const MetricG& g, const HermitianMetric& h,
                                          const FormField& phi, double einstein_tol) {
    return transfer(flat_model(D, g), einstein_residual_flat(D, g, h), g, h, phi, einstein_tol);
}

ConformalTransfer conformal_transfer_higgs(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h,
                                           const FormField& phi, double einstein_tol) {
    return transfer(higgs_model(dpp, g), einstein_residual_higgs(dpp, g, h), g, h, phi, einstein_tol);
}

double uniqueness_probe(const HermitianMetric& h1, const HermitianMetric& h2) {
    const FormField F = wedge(h1.H_inverse(), h2.H());
    const int r = F.rows();
    double lambda = 0.0;
    for (std::size_t p = 0; p < F.npts(); ++p) lambda += F.matrix(p, 0).trace().real() / r;
    lambda /= static_cast<double>(F.npts());
    double worst = 0.0;
    for (std::size_t p = 0; p < F.npts(); ++p)
        worst = std::max(worst, (F.matrix(p, 0) - lambda * MatC::Identity(r, r)).norm() / lambda);
    return worst;
}

namespace {

// Spectral first-derivative matrix on a periodic axis of length N, Nyquist mode removed.
MatC derivative_matrix_1d(const LatticeTorus& t, int axis) {
    const int N = t.dims()[axis];
    MatC D = MatC::Zero(N, N);
    for (int idx = 0; idx < N; ++idx) {
        if (N % 2 == 0 && idx == N / 2) continue;
        const int m = t.wave_number(axis, idx);
        for (int i = 0; i < N; ++i)
            for (int k = 0; k < N; ++k)
                D(i, k) += 2.0 * kPi * kI * static_cast<double>(m) *
                           std::exp(2.0 * kPi * kI * static_cast<double>(m * (i - k)) / static_cast<double>(N)) /
                           static_cast<double>(N);
    }
    return D;
}

std::vector<int> grid_index(const LatticeTorus& t, std::size_t p) {
    const int dim = t.real_dim();
    std::vector<int> idx(static_cast<std::size_t>(dim));
    for (int ax = dim - 1; ax >= 0; --ax) {
        idx[ax] = static_cast<int>(p % static_cast<std::size_t>(t.dims()[ax]));
        p /= static_cast<std::size_t>(t.dims()[ax]);
    }
    return idx;
}

std::size_t grid_point(const LatticeTorus& t, const std::vector<int>& idx) {
    std::size_t p = 0;
    for (int ax = 0; ax < t.real_dim(); ++ax) p = p * static_cast<std::size_t>(t.dims()[ax]) + idx[ax];
    return p;
}

// Twist degree of a background supported by section_operator_matrix.
double twist_degree(const LatticeTorus& t, const LineBackground& bg) {
    if (bg.empty()) return 0.0;
    const MatC& s = bg.slope();
    MatC rest = s;
    rest(0, 1) = 0.0;
    if (t.n() != 1 || rest.norm() > 1e-14)
        throw BundleError("section operators support only degree backgrounds on curves");
    return (s(0, 1) / (2.0 * kPi * kI)).real();
}

KernelReport kernel_from_matrix(const MatC& op, double tol, const MatC* higgs_op) {
    Eigen::BDCSVD<MatC> svd(op, Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    KernelReport rep;
    for (int i = static_cast<int>(s.size()) - 1; i >= 0; --i) rep.smallest_singular_values.push_back(s(i));
    int k = 0;
    while (k < s.size() && s(s.size() - 1 - k) < tol) ++k;
    rep.kernel_dimension = k;
    if (higgs_op && k > 0) {
        const MatC ker = svd.matrixV().rightCols(k);
        Eigen::JacobiSVD<MatC> hs(*higgs_op * ker);
        rep.max_higgs_ratio = hs.singularValues()(0);
    }
    return rep;
}

std::vector<cd> mode_symbol(const LatticeTorus& t, const std::vector<int>& k) {
    const MatC& C = t.complex_from_axes();
    std::vector<cd> sym(static_cast<std::size_t>(t.real_dim()), 0.0);
    for (int a = 0; a < t.real_dim(); ++a)
        for (int j = 0; j < t.real_dim(); ++j) sym[a] += C(a, j) * 2.0 * kPi * kI * static_cast<double>(k[j]);
    return sym;
}

// Constant-mode kernel: Fourier modes decouple into r-dimensional blocks.
KernelReport constant_kernel(const LatticeTorus& t, const std::vector<MatC>& comps, const std::vector<bool>& deriv,
                             const std::vector<MatC>* higgs, double tol, int max_mode) {
    const int dim = t.real_dim();
    const int r = static_cast<int>(comps.front().rows());
    const int n = t.n();
    KernelReport rep;
    std::vector<int> k(static_cast<std::size_t>(dim), -max_mode);
    while (true) {
        const auto sym = mode_symbol(t, k);
        MatC M(r * dim, r);
        for (int a = 0; a < dim; ++a)
            M.middleRows(a * r, r) = comps[a] + (deriv[a] ? sym[a] : cd(0.0)) * MatC::Identity(r, r);
        Eigen::JacobiSVD<MatC> svd(M, Eigen::ComputeFullV);
        const auto& s = svd.singularValues();
        for (int i = 0; i < s.size(); ++i) rep.smallest_singular_values.push_back(s(i));
        int kd = 0;
        while (kd < s.size() && s(s.size() - 1 - kd) < tol) ++kd;
        if (kd > 0) {
            rep.kernel_dimension += kd;
            if (higgs) {
                MatC Hm(r * dim, r);
                for (int a = 0; a < dim; ++a)
                    Hm.middleRows(a * r, r) = (*higgs)[a] + (a >= n ? sym[a] : cd(0.0)) * MatC::Identity(r, r);
                Eigen::JacobiSVD<MatC> hs(Hm * svd.matrixV().rightCols(kd));
                rep.max_higgs_ratio = std::max(rep.max_higgs_ratio, hs.singularValues()(0));
            }
        }
        int pos = 0;
        while (pos < dim && k[pos] == max_mode) k[pos++] = -max_mode;
        if (pos == dim) break;
        ++k[pos];
    }
    std::sort(rep.smallest_singular_values.begin(), rep.smallest_singular_values.end());
    return rep;
}

}  // namespace

MatC section_operator_matrix(const FormField& M, const LineBackground& bg, const std::vector<bool>& derivative_slots) {
    const FormField A = M.is_constant() ? M.to_lattice() : M;
    const LatticeTorus& t = A.torus();
    const int dim = t.real_dim();
    const int r = A.rows();
    const int ns = A.nslots();
    const std::size_t N = t.points();
    const double twist = twist_degree(t, bg);
    const MatC& C = t.complex_from_axes();

    // Axis derivatives on twisted sections: s(u, v + 1) = exp(-2 pi i d u) s(u, v).
    std::vector<MatC> axis_d;
    for (int ax = 0; ax < dim; ++ax) axis_d.push_back(derivative_matrix_1d(t, ax));
    MatC out = MatC::Zero(static_cast<Eigen::Index>(N) * ns * r, static_cast<Eigen::Index>(N) * r);
    for (std::size_t p = 0; p < N; ++p) {
        const auto idx = grid_index(t, p);
        const auto x = t.coords(p);
        for (int a = 0; a < ns; ++a) {
            const unsigned mask = A.mask(a);
            int coframe = 0;
            while (!(mask & (1u << coframe))) ++coframe;
            const auto row0 = static_cast<Eigen::Index>((p * ns + a) * r);
            MatC local = A.matrix(p, a);
            if (derivative_slots[a]) {
                if (!bg.empty()) {
                    cd coef = 0.0;
                    for (int j = 0; j < dim; ++j) {
                        cd cj = 0.0;
                        for (int k = 0; k < dim; ++k) cj += bg.slope()(j, k) * x[k];
                        coef += cj * C(coframe, j);
                    }
                    local += coef * MatC::Identity(r, r);
                }
                for (int ax = 0; ax < dim; ++ax) {
                    const cd cfac = C(coframe, ax);
                    if (cfac == 0.0) continue;
                    auto jdx = idx;
                    for (int j = 0; j < t.dims()[ax]; ++j) {
                        jdx[ax] = j;
                        const std::size_t q = grid_point(t, jdx);
                        cd w = axis_d[ax](idx[ax], j);
                        if (twist != 0.0 && ax == 1) {
                            w *= std::exp(2.0 * kPi * kI * twist * x[0] * (t.coords(q)[1] - x[1]));
                        }
                        for (int i = 0; i < r; ++i) out(row0 + i, static_cast<Eigen::Index>(q * r + i)) += cfac * w;
                    }
                    if (twist != 0.0 && ax == 1)
                        for (int i = 0; i < r; ++i)
                            out(row0 + i, static_cast<Eigen::Index>(p * r + i)) -= cfac * 2.0 * kPi * kI * twist * x[0];
                }
            }
            out.block(row0, static_cast<Eigen::Index>(p * r), r, r) += local;
        }
    }
    return out;
}

KernelReport flat_section_kernel(const Connection& D, const HermitianMetric& h, double tol, int max_mode) {
    if (!D.background.empty()) throw BundleError("flat_section_kernel: flat connections carry no background");
    const LatticeTorus& t = *D.base();
    const int dim = t.real_dim();
    const int n = t.n();
    const HiggsOp dpp = to_higgs(D, h);
    if (D.is_constant() && h.is_constant()) {
        const auto higgs = components(dpp);
        return constant_kernel(t, components(D), std::vector<bool>(static_cast<std::size_t>(dim), true), &higgs,
                               tol > 0.0 ? tol : 1e-10, max_mode);
    }
    std::vector<bool> all(static_cast<std::size_t>(dim), true), anti(static_cast<std::size_t>(dim), false);
    for (int a = n; a < dim; ++a) anti[a] = true;
    const MatC op = section_operator_matrix(D.A, {}, all);
    const MatC hop = section_operator_matrix(dpp.total(), {}, anti);
    return kernel_from_matrix(op, tol > 0.0 ? tol : 1e-6, &hop);
}

KernelReport higgs_section_kernel(const HiggsOp& dpp, double tol, int max_mode) {
    const LatticeTorus& t = *dpp.base();
    const int dim = t.real_dim();
    const int n = t.n();
    std::vector<bool> anti(static_cast<std::size_t>(dim), false);
    for (int a = n; a < dim; ++a) anti[a] = true;
    if (dpp.is_constant() && dpp.background.empty())
        return constant_kernel(t, components(dpp), anti, nullptr, tol > 0.0 ? tol : 1e-10, max_mode);
    const MatC op = section_operator_matrix(dpp.total(), dpp.background, anti);
    return kernel_from_matrix(op, tol > 0.0 ? tol : 1e-6, nullptr);
}

}  // namespace fh
