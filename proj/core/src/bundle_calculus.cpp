#include "flathiggs/bundle_calculus.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace fh {

// ---------------------------------------------------------------- background

LineBackground::LineBackground(int n, MatC slope) : slope_(std::move(slope)) {
    if (slope_.rows() != 2 * n || slope_.cols() != 2 * n) throw BundleError("background slope must be 2n x 2n");
}

LineBackground LineBackground::flux(int n, const MatR& flux) {
    return LineBackground(n, (2.0 * kPi * kI) * flux.cast<cd>());
}

LineBackground LineBackground::curve_degree(int d) {
    MatR f = MatR::Zero(2, 2);
    f(0, 1) = d;
    return flux(1, f);
}

LineBackground LineBackground::surface_degrees(int d1, int d2) {
    MatR f = MatR::Zero(4, 4);
    f(0, 2) = d1;
    f(1, 3) = d2;
    return flux(2, f);
}

LineBackground LineBackground::operator+(const LineBackground& o) const {
    if (slope_.size() == 0) return o;
    if (o.slope_.size() == 0) return *this;
    return LineBackground(static_cast<int>(slope_.rows() / 2), slope_ + o.slope_);
}

LineBackground LineBackground::operator-(const LineBackground& o) const { return *this + o.scaled(-1.0); }

LineBackground LineBackground::scaled(double s) const {
    if (slope_.size() == 0) return *this;
    return LineBackground(static_cast<int>(slope_.rows() / 2), s * slope_);
}

MatC LineBackground::complex_gradient(const LatticeTorus& t) const {
    const MatC K = t.axis_to_complex().inverse();
    return K * slope_ * K.transpose();
}

namespace {

FormField gradient_two_form(const TorusPtr& base, const MatC& grad, int a_type, int b_type) {
    const int n = base->n();
    FormField out = FormField::zeros(base, 2, 1, 1, true);
    for (int a = 0; a < 2 * n; ++a) {
        if (a_type >= 0 && (a >= n) != (a_type == 1)) continue;
        for (int b = 0; b < 2 * n; ++b) {
            if (b_type >= 0 && (b >= n) != (b_type == 1)) continue;
            if (a == b) continue;
            const unsigned ma = 1u << a;
            const unsigned mb = 1u << b;
            out.block(0, out.slot_of(ma | mb))[0] += static_cast<double>(wedge_sign(mb, ma)) * grad(a, b);
        }
    }
    return out;
}

}  // namespace

FormField LineBackground::curvature(const TorusPtr& base) const {
    if (slope_.size() == 0) return FormField::zeros(base, 2, 1, 1, true);
    return gradient_two_form(base, complex_gradient(*base), -1, -1);
}

FormField LineBackground::derivative_piece(const TorusPtr& base, bool of_antiholomorphic_part,
                                           bool antiholomorphic_derivative) const {
    if (slope_.size() == 0) return FormField::zeros(base, 2, 1, 1, true);
    return gradient_two_form(base, complex_gradient(*base), of_antiholomorphic_part ? 1 : 0,
                             antiholomorphic_derivative ? 1 : 0);
}

VecC LineBackground::period_shift(int m) const {
    if (slope_.size() == 0) return VecC();
    return slope_.col(m);
}

// ---------------------------------------------------------------- objects

Connection::Connection(FormField a, LineBackground bg) : A(std::move(a)), background(std::move(bg)) {
    if (A.degree() != 1 || A.rows() != A.cols()) throw BundleError("connection form must be an End-valued 1-form");
}

Connection Connection::trivial(const TorusPtr& base, int rank, bool constant) {
    return Connection(FormField::zeros(base, 1, rank, rank, constant));
}

HiggsOp::HiggsOp(FormField b, FormField th, LineBackground bg)
    : B(std::move(b)), theta(std::move(th)), background(std::move(bg)) {
    if (B.degree() != 1 || theta.degree() != 1) throw BundleError("Higgs operator parts must be 1-forms");
    if (B.rows() != B.cols() || theta.rows() != B.rows() || theta.cols() != B.cols())
        throw BundleError("Higgs operator rank mismatch");
    require_compatible(B, theta);
    if (B.part(1, 0).max_abs() > 0.0) throw BundleError("semiconnection part must be of type (0,1)");
    if (theta.part(0, 1).max_abs() > 0.0) throw BundleError("Higgs field must be of type (1,0)");
}

HiggsOp HiggsOp::trivial(const TorusPtr& base, int rank, bool constant) {
    return HiggsOp(FormField::zeros(base, 1, rank, rank, constant), FormField::zeros(base, 1, rank, rank, constant));
}

HermitianMetric::HermitianMetric(FormField H) : H_(std::move(H)) {
    if (H_.degree() != 0 || H_.rows() != H_.cols()) throw BundleError("bundle metric must be a square 0-form");
    for (std::size_t p = 0; p < H_.npts(); ++p) {
        MatC m = H_.matrix(p, 0);
        if ((m - m.adjoint()).norm() > 1e-9 * (1.0 + m.norm())) throw BundleError("bundle metric is not Hermitian");
        m = 0.5 * (m + m.adjoint());
        H_.mat(p, 0) = m;
        Eigen::SelfAdjointEigenSolver<MatC> es(m);
        if (es.eigenvalues().minCoeff() <= 0.0) throw BundleError("bundle metric is not positive definite");
    }
    Hinv_ = inverse(H_);
}

HermitianMetric HermitianMetric::identity(const TorusPtr& base, int rank) {
    return HermitianMetric(FormField::identity(base, rank, true));
}

FormField HermitianMetric::inner(const FormField& s, const FormField& t) const {
    return wedge(conj_transpose(t), wedge(H_, s));
}

FormField HermitianMetric::adjoint(const FormField& a) const {
    return wedge(wedge(Hinv_, conj_transpose(a)), H_);
}

HermitianMetric HermitianMetric::conformal(const FormField& f) const {
    FormField m = wedge(H_, f);
    return HermitianMetric(0.5 * (m + adjoint_matrix(m)));
}

HermitianMetric HermitianMetric::pullback(const FormField& g) const {
    FormField m = wedge(wedge(adjoint_matrix(g), H_), g);
    return HermitianMetric(0.5 * (m + adjoint_matrix(m)));
}

double HermitianMetric::hermiticity_defect() const { return (H_ - adjoint_matrix(H_)).max_abs(); }

double HermitianMetric::min_eigenvalue() const {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < H_.npts(); ++p) {
        Eigen::SelfAdjointEigenSolver<MatC> es(H_.matrix(p, 0));
        lo = std::min(lo, es.eigenvalues().minCoeff());
    }
    return lo;
}

// ---------------------------------------------------------------- decomposition

namespace {

void require_match(const FormField& a, const HermitianMetric& h) {
    if (a.rows() != h.rank()) throw BundleError("rank of connection and metric differ");
    require_same_base(a.torus(), h.H().torus());
}

FormField log_derivative(const HermitianMetric& h, int which) {
    const FormField& H = h.H();
    FormField dH = which == 0 ? d(H) : (which == 1 ? del(H) : delbar(H));
    return wedge(h.H_inverse(), dH);
}

}  // namespace

FormField adjoint_connection(const Connection& D, const HermitianMetric& h) {
    require_match(D.A, h);
    return log_derivative(h, 0) - h.adjoint(D.A);
}

Decomposition decompose(const Connection& D, const HermitianMetric& h) {
    Decomposition out;
    out.adjoint_form = adjoint_connection(D, h);
    out.unitary = 0.5 * (D.A + out.adjoint_form);
    out.selfadjoint = 0.5 * (D.A - out.adjoint_form);
    out.background = D.background;
    return out;
}

HiggsOp to_higgs(const Connection& D, const HermitianMetric& h) {
    Decomposition dec = decompose(D, h);
    return HiggsOp(dec.unitary_01(), dec.theta(), D.background);
}

FormField chern_holomorphic_part(const FormField& B, const HermitianMetric& h) {
    require_match(B, h);
    return log_derivative(h, 1) - h.adjoint(B);
}

Connection from_higgs(const HiggsOp& dpp, const HermitianMetric& h) {
    FormField e = chern_holomorphic_part(dpp.B, h);
    FormField theta_star = h.adjoint(dpp.theta);
    return Connection(e + dpp.theta + dpp.B + theta_star, dpp.background);
}

FormField covariant_d(const FormField& C, const FormField& phi) {
    const double sign = (phi.degree() % 2 == 0) ? 1.0 : -1.0;
    return d(phi) + wedge(C, phi) - cd(sign) * wedge(phi, C);
}

namespace {

// del_C phi or delbar_C phi with C of the matching type.
FormField covariant_part(const FormField& C, const FormField& phi, bool antiholomorphic) {
    const double sign = (phi.degree() % 2 == 0) ? 1.0 : -1.0;
    FormField dphi = antiholomorphic ? delbar(phi) : del(phi);
    return dphi + wedge(C, phi) - cd(sign) * wedge(phi, C);
}

FormField background_times_identity(const FormField& kappa, int r) { return times_identity(kappa, r); }

}  // namespace

FormField connection_curvature(const FormField& A, const LineBackground& bg) {
    FormField F = d(A) + wedge(A, A);
    if (!bg.empty()) F += background_times_identity(bg.curvature(A.base()), A.rows());
    return F;
}

FormField higgs_square(const HiggsOp& dpp) {
    FormField T = dpp.total();
    FormField S = delbar(T) + wedge(T, T);
    if (!dpp.background.empty())
        S += background_times_identity(dpp.background.derivative_piece(dpp.base(), true, true), dpp.rank());
    return S;
}

FormField pseudocurvature(const Connection& D, const HermitianMetric& h) { return higgs_square(to_higgs(D, h)); }

FormField curvature_higgs(const HiggsOp& dpp, const HermitianMetric& h) {
    Connection Dh = from_higgs(dpp, h);
    return connection_curvature(Dh.A, Dh.background);
}

FormField curvature_higgs_expanded(const HiggsOp& dpp, const HermitianMetric& h) {
    FormField e = chern_holomorphic_part(dpp.B, h);
    FormField U = e + dpp.B;
    FormField theta_star = h.adjoint(dpp.theta);
    FormField dh2 = connection_curvature(U, dpp.background);
    FormField comm = wedge(dpp.theta, theta_star) + wedge(theta_star, dpp.theta);
    return dh2 + comm + covariant_part(e, dpp.theta, false) + covariant_part(dpp.B, theta_star, true);
}

HiggsOp conformal_change_higgs(const Connection& D, const HermitianMetric& h, const FormField& f) {
    if (f.degree() != 0 || f.rows() != D.rank()) throw BundleError("conformal change needs an endomorphism field");
    FormField fh_adj = h.adjoint(f);
    if ((fh_adj - f).max_abs() > 1e-8 * (1.0 + f.max_abs())) throw BundleError("conformal change must be h-selfadjoint");
    for (std::size_t p = 0; p < f.npts(); ++p) {
        Eigen::ComplexEigenSolver<MatC> es(f.matrix(p, 0));
        for (int i = 0; i < es.eigenvalues().size(); ++i)
            if (es.eigenvalues()(i).real() <= 0.0) throw BundleError("conformal change must be positive");
    }
    Decomposition dec = decompose(D, h);
    FormField finv = inverse(f);
    FormField theta = dec.theta();
    FormField theta_star = dec.theta_star();
    FormField delbar_h_f = covariant_part(dec.unitary_01(), f, true);
    FormField del_h_f = covariant_part(dec.unitary_10(), f, false);
    FormField comm_star = wedge(theta_star, f) - wedge(f, theta_star);
    FormField comm = wedge(theta, f) - wedge(f, theta);
    FormField B = dec.unitary_01() + 0.5 * wedge(finv, delbar_h_f - comm_star);
    FormField th = theta - 0.5 * wedge(finv, del_h_f - comm);
    return HiggsOp(B, th, D.background);
}

double HiggsIdentityResiduals::max() const {
    return std::max({del_h_squared, del_h_theta_star, theta_star_squared});
}

HiggsIdentityResiduals higgs_identities(const HiggsOp& dpp, const HermitianMetric& h) {
    HiggsIdentityResiduals r;
    FormField e = chern_holomorphic_part(dpp.B, h);
    FormField theta_star = h.adjoint(dpp.theta);
    FormField dd = del(e) + wedge(e, e);
    if (!dpp.background.empty())
        dd += background_times_identity(dpp.background.derivative_piece(dpp.base(), false, false), dpp.rank());
    r.del_h_squared = rms_norm(dd);
    r.del_h_theta_star = rms_norm(covariant_part(e, theta_star, false));
    r.theta_star_squared = rms_norm(wedge(theta_star, theta_star));
    return r;
}

double FlatIdentityResiduals::max() const {
    return std::max({delta_squared, dh_theta, del_theta, delbar_theta_star, mixed, dh_squared_plus});
}

FlatIdentityResiduals flat_identities(const Connection& D, const HermitianMetric& h) {
    FlatIdentityResiduals r;
    Decomposition dec = decompose(D, h);
    const FormField& U = dec.unitary;
    const FormField& Th = dec.selfadjoint;
    FormField u10 = dec.unitary_10();
    FormField u01 = dec.unitary_01();
    FormField theta = dec.theta();
    FormField theta_star = dec.theta_star();
    r.delta_squared = rms_norm(connection_curvature(dec.adjoint_form, D.background));
    r.dh_theta = rms_norm(covariant_d(U, Th));
    r.del_theta = rms_norm(covariant_part(u10, theta, false));
    r.delbar_theta_star = rms_norm(covariant_part(u01, theta_star, true));
    r.mixed = rms_norm(covariant_part(u10, theta_star, false) + covariant_part(u01, theta, true));
    r.dh_squared_plus = rms_norm(connection_curvature(U, D.background) + wedge(Th, Th));
    return r;
}

namespace {

FormField section_derivative(const FormField& C, const FormField& s) { return d(s) + wedge(C, s); }

}  // namespace

double adjoint_identity_defect(const Connection& D, const HermitianMetric& h, const FormField& s,
                               const FormField& t) {
    FormField B = adjoint_connection(D, h);
    FormField lhs = d(h.inner(s, t));
    FormField rhs = h.inner(section_derivative(D.A, s), t) + h.inner(s, section_derivative(B, t));
    return (lhs - rhs).max_abs();
}

double unitarity_defect(const Connection& D, const HermitianMetric& h, const FormField& s, const FormField& t) {
    Decomposition dec = decompose(D, h);
    FormField lhs = d(h.inner(s, t));
    FormField rhs = h.inner(section_derivative(dec.unitary, s), t) + h.inner(s, section_derivative(dec.unitary, t));
    return (lhs - rhs).max_abs();
}

double selfadjointness_defect(const FormField& a, const HermitianMetric& h) { return (a - h.adjoint(a)).max_abs(); }

double flatness_residual(const Connection& D) { return rms_norm(connection_curvature(D.A, D.background)); }

double integrability_residual(const HiggsOp& dpp) { return rms_norm(higgs_square(dpp)); }

// ---------------------------------------------------------------- degrees

namespace {

void require_gauduchon(const MetricG& g, const DegreeOptions& opts) {
    if (g.is_constant() || g.n() == 1) return;
    const double r = gauduchon_residual(g);
    if (r > opts.gauduchon_tol) throw BundleError("base metric is not Gauduchon; rescale it with gauduchon_factor");
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

}  // namespace

double degree(const FormField& B, const LineBackground& bg, const MetricG& g, const HermitianMetric& h,
              const DegreeOptions& opts) {
    require_gauduchon(g, opts);
    const int n = g.n();
    HiggsOp holo(B, FormField::zeros(B.base(), 1, B.rows(), B.cols(), B.is_constant()), bg);
    if (integrability_residual(holo) > opts.residual_tol) throw BundleError("not a holomorphic structure");
    FormField A = chern_holomorphic_part(B, h) + B;
    FormField trF = trace(connection_curvature(A, bg));
    FormField top = n == 1 ? trF : wedge(trF, g.omega_power(n - 1));
    const cd val = (kI / (2.0 * kPi)) * integrate(top, g);
    return val.real();
}

double degree_flat(const Connection& D, const MetricG& g, const HermitianMetric& h, const DegreeOptions& opts) {
    if (flatness_residual(D) > opts.residual_tol) throw BundleError("connection is not flat");
    return degree(D.antiholomorphic(), D.background, g, h, opts);
}

double degree_higgs(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h, const DegreeOptions& opts) {
    if (integrability_residual(dpp) > opts.residual_tol) throw BundleError("Higgs operator is not integrable");
    return degree(dpp.B, dpp.background, g, h, opts);
}

double degree_via_pseudocurvature(const Connection& D, const MetricG& g, const HermitianMetric& h,
                                  const DegreeOptions& opts) {
    require_gauduchon(g, opts);
    if (flatness_residual(D) > opts.residual_tol) throw BundleError("connection is not flat");
    const int n = g.n();
    FormField trLG = trace(lambda_contract(pseudocurvature(D, h), g));
    const cd val = -(kI / (n * kPi)) * factorial(n) * integrate(trLG, g);
    return val.real();
}

double degree_via_curvature(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h,
                            const DegreeOptions& opts) {
    require_gauduchon(g, opts);
    if (integrability_residual(dpp) > opts.residual_tol) throw BundleError("Higgs operator is not integrable");
    const int n = g.n();
    FormField trLF = trace(lambda_contract(curvature_higgs(dpp, h), g));
    const cd val = (kI / (2.0 * n * kPi)) * factorial(n) * integrate(trLF, g);
    return val.real();
}

double slope_flat(const Connection& D, const MetricG& g, const HermitianMetric& h, const DegreeOptions& opts) {
    return degree_flat(D, g, h, opts) / D.rank();
}

double slope_higgs(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h, const DegreeOptions& opts) {
    return degree_higgs(dpp, g, h, opts) / dpp.rank();
}

// ---------------------------------------------------------------- Hom objects

namespace {

// kron(I_{r1}, left) - kron(right^T, I_{r2}) slotwise.
FormField hom_lift(const FormField& left, const FormField& right) {
    require_compatible(left, right);
    if (left.degree() != right.degree()) throw BundleError("hom lift needs forms of equal degree");
    const int r2 = left.rows();
    const int r1 = right.rows();
    const bool constant = left.is_constant() && right.is_constant();
    FormField out(left.base(), left.degree(), r1 * r2, r1 * r2, constant);
    const MatC I2 = MatC::Identity(r2, r2);
    for (std::size_t p = 0; p < out.npts(); ++p)
        for (int s = 0; s < out.nslots(); ++s) {
            const MatC L = left.at(p, s);
            const MatC R = right.at(p, s);
            MatC m = MatC::Zero(r1 * r2, r1 * r2);
            for (int i = 0; i < r1; ++i)
                for (int j = 0; j < r1; ++j) {
                    m.block(i * r2, j * r2, r2, r2) -= R(j, i) * I2;
                    if (i == j) m.block(i * r2, j * r2, r2, r2) += L;
                }
            out.mat(p, s) = m;
        }
    return out;
}

}  // namespace

Connection hom_connection(const Connection& D1, const Connection& D2) {
    return Connection(hom_lift(D2.A, D1.A), D2.background - D1.background);
}

HiggsOp hom_higgs(const HiggsOp& d1, const HiggsOp& d2) {
    return HiggsOp(hom_lift(d2.B, d1.B), hom_lift(d2.theta, d1.theta), d2.background - d1.background);
}

HermitianMetric hom_metric(const HermitianMetric& h1, const HermitianMetric& h2) {
    const FormField& H1i = h1.H_inverse();
    const FormField& H2 = h2.H();
    require_compatible(H1i, H2);
    const int r1 = h1.rank();
    const int r2 = h2.rank();
    const bool constant = H1i.is_constant() && H2.is_constant();
    FormField out(H2.base(), 0, r1 * r2, r1 * r2, constant);
    for (std::size_t p = 0; p < out.npts(); ++p) {
        const MatC a = H1i.at(p).transpose();
        const MatC b = H2.at(p);
        MatC m(r1 * r2, r1 * r2);
        for (int i = 0; i < r1; ++i)
            for (int j = 0; j < r1; ++j) m.block(i * r2, j * r2, r2, r2) = a(i, j) * b;
        out.mat(p, 0) = m;
    }
    return HermitianMetric(out);
}

FormField vec_field(const FormField& f) {
    FormField out(f.base(), f.degree(), f.rows() * f.cols(), 1, f.is_constant());
    for (std::size_t p = 0; p < f.npts(); ++p)
        for (int s = 0; s < f.nslots(); ++s) {
            const MatC m = f.matrix(p, s);
            for (int j = 0; j < f.cols(); ++j)
                for (int i = 0; i < f.rows(); ++i) out.block(p, s)[i + j * f.rows()] = m(i, j);
        }
    return out;
}

FormField unvec_field(const FormField& v, int rows, int cols) {
    if (v.cols() != 1 || v.rows() != rows * cols) throw BundleError("unvec shape mismatch");
    FormField out(v.base(), v.degree(), rows, cols, v.is_constant());
    for (std::size_t p = 0; p < v.npts(); ++p)
        for (int s = 0; s < v.nslots(); ++s)
            for (int j = 0; j < cols; ++j)
                for (int i = 0; i < rows; ++i) out.mat(p, s)(i, j) = v.block(p, s)[i + j * rows];
    return out;
}

FormField apply_to_hom(const FormField& op, const FormField& f) {
    return unvec_field(wedge(op, vec_field(f)), f.rows(), f.cols());
}

FormField hom_action(const FormField& left, const FormField& f, const FormField& right) {
    const double sign = (left.degree() * f.degree()) % 2 == 0 ? 1.0 : -1.0;
    return wedge(left, f) - cd(sign) * wedge(f, right);
}

// ---------------------------------------------------------------- gauge

FormField conjugate_by(const FormField& a, const FormField& g) { return wedge(wedge(inverse(g), a), g); }

Connection gauge(const Connection& D, const FormField& g) {
    return Connection(conjugate_by(D.A, g) + wedge(inverse(g), d(g)), D.background);
}

HiggsOp gauge(const HiggsOp& dpp, const FormField& g) {
    return HiggsOp(conjugate_by(dpp.B, g) + wedge(inverse(g), delbar(g)), conjugate_by(dpp.theta, g),
                   dpp.background);
}

double higgs_invariant_distance(const HiggsOp& a, const HiggsOp& b) {
    std::vector<MatC> ca, cb;
    FormField ma = a.total().mean();
    FormField mb = b.total().mean();
    for (int s = 0; s < ma.nslots(); ++s) {
        ca.push_back(ma.matrix(0, s));
        cb.push_back(mb.matrix(0, s));
    }
    double dist = 0.0;
    for (std::size_t i = 0; i < ca.size(); ++i) {
        dist = std::max(dist, std::abs(ca[i].trace() - cb[i].trace()));
        for (std::size_t j = 0; j < ca.size(); ++j)
            dist = std::max(dist, std::abs((ca[i] * ca[j]).trace() - (cb[i] * cb[j]).trace()));
    }
    return dist;
}

// ---------------------------------------------------------------- direct sums

FormField block_diagonal(const FormField& a, const FormField& b) {
    require_compatible(a, b);
    if (a.degree() != b.degree()) throw BundleError("direct sum of forms of different degree");
    const bool constant = a.is_constant() && b.is_constant();
    FormField out(a.base(), a.degree(), a.rows() + b.rows(), a.cols() + b.cols(), constant);
    for (std::size_t p = 0; p < out.npts(); ++p)
        for (int s = 0; s < out.nslots(); ++s) {
            auto m = out.mat(p, s);
            m.topLeftCorner(a.rows(), a.cols()) = a.at(p, s);
            m.bottomRightCorner(b.rows(), b.cols()) = b.at(p, s);
        }
    return out;
}

namespace {
void require_same_background(const LineBackground& a, const LineBackground& b) {
    if ((a - b).empty()) return;
    throw BundleError("direct sum needs a common central background");
}
}  // namespace

Connection direct_sum(const Connection& a, const Connection& b) {
    require_same_background(a.background, b.background);
    return Connection(block_diagonal(a.A, b.A), a.background);
}

HiggsOp direct_sum(const HiggsOp& a, const HiggsOp& b) {
    require_same_background(a.background, b.background);
    return HiggsOp(block_diagonal(a.B, b.B), block_diagonal(a.theta, b.theta), a.background);
}

HermitianMetric direct_sum(const HermitianMetric& a, const HermitianMetric& b) {
    return HermitianMetric(block_diagonal(a.H(), b.H()));
}

// ---------------------------------------------------------------- I/O

namespace {

void put_le_float(std::ofstream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                          static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

float get_le_float(std::ifstream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw BundleError("field data truncated");
    const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void write_field(const std::string& path, const FormField& f, const std::string& role) {
    const auto& t = f.torus();
    const auto& basis = ExteriorBasis::get(t.n());
    nlohmann::json meta;
    meta["n"] = t.n();
    meta["dims"] = t.dims();
    nlohmann::json tau = nlohmann::json::array();
    for (int i = 0; i < t.n(); ++i)
        for (int j = 0; j < t.n(); ++j) tau.push_back({t.tau()(i, j).real(), t.tau()(i, j).imag()});
    meta["tau"] = tau;
    meta["degree"] = f.degree();
    nlohmann::json bideg = nlohmann::json::array();
    for (int s = 0; s < f.nslots(); ++s)
        bideg.push_back({basis.holomorphic_count(f.mask(s)), basis.antiholomorphic_count(f.mask(s))});
    meta["bidegree"] = bideg;
    meta["rank"] = f.rows();
    meta["rows"] = f.rows();
    meta["cols"] = f.cols();
    meta["role"] = role;
    meta["mode"] = f.is_constant() ? "constant" : "lattice";
    meta["layout"] = "point,slot,row-major fiber; complex64 little-endian";

    std::ofstream os(path, std::ios::binary);
    if (!os) throw BundleError("cannot open " + path);
    for (const cd& v : f.data()) {
        put_le_float(os, static_cast<float>(v.real()));
        put_le_float(os, static_cast<float>(v.imag()));
    }
    std::ofstream js(path + ".json");
    if (!js) throw BundleError("cannot open " + path + ".json");
    js << meta.dump(2) << "\n";
}

FormField read_field(const std::string& path, std::string* role) {
    std::ifstream js(path + ".json");
    if (!js) throw BundleError("missing sidecar " + path + ".json");
    nlohmann::json meta = nlohmann::json::parse(js);
    const int n = meta.at("n").get<int>();
    std::vector<int> dims = meta.at("dims").get<std::vector<int>>();
    MatC tau(n, n);
    const auto& tj = meta.at("tau");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) tau(i, j) = cd(tj.at(i * n + j).at(0).get<double>(), tj.at(i * n + j).at(1).get<double>());
    auto base = LatticeTorus::make(n, dims, tau);
    const bool constant = meta.at("mode").get<std::string>() == "constant";
    FormField f(base, meta.at("degree").get<int>(), meta.at("rows").get<int>(), meta.at("cols").get<int>(), constant);
    std::ifstream is(path, std::ios::binary);
    if (!is) throw BundleError("cannot open " + path);
    for (cd& v : f.data()) {
        const float re = get_le_float(is);
        const float im = get_le_float(is);
        v = cd(re, im);
    }
    if (role) *role = meta.value("role", "");
    return f;
}

}  // namespace fh
