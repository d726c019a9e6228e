#pragma once

#include <string>

#include "flathiggs/geometry.hpp"

namespace fh {

class BundleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Central unitary connection form a = sum_j (sum_k slope(j,k) x_k) dx_j, linear in the
// real lattice coordinates x = (u, v).  It is not periodic: it describes a line bundle
// with twisted periodicity, and its curvature is the constant 2-form da.  Added to a
// connection it acts as a times the identity.
class LineBackground {
public:
    LineBackground() = default;
    LineBackground(int n, MatC slope);

    // a = 2 pi i sum flux(j,k) x_k dx_j with integer flux.
    static LineBackground flux(int n, const MatR& flux);
    // Degree-d line bundle on a curve: a = 2 pi i d v du.
    static LineBackground curve_degree(int d);
    // Product of degrees (d1, d2) along the two coordinate curves of a surface.
    static LineBackground surface_degrees(int d1, int d2);

    bool empty() const { return slope_.size() == 0 || slope_.isZero(0.0); }
    const MatC& slope() const { return slope_; }
    LineBackground operator-(const LineBackground& o) const;
    LineBackground operator+(const LineBackground& o) const;
    LineBackground scaled(double s) const;

    // Constant 2-form da, and the pieces del/delbar applied to the (1,0)/(0,1) parts of a.
    FormField curvature(const TorusPtr& base) const;
    FormField derivative_piece(const TorusPtr& base, bool of_antiholomorphic_part, bool antiholomorphic_derivative) const;
    // Gradient of the coefficient of coframe e_a along e_b.
    MatC complex_gradient(const LatticeTorus& t) const;
    // Shift a(x + e_m) - a(x), in lattice coordinates: the 1-form sum_j slope(j,m) dx_j.
    VecC period_shift(int m) const;

private:
    MatC slope_;
};

// D = d + A (+ background) in the global trivialization.
struct Connection {
    FormField A;
    LineBackground background;

    Connection() = default;
    explicit Connection(FormField a, LineBackground bg = {});
    static Connection trivial(const TorusPtr& base, int rank, bool constant = true);

    int rank() const { return A.rows(); }
    const TorusPtr& base() const { return A.base(); }
    bool is_constant() const { return A.is_constant(); }
    FormField holomorphic() const { return A.part(1, 0); }
    FormField antiholomorphic() const { return A.part(0, 1); }
};

// d'' = dbar + B + theta: B a (0,1)-form, theta an End-valued (1,0)-form.
struct HiggsOp {
    FormField B;
    FormField theta;
    LineBackground background;

    HiggsOp() = default;
    HiggsOp(FormField b, FormField th, LineBackground bg = {});
    static HiggsOp trivial(const TorusPtr& base, int rank, bool constant = true);

    int rank() const { return B.rows(); }
    const TorusPtr& base() const { return B.base(); }
    bool is_constant() const { return B.is_constant() && theta.is_constant(); }
    FormField total() const { return B + theta; }
};

// Hermitian bundle metric h(s, t) = t^dagger H s, conjugate-linear in the second slot.
class HermitianMetric {
public:
    HermitianMetric() = default;
    explicit HermitianMetric(FormField H);
    static HermitianMetric identity(const TorusPtr& base, int rank);

    const FormField& H() const { return H_; }
    const FormField& H_inverse() const { return Hinv_; }
    int rank() const { return H_.rows(); }
    const TorusPtr& base() const { return H_.base(); }
    bool is_constant() const { return H_.is_constant(); }

    // h(s, t) pointwise for sections (r x 1 forms of degree 0).
    FormField inner(const FormField& s, const FormField& t) const;
    // h-adjoint of an End-valued form: H^{-1} a^dagger H with the form part conjugated.
    FormField adjoint(const FormField& a) const;
    // f . h, i.e. h'(s, t) = h(f s, t), for h-selfadjoint positive f.
    HermitianMetric conformal(const FormField& f) const;
    // Pullback g* h (s, t) = h(g s, g t).
    HermitianMetric pullback(const FormField& g) const;
    // Largest deviation of H from Hermitian.
    double hermiticity_defect() const;
    double min_eigenvalue() const;

private:
    FormField H_;
    FormField Hinv_;
};

// D = d_h + Theta_h with d_h = d + unitary, delta_h = d + adjoint_form.
struct Decomposition {
    FormField unitary;       // d_h - d
    FormField selfadjoint;   // Theta_h
    FormField adjoint_form;  // delta_h - d
    LineBackground background;

    FormField theta() const { return selfadjoint.part(1, 0); }
    FormField theta_star() const { return selfadjoint.part(0, 1); }
    FormField unitary_10() const { return unitary.part(1, 0); }
    FormField unitary_01() const { return unitary.part(0, 1); }
};

// delta_h: the connection form B with d[h(s,t)] = h(Ds, t) + h(s, delta_h t).
FormField adjoint_connection(const Connection& D, const HermitianMetric& h);
Decomposition decompose(const Connection& D, const HermitianMetric& h);

// I_h and its inverse.
HiggsOp to_higgs(const Connection& D, const HermitianMetric& h);
Connection from_higgs(const HiggsOp& dpp, const HermitianMetric& h);
// (1,0) form of the Chern-type semiconnection del_h with del_h + dbar_B h-unitary.
FormField chern_holomorphic_part(const FormField& B, const HermitianMetric& h);

// Covariant exterior derivative of an End-valued form: d phi + C ^ phi - (-1)^k phi ^ C.
FormField covariant_d(const FormField& C, const FormField& phi);
// Curvature of d + A (+ background).
FormField connection_curvature(const FormField& A, const LineBackground& bg = {});

// Square of d'' = dbar + B + theta (+ background (0,1) part).
FormField higgs_square(const HiggsOp& dpp);
// G_h = (I_h(D))^2.
FormField pseudocurvature(const Connection& D, const HermitianMetric& h);
// F_h = (I_h^{-1}(d''))^2.
FormField curvature_higgs(const HiggsOp& dpp, const HermitianMetric& h);
// d_h^2 + [theta, theta*] + del_h theta + dbar_h theta*, valid for integrable d''.
FormField curvature_higgs_expanded(const HiggsOp& dpp, const HermitianMetric& h);

// I_{f.h}(D) from I_h(D) by the closed conformal-change formula.
HiggsOp conformal_change_higgs(const Connection& D, const HermitianMetric& h, const FormField& f);

struct HiggsIdentityResiduals {
    double del_h_squared = 0.0;
    double del_h_theta_star = 0.0;
    double theta_star_squared = 0.0;
    double max() const;
};
HiggsIdentityResiduals higgs_identities(const HiggsOp& dpp, const HermitianMetric& h);

struct FlatIdentityResiduals {
    double delta_squared = 0.0;
    double dh_theta = 0.0;
    double del_theta = 0.0;
    double delbar_theta_star = 0.0;
    double mixed = 0.0;
    double dh_squared_plus = 0.0;
    double max() const;
};
FlatIdentityResiduals flat_identities(const Connection& D, const HermitianMetric& h);

// Pointwise d[h(s,t)] - h(Ds,t) - h(s, delta_h t), split into (1,0) and (0,1) parts.
double adjoint_identity_defect(const Connection& D, const HermitianMetric& h, const FormField& s,
                               const FormField& t);
// Same for d_h: d[h(s,t)] - h(d_h s, t) - h(s, d_h t).
double unitarity_defect(const Connection& D, const HermitianMetric& h, const FormField& s, const FormField& t);
// Largest pointwise defect of Theta_h being h-selfadjoint.
double selfadjointness_defect(const FormField& a, const HermitianMetric& h);

double flatness_residual(const Connection& D);
double integrability_residual(const HiggsOp& dpp);

// Degrees; g must be Gauduchon (residual below gauduchon_tol).
struct DegreeOptions {
    double gauduchon_tol = 1e-8;
    double residual_tol = 1e-6;
};
double degree(const FormField& B, const LineBackground& bg, const MetricG& g, const HermitianMetric& h,
              const DegreeOptions& opts = {});
double degree_flat(const Connection& D, const MetricG& g, const HermitianMetric& h, const DegreeOptions& opts = {});
double degree_higgs(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h, const DegreeOptions& opts = {});
double degree_via_pseudocurvature(const Connection& D, const MetricG& g, const HermitianMetric& h,
                                  const DegreeOptions& opts = {});
double degree_via_curvature(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h,
                            const DegreeOptions& opts = {});
double slope_flat(const Connection& D, const MetricG& g, const HermitianMetric& h, const DegreeOptions& opts = {});
double slope_higgs(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h, const DegreeOptions& opts = {});

// Induced objects on Hom(E1, E2), acting on column-stacked vec(f) for f: E1 -> E2.
Connection hom_connection(const Connection& D1, const Connection& D2);
HiggsOp hom_higgs(const HiggsOp& d1, const HiggsOp& d2);
HermitianMetric hom_metric(const HermitianMetric& h1, const HermitianMetric& h2);
// vec and its inverse for r2 x r1 matrix-valued forms.
FormField vec_field(const FormField& f);
FormField unvec_field(const FormField& v, int rows, int cols);
// Apply an End(Hom)-valued form to vec(f) and reshape: E(f).
FormField apply_to_hom(const FormField& op, const FormField& f);
// G2 f - f G1 with fiber products (forms of degree 2 times a 0-form).
FormField hom_action(const FormField& left, const FormField& f, const FormField& right);

// Gauge action g^{-1} D g, and the same on Higgs operators.
Connection gauge(const Connection& D, const FormField& g);
HiggsOp gauge(const HiggsOp& dpp, const FormField& g);
// Conjugation of an End-valued form g^{-1} a g.
FormField conjugate_by(const FormField& a, const FormField& g);

// Distance between two Higgs operators up to conjugation, via the traces of
// products of at most two theta components and the mean of B: zero if conjugate
// by a constant gauge.
double higgs_invariant_distance(const HiggsOp& a, const HiggsOp& b);

// Direct sums.
Connection direct_sum(const Connection& a, const Connection& b);
HiggsOp direct_sum(const HiggsOp& a, const HiggsOp& b);
HermitianMetric direct_sum(const HermitianMetric& a, const HermitianMetric& b);
FormField block_diagonal(const FormField& a, const FormField& b);

// Field I/O: little-endian complex64 data plus a JSON sidecar (path + ".json").
void write_field(const std::string& path, const FormField& f, const std::string& role);
FormField read_field(const std::string& path, std::string* role = nullptr);

}  // namespace fh
