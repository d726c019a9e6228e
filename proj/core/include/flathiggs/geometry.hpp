#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "flathiggs/form.hpp"

namespace fh {

// Hermitian metric on the torus: g_{a bbar} per grid point, with
// omega = i sum g_{a bbar} dz^a ^ dzbar^b and Lambda(omega) = n.
class MetricG {
public:
    MetricG() = default;
    explicit MetricG(FormField g);

    static MetricG euclidean(TorusPtr base, double scale = 1.0);
    // Constant multiple of the identity chosen so that Vol_g(X) = volume.
    static MetricG with_volume(TorusPtr base, double volume);

    const TorusPtr& base() const { return g_.base(); }
    const LatticeTorus& torus() const { return g_.torus(); }
    const FormField& g() const { return g_; }
    const FormField& g_inverse() const { return ginv_; }
    bool is_constant() const { return g_.is_constant(); }
    int n() const { return g_.torus().n(); }

    MetricG conformal(const FormField& phi) const;
    MetricG scaled(double s) const;

    // Density of vol_g = omega^n / n! with respect to Lebesgue measure.
    double volume_density(std::size_t p) const;
    double volume() const;
    // Kaehler form as a scalar 2-form.
    FormField omega() const;
    FormField omega_power(int k) const;
    // Hermitian Gram matrix of the coframe (dz, dzbar) at a point.
    MatC coframe_gram(std::size_t p) const;

private:
    FormField g_;
    FormField ginv_;
    std::vector<double> density_;
};

// Lambda_g: contraction of the (1,1) part of a 2-form against omega_g.
FormField lambda_contract(const FormField& f, const MetricG& g);

// Hodge star on 2-forms of a complex surface; *^2 = 1 there.
FormField hodge_star(const FormField& f, const MetricG& g);

// Integral of a scalar 0-form against vol_g, or of a scalar top form.
cd integrate(const FormField& f, const MetricG& g);

// Pointwise Hermitian inner product induced by g on forms (Frobenius on fibers).
FormField pointwise_inner(const FormField& a, const FormField& b, const MetricG& g);
double l2_norm(const FormField& a, const MetricG& g);
// Same, with fibers measured by a bundle metric H: |phi|^2 = tr(H^{1/2} phi H^{-1/2} (..)^dagger).
double l2_norm_h(const FormField& a, const FormField& H, const MetricG& g);

// Coefficient of the top form relative to Lebesgue measure.
cd top_form_factor(int n);

// P(f) = i Lambda_g dbar d f on scalar functions.
FormField operator_P(const FormField& f, const MetricG& g);

double gauduchon_residual(const MetricG& g);

struct SolveOptions {
    int max_iters = 400;
    double tol = 1e-11;
    int restart = 60;
};

struct GauduchonResult {
    FormField phi;
    double residual_before = 0.0;
    double residual_after = 0.0;
    int iterations = 0;
};

// Conformal factor phi > 0 making phi * g Gauduchon (n = 2), normalized so
// that the integral of phi against vol_g equals Vol_g(X).
GauduchonResult gauduchon_factor(const MetricG& g, const SolveOptions& opts = {});

struct SolvePResult {
    FormField f;
    double c = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

// Solve P(f) = rhs - c with mean-zero f.
SolvePResult solve_P(const FormField& rhs, const MetricG& g, const SolveOptions& opts = {});

// Restarted GMRES with a right preconditioner on real vectors.
struct GmresResult {
    std::vector<double> x;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};
using LinearMap = std::function<std::vector<double>(const std::vector<double>&)>;
GmresResult gmres(const LinearMap& A, const LinearMap& M_inv, const std::vector<double>& b, const SolveOptions& opts);

// Real scalar function helpers.
FormField real_scalar(TorusPtr base, const std::vector<double>& values);
std::vector<double> real_values(const FormField& f);

// Fourier multiplier applied to every channel of a lattice field.
FormField fourier_multiply(const FormField& f, const std::function<double(std::size_t)>& symbol);

// |k|^2-type symbol of -sum g^{ba} d_a d_bbar for a constant metric.
std::vector<double> laplace_symbol(const LatticeTorus& t, const MatC& g_inv);

}  // namespace fh
