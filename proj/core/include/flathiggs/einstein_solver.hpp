#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flathiggs/bundle_calculus.hpp"

namespace fh {

// Closed-form Einstein constants from the slope, for Gauduchon g.
double einstein_constant_flat(double slope, int n, double volume);
double einstein_constant_higgs(double slope, int n, double volume);
double einstein_constant_flat(const Connection& D, const MetricG& g, const HermitianMetric& h);
double einstein_constant_higgs(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h);

// i Lambda_g G_h and i Lambda_g F_h; both h-selfadjoint 0-forms.
FormField mean_curvature_flat(const Connection& D, const MetricG& g, const HermitianMetric& h);
FormField mean_curvature_higgs(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h);

struct EinsteinReport {
    double residual_norm = 0.0;  // L2 norm of K - c id, fibers measured by h
    double c = 0.0;              // (1 / (r Vol)) integral of tr K
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;
    std::string status;          // converged | iteration_cap | blowup | stagnation | evaluated
    double log_f_norm = 0.0;     // sup |log f| of the final f
    // Continuity strategy: (epsilon, sup |log f_epsilon|) along the path.
    std::vector<std::pair<double, double>> epsilon_path;
};

EinsteinReport einstein_residual_flat(const Connection& D, const MetricG& g, const HermitianMetric& h);
EinsteinReport einstein_residual_higgs(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h);

enum class SolverStrategy { Flow, Continuity };

struct SolverSchedule {
    int max_iters = 4000;
    double tol = 1e-9;
    double eta0 = 0.0;  // 0 selects 0.1 / (1 + sup |K|)
    std::vector<double> epsilon_schedule = {1e-1, 1e-2, 1e-3, 1e-4, 0.0};
    SolverStrategy strategy = SolverStrategy::Flow;
    double blowup = 30.0;         // sup |log f| beyond which the run is declared divergent
    bool precondition = true;     // Fourier multiplier 1 / (1 + diffusion * P)
    int continuity_steps = 11;    // geometric epsilon path from 1 to 1e-5
    // Growth of sup |log f_eps| per decade of epsilon treated as divergence.
    double growth_per_decade = 0.5;
    bool newton = true;           // Newton-Krylov steps when the flow stalls
    int krylov_iters = 40;
    // Largest flatness or integrability residual accepted as input.
    double input_tol = 1e-6;
};

// Candidate destabilizing subbundle from a divergent run.
struct Witness {
    MatC candidate;      // eigenvector span of f (constant mode)
    MatC basis;          // nearest exactly invariant subspace
    double distance = 0.0;                  // |P_candidate - P_basis|
    double candidate_invariance = 0.0;      // invariance residual of the candidate itself
    double slope = 0.0;
    double total_slope = 0.0;
    bool has_invariant_complement = false;
    // The witness slope is not strictly on the stable side of the total slope.
    bool violates_stability = false;
    // Lattice mode: projector field on the dominant eigenvector of f, and its invariance residual.
    FormField projector;
    double projector_invariance = 0.0;
};

struct EinsteinSolution {
    HermitianMetric h;
    // Conformally normalized starting metric; h = f . reference with det f = 1.
    HermitianMetric reference;
    EinsteinReport report;
    std::optional<Witness> witness;
};

EinsteinSolution solve_flat_einstein(const Connection& D, const MetricG& g, const HermitianMetric& h0,
                                     const SolverSchedule& schedule = {});
EinsteinSolution solve_higgs_einstein(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h0,
                                      const SolverSchedule& schedule = {});

// Einstein metric e^f h for phi g, given Einstein h for g.
struct ConformalTransfer {
    HermitianMetric h;
    FormField f;
    double c = 0.0;
};
ConformalTransfer conformal_transfer_flat(const Connection& D, const MetricG& g, const HermitianMetric& h,
                                          const FormField& phi, double einstein_tol = 1e-6);
ConformalTransfer conformal_transfer_higgs(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h,
                                           const FormField& phi, double einstein_tol = 1e-6);

// Largest pointwise |H1^{-1} H2 - lambda| / lambda with lambda the mean eigenvalue ratio.
double uniqueness_probe(const HermitianMetric& h1, const HermitianMetric& h2);

// Numerical kernel of a first-order operator on sections.
struct KernelReport {
    std::vector<double> smallest_singular_values;  // ascending
    int kernel_dimension = 0;
    // Largest |d''_h s| / |s| over the numerical kernel.
    double max_higgs_ratio = 0.0;
};

// Kernel of D on sections and the size of d''_h = I_h(D) on it.
KernelReport flat_section_kernel(const Connection& D, const HermitianMetric& h, double tol = -1.0,
                                 int max_mode = 2);
// Kernel of d'' on sections. Lattice mode supports a degree background on curves.
KernelReport higgs_section_kernel(const HiggsOp& dpp, double tol = -1.0, int max_mode = 2);

// Dense matrix of s -> sum_a (delta_a(a) d_a s + M_a s) e_a on lattice sections, rows ordered
// (point, slot, fiber row).  `derivative_slots` selects which slots carry the derivative;
// a background must be a degree background on a curve (twisted periodicity in v).
MatC section_operator_matrix(const FormField& M, const LineBackground& bg, const std::vector<bool>& derivative_slots);

}  // namespace fh
