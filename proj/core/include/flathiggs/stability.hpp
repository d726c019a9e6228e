#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flathiggs/bundle_calculus.hpp"

namespace fh {

enum class Classification { Stable, SemistableNotStable, Polystable, Unstable };
std::string to_string(Classification c);

// Which way a subbundle slope must differ from the total slope for stability.
//   SubslopeLarger:  mu(F) > mu(E), the flat-side definition used here.
//   SubslopeSmaller: mu(F) < mu(E), the usual holomorphic convention (Higgs side).
enum class SlopeConvention { SubslopeLarger, SubslopeSmaller };

struct StabilityOptions {
    double invariance_tol = 1e-8;
    double slope_tie = 1e-8;
    // Flip the flat-side convention to SubslopeSmaller.
    bool conventional_flat = false;
};

struct InvariantSubspace {
    MatC basis;  // orthonormal columns
    double slope = 0.0;
    double invariance_residual = 0.0;
};

struct SubbundleReport {
    std::vector<InvariantSubspace> subspaces;
    double slope = 0.0;
    Classification classification = Classification::Stable;
    std::optional<InvariantSubspace> witness;
};

// Component matrices of a constant-mode object along the coframe.
std::vector<MatC> components(const Connection& D);
std::vector<MatC> components(const HiggsOp& dpp);

// Largest |(1 - P_W) M P_W| over the family, P_W the orthogonal projector on span(basis).
double invariance_residual(const std::vector<MatC>& family, const MatC& basis);

// Smallest subspace containing span(basis) and invariant under the family.
MatC invariant_hull(const std::vector<MatC>& family, const MatC& basis, double tol = 1e-8);

// Proper nonzero invariant subspaces of a commuting family, as the invariant hulls of
// subsets of a basis adapted to the joint generalized eigenspaces and their kernel flags.
// Complete up to the choice of basis inside subspaces where every vector is invariant.
std::vector<MatC> invariant_subspaces(const std::vector<MatC>& family, double tol = 1e-8);
std::vector<MatC> invariant_subspaces(const Connection& D, double tol = 1e-8);
std::vector<MatC> invariant_subspaces(const HiggsOp& dpp, double tol = 1e-8);

// Restriction to an invariant subspace W = span(basis): components Q^+ M Q.
Connection restrict_to(const Connection& D, const MatC& basis);
HiggsOp restrict_to(const HiggsOp& dpp, const MatC& basis);
HermitianMetric restrict_metric(const HermitianMetric& h, const MatC& basis);
// h-orthonormal basis of the h-orthogonal complement of span(basis).
MatC orthogonal_complement(const HermitianMetric& h, const MatC& basis);

// Generic classification from a family and a slope oracle on subspaces.
SubbundleReport classify(const std::vector<MatC>& family, double total_slope,
                         const std::function<double(const MatC&)>& slope_of, SlopeConvention convention,
                         const StabilityOptions& opts = {});

SubbundleReport classify_flat(const Connection& D, const MetricG& g, const HermitianMetric& h,
                              const StabilityOptions& opts = {});
SubbundleReport classify_higgs(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h,
                               const StabilityOptions& opts = {});

// Intertwiners f: E1 -> E2 with D2 f = f D1, searched among f = exp(2 pi i k.x) F
// for integer k with |k_j| <= max_mode.
struct Intertwiner {
    std::vector<int> mode;
    MatC F;
};
// `derivative_slots` marks the coframe slots carrying the derivative of f: all of them for
// connections (empty means all), only the (0,1) slots for Higgs operators.
std::vector<Intertwiner> intertwiners(const std::vector<MatC>& family1, const std::vector<MatC>& family2,
                                      const LatticeTorus& t, int max_mode = 1, double tol = 1e-8,
                                      const std::vector<bool>& derivative_slots = {});
std::vector<bool> higgs_derivative_slots(int n);
std::vector<Intertwiner> intertwiners(const Connection& D1, const Connection& D2, int max_mode = 1,
                                      double tol = 1e-8);
std::vector<Intertwiner> intertwiners(const HiggsOp& d1, const HiggsOp& d2, int max_mode = 1, double tol = 1e-8);

// Dimension of the space of parallel endomorphisms; simple iff 1.
int commutant_dimension(const Connection& D, int max_mode = 1);
int commutant_dimension(const HiggsOp& dpp, int max_mode = 1);
bool simplicity_check(const Connection& D);
bool simplicity_check(const HiggsOp& dpp);

struct QuotientSlope {
    double slope = 0.0;                 // mu of the directly constructed quotient
    double degree_by_additivity = 0.0;  // deg(E) - deg(F)
    double additivity_residual = 0.0;
};
// Quotient E / F for F = span(basis) invariant; components are the lower-right block in
// the frame (F, h-orthogonal complement).
Connection quotient_connection(const Connection& D, const HermitianMetric& h, const MatC& basis);
QuotientSlope quotient_slope(const Connection& D, const MatC& basis, const MetricG& g, const HermitianMetric& h);

struct Summand {
    MatC basis;  // h-orthonormal columns
    Connection D;
    HermitianMetric h;
    double einstein_residual = 0.0;
    double c = 0.0;
};
struct Decomposed {
    std::vector<Summand> summands;
    // Largest failure of a summand to be invariant under I_h(D).
    double higgs_invariance_residual = 0.0;
    double orthogonality_residual = 0.0;
};
// h-orthogonal splitting into invariant stable summands, for an Einstein metric h.
Decomposed polystable_decomposition(const Connection& D, const MetricG& g, const HermitianMetric& h,
                                    double einstein_tol = 1e-6);

struct RigidityVerdict {
    int dimension = 0;
    std::vector<Intertwiner> basis;
    double min_relative_singular = 0.0;  // over basis elements
    bool all_invertible = true;
};
RigidityVerdict hom_rigidity_check(const Connection& D1, const Connection& D2, int max_mode = 1);
RigidityVerdict hom_rigidity_check(const HiggsOp& d1, const HiggsOp& d2, int max_mode = 1);

// Invertible intertwiner, when one exists among random combinations of the intertwiner
// space; evaluated on the base grid. Condition number must stay below max_condition.
std::optional<FormField> find_isomorphism(const std::vector<MatC>& family1, const std::vector<MatC>& family2,
                                          const TorusPtr& base, int max_mode = 1, double max_condition = 1e6,
                                          const std::vector<bool>& derivative_slots = {});
std::optional<FormField> find_isomorphism(const Connection& D1, const Connection& D2, int max_mode = 1,
                                          double max_condition = 1e6);
std::optional<FormField> find_isomorphism(const HiggsOp& d1, const HiggsOp& d2, int max_mode = 1,
                                          double max_condition = 1e6);

}  // namespace fh
