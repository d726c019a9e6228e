#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flathiggs/einstein_solver.hpp"
#include "flathiggs/stability.hpp"

namespace fh {

// Chern numbers of a rank-r bundle on a surface from an End-valued curvature 2-form.
struct ChernReport {
    double c1_sq = 0.0;
    double c2 = 0.0;
    double imaginary_residue = 0.0;  // largest |Im| of the two integrals
    double trace_norm = 0.0;         // RMS of tr F
    double curvature_norm = 0.0;     // RMS of F
};
ChernReport chern_numbers(const FormField& F, const MetricG& g);

// Bidegree split of an End-valued 2-form and the four duality residuals, with
// adjoints taken with respect to h.
struct SelfDualitySplit {
    FormField G11;
    FormField G2;
    double star_G11 = 0.0;     // |*G11 + G11|
    double star_G2 = 0.0;      // |*G2 - G2|
    double adjoint_G11 = 0.0;  // |G11 + G11^*|
    double adjoint_G2 = 0.0;   // |G2 - G2^*|
    double combined = 0.0;     // |*(G^*) - G|
    double max() const;
};
SelfDualitySplit selfduality_split(const FormField& G, const MetricG& g, const HermitianMetric& h);

// B_eps = d_h + theta / eps + eps theta^*, F_eps = B_eps^2, nabla_eps = d''_h + eps d'_h.
struct EpsilonRow {
    double eps = 0.0;
    cd trace_F_squared = 0.0;      // integral of tr F_eps^2
    cd trace_nabla_fourth = 0.0;   // integral of tr nabla_eps^4
    double scaling_residual = 0.0; // RMS of nabla_eps^4 - eps^2 F_eps^2, pointwise
};
struct EpsilonTable {
    std::vector<EpsilonRow> rows;
    cd extrapolated = 0.0;  // polynomial extrapolation of the nabla integrals to eps = 0
    cd direct = 0.0;        // integral of tr G_h^2
    double max_entry() const;
};
EpsilonTable epsilon_family_check(const Connection& D, const HermitianMetric& h, const MetricG& g,
                                  const std::vector<double>& eps_list = {1.0, 0.5, 0.1});

inline SolverSchedule lattice_schedule() {
    SolverSchedule s;
    s.tol = 1e-7;
    return s;
}

// Raised when the Einstein solve behind a correspondence step does not converge.
class DivergenceError : public BundleError {
public:
    DivergenceError(const std::string& what, EinsteinReport report, std::optional<Witness> witness)
        : BundleError(what), report_(std::move(report)), witness_(std::move(witness)) {}
    const EinsteinReport& report() const { return report_; }
    const std::optional<Witness>& witness() const { return witness_; }

private:
    EinsteinReport report_;
    std::optional<Witness> witness_;
};

// Solver tolerance 1e-7: on lattices the Einstein residual floors near 1e-8 from aliasing.
struct CorrespondenceOptions {
    SolverSchedule schedule = lattice_schedule();
    double degree_tol = 1e-7;  // per unit rank
    double chern_tol = 1e-6;
};

struct FlatToHiggs {
    HiggsOp higgs;
    HermitianMetric h;
    EinsteinReport report;
    double pseudocurvature_norm = 0.0;   // |G_h|
    double integrability = 0.0;
    double degree = 0.0;                 // g-degree of the Higgs operator
    double higgs_einstein_residual = 0.0;
    double max_certificate() const;
};
FlatToHiggs flat_to_higgs_surface(const Connection& D, const MetricG& g, const HermitianMetric& h0,
                                  const CorrespondenceOptions& opts = {});

struct HiggsToFlat {
    Connection flat;
    HermitianMetric h;
    EinsteinReport report;
    ChernReport chern;
    double curvature_norm = 0.0;  // |F_h|
    double flatness = 0.0;
    double degree = 0.0;
    double flat_einstein_residual = 0.0;
    double max_certificate() const;
};
HiggsToFlat higgs_to_flat_surface(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h0,
                                  const CorrespondenceOptions& opts = {});

// RMS of D2 T - T D1 (resp. d''2 T - T d''1) for a 0-form T: E1 -> E2.
double intertwining_residual(const Connection& D1, const Connection& D2, const FormField& T);
double intertwining_residual(const HiggsOp& d1, const HiggsOp& d2, const FormField& T);

struct RoundTripSample {
    FlatToHiggs forward;
    HiggsToFlat back;
    bool well_defined = false;     // Einstein metrics from two starts give isomorphic Higgs operators
    bool scaled_metric = false;    // 2h gives the same Higgs operator
    bool flat_round_trip = false;  // flat -> Higgs -> flat lands in the class of D
    bool higgs_round_trip = false; // Higgs -> flat -> Higgs lands in the class of the Higgs operator
    double worst_certificate = 0.0;
    std::string error;             // set when a step threw
    bool passed(double tol) const;
};
struct RoundTripReport {
    std::vector<RoundTripSample> samples;
    int passed = 0;
};
// Constant-mode polystable flat connections; samples run concurrently.
RoundTripReport moduli_roundtrip_suite(const std::vector<Connection>& samples, const MetricG& g,
                                       std::uint64_t seed = 1, const CorrespondenceOptions& opts = {},
                                       double tol = 1e-5);

}  // namespace fh
