#pragma once

#include <functional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "flathiggs/einstein_solver.hpp"
#include "flathiggs/random_fields.hpp"

namespace fh {

// ---------------------------------------------------------------------------
// Line bundles on the torus.
//
// The 2n lattice generators are the unit shifts of (u_1..u_n, v_1..v_n); the
// generator of v_k moves z by the k-th column of tau.  Characters are indexed
// in that order.

// Row k: coefficients of the period of a constant 1-form sum a_j dz^j + b_j dzbar^j
// along generator k, against the stacked vector (a, b).
MatC period_matrix(const LatticeTorus& t);

// Stacked coefficients (a, b) of a constant scalar 1-form, or of the mean of a lattice one.
VecC one_form_coefficients(const FormField& a);
FormField one_form_from_coefficients(const TorusPtr& base, const VecC& coeffs);

// Flat line bundle up to isomorphism: exp of the periods of its connection form.
struct FlatLineClass {
    VecC holonomy;

    static FlatLineClass of(const Connection& D);
    // Constant representative d + alpha with principal-branch periods.
    Connection representative(const TorusPtr& base) const;
    double distance(const FlatLineClass& o) const;
};

// Higgs line bundle: a unitary character (flat unitary structure), the position along the
// degree splitting, and a constant Higgs field (coefficients of dz^1..dz^n).
struct HiggsLineClass {
    VecC unitary_class;
    double degree_param = 0.0;
    VecC theta;

    // Constant representative, unitary for the identity metric.
    HiggsOp representative(const TorusPtr& base) const;
    double distance(const HiggsLineClass& o) const;
};

struct LineEinstein {
    HermitianMetric h;
    FormField f;          // h = e^f h0, mean-zero f
    double c = 0.0;
    double residual = 0.0;
    int iterations = 0;
};
// Rank-1 Einstein metric from one linear solve for the conformal factor.
LineEinstein line_einstein(const Connection& D, const MetricG& g, const HermitianMetric& h0,
                           const SolveOptions& opts = {});
LineEinstein line_einstein(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h0,
                           const SolveOptions& opts = {});

// Degree-zero correspondence between flat line classes and Higgs line classes.
HiggsLineClass flat_to_higgs_line(const FlatLineClass& cls, const MetricG& g);
FlatLineClass higgs_to_flat_line(const HiggsLineClass& cls, const LatticeTorus& t);
// Through the Einstein metric of an arbitrary (lattice) representative.
HiggsLineClass flat_to_higgs_line(const Connection& D, const MetricG& g, const HermitianMetric& h0,
                                  const SolveOptions& opts = {});
// Through the harmonic projection of the connection form (its Fourier mean).
HiggsLineClass harmonic_split(const Connection& D);

// Forgetful map to the holomorphic structure: the (0,1) coefficients of the constant
// representative, defined up to the dual lattice.
VecC holomorphic_structure(const FlatLineClass& cls, const LatticeTorus& t);
// Whether two (0,1) coefficient vectors define the same degree-zero holomorphic line bundle.
bool same_holomorphic_structure(const VecC& a, const VecC& b, const LatticeTorus& t, double tol = 1e-9);
// A unitary flat class with the given holomorphic structure.
FlatLineClass unitary_lift(const VecC& antiholomorphic, const LatticeTorus& t);

FlatLineClass random_flat_line_class(const LatticeTorus& t, Rng& rng, double scale = 1.0);
// Degree-zero Higgs line class with a uniformly random unitary character.
HiggsLineClass random_higgs_line_class(const LatticeTorus& t, Rng& rng);

// ---------------------------------------------------------------------------
// Exact abstract model of the splitting algebra.

using Rational = boost::multiprecision::cpp_rational;
using RationalVec = std::vector<Rational>;
using RationalMat = std::vector<RationalVec>;  // row-major

// Abelian group Q^a x (Q/mZ)^b written additively: modulus 0 marks a free coordinate.
class AbelianGroup {
public:
    AbelianGroup() = default;
    explicit AbelianGroup(RationalVec moduli);

    std::size_t dim() const { return moduli_.size(); }
    const RationalVec& moduli() const { return moduli_; }
    bool periodic(std::size_t k) const { return moduli_[k] != 0; }

    RationalVec identity() const;
    RationalVec normalize(RationalVec x) const;
    RationalVec compose(const RationalVec& a, const RationalVec& b) const;
    RationalVec inverse(const RationalVec& a) const;
    // x composed with itself s times; every coordinate group is divisible.
    RationalVec power(const RationalVec& x, const Rational& s) const;
    bool equal(const RationalVec& a, const RationalVec& b) const;
    RationalVec random_element(Rng& rng, int max_denominator = 12, int max_numerator = 40) const;

private:
    RationalVec moduli_;
};

// Homomorphism between abstract groups, given by a rational matrix on coordinates.
struct GroupHom {
    AbelianGroup source;
    AbelianGroup target;
    RationalMat matrix;  // target.dim() rows, source.dim() columns

    RationalVec operator()(const RationalVec& x) const;
    // Periodic source coordinates must map into the identity.
    bool well_defined() const;
};
GroupHom compose(const GroupHom& outer, const GroupHom& inner);

// A group with a real degree homomorphism and a chosen element of degree one.
struct AbstractModuliData {
    AbelianGroup group;
    RationalVec degree_weights;  // zero on periodic coordinates
    RationalVec unit_degree;     // deg = 1

    Rational degree(const RationalVec& x) const;
    // unit_degree composed with itself lambda times, of degree lambda.
    RationalVec degree_section(const Rational& lambda) const;
    // Throws BundleError when the data are inconsistent.
    void validate() const;
};

// Degree data pulled back along a homomorphism: deg' = deg o hom, with a chosen element
// of pulled-back degree one.
AbstractModuliData pull_back_degree(const GroupHom& hom, const AbstractModuliData& target,
                                    const RationalVec& unit_degree);

struct SplitElement {
    RationalVec degree_zero;
    Rational degree;
};
// x -> (x L_{-deg x}, deg x) and its inverse (a, lambda) -> a L_lambda.
SplitElement split_pic(const AbstractModuliData& pic, const RationalVec& x);
RationalVec join_pic(const AbstractModuliData& pic, const SplitElement& s);
// Same algebra on the flat side, where the degree is the pulled-back one.
SplitElement split_flat(const AbstractModuliData& flat, const RationalVec& x);
RationalVec join_flat(const AbstractModuliData& flat, const SplitElement& s);

struct HiggsPoint {
    RationalVec pic;    // line bundle
    RationalVec theta;  // holomorphic 1-form coordinates
};
bool operator==(const HiggsPoint& a, const HiggsPoint& b);

// Bijection between degree-zero flat classes and degree-zero Higgs points.
struct DegreeZeroCorrespondence {
    std::function<HiggsPoint(const RationalVec&)> forward;
    std::function<RationalVec(const HiggsPoint&)> inverse;
};

// Extension of a degree-zero correspondence to every degree by way of the two splittings.
class ExtendedCorrespondence {
public:
    ExtendedCorrespondence(AbstractModuliData flat, AbstractModuliData pic, DegreeZeroCorrespondence base);

    HiggsPoint operator()(const RationalVec& x) const;
    RationalVec inverse(const HiggsPoint& y) const;
    const AbstractModuliData& flat() const { return flat_; }
    const AbstractModuliData& pic() const { return pic_; }
    const DegreeZeroCorrespondence& base() const { return base_; }

private:
    AbstractModuliData flat_;
    AbstractModuliData pic_;
    DegreeZeroCorrespondence base_;
};
ExtendedCorrespondence extended_correspondence(const AbstractModuliData& flat, const AbstractModuliData& pic,
                                               const DegreeZeroCorrespondence& base);

struct ExtensionCheck {
    int samples = 0;
    int restricts_to_base = 0;   // degree-zero samples where the extension equals the base map
    int degree_zero_samples = 0;
    int degree_preserved = 0;
    int round_trips = 0;         // inverse(forward(x)) == x
    int higgs_samples = 0;
    int reverse_round_trips = 0; // forward(inverse(y)) == y on sampled Higgs points
    bool injective_on_samples = true;
    bool passed() const;
};
ExtensionCheck check_extension(const ExtendedCorrespondence& ext, const std::vector<RationalVec>& flat_samples,
                               const std::vector<HiggsPoint>& higgs_samples);

// Exactness data around the forgetful map from flat classes to line bundles:
// covering_to_flat: H^1(X, C) -> flat classes, covering_to_pic: H^1(X, O) -> Pic,
// hodge_projection: H^1(X, C) -> H^1(X, O), and a component label on Pic.
struct ForgetfulMapData {
    GroupHom forget;
    GroupHom covering_to_flat;
    GroupHom covering_to_pic;
    GroupHom hodge_projection;
    GroupHom component_label;
    std::vector<RationalVec> component_labels;   // declared components
    std::vector<RationalVec> flat_preimages;     // one flat class per declared component
};
struct SurjectivityReport {
    bool well_defined = false;
    bool components_covered = false;
    bool covering_in_identity_component = false;
    int diagram_samples = 0;
    int diagram_commutes = 0;
    bool passed() const;
};
SurjectivityReport surjectivity_check(const ForgetfulMapData& data, Rng& rng, int samples = 50);

// Synthetic non-Kaehler-type model: free and periodic coordinates, a surjective degree
// on the free ones, and a rational degree-zero correspondence.
struct SyntheticLineModel {
    AbstractModuliData flat;
    AbstractModuliData pic;
    GroupHom forget;
    DegreeZeroCorrespondence correspondence;
    ForgetfulMapData exactness;
};
SyntheticLineModel synthetic_line_model(Rng& rng, int free_dim = 3, int periodic_dim = 2);

std::string to_string(const Rational& q);
double to_double(const Rational& q);

}  // namespace fh
