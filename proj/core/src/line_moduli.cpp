#include "flathiggs/line_moduli.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fh {

namespace {

void require_line(int rank, const char* what) {
    if (rank != 1) throw BundleError(std::string(what) + ": rank 1 required");
}

VecC generator(const LatticeTorus& t, int k) {
    const int n = t.n();
    VecC w = VecC::Zero(n);
    if (k < n) w(k) = 1.0;
    else w = t.tau().col(k - n);
    return w;
}

// Real 2n x 2n matrix sending (Re c, Im c) to Im(c . w_k) over the generators.
MatR imaginary_pairing(const LatticeTorus& t) {
    const int n = t.n();
    MatR M(2 * n, 2 * n);
    for (int k = 0; k < 2 * n; ++k) {
        const VecC w = generator(t, k);
        for (int j = 0; j < n; ++j) {
            M(k, j) = w(j).imag();
            M(k, n + j) = w(j).real();
        }
    }
    return M;
}

// Real 2n x 2n matrix sending (Re c, Im c) to Re(c . w_k).
MatR real_pairing(const LatticeTorus& t) {
    const int n = t.n();
    MatR M(2 * n, 2 * n);
    for (int k = 0; k < 2 * n; ++k) {
        const VecC w = generator(t, k);
        for (int j = 0; j < n; ++j) {
            M(k, j) = w(j).real();
            M(k, n + j) = -w(j).imag();
        }
    }
    return M;
}

VecC complex_from_parts(const Eigen::VectorXd& x, int n) {
    VecC c(n);
    for (int j = 0; j < n; ++j) c(j) = cd(x(j), x(n + j));
    return c;
}

// Stacked coefficients of the anti-Hermitian form sum c_j dz^j - conj(c_j) dzbar^j.
VecC unitary_coefficients(const VecC& c) {
    const int n = static_cast<int>(c.size());
    VecC out(2 * n);
    out.head(n) = c;
    out.tail(n) = -c.conjugate();
    return out;
}

VecC periods(const LatticeTorus& t, const VecC& coeffs) { return period_matrix(t) * coeffs; }

HiggsLineClass class_from_parts(const LatticeTorus& t, const VecC& unitary_coeffs, const VecC& theta) {
    HiggsLineClass out;
    out.unitary_class = periods(t, unitary_coeffs).array().exp();
    out.theta = theta;
    return out;
}

}  // namespace

MatC period_matrix(const LatticeTorus& t) {
    const int n = t.n();
    MatC P(2 * n, 2 * n);
    for (int k = 0; k < 2 * n; ++k) {
        const VecC w = generator(t, k);
        P.row(k).head(n) = w.transpose();
        P.row(k).tail(n) = w.conjugate().transpose();
    }
    return P;
}

VecC one_form_coefficients(const FormField& a) {
    if (a.degree() != 1 || a.fiber() != 1) throw BundleError("one_form_coefficients: scalar 1-form required");
    const FormField m = a.mean();
    const int n = a.torus().n();
    VecC out(2 * n);
    for (int s = 0; s < 2 * n; ++s) out(s) = m.block(0, m.slot_of(1u << s))[0];
    return out;
}

FormField one_form_from_coefficients(const TorusPtr& base, const VecC& coeffs) {
    const int n = base->n();
    if (coeffs.size() != 2 * n) throw BundleError("one_form_from_coefficients: wrong coefficient count");
    FormField a = FormField::zeros(base, 1, 1, 1, true);
    for (int s = 0; s < 2 * n; ++s) a.block(0, a.slot_of(1u << s))[0] = coeffs(s);
    return a;
}

FlatLineClass FlatLineClass::of(const Connection& D) {
    require_line(D.rank(), "FlatLineClass::of");
    if (!D.background.empty()) throw BundleError("FlatLineClass::of: degree backgrounds are not flat line classes");
    FlatLineClass out;
    out.holonomy = periods(D.A.torus(), one_form_coefficients(D.A)).array().exp();
    return out;
}

Connection FlatLineClass::representative(const TorusPtr& base) const {
    if (holonomy.size() != 2 * base->n()) throw BundleError("FlatLineClass: holonomy size does not match the torus");
    if ((holonomy.array().abs() == 0.0).any()) throw BundleError("FlatLineClass: holonomy must be invertible");
    const VecC logs = holonomy.array().log();
    return Connection(one_form_from_coefficients(base, period_matrix(*base).fullPivLu().solve(logs)));
}

double FlatLineClass::distance(const FlatLineClass& o) const {
    if (holonomy.size() != o.holonomy.size()) return std::numeric_limits<double>::infinity();
    return (holonomy - o.holonomy).cwiseAbs().maxCoeff();
}

HiggsOp HiggsLineClass::representative(const TorusPtr& base) const {
    const LatticeTorus& t = *base;
    const int n = t.n();
    if (unitary_class.size() != 2 * n || theta.size() != n)
        throw BundleError("HiggsLineClass: sizes do not match the torus");
    if (degree_param != 0.0) throw BundleError("HiggsLineClass: the torus carries degree-zero classes only");
    Eigen::VectorXd phases(2 * n);
    for (int k = 0; k < 2 * n; ++k) phases(k) = std::arg(unitary_class(k)) / 2.0;
    const VecC c = complex_from_parts(imaginary_pairing(t).fullPivLu().solve(phases), n);
    VecC semi = VecC::Zero(2 * n);
    semi.tail(n) = -c.conjugate();
    VecC th = VecC::Zero(2 * n);
    th.head(n) = theta;
    return HiggsOp(one_form_from_coefficients(base, semi), one_form_from_coefficients(base, th));
}

double HiggsLineClass::distance(const HiggsLineClass& o) const {
    if (unitary_class.size() != o.unitary_class.size() || theta.size() != o.theta.size())
        return std::numeric_limits<double>::infinity();
    double d = std::abs(degree_param - o.degree_param);
    d = std::max(d, (unitary_class - o.unitary_class).cwiseAbs().maxCoeff());
    if (theta.size() > 0) d = std::max(d, (theta - o.theta).cwiseAbs().maxCoeff());
    return d;
}

namespace {

// K + side * P f = c with K = i Lambda of the curvature-type form; one linear solve.
LineEinstein solve_line(const FormField& K, double side, const MetricG& g, const HermitianMetric& h0,
                        const SolveOptions& opts) {
    FormField rhs = apply_pointwise(K, [&](const MatC& v) {
        MatC o(1, 1);
        o(0, 0) = -v(0, 0).real() / side;
        return o;
    });
    if (!g.is_constant() && rhs.is_constant()) rhs = rhs.to_lattice();
    const SolvePResult sp = solve_P(rhs, g, opts);
    LineEinstein out;
    out.f = sp.f;
    out.c = -side * sp.c;
    out.iterations = sp.iterations;
    out.h = HermitianMetric(wedge(hermitian_exp(sp.f), h0.H()));
    return out;
}

}  // namespace

LineEinstein line_einstein(const Connection& D, const MetricG& g, const HermitianMetric& h0, const SolveOptions& opts) {
    require_line(D.rank(), "line_einstein");
    LineEinstein out = solve_line(mean_curvature_flat(D, g, h0), -0.5, g, h0, opts);
    const EinsteinReport rep = einstein_residual_flat(D, g, out.h);
    out.residual = rep.residual_norm;
    out.c = rep.c;
    return out;
}

LineEinstein line_einstein(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h0, const SolveOptions& opts) {
    require_line(dpp.rank(), "line_einstein");
    LineEinstein out = solve_line(mean_curvature_higgs(dpp, g, h0), 1.0, g, h0, opts);
    const EinsteinReport rep = einstein_residual_higgs(dpp, g, out.h);
    out.residual = rep.residual_norm;
    out.c = rep.c;
    return out;
}

HiggsLineClass flat_to_higgs_line(const Connection& D, const MetricG& g, const HermitianMetric& h0,
                                  const SolveOptions& opts) {
    require_line(D.rank(), "flat_to_higgs_line");
    const LineEinstein le = line_einstein(D, g, h0, opts);
    const Decomposition dec = decompose(D, le.h);
    const LatticeTorus& t = D.A.torus();
    const int n = t.n();
    const VecC theta = one_form_coefficients(dec.theta()).head(n);
    return class_from_parts(t, one_form_coefficients(dec.unitary), theta);
}

HiggsLineClass flat_to_higgs_line(const FlatLineClass& cls, const MetricG& g) {
    const Connection D = cls.representative(g.base());
    return flat_to_higgs_line(D, g, HermitianMetric::identity(g.base(), 1));
}

HiggsLineClass harmonic_split(const Connection& D) {
    require_line(D.rank(), "harmonic_split");
    const LatticeTorus& t = D.A.torus();
    const int n = t.n();
    const VecC ab = one_form_coefficients(D.A);
    const VecC a = ab.head(n);
    const VecC b = ab.tail(n);
    VecC unitary(2 * n);
    unitary.head(n) = 0.5 * (a - b.conjugate());
    unitary.tail(n) = 0.5 * (b - a.conjugate());
    return class_from_parts(t, unitary, 0.5 * (a + b.conjugate()));
}

FlatLineClass higgs_to_flat_line(const HiggsLineClass& cls, const LatticeTorus& t) {
    const int n = t.n();
    if (cls.unitary_class.size() != 2 * n || cls.theta.size() != n)
        throw BundleError("higgs_to_flat_line: sizes do not match the torus");
    if (cls.degree_param != 0.0) throw BundleError("higgs_to_flat_line: degree-zero classes only");
    Eigen::VectorXd parts(2 * n);
    for (int j = 0; j < n; ++j) {
        parts(j) = cls.theta(j).real();
        parts(n + j) = cls.theta(j).imag();
    }
    const Eigen::VectorXd moduli = 2.0 * real_pairing(t) * parts;
    FlatLineClass out;
    out.holonomy = cls.unitary_class.array() * moduli.cast<cd>().array().exp();
    return out;
}

VecC holomorphic_structure(const FlatLineClass& cls, const LatticeTorus& t) {
    const int n = t.n();
    const VecC logs = cls.holonomy.array().log();
    return period_matrix(t).fullPivLu().solve(logs).tail(n);
}

bool same_holomorphic_structure(const VecC& a, const VecC& b, const LatticeTorus& t, double tol) {
    const VecC delta = a - b;
    const VecC p = periods(t, unitary_coefficients(-delta.conjugate()));
    for (int k = 0; k < p.size(); ++k) {
        const double turns = p(k).imag() / (2.0 * kPi);
        if (std::abs(p(k).real()) > tol || std::abs(turns - std::round(turns)) > tol) return false;
    }
    return true;
}

FlatLineClass unitary_lift(const VecC& antiholomorphic, const LatticeTorus& t) {
    if (antiholomorphic.size() != t.n()) throw BundleError("unitary_lift: wrong coefficient count");
    FlatLineClass out;
    out.holonomy = periods(t, unitary_coefficients(-antiholomorphic.conjugate())).array().exp();
    return out;
}

FlatLineClass random_flat_line_class(const LatticeTorus& t, Rng& rng, double scale) {
    const int n = t.n();
    VecC coeffs(2 * n);
    for (int s = 0; s < 2 * n; ++s) coeffs(s) = scale * complex_normal(rng);
    FlatLineClass out;
    out.holonomy = periods(t, coeffs).array().exp();
    return out;
}

HiggsLineClass random_higgs_line_class(const LatticeTorus& t, Rng& rng) {
    HiggsLineClass c;
    c.unitary_class.resize(2 * t.n());
    for (int k = 0; k < 2 * t.n(); ++k) c.unitary_class(k) = std::exp(kI * uniform(rng, -3.0, 3.0));
    c.theta.resize(t.n());
    for (int j = 0; j < t.n(); ++j) c.theta(j) = complex_normal(rng);
    return c;
}

// ---------------------------------------------------------------------------

namespace {

Rational mod_positive(const Rational& x, const Rational& m) {
    using boost::multiprecision::cpp_int;
    const Rational q = x / m;
    cpp_int fl = numerator(q) / denominator(q);
    if (fl * denominator(q) > numerator(q)) fl -= 1;
    return x - m * Rational(fl);
}

void require_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want) throw BundleError(std::string(what) + ": dimension mismatch");
}

Rational dot(const RationalVec& a, const RationalVec& b) {
    Rational s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Rational random_rational(Rng& rng, int max_denominator, int max_numerator) {
    std::uniform_int_distribution<int> num(-max_numerator, max_numerator);
    std::uniform_int_distribution<int> den(1, max_denominator);
    return Rational(num(rng), den(rng));
}

RationalMat random_matrix_rational(Rng& rng, std::size_t rows, std::size_t cols, int den, int num) {
    RationalMat m(rows, RationalVec(cols));
    for (auto& row : m)
        for (auto& v : row) v = random_rational(rng, den, num);
    return m;
}

RationalMat identity_matrix(std::size_t k) {
    RationalMat m(k, RationalVec(k, Rational(0)));
    for (std::size_t i = 0; i < k; ++i) m[i][i] = 1;
    return m;
}

RationalVec multiply(const RationalMat& m, const RationalVec& x) {
    RationalVec y(m.size(), Rational(0));
    for (std::size_t i = 0; i < m.size(); ++i) y[i] = dot(m[i], x);
    return y;
}

// Gauss-Jordan inverse; throws on a singular matrix.
RationalMat invert(RationalMat a) {
    const std::size_t k = a.size();
    RationalMat inv = identity_matrix(k);
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t piv = col;
        while (piv < k && a[piv][col] == 0) ++piv;
        if (piv == k) throw BundleError("singular rational matrix");
        std::swap(a[piv], a[col]);
        std::swap(inv[piv], inv[col]);
        const Rational s = a[col][col];
        for (std::size_t j = 0; j < k; ++j) {
            a[col][j] /= s;
            inv[col][j] /= s;
        }
        for (std::size_t r = 0; r < k; ++r) {
            if (r == col || a[r][col] == 0) continue;
            const Rational f = a[r][col];
            for (std::size_t j = 0; j < k; ++j) {
                a[r][j] -= f * a[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    return inv;
}

}  // namespace

AbelianGroup::AbelianGroup(RationalVec moduli) : moduli_(std::move(moduli)) {
    for (const auto& m : moduli_)
        if (m < 0) throw BundleError("AbelianGroup: moduli must be non-negative");
}

RationalVec AbelianGroup::identity() const { return RationalVec(dim(), Rational(0)); }

RationalVec AbelianGroup::normalize(RationalVec x) const {
    require_dim(x.size(), dim(), "AbelianGroup");
    for (std::size_t k = 0; k < dim(); ++k)
        if (periodic(k)) x[k] = mod_positive(x[k], moduli_[k]);
    return x;
}

RationalVec AbelianGroup::compose(const RationalVec& a, const RationalVec& b) const {
    require_dim(a.size(), dim(), "AbelianGroup::compose");
    require_dim(b.size(), dim(), "AbelianGroup::compose");
    RationalVec out(dim());
    for (std::size_t k = 0; k < dim(); ++k) out[k] = a[k] + b[k];
    return normalize(std::move(out));
}

RationalVec AbelianGroup::inverse(const RationalVec& a) const {
    RationalVec out(a);
    for (auto& v : out) v = -v;
    return normalize(std::move(out));
}

RationalVec AbelianGroup::power(const RationalVec& x, const Rational& s) const {
    RationalVec out(x);
    for (auto& v : out) v *= s;
    return normalize(std::move(out));
}

bool AbelianGroup::equal(const RationalVec& a, const RationalVec& b) const { return normalize(a) == normalize(b); }

RationalVec AbelianGroup::random_element(Rng& rng, int max_denominator, int max_numerator) const {
    RationalVec x(dim());
    for (auto& v : x) v = random_rational(rng, max_denominator, max_numerator);
    return normalize(std::move(x));
}

RationalVec GroupHom::operator()(const RationalVec& x) const {
    require_dim(x.size(), source.dim(), "GroupHom");
    return target.normalize(multiply(matrix, source.normalize(x)));
}

bool GroupHom::well_defined() const {
    if (matrix.size() != target.dim()) return false;
    for (const auto& row : matrix)
        if (row.size() != source.dim()) return false;
    for (std::size_t j = 0; j < source.dim(); ++j) {
        if (!source.periodic(j)) continue;
        RationalVec col(target.dim());
        for (std::size_t i = 0; i < target.dim(); ++i) col[i] = matrix[i][j] * source.moduli()[j];
        if (!target.equal(col, target.identity())) return false;
    }
    return true;
}

GroupHom compose(const GroupHom& outer, const GroupHom& inner) {
    if (outer.source.moduli() != inner.target.moduli()) throw BundleError("compose: groups do not match");
    GroupHom out{inner.source, outer.target, RationalMat(outer.target.dim(), RationalVec(inner.source.dim()))};
    for (std::size_t i = 0; i < outer.target.dim(); ++i)
        for (std::size_t j = 0; j < inner.source.dim(); ++j)
            for (std::size_t k = 0; k < inner.target.dim(); ++k) out.matrix[i][j] += outer.matrix[i][k] * inner.matrix[k][j];
    return out;
}

Rational AbstractModuliData::degree(const RationalVec& x) const {
    require_dim(x.size(), group.dim(), "degree");
    return dot(degree_weights, x);
}

RationalVec AbstractModuliData::degree_section(const Rational& lambda) const {
    return group.power(unit_degree, lambda);
}

void AbstractModuliData::validate() const {
    require_dim(degree_weights.size(), group.dim(), "AbstractModuliData");
    require_dim(unit_degree.size(), group.dim(), "AbstractModuliData");
    for (std::size_t k = 0; k < group.dim(); ++k)
        if (group.periodic(k) && degree_weights[k] != 0)
            throw BundleError("AbstractModuliData: the degree must vanish on periodic coordinates");
    if (degree(unit_degree) != 1) throw BundleError("AbstractModuliData: the chosen element must have degree 1");
}

AbstractModuliData pull_back_degree(const GroupHom& hom, const AbstractModuliData& target,
                                    const RationalVec& unit_degree) {
    if (!hom.well_defined()) throw BundleError("pull_back_degree: homomorphism is not well defined");
    if (hom.target.moduli() != target.group.moduli()) throw BundleError("pull_back_degree: groups do not match");
    AbstractModuliData out;
    out.group = hom.source;
    out.degree_weights.assign(hom.source.dim(), Rational(0));
    for (std::size_t j = 0; j < hom.source.dim(); ++j)
        for (std::size_t i = 0; i < hom.target.dim(); ++i) out.degree_weights[j] += target.degree_weights[i] * hom.matrix[i][j];
    out.unit_degree = hom.source.normalize(unit_degree);
    out.validate();
    return out;
}

namespace {

SplitElement split(const AbstractModuliData& m, const RationalVec& x) {
    SplitElement s;
    s.degree = m.degree(x);
    s.degree_zero = m.group.compose(x, m.degree_section(-s.degree));
    return s;
}

RationalVec join(const AbstractModuliData& m, const SplitElement& s) {
    if (m.degree(s.degree_zero) != 0) throw BundleError("join: first component must have degree 0");
    return m.group.compose(s.degree_zero, m.degree_section(s.degree));
}

}  // namespace

SplitElement split_pic(const AbstractModuliData& pic, const RationalVec& x) { return split(pic, x); }
RationalVec join_pic(const AbstractModuliData& pic, const SplitElement& s) { return join(pic, s); }
SplitElement split_flat(const AbstractModuliData& flat, const RationalVec& x) { return split(flat, x); }
RationalVec join_flat(const AbstractModuliData& flat, const SplitElement& s) { return join(flat, s); }

bool operator==(const HiggsPoint& a, const HiggsPoint& b) { return a.pic == b.pic && a.theta == b.theta; }

ExtendedCorrespondence::ExtendedCorrespondence(AbstractModuliData flat, AbstractModuliData pic,
                                               DegreeZeroCorrespondence base)
    : flat_(std::move(flat)), pic_(std::move(pic)), base_(std::move(base)) {
    flat_.validate();
    pic_.validate();
    if (!base_.forward || !base_.inverse) throw BundleError("ExtendedCorrespondence: base maps missing");
}

HiggsPoint ExtendedCorrespondence::operator()(const RationalVec& x) const {
    const SplitElement s = split_flat(flat_, x);
    HiggsPoint y = base_.forward(s.degree_zero);
    y.pic = join_pic(pic_, SplitElement{pic_.group.normalize(y.pic), s.degree});
    return y;
}

RationalVec ExtendedCorrespondence::inverse(const HiggsPoint& y) const {
    const SplitElement s = split_pic(pic_, y.pic);
    const RationalVec x0 = base_.inverse(HiggsPoint{s.degree_zero, y.theta});
    return join_flat(flat_, SplitElement{flat_.group.normalize(x0), s.degree});
}

ExtendedCorrespondence extended_correspondence(const AbstractModuliData& flat, const AbstractModuliData& pic,
                                               const DegreeZeroCorrespondence& base) {
    return ExtendedCorrespondence(flat, pic, base);
}

bool ExtensionCheck::passed() const {
    return samples > 0 && restricts_to_base == degree_zero_samples && degree_preserved == samples &&
           round_trips == samples && reverse_round_trips == higgs_samples && injective_on_samples;
}

ExtensionCheck check_extension(const ExtendedCorrespondence& ext, const std::vector<RationalVec>& flat_samples,
                               const std::vector<HiggsPoint>& higgs_samples) {
    ExtensionCheck out;
    out.samples = static_cast<int>(flat_samples.size());
    const auto& G = ext.flat().group;
    std::vector<HiggsPoint> images;
    for (const auto& raw : flat_samples) {
        const RationalVec x = G.normalize(raw);
        const HiggsPoint y = ext(x);
        images.push_back(y);
        if (ext.pic().degree(y.pic) == ext.flat().degree(x)) ++out.degree_preserved;
        if (G.equal(ext.inverse(y), x)) ++out.round_trips;
        const RationalVec x0 = split_flat(ext.flat(), x).degree_zero;
        ++out.degree_zero_samples;
        HiggsPoint expect = ext.base().forward(x0);
        expect.pic = ext.pic().group.normalize(expect.pic);
        if (ext(x0) == expect) ++out.restricts_to_base;
    }
    for (std::size_t i = 0; i < flat_samples.size(); ++i)
        for (std::size_t j = i + 1; j < flat_samples.size(); ++j)
            if (images[i] == images[j] && !G.equal(flat_samples[i], flat_samples[j])) out.injective_on_samples = false;
    out.higgs_samples = static_cast<int>(higgs_samples.size());
    for (const auto& y : higgs_samples) {
        HiggsPoint yn{ext.pic().group.normalize(y.pic), y.theta};
        if (ext(ext.inverse(yn)) == yn) ++out.reverse_round_trips;
    }
    return out;
}

bool SurjectivityReport::passed() const {
    return well_defined && components_covered && covering_in_identity_component && diagram_samples > 0 &&
           diagram_commutes == diagram_samples;
}

SurjectivityReport surjectivity_check(const ForgetfulMapData& data, Rng& rng, int samples) {
    SurjectivityReport out;
    out.well_defined = data.forget.well_defined() && data.covering_to_flat.well_defined() &&
                       data.covering_to_pic.well_defined() && data.hodge_projection.well_defined() &&
                       data.component_label.well_defined();
    if (!out.well_defined) return out;
    out.components_covered = data.component_labels.size() == data.flat_preimages.size() && !data.component_labels.empty();
    for (std::size_t k = 0; out.components_covered && k < data.component_labels.size(); ++k) {
        const RationalVec label = data.component_label(data.forget(data.flat_preimages[k]));
        out.components_covered = data.component_label.target.equal(label, data.component_labels[k]);
    }
    out.covering_in_identity_component = true;
    for (int s = 0; s < samples; ++s) {
        const RationalVec v = data.covering_to_flat.source.random_element(rng);
        const RationalVec via_flat = data.forget(data.covering_to_flat(v));
        const RationalVec via_pic = data.covering_to_pic(data.hodge_projection(v));
        ++out.diagram_samples;
        if (data.forget.target.equal(via_flat, via_pic)) ++out.diagram_commutes;
        const RationalVec label = data.component_label(via_pic);
        if (!data.component_label.target.equal(label, data.component_label.target.identity()))
            out.covering_in_identity_component = false;
    }
    return out;
}

SyntheticLineModel synthetic_line_model(Rng& rng, int free_dim, int periodic_dim) {
    if (free_dim < 2 || periodic_dim < 1) throw BundleError("synthetic_line_model: need free_dim >= 2, periodic_dim >= 1");
    const std::size_t k = static_cast<std::size_t>(free_dim);
    const std::size_t p = static_cast<std::size_t>(periodic_dim);
    // flat classes: (free r in Q^k, periodic phi in (Q/Z)^p); phi_0 labels the component.
    RationalVec flat_moduli(k, Rational(0));
    flat_moduli.insert(flat_moduli.end(), p, Rational(1));
    // line bundles: (periodic phi in (Q/Z)^p, free degree coordinate)
    RationalVec pic_moduli(p, Rational(1));
    pic_moduli.push_back(0);
    const AbelianGroup flat_group(flat_moduli);
    const AbelianGroup pic_group(pic_moduli);

    RationalVec weights(k);
    for (auto& w : weights) w = random_rational(rng, 5, 9);
    if (weights[0] == 0) weights[0] = Rational(3, 2);
    RationalMat mix = random_matrix_rational(rng, p, k, 4, 7);
    std::fill(mix[0].begin(), mix[0].end(), Rational(0));

    GroupHom forget{flat_group, pic_group, RationalMat(p + 1, RationalVec(k + p, Rational(0)))};
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < k; ++j) forget.matrix[i][j] = mix[i][j];
        forget.matrix[i][k + i] = 1;
    }
    for (std::size_t j = 0; j < k; ++j) forget.matrix[p][j] = weights[j];

    SyntheticLineModel model;
    model.forget = forget;
    model.pic.group = pic_group;
    model.pic.degree_weights.assign(p + 1, Rational(0));
    model.pic.degree_weights[p] = 1;
    model.pic.unit_degree = pic_group.random_element(rng);
    model.pic.unit_degree[p] = 1;
    model.pic.validate();

    RationalVec beta = flat_group.random_element(rng);
    Rational rest = 0;
    for (std::size_t j = 1; j < k; ++j) rest += weights[j] * beta[j];
    beta[0] = (1 - rest) / weights[0];
    model.flat = pull_back_degree(forget, model.pic, beta);

    // degree-zero correspondence: theta = T (r_1..r_{k-1}); line bundle = (phi + mix r, 0)
    RationalMat T = random_matrix_rational(rng, k - 1, k - 1, 3, 5);
    for (std::size_t i = 0; i < k - 1; ++i) T[i][i] += Rational(static_cast<int>(4 * k));
    const RationalMat T_inv = invert(T);
    const AbstractModuliData flat = model.flat;
    model.correspondence.forward = [=](const RationalVec& x) {
        if (flat.degree(x) != 0) throw BundleError("degree-zero correspondence: input has nonzero degree");
        HiggsPoint y;
        RationalVec tail(x.begin() + 1, x.begin() + static_cast<std::ptrdiff_t>(k));
        y.theta = multiply(T, tail);
        y.pic.assign(p + 1, Rational(0));
        for (std::size_t i = 0; i < p; ++i) {
            y.pic[i] = x[k + i];
            for (std::size_t j = 0; j < k; ++j) y.pic[i] += mix[i][j] * x[j];
        }
        y.pic = pic_group.normalize(y.pic);
        return y;
    };
    model.correspondence.inverse = [=](const HiggsPoint& y) {
        if (y.pic.size() != p + 1 || y.theta.size() != k - 1) throw BundleError("degree-zero correspondence: bad point");
        if (y.pic[p] != 0) throw BundleError("degree-zero correspondence: input has nonzero degree");
        RationalVec x(k + p, Rational(0));
        const RationalVec tail = multiply(T_inv, y.theta);
        Rational acc = 0;
        for (std::size_t j = 1; j < k; ++j) {
            x[j] = tail[j - 1];
            acc += weights[j] * x[j];
        }
        x[0] = -acc / weights[0];
        for (std::size_t i = 0; i < p; ++i) {
            x[k + i] = y.pic[i];
            for (std::size_t j = 0; j < k; ++j) x[k + i] -= mix[i][j] * x[j];
        }
        return flat_group.normalize(x);
    };

    // exactness data: H^1(X, C) = Q^{k + p - 1} -> flat classes, H^1(X, O) = Q^p -> line bundles
    ForgetfulMapData& ex = model.exactness;
    ex.forget = forget;
    const AbelianGroup cover(RationalVec(k + p - 1, Rational(0)));
    const AbelianGroup cover_hol(RationalVec(p, Rational(0)));
    ex.covering_to_flat = GroupHom{cover, flat_group, RationalMat(k + p, RationalVec(k + p - 1, Rational(0)))};
    for (std::size_t j = 0; j < k; ++j) ex.covering_to_flat.matrix[j][j] = 1;
    for (std::size_t i = 1; i < p; ++i) ex.covering_to_flat.matrix[k + i][k + i - 1] = 1;
    ex.covering_to_pic = GroupHom{cover_hol, pic_group, RationalMat(p + 1, RationalVec(p, Rational(0)))};
    for (std::size_t i = 1; i < p; ++i) ex.covering_to_pic.matrix[i][i] = 1;
    ex.covering_to_pic.matrix[p][0] = 1;
    ex.hodge_projection = GroupHom{cover, cover_hol, RationalMat(p, RationalVec(k + p - 1, Rational(0)))};
    for (std::size_t j = 0; j < k; ++j) ex.hodge_projection.matrix[0][j] = weights[j];
    for (std::size_t i = 1; i < p; ++i) {
        for (std::size_t j = 0; j < k; ++j) ex.hodge_projection.matrix[i][j] = mix[i][j];
        ex.hodge_projection.matrix[i][k + i - 1] = 1;
    }
    ex.component_label = GroupHom{pic_group, AbelianGroup(RationalVec{1}), RationalMat{RationalVec(p + 1, Rational(0))}};
    ex.component_label.matrix[0][0] = 1;
    for (const Rational& label : {Rational(0), Rational(1, 2), Rational(1, 3), Rational(2, 3)}) {
        ex.component_labels.push_back(RationalVec{label});
        RationalVec pre = flat_group.random_element(rng);
        pre[k] = label;
        ex.flat_preimages.push_back(pre);
    }
    return model;
}

std::string to_string(const Rational& q) { return q.str(); }
double to_double(const Rational& q) { return q.convert_to<double>(); }

}  // namespace fh
