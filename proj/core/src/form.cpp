#include "flathiggs/form.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace fh {

namespace {

ExteriorBasis build_basis(int n) {
    ExteriorBasis b;
    b.n = n;
    b.dim = 2 * n;
    const unsigned total = 1u << b.dim;
    b.masks.assign(static_cast<std::size_t>(b.dim + 2), {});
    b.slot.assign(total, -1);
    for (unsigned m = 0; m < total; ++m) {
        int k = std::popcount(m);
        b.slot[m] = static_cast<int>(b.masks[static_cast<std::size_t>(k)].size());
        b.masks[static_cast<std::size_t>(k)].push_back(m);
    }
    return b;
}

int permutation_sign(std::vector<int> seq) {
    int sign = 1;
    for (std::size_t i = 0; i < seq.size(); ++i)
        for (std::size_t j = i + 1; j < seq.size(); ++j)
            if (seq[i] > seq[j]) sign = -sign;
    return sign;
}

}  // namespace

const ExteriorBasis& ExteriorBasis::get(int n) {
    static const ExteriorBasis b1 = build_basis(1);
    static const ExteriorBasis b2 = build_basis(2);
    if (n == 1) return b1;
    if (n == 2) return b2;
    throw GeometryError("exterior basis only for n = 1, 2");
}

int ExteriorBasis::slots(int degree) const {
    if (degree < 0 || degree > dim) return 0;
    return static_cast<int>(masks[static_cast<std::size_t>(degree)].size());
}

int ExteriorBasis::holomorphic_count(unsigned mask) const {
    return std::popcount(mask & ((1u << n) - 1u));
}

int ExteriorBasis::antiholomorphic_count(unsigned mask) const { return std::popcount(mask >> n); }

unsigned ExteriorBasis::conjugate(unsigned mask) const {
    const unsigned low = (1u << n) - 1u;
    return ((mask & low) << n) | (mask >> n);
}

int ExteriorBasis::conjugate_sign(unsigned mask) const {
    std::vector<int> seq;
    for (int a = 0; a < dim; ++a)
        if (mask & (1u << a)) seq.push_back(a < n ? a + n : a - n);
    return permutation_sign(seq);
}

int wedge_sign(unsigned a, unsigned b) {
    if (a & b) return 0;
    int inversions = 0;
    for (unsigned bb = b; bb; bb &= bb - 1) {
        unsigned bit = bb & (~bb + 1u);
        inversions += std::popcount(a & ~(bit | (bit - 1u)));
    }
    return (inversions % 2) ? -1 : 1;
}

FormField::FormField(TorusPtr base, int degree, int rows, int cols, bool constant)
    : base_(std::move(base)), degree_(degree), rows_(rows), cols_(cols), constant_(constant) {
    if (!base_) throw GeometryError("form field needs a torus");
    if (rows_ <= 0 || cols_ <= 0) throw GeometryError("form field fiber must be non-empty");
    npts_ = constant_ ? 1 : base_->points();
    nslots_ = ExteriorBasis::get(base_->n()).slots(degree_);
    data_.assign(npts_ * static_cast<std::size_t>(nslots_) * static_cast<std::size_t>(fiber()), cd(0.0));
}

FormField FormField::zeros(TorusPtr base, int degree, int rows, int cols, bool constant) {
    return FormField(std::move(base), degree, rows, cols, constant);
}

FormField FormField::identity(TorusPtr base, int r, bool constant) {
    FormField f(std::move(base), 0, r, r, constant);
    for (std::size_t p = 0; p < f.npts(); ++p) f.mat(p, 0).setIdentity();
    return f;
}

FormField FormField::scalar_function(TorusPtr base, const std::function<cd(std::size_t)>& fn) {
    FormField f(std::move(base), 0, 1, 1, false);
    for (std::size_t p = 0; p < f.npts(); ++p) f.data_[p] = fn(p);
    return f;
}

FormField FormField::constant_matrix(TorusPtr base, const MatC& m) {
    FormField f(std::move(base), 0, static_cast<int>(m.rows()), static_cast<int>(m.cols()), true);
    f.mat(0, 0) = m;
    return f;
}

unsigned FormField::mask(int slot) const {
    return ExteriorBasis::get(base_->n()).masks[static_cast<std::size_t>(degree_)][static_cast<std::size_t>(slot)];
}

int FormField::slot_of(unsigned m) const { return ExteriorBasis::get(base_->n()).slot[m]; }

FormField FormField::to_lattice() const {
    if (!constant_) return *this;
    FormField out(base_, degree_, rows_, cols_, false);
    const std::size_t chunk = static_cast<std::size_t>(channels());
    for (std::size_t p = 0; p < out.npts_; ++p) std::copy_n(data_.data(), chunk, out.data_.data() + p * chunk);
    return out;
}

FormField FormField::mean() const {
    FormField out(base_, degree_, rows_, cols_, true);
    const std::size_t chunk = static_cast<std::size_t>(channels());
    for (std::size_t p = 0; p < npts_; ++p)
        for (std::size_t c = 0; c < chunk; ++c) out.data_[c] += data_[p * chunk + c];
    for (auto& v : out.data_) v /= static_cast<double>(npts_);
    return out;
}

FormField FormField::part(int p, int q) const {
    FormField out(*this);
    const auto& basis = ExteriorBasis::get(base_->n());
    const std::size_t fb = static_cast<std::size_t>(fiber());
    for (int s = 0; s < nslots_; ++s) {
        unsigned m = mask(s);
        if (basis.holomorphic_count(m) == p && basis.antiholomorphic_count(m) == q) continue;
        for (std::size_t pt = 0; pt < npts_; ++pt) std::fill_n(out.block(pt, s), fb, cd(0.0));
    }
    return out;
}

double FormField::max_abs() const {
    double m = 0.0;
    for (const auto& v : data_) m = std::max(m, std::abs(v));
    return m;
}

double FormField::spatial_variation() const {
    if (constant_) return 0.0;
    return max_difference(*this, mean());
}

void require_compatible(const FormField& a, const FormField& b) {
    if (a.empty() || b.empty()) throw GeometryError("operation on empty form field");
    require_same_base(a.torus(), b.torus());
}

namespace {

template <class Op>
FormField combine(const FormField& a, const FormField& b, Op op) {
    require_compatible(a, b);
    if (a.degree() != b.degree() || a.rows() != b.rows() || a.cols() != b.cols())
        throw GeometryError("form fields have different shapes");
    const bool constant = a.is_constant() && b.is_constant();
    FormField out(a.base(), a.degree(), a.rows(), a.cols(), constant);
    const std::size_t chunk = static_cast<std::size_t>(a.channels());
    const std::size_t sa = a.is_constant() ? 0 : chunk;
    const std::size_t sb = b.is_constant() ? 0 : chunk;
    const cd* pa = a.data().data();
    const cd* pb = b.data().data();
    cd* po = out.data().data();
    for (std::size_t p = 0; p < out.npts(); ++p)
        for (std::size_t c = 0; c < chunk; ++c) po[p * chunk + c] = op(pa[p * sa + c], pb[p * sb + c]);
    return out;
}

}  // namespace

FormField operator+(const FormField& a, const FormField& b) {
    return combine(a, b, [](cd x, cd y) { return x + y; });
}
FormField operator-(const FormField& a, const FormField& b) {
    return combine(a, b, [](cd x, cd y) { return x - y; });
}
FormField operator-(const FormField& a) { return cd(-1.0) * a; }
FormField operator*(cd s, const FormField& a) {
    FormField out(a);
    for (auto& v : out.data()) v *= s;
    return out;
}
FormField operator*(const FormField& a, cd s) { return s * a; }

FormField& FormField::operator+=(const FormField& o) { return *this = *this + o; }
FormField& FormField::operator-=(const FormField& o) { return *this = *this - o; }
FormField& FormField::operator*=(cd s) {
    for (auto& v : data_) v *= s;
    return *this;
}

FormField wedge(const FormField& a, const FormField& b) {
    require_compatible(a, b);
    const bool sa = a.rows() == 1 && a.cols() == 1;
    const bool sb = b.rows() == 1 && b.cols() == 1;
    int rows = 0, cols = 0;
    if (sa && !sb) {
        rows = b.rows();
        cols = b.cols();
    } else if (sb && !sa) {
        rows = a.rows();
        cols = a.cols();
    } else {
        if (a.cols() != b.rows()) throw GeometryError("fiber shapes do not compose in wedge");
        rows = a.rows();
        cols = b.cols();
    }
    const int deg = a.degree() + b.degree();
    const bool constant = a.is_constant() && b.is_constant();
    FormField out(a.base(), deg, rows, cols, constant);
    if (out.nslots() == 0) return out;

    struct Term {
        int sa, sb, so, sign;
    };
    std::vector<Term> terms;
    for (int i = 0; i < a.nslots(); ++i)
        for (int j = 0; j < b.nslots(); ++j) {
            unsigned ma = a.mask(i), mb = b.mask(j);
            int s = wedge_sign(ma, mb);
            if (s != 0) terms.push_back({i, j, out.slot_of(ma | mb), s});
        }

    const int k = sa || sb ? 0 : a.cols();
    for (std::size_t p = 0; p < out.npts(); ++p) {
        const std::size_t pa = a.is_constant() ? 0 : p;
        const std::size_t pb = b.is_constant() ? 0 : p;
        for (const auto& t : terms) {
            const cd* A = a.block(pa, t.sa);
            const cd* B = b.block(pb, t.sb);
            cd* O = out.block(p, t.so);
            const double sg = static_cast<double>(t.sign);
            if (sa && sb) {
                O[0] += sg * A[0] * B[0];
            } else if (sa) {
                const cd s = sg * A[0];
                for (int e = 0; e < rows * cols; ++e) O[e] += s * B[e];
            } else if (sb) {
                const cd s = sg * B[0];
                for (int e = 0; e < rows * cols; ++e) O[e] += s * A[e];
            } else {
                for (int r = 0; r < rows; ++r)
                    for (int q = 0; q < k; ++q) {
                        const cd av = sg * A[r * k + q];
                        if (av == cd(0.0)) continue;
                        const cd* Brow = B + q * cols;
                        cd* Orow = O + r * cols;
                        for (int c = 0; c < cols; ++c) Orow[c] += av * Brow[c];
                    }
            }
        }
    }
    return out;
}

FormField graded_commutator(const FormField& a, const FormField& b) {
    const double s = ((a.degree() * b.degree()) % 2) ? -1.0 : 1.0;
    return wedge(a, b) - cd(s) * wedge(b, a);
}

namespace {

enum class Directions { All, Holomorphic, Antiholomorphic };

FormField exterior_derivative(const FormField& a, Directions dirs) {
    FormField out(a.base(), a.degree() + 1, a.rows(), a.cols(), a.is_constant());
    if (a.is_constant() || out.nslots() == 0) return out;
    const LatticeTorus& t = a.torus();
    const int n = t.n();
    const int fb = a.fiber();
    std::vector<cd> spec = a.data();
    t.forward(spec.data(), a.channels());
    std::vector<cd>& res = out.data();
    const int oc = out.channels();
    for (int s = 0; s < a.nslots(); ++s) {
        const unsigned m = a.mask(s);
        for (int dir = 0; dir < 2 * n; ++dir) {
            if (dirs == Directions::Holomorphic && dir >= n) continue;
            if (dirs == Directions::Antiholomorphic && dir < n) continue;
            const unsigned bit = 1u << dir;
            if (m & bit) continue;
            const int so = out.slot_of(m | bit);
            const double sign = wedge_sign(bit, m);
            const auto& sym = t.symbol(dir);
            const std::size_t np = t.points();
            for (std::size_t p = 0; p < np; ++p) {
                const cd f = sign * sym[p];
                const cd* src = spec.data() + p * a.channels() + s * fb;
                cd* dst = res.data() + p * oc + so * fb;
                for (int e = 0; e < fb; ++e) dst[e] += f * src[e];
            }
        }
    }
    t.backward(res.data(), oc);
    return out;
}

}  // namespace

FormField d(const FormField& a) { return exterior_derivative(a, Directions::All); }
FormField del(const FormField& a) { return exterior_derivative(a, Directions::Holomorphic); }
FormField delbar(const FormField& a) { return exterior_derivative(a, Directions::Antiholomorphic); }

FormField conj_transpose(const FormField& a) {
    FormField out(a.base(), a.degree(), a.cols(), a.rows(), a.is_constant());
    const auto& basis = ExteriorBasis::get(a.torus().n());
    for (int s = 0; s < a.nslots(); ++s) {
        const unsigned m = a.mask(s);
        const int so = out.slot_of(basis.conjugate(m));
        const double sign = basis.conjugate_sign(m);
        for (std::size_t p = 0; p < a.npts(); ++p) out.mat(p, so) = sign * a.mat(p, s).adjoint();
    }
    return out;
}

FormField trace(const FormField& a) {
    if (a.rows() != a.cols()) throw GeometryError("trace of non-square fiber");
    FormField out(a.base(), a.degree(), 1, 1, a.is_constant());
    for (std::size_t p = 0; p < a.npts(); ++p)
        for (int s = 0; s < a.nslots(); ++s) out.block(p, s)[0] = a.mat(p, s).trace();
    return out;
}

FormField sandwich(const MatC& left, const FormField& a, const MatC& right) {
    FormField out(a.base(), a.degree(), static_cast<int>(left.rows()), static_cast<int>(right.cols()),
                  a.is_constant());
    for (std::size_t p = 0; p < a.npts(); ++p)
        for (int s = 0; s < a.nslots(); ++s) out.mat(p, s) = left * a.matrix(p, s) * right;
    return out;
}

FormField apply_pointwise(const FormField& a, const std::function<MatC(const MatC&)>& f) {
    if (a.degree() != 0) throw GeometryError("pointwise matrix function needs a 0-form");
    FormField out;
    for (std::size_t p = 0; p < a.npts(); ++p) {
        MatC v = f(a.matrix(p, 0));
        if (p == 0)
            out = FormField(a.base(), 0, static_cast<int>(v.rows()), static_cast<int>(v.cols()), a.is_constant());
        out.mat(p, 0) = v;
    }
    return out;
}

FormField inverse(const FormField& a) {
    return apply_pointwise(a, [](const MatC& m) { return MatC(m.inverse()); });
}

FormField adjoint_matrix(const FormField& a) {
    return apply_pointwise(a, [](const MatC& m) { return MatC(m.adjoint()); });
}

FormField hermitian_function(const FormField& a, const std::function<double(double)>& f) {
    return apply_pointwise(a, [&f](const MatC& m) {
        MatC h = 0.5 * (m + m.adjoint());
        Eigen::SelfAdjointEigenSolver<MatC> es(h);
        Eigen::VectorXd ev = es.eigenvalues();
        for (int i = 0; i < ev.size(); ++i) ev(i) = f(ev(i));
        return MatC(es.eigenvectors() * ev.cast<cd>().asDiagonal() * es.eigenvectors().adjoint());
    });
}

FormField hermitian_sqrt(const FormField& a) {
    return hermitian_function(a, [](double x) { return std::sqrt(x); });
}
FormField hermitian_inv_sqrt(const FormField& a) {
    return hermitian_function(a, [](double x) { return 1.0 / std::sqrt(x); });
}
FormField hermitian_exp(const FormField& a) {
    return hermitian_function(a, [](double x) { return std::exp(x); });
}
FormField hermitian_log(const FormField& a) {
    return hermitian_function(a, [](double x) { return std::log(x); });
}

std::vector<cd> scalar_values(const FormField& a) {
    if (a.degree() != 0 || a.fiber() != 1) throw GeometryError("expected a scalar function");
    return a.data();
}

FormField times_identity(const FormField& s, int r) {
    if (s.fiber() != 1) throw GeometryError("expected a scalar form");
    FormField out(s.base(), s.degree(), r, r, s.is_constant());
    for (std::size_t p = 0; p < s.npts(); ++p)
        for (int k = 0; k < s.nslots(); ++k) {
            const cd v = s.block(p, k)[0];
            for (int i = 0; i < r; ++i) out.block(p, k)[i * r + i] = v;
        }
    return out;
}

double max_difference(const FormField& a, const FormField& b) { return (a - b).max_abs(); }

double rms_norm(const FormField& a) {
    double s = 0.0;
    for (const cd& v : a.data()) s += std::norm(v);
    return std::sqrt(s / static_cast<double>(a.npts()));
}

}  // namespace fh
