#include "flathiggs/geometry.hpp"

#include <cmath>
#include <numeric>

namespace fh {

MetricG::MetricG(FormField g) : g_(std::move(g)) {
    if (g_.degree() != 0 || g_.rows() != g_.torus().n() || g_.cols() != g_.torus().n())
        throw GeometryError("metric must be an n x n matrix function");
    ginv_ = FormField(g_.base(), 0, g_.rows(), g_.cols(), g_.is_constant());
    density_.resize(g_.npts());
    const double two_n = std::pow(2.0, g_.torus().n());
    for (std::size_t p = 0; p < g_.npts(); ++p) {
        MatC m = g_.matrix(p, 0);
        if ((m - m.adjoint()).norm() > 1e-10 * (1.0 + m.norm())) throw GeometryError("metric is not Hermitian");
        Eigen::SelfAdjointEigenSolver<MatC> es(0.5 * (m + m.adjoint()));
        if (es.eigenvalues().minCoeff() <= 0.0) throw GeometryError("metric is not positive definite");
        ginv_.mat(p, 0) = m.inverse();
        density_[p] = two_n * m.determinant().real();
    }
}

MetricG MetricG::euclidean(TorusPtr base, double scale) {
    const int n = base->n();
    return MetricG(FormField::constant_matrix(std::move(base), scale * MatC::Identity(n, n)));
}

MetricG MetricG::with_volume(TorusPtr base, double volume) {
    const int n = base->n();
    const double leb = base->lebesgue_volume();
    const double s = std::pow(volume / (std::pow(2.0, n) * leb), 1.0 / n);
    return euclidean(std::move(base), s);
}

MetricG MetricG::conformal(const FormField& phi) const {
    if (phi.degree() != 0 || phi.fiber() != 1) throw GeometryError("conformal factor must be a scalar function");
    return MetricG(wedge(phi, g_));
}

MetricG MetricG::scaled(double s) const { return MetricG(cd(s) * g_); }

double MetricG::volume_density(std::size_t p) const { return density_[g_.is_constant() ? 0 : p]; }

double MetricG::volume() const {
    const auto& t = torus();
    if (g_.is_constant()) return density_[0] * t.lebesgue_volume();
    double s = 0.0;
    for (double v : density_) s += v;
    return s * t.cell_volume();
}

FormField MetricG::omega() const {
    const int n = this->n();
    FormField w(g_.base(), 2, 1, 1, g_.is_constant());
    for (std::size_t p = 0; p < w.npts(); ++p)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                const unsigned m = (1u << a) | (1u << (n + b));
                w.block(p, w.slot_of(m))[0] = kI * g_.matrix(p, 0)(a, b);
            }
    return w;
}

FormField MetricG::omega_power(int k) const {
    FormField out = FormField::identity(g_.base(), 1, true);
    FormField w = omega();
    for (int i = 0; i < k; ++i) out = wedge(out, w);
    return out;
}

MatC MetricG::coframe_gram(std::size_t p) const {
    const int n = this->n();
    MatC gi = ginv_.matrix(g_.is_constant() ? 0 : p, 0);
    MatC gram = MatC::Zero(2 * n, 2 * n);
    gram.topLeftCorner(n, n) = gi.transpose();
    gram.bottomRightCorner(n, n) = gi;
    return gram;
}

FormField lambda_contract(const FormField& f, const MetricG& g) {
    if (f.degree() != 2) throw GeometryError("Lambda contracts 2-forms");
    require_same_base(f.torus(), g.torus());
    const int n = g.n();
    const bool constant = f.is_constant() && g.is_constant();
    FormField out(f.base(), 0, f.rows(), f.cols(), constant);
    for (std::size_t p = 0; p < out.npts(); ++p) {
        const std::size_t pf = f.is_constant() ? 0 : p;
        MatC gi = g.g_inverse().matrix(g.is_constant() ? 0 : p, 0);
        MatRowC acc = MatRowC::Zero(f.rows(), f.cols());
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                const unsigned m = (1u << a) | (1u << (n + b));
                acc += gi(b, a) * f.mat(pf, f.slot_of(m));
            }
        out.mat(p, 0) = -kI * acc;
    }
    return out;
}

cd top_form_factor(int n) {
    std::vector<int> seq;
    for (int a = 0; a < n; ++a) {
        seq.push_back(a);
        seq.push_back(n + a);
    }
    int sign = 1;
    for (std::size_t i = 0; i < seq.size(); ++i)
        for (std::size_t j = i + 1; j < seq.size(); ++j)
            if (seq[i] > seq[j]) sign = -sign;
    return static_cast<double>(sign) * std::pow(cd(0.0, -2.0), n);
}

namespace {

// det of the Gram submatrix between the index sets of two masks.
cd gram_minor(const MatC& gram, unsigned s, unsigned t) {
    std::vector<int> is, it;
    for (int a = 0; a < gram.rows(); ++a) {
        if (s & (1u << a)) is.push_back(a);
        if (t & (1u << a)) it.push_back(a);
    }
    if (is.size() != it.size()) return 0.0;
    if (is.empty()) return 1.0;
    MatC sub(is.size(), it.size());
    for (std::size_t i = 0; i < is.size(); ++i)
        for (std::size_t j = 0; j < it.size(); ++j) sub(i, j) = gram(is[i], it[j]);
    return sub.determinant();
}

// Matrix of the Hodge star on 2-forms at one point (rows: output slot).
MatC hodge_matrix(const MetricG& g, std::size_t p) {
    const int n = g.n();
    const auto& basis = ExteriorBasis::get(n);
    const auto& m2 = basis.masks[2];
    const unsigned full = (1u << (2 * n)) - 1u;
    const MatC gram = g.coframe_gram(p);
    const cd vol_coeff = g.volume_density(p) / top_form_factor(n);
    const int k = static_cast<int>(m2.size());
    MatC star = MatC::Zero(k, k);
    for (int t = 0; t < k; ++t) {
        const unsigned ct = basis.conjugate(m2[t]);
        const double sg = basis.conjugate_sign(m2[t]);
        for (int s = 0; s < k; ++s) {
            const unsigned u = full & ~m2[s];
            const int su = basis.slot[u];
            // e_S ^ *e_T = <e_S, conj(e_T)> vol
            const cd rhs = sg * gram_minor(gram, m2[s], ct) * vol_coeff;
            star(su, t) = rhs / static_cast<double>(wedge_sign(m2[s], u));
        }
    }
    return star;
}

}  // namespace

FormField hodge_star(const FormField& f, const MetricG& g) {
    if (g.n() != 2 || f.degree() != 2) throw GeometryError("Hodge star implemented for 2-forms on surfaces");
    require_same_base(f.torus(), g.torus());
    const bool constant = f.is_constant() && g.is_constant();
    FormField out(f.base(), 2, f.rows(), f.cols(), constant);
    MatC star;
    for (std::size_t p = 0; p < out.npts(); ++p) {
        if (p == 0 || !g.is_constant()) star = hodge_matrix(g, p);
        const std::size_t pf = f.is_constant() ? 0 : p;
        for (int u = 0; u < out.nslots(); ++u) {
            MatRowC acc = MatRowC::Zero(f.rows(), f.cols());
            for (int t = 0; t < f.nslots(); ++t)
                if (star(u, t) != cd(0.0)) acc += star(u, t) * f.mat(pf, t);
            out.mat(p, u) = acc;
        }
    }
    return out;
}

cd integrate(const FormField& f, const MetricG& g) {
    if (f.fiber() != 1) throw GeometryError("integrate needs a scalar form");
    require_same_base(f.torus(), g.torus());
    const auto& t = f.torus();
    const int n = t.n();
    if (f.degree() == 0) {
        if (f.is_constant()) return f.block(0, 0)[0] * g.volume();
        cd s = 0.0;
        for (std::size_t p = 0; p < f.npts(); ++p) s += f.block(p, 0)[0] * g.volume_density(p);
        return s * t.cell_volume();
    }
    if (f.degree() == 2 * n) {
        const cd fac = top_form_factor(n);
        if (f.is_constant()) return f.block(0, 0)[0] * fac * t.lebesgue_volume();
        cd s = 0.0;
        for (std::size_t p = 0; p < f.npts(); ++p) s += f.block(p, 0)[0];
        return s * fac * t.cell_volume();
    }
    throw GeometryError("integrate needs a function or a top-degree form");
}

FormField pointwise_inner(const FormField& a, const FormField& b, const MetricG& g) {
    require_compatible(a, b);
    if (a.degree() != b.degree() || a.rows() != b.rows() || a.cols() != b.cols())
        throw GeometryError("inner product of differently shaped forms");
    const bool constant = a.is_constant() && b.is_constant() && g.is_constant();
    FormField out(a.base(), 0, 1, 1, constant);
    const int k = a.nslots();
    MatC minors(k, k);
    for (std::size_t p = 0; p < out.npts(); ++p) {
        if (p == 0 || !g.is_constant()) {
            const MatC gram = g.coframe_gram(p);
            for (int s = 0; s < k; ++s)
                for (int t = 0; t < k; ++t) minors(s, t) = gram_minor(gram, a.mask(s), a.mask(t));
        }
        const std::size_t pa = a.is_constant() ? 0 : p;
        const std::size_t pb = b.is_constant() ? 0 : p;
        cd acc = 0.0;
        for (int s = 0; s < k; ++s)
            for (int t = 0; t < k; ++t) {
                if (minors(s, t) == cd(0.0)) continue;
                const cd* x = a.block(pa, s);
                const cd* y = b.block(pb, t);
                cd fr = 0.0;
                for (int e = 0; e < a.fiber(); ++e) fr += x[e] * std::conj(y[e]);
                acc += fr * minors(s, t);
            }
        out.block(p, 0)[0] = acc;
    }
    return out;
}

double l2_norm(const FormField& a, const MetricG& g) {
    const cd v = integrate(pointwise_inner(a, a, g), g);
    return std::sqrt(std::max(0.0, v.real()));
}

double l2_norm_h(const FormField& a, const FormField& H, const MetricG& g) {
    FormField s = hermitian_sqrt(H);
    FormField si = hermitian_inv_sqrt(H);
    return l2_norm(wedge(wedge(s, a), si), g);
}

FormField operator_P(const FormField& f, const MetricG& g) {
    return kI * lambda_contract(delbar(del(f)), g);
}

double gauduchon_residual(const MetricG& g) {
    if (g.n() == 1) return 0.0;
    FormField w = g.omega_power(g.n() - 1);
    if (w.is_constant()) w = w.to_lattice();
    return l2_norm(delbar(del(w)), g);
}

FormField real_scalar(TorusPtr base, const std::vector<double>& values) {
    FormField f(std::move(base), 0, 1, 1, false);
    for (std::size_t p = 0; p < values.size(); ++p) f.data()[p] = values[p];
    return f;
}

std::vector<double> real_values(const FormField& f) {
    FormField l = f.to_lattice();
    std::vector<double> v(l.npts());
    for (std::size_t p = 0; p < v.size(); ++p) v[p] = l.data()[p].real();
    return v;
}

FormField fourier_multiply(const FormField& f, const std::function<double(std::size_t)>& symbol) {
    FormField out = f.to_lattice();
    const auto& t = out.torus();
    const int ch = out.channels();
    t.forward(out.data().data(), ch);
    for (std::size_t p = 0; p < out.npts(); ++p) {
        const double s = symbol(p);
        for (int c = 0; c < ch; ++c) out.data()[p * ch + c] *= s;
    }
    t.backward(out.data().data(), ch);
    return out;
}

std::vector<double> laplace_symbol(const LatticeTorus& t, const MatC& g_inv) {
    const int n = t.n();
    const MatC& c = t.complex_from_axes();
    std::vector<double> out(t.points());
    std::vector<int> idx(static_cast<std::size_t>(2 * n));
    for (std::size_t p = 0; p < t.points(); ++p) {
        std::size_t rem = p;
        for (int ax = 2 * n - 1; ax >= 0; --ax) {
            idx[ax] = static_cast<int>(rem % static_cast<std::size_t>(t.dims()[ax]));
            rem /= static_cast<std::size_t>(t.dims()[ax]);
        }
        std::vector<cd> sym(static_cast<std::size_t>(2 * n), 0.0);
        for (int a = 0; a < 2 * n; ++a)
            for (int ax = 0; ax < 2 * n; ++ax)
                sym[a] += c(a, ax) * (2.0 * kPi * kI * static_cast<double>(t.wave_number(ax, idx[ax])));
        cd s = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) s -= g_inv(b, a) * sym[a] * sym[n + b];
        out[p] = s.real();
    }
    return out;
}

namespace {

bool is_nyquist_mode(const LatticeTorus& t, std::size_t p) {
    const int n2 = t.real_dim();
    for (int ax = n2 - 1; ax >= 0; --ax) {
        const std::size_t d = static_cast<std::size_t>(t.dims()[ax]);
        if (2 * (p % d) == d) return true;
        p /= d;
    }
    return false;
}

// Drop modes on which the spectral first derivatives vanish identically.
std::vector<double> drop_nyquist(const TorusPtr& base, const std::vector<double>& v) {
    const LatticeTorus& t = *base;
    FormField f = real_scalar(base, v);
    FormField g = fourier_multiply(f, [&t](std::size_t p) { return is_nyquist_mode(t, p) ? 0.0 : 1.0; });
    return real_values(g);
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double norm_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

MatC mean_metric_inverse(const MetricG& g) {
    return g.g().mean().matrix(0, 0).inverse();
}

}  // namespace

GmresResult gmres(const LinearMap& A, const LinearMap& M_inv, const std::vector<double>& b,
                  const SolveOptions& opts) {
    const std::size_t N = b.size();
    GmresResult res;
    res.x.assign(N, 0.0);
    const double bnorm = std::max(norm_of(b), 1e-300);
    const int m = opts.restart;
    int total = 0;
    while (total < opts.max_iters) {
        std::vector<double> Ax = A(res.x);
        std::vector<double> r(N);
        for (std::size_t i = 0; i < N; ++i) r[i] = b[i] - Ax[i];
        double beta = norm_of(r);
        res.residual = beta / bnorm;
        if (res.residual < opts.tol) {
            res.converged = true;
            break;
        }
        std::vector<std::vector<double>> V(static_cast<std::size_t>(m + 1), std::vector<double>(N));
        std::vector<std::vector<double>> Z(static_cast<std::size_t>(m), std::vector<double>(N));
        MatR Hm = MatR::Zero(m + 1, m);
        std::vector<double> cs(static_cast<std::size_t>(m)), sn(static_cast<std::size_t>(m)),
            gvec(static_cast<std::size_t>(m + 1), 0.0);
        for (std::size_t i = 0; i < N; ++i) V[0][i] = r[i] / beta;
        gvec[0] = beta;
        int j = 0;
        for (; j < m && total < opts.max_iters; ++j, ++total) {
            Z[j] = M_inv(V[j]);
            std::vector<double> w = A(Z[j]);
            for (int i = 0; i <= j; ++i) {
                double h = 0.0;
                for (std::size_t q = 0; q < N; ++q) h += w[q] * V[i][q];
                Hm(i, j) = h;
                for (std::size_t q = 0; q < N; ++q) w[q] -= h * V[i][q];
            }
            const double hn = norm_of(w);
            Hm(j + 1, j) = hn;
            if (hn > 0.0)
                for (std::size_t q = 0; q < N; ++q) V[j + 1][q] = w[q] / hn;
            for (int i = 0; i < j; ++i) {
                const double t0 = cs[i] * Hm(i, j) + sn[i] * Hm(i + 1, j);
                Hm(i + 1, j) = -sn[i] * Hm(i, j) + cs[i] * Hm(i + 1, j);
                Hm(i, j) = t0;
            }
            const double den = std::hypot(Hm(j, j), Hm(j + 1, j));
            cs[j] = den > 0.0 ? Hm(j, j) / den : 1.0;
            sn[j] = den > 0.0 ? Hm(j + 1, j) / den : 0.0;
            Hm(j, j) = den;
            Hm(j + 1, j) = 0.0;
            gvec[j + 1] = -sn[j] * gvec[j];
            gvec[j] = cs[j] * gvec[j];
            res.residual = std::abs(gvec[j + 1]) / bnorm;
            if (res.residual < opts.tol || hn == 0.0) {
                ++j;
                ++total;
                break;
            }
        }
        std::vector<double> y(static_cast<std::size_t>(j), 0.0);
        for (int i = j - 1; i >= 0; --i) {
            double s = gvec[i];
            for (int k = i + 1; k < j; ++k) s -= Hm(i, k) * y[k];
            y[i] = Hm(i, i) != 0.0 ? s / Hm(i, i) : 0.0;
        }
        for (int i = 0; i < j; ++i)
            for (std::size_t q = 0; q < N; ++q) res.x[q] += y[i] * Z[i][q];
        if (res.residual < opts.tol) {
            std::vector<double> Ax2 = A(res.x);
            double rr = 0.0;
            for (std::size_t i = 0; i < N; ++i) rr += (b[i] - Ax2[i]) * (b[i] - Ax2[i]);
            res.residual = std::sqrt(rr) / bnorm;
            res.converged = res.residual < 10.0 * opts.tol;
            if (res.converged) break;
        }
    }
    res.iterations = total;
    return res;
}

SolvePResult solve_P(const FormField& rhs, const MetricG& g, const SolveOptions& opts) {
    require_same_base(rhs.torus(), g.torus());
    const TorusPtr base = g.base();
    const LatticeTorus& t = *base;
    SolvePResult out;
    if (rhs.is_constant() && g.is_constant()) {
        out.f = FormField::zeros(base, 0, 1, 1, true);
        out.c = rhs.block(0, 0)[0].real();
        return out;
    }
    const std::size_t N = t.points();
    const std::vector<double> r0 = drop_nyquist(base, real_values(rhs));
    const std::vector<double> sym = laplace_symbol(t, mean_metric_inverse(g));

    LinearMap A = [&](const std::vector<double>& x) {
        std::vector<double> f(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(N));
        std::vector<double> pf = drop_nyquist(base, real_values(operator_P(real_scalar(base, f), g)));
        std::vector<double> y(N + 1);
        for (std::size_t i = 0; i < N; ++i) y[i] = pf[i] + x[N];
        y[N] = mean_of(f);
        return y;
    };
    LinearMap M = [&](const std::vector<double>& r) {
        std::vector<double> rr(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(N));
        const double mr = mean_of(rr);
        for (double& v : rr) v -= mr;
        FormField f = fourier_multiply(real_scalar(base, rr), [&](std::size_t p) {
            return (sym[p] > 1e-12 && !is_nyquist_mode(t, p)) ? 1.0 / sym[p] : 0.0;
        });
        std::vector<double> z = real_values(f);
        const double shift = r[N];
        for (double& v : z) v += shift;
        z.push_back(mr);
        return z;
    };
    std::vector<double> b = r0;
    b.push_back(0.0);
    GmresResult gr = gmres(A, M, b, opts);
    if (!gr.converged) throw GeometryError("solve_P did not converge");
    std::vector<double> f(gr.x.begin(), gr.x.begin() + static_cast<std::ptrdiff_t>(N));
    out.f = real_scalar(base, f);
    out.c = gr.x[N];
    out.iterations = gr.iterations;
    out.residual = gr.residual;
    return out;
}

GauduchonResult gauduchon_factor(const MetricG& g, const SolveOptions& opts) {
    if (g.n() != 2) throw GeometryError("Gauduchon factor solve implemented for surfaces");
    const TorusPtr base = g.base();
    const LatticeTorus& t = *base;
    const std::size_t N = t.points();
    GauduchonResult out;
    out.residual_before = gauduchon_residual(g);
    FormField w = g.omega().to_lattice();
    const cd fac = top_form_factor(2);
    auto T = [&](const std::vector<double>& phi) {
        FormField v = delbar(del(wedge(real_scalar(base, phi), w)));
        std::vector<double> y(N);
        for (std::size_t p = 0; p < N; ++p) y[p] = (v.data()[p] * fac).imag();
        return drop_nyquist(base, y);
    };
    if (g.is_constant()) {
        out.phi = FormField::identity(base, 1, true);
        out.residual_after = out.residual_before;
        return out;
    }
    std::vector<double> density(N);
    for (std::size_t p = 0; p < N; ++p) density[p] = g.volume_density(p);
    const double dmean = mean_of(density);
    const std::vector<double> sym = laplace_symbol(t, mean_metric_inverse(g));

    std::vector<double> ones(N, 1.0);
    std::vector<double> b = T(ones);
    for (double& v : b) v = -v;
    b.push_back(0.0);
    LinearMap A = [&](const std::vector<double>& x) {
        std::vector<double> psi(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(N));
        std::vector<double> y = T(psi);
        for (double& v : y) v += x[N];
        y.push_back(mean_of(psi));
        return y;
    };
    // T(phi) ~ -P(phi) vol on the principal part.
    LinearMap M = [&](const std::vector<double>& r) {
        std::vector<double> rr(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(N));
        const double mr = mean_of(rr);
        for (double& v : rr) v -= mr;
        FormField f = fourier_multiply(real_scalar(base, rr), [&](std::size_t p) {
            return (sym[p] > 1e-12 && !is_nyquist_mode(t, p)) ? -1.0 / (sym[p] * dmean) : 0.0;
        });
        std::vector<double> z = real_values(f);
        const double shift = r[N];
        for (double& v : z) v += shift;
        z.push_back(mr);
        return z;
    };
    GmresResult gr = gmres(A, M, b, opts);
    if (!gr.converged) throw GeometryError("Gauduchon factor solve did not converge");
    std::vector<double> phi(N);
    for (std::size_t p = 0; p < N; ++p) phi[p] = 1.0 + gr.x[p];
    for (double v : phi)
        if (v <= 0.0) throw GeometryError("non-positive Gauduchon factor; grid too coarse");
    FormField phif = real_scalar(base, phi);
    const double scale = g.volume() / integrate(phif, g).real();
    out.phi = cd(scale) * phif;
    out.iterations = gr.iterations;
    out.residual_after = gauduchon_residual(g.conformal(out.phi));
    return out;
}

}  // namespace fh
