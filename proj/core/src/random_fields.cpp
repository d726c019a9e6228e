#include "flathiggs/random_fields.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace fh {

double uniform(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    return u(rng);
}

cd complex_normal(Rng& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    const double a = nd(rng);
    const double b = nd(rng);
    return {a, b};
}

MatC random_matrix(Rng& rng, int rows, int cols, double scale) {
    MatC m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = scale * complex_normal(rng);
    return m;
}

MatC random_hermitian(Rng& rng, int r, double scale) {
    MatC m = random_matrix(rng, r, r, scale);
    return 0.5 * (m + m.adjoint());
}

MatC random_positive(Rng& rng, int r, double lo, double hi) {
    MatC q = random_matrix(rng, r, r).householderQr().householderQ();
    VecC ev(r);
    for (int i = 0; i < r; ++i) ev(i) = uniform(rng, lo, hi);
    MatC m = q * ev.asDiagonal() * q.adjoint();
    return 0.5 * (m + m.adjoint());
}

namespace {

struct Mode {
    std::vector<int> k;
    cd c;
};

std::vector<Mode> random_modes(const LatticeTorus& t, Rng& rng, int max_mode, double amplitude) {
    std::vector<Mode> modes;
    const int dim = t.real_dim();
    std::vector<int> k(static_cast<std::size_t>(dim), -max_mode);
    double total = 0.0;
    while (true) {
        int l1 = 0;
        for (int v : k) l1 += std::abs(v);
        const double w = 1.0 / (1.0 + l1 * l1);
        total += w * w;
        modes.push_back({k, w * complex_normal(rng) / std::sqrt(2.0)});
        int ax = 0;
        while (ax < dim && ++k[ax] > max_mode) {
            k[ax] = -max_mode;
            ++ax;
        }
        if (ax == dim) break;
    }
    // expected mean square equals amplitude^2
    for (auto& m : modes) m.c *= amplitude / std::sqrt(total);
    return modes;
}

cd eval_modes(const std::vector<Mode>& modes, const std::vector<double>& x) {
    cd s = 0.0;
    for (const auto& m : modes) {
        double ph = 0.0;
        for (std::size_t a = 0; a < x.size(); ++a) ph += m.k[a] * x[a];
        s += m.c * std::exp(kI * (2.0 * kPi * ph));
    }
    return s;
}

}  // namespace

FormField smooth_function(const TorusPtr& base, Rng& rng, int max_mode, double amplitude) {
    auto modes = random_modes(*base, rng, max_mode, amplitude);
    return FormField::scalar_function(base, [&](std::size_t p) { return eval_modes(modes, base->coords(p)); });
}

FormField smooth_real_function(const TorusPtr& base, Rng& rng, int max_mode, double amplitude) {
    auto modes = random_modes(*base, rng, max_mode, amplitude);
    return FormField::scalar_function(base, [&](std::size_t p) { return cd(eval_modes(modes, base->coords(p)).real()); });
}

FormField smooth_form(const TorusPtr& base, Rng& rng, int degree, int rows, int cols, int max_mode,
                      double amplitude) {
    FormField out(base, degree, rows, cols, false);
    for (int s = 0; s < out.nslots(); ++s)
        for (int e = 0; e < rows * cols; ++e) {
            FormField f = smooth_function(base, rng, max_mode, amplitude);
            for (std::size_t p = 0; p < out.npts(); ++p) out.block(p, s)[e] = f.block(p, 0)[0];
        }
    return out;
}

FormField smooth_matrix_function(const TorusPtr& base, Rng& rng, int r, int max_mode, double amplitude) {
    return smooth_form(base, rng, 0, r, r, max_mode, amplitude);
}

FormField smooth_positive_function(const TorusPtr& base, Rng& rng, int r, int max_mode, double amplitude) {
    FormField x = smooth_matrix_function(base, rng, r, max_mode, amplitude);
    FormField h = 0.5 * (x + adjoint_matrix(x));
    const MatC b = random_positive(rng, r, 0.7, 1.4);
    const MatC bs = b.sqrt();
    return sandwich(bs, hermitian_exp(h), bs);
}

FormField smooth_gauge(const TorusPtr& base, Rng& rng, int r, int max_mode, double amplitude) {
    FormField x = smooth_matrix_function(base, rng, r, max_mode, amplitude);
    return apply_pointwise(x, [](const MatC& m) -> MatC { return m.exp(); });
}

MetricG smooth_metric(const TorusPtr& base, Rng& rng, double scale, int max_mode, double amplitude) {
    const int n = base->n();
    FormField x = smooth_matrix_function(base, rng, n, max_mode, amplitude);
    FormField h = 0.5 * (x + adjoint_matrix(x));
    return MetricG(cd(scale) * hermitian_exp(h));
}

}  // namespace fh
