#include "flathiggs/fixtures.hpp"

namespace fh {

std::vector<MatC> random_commuting_family(Rng& rng, int r, int count, bool jordan, double scale) {
    MatC P = random_matrix(rng, r, r);
    while (std::abs(P.determinant()) < 0.2) P = random_matrix(rng, r, r);
    MatC J = MatC::Zero(r, r);
    for (int i = 0; i < r; ++i) J(i, i) = complex_normal(rng);
    if (jordan && r >= 2) {
        J(1, 1) = J(0, 0);
        J(0, 1) = 1.0;
    }
    const MatC M = P * J * P.inverse();
    std::vector<MatC> out;
    for (int a = 0; a < count; ++a) {
        MatC acc = MatC::Zero(r, r);
        MatC pw = MatC::Identity(r, r);
        for (int k = 0; k < r; ++k) {
            acc += (scale * complex_normal(rng) / (1.0 + k)) * pw;
            pw = pw * M;
        }
        out.push_back(acc);
    }
    return out;
}

FormField constant_one_form(const TorusPtr& base, const std::vector<MatC>& components) {
    const int r = static_cast<int>(components.front().rows());
    FormField f = FormField::zeros(base, 1, r, r, true);
    for (std::size_t a = 0; a < components.size(); ++a) f.mat(0, f.slot_of(1u << a)) = components[a];
    return f;
}

Connection random_flat_constant(const TorusPtr& base, Rng& rng, int r, bool jordan, double scale) {
    return Connection(constant_one_form(base, random_commuting_family(rng, r, 2 * base->n(), jordan, scale)));
}

HiggsOp random_integrable_constant(const TorusPtr& base, Rng& rng, int r, bool jordan, double scale) {
    const int n = base->n();
    auto fam = random_commuting_family(rng, r, 2 * n, jordan, scale);
    std::vector<MatC> theta(fam.begin(), fam.end()), B(fam.begin(), fam.end());
    for (int a = 0; a < n; ++a) {
        theta[n + a].setZero();
        B[a].setZero();
    }
    return HiggsOp(constant_one_form(base, B), constant_one_form(base, theta));
}

Connection random_connection_constant(const TorusPtr& base, Rng& rng, int r, double scale) {
    std::vector<MatC> c;
    for (int a = 0; a < 2 * base->n(); ++a) c.push_back(random_matrix(rng, r, r, scale));
    return Connection(constant_one_form(base, c));
}

HiggsOp random_higgs_constant(const TorusPtr& base, Rng& rng, int r, double scale) {
    Connection c = random_connection_constant(base, rng, r, scale);
    return HiggsOp(c.A.part(0, 1), c.A.part(1, 0));
}

HermitianMetric random_metric_constant(const TorusPtr& base, Rng& rng, int r) {
    return HermitianMetric(FormField::constant_matrix(base, random_positive(rng, r, 0.4, 2.5)));
}

HermitianMetric random_metric_lattice(const TorusPtr& base, Rng& rng, int r, int max_mode, double amplitude) {
    return HermitianMetric(smooth_positive_function(base, rng, r, max_mode, amplitude));
}

Connection random_flat_lattice(const TorusPtr& base, Rng& rng, int r, int max_mode, double amplitude) {
    Connection D0 = random_flat_constant(base, rng, r);
    return gauge(D0, smooth_gauge(base, rng, r, max_mode, amplitude));
}

HiggsOp random_integrable_lattice(const TorusPtr& base, Rng& rng, int r, int max_mode, double amplitude) {
    HiggsOp d0 = random_integrable_constant(base, rng, r);
    return gauge(d0, smooth_gauge(base, rng, r, max_mode, amplitude));
}

}  // namespace fh
