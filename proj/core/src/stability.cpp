#include "flathiggs/stability.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include <unsupported/Eigen/KroneckerProduct>

#include "flathiggs/einstein_solver.hpp"

namespace fh {

std::string to_string(Classification c) {
    switch (c) {
        case Classification::Stable: return "stable";
        case Classification::SemistableNotStable: return "semistable_not_stable";
        case Classification::Polystable: return "polystable";
        case Classification::Unstable: return "unstable";
    }
    return "unknown";
}

namespace {

double family_scale(const std::vector<MatC>& family) {
    double s = 1.0;
    for (const auto& m : family) s = std::max(s, m.norm());
    return s;
}

// Orthonormal basis of the column span, ranks decided relative to the largest singular value.
MatC column_space(const MatC& m, double tol) {
    if (m.cols() == 0) return MatC(m.rows(), 0);
    Eigen::JacobiSVD<MatC> svd(m, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    const double cut = tol * std::max(1.0, s.size() ? s(0) : 0.0);
    int rank = 0;
    while (rank < s.size() && s(rank) > cut) ++rank;
    return svd.matrixU().leftCols(rank);
}

// Right singular vectors for singular values below tol * max(1, largest).
MatC null_space(const MatC& m, double tol) {
    Eigen::JacobiSVD<MatC> svd(m, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double cut = tol * std::max(1.0, s.size() ? s(0) : 0.0);
    int rank = 0;
    while (rank < s.size() && s(rank) > cut) ++rank;
    return svd.matrixV().rightCols(m.cols() - rank);
}

// The `dim` right singular vectors belonging to the smallest singular values.
MatC smallest_right_vectors(const MatC& m, int dim) {
    Eigen::JacobiSVD<MatC> svd(m, Eigen::ComputeFullV);
    return svd.matrixV().rightCols(dim);
}

MatC projector(const MatC& q) { return q * q.adjoint(); }

bool same_subspace(const MatC& a, const MatC& b) {
    return a.cols() == b.cols() && (projector(a) - projector(b)).norm() < 1e-6;
}

MatC left_inverse(const MatC& q) { return (q.adjoint() * q).inverse() * q.adjoint(); }

MatC hermitian_inv_sqrt_matrix(const MatC& m) {
    Eigen::SelfAdjointEigenSolver<MatC> es(0.5 * (m + m.adjoint()));
    return es.operatorInverseSqrt();
}

std::vector<MatC> restrict_family(const std::vector<MatC>& family, const MatC& basis) {
    const MatC li = left_inverse(basis);
    std::vector<MatC> out;
    for (const auto& m : family) out.push_back(li * m * basis);
    return out;
}

void require_constant(bool constant, const char* what) {
    if (!constant) throw BundleError(std::string(what) + ": constant-mode input required");
}

// Basis of C^r adapted to the joint generalized eigenspaces and, inside each, to the
// flag of joint kernels of the nilpotent parts.
std::vector<VecC> adapted_basis(const std::vector<MatC>& family, double tol) {
    const int r = static_cast<int>(family.front().rows());
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> nd;
    MatC M = MatC::Zero(r, r);
    for (const auto& m : family) M += cd(nd(rng), nd(rng)) * m;

    Eigen::ComplexEigenSolver<MatC> es(M, false);
    std::vector<cd> ev(es.eigenvalues().data(), es.eigenvalues().data() + r);
    const double cluster_tol = 1e-3 * std::max(1.0, M.norm());
    std::vector<std::vector<cd>> clusters;
    for (cd e : ev) {
        bool placed = false;
        for (auto& c : clusters) {
            if (std::abs(c.front() - e) < cluster_tol) {
                c.push_back(e);
                placed = true;
                break;
            }
        }
        if (!placed) clusters.push_back({e});
    }

    std::vector<VecC> basis;
    for (const auto& c : clusters) {
        const int m = static_cast<int>(c.size());
        cd lambda = 0.0;
        for (cd e : c) lambda += e;
        lambda /= static_cast<double>(m);
        MatC shifted = M - lambda * MatC::Identity(r, r);
        MatC power = MatC::Identity(r, r);
        for (int k = 0; k < m; ++k) power = power * shifted;
        MatC V = smallest_right_vectors(power, m);
        V = column_space(V, 1e-10);

        std::vector<MatC> nil;
        for (const auto& a : family) {
            MatC ra = V.adjoint() * a * V;
            nil.push_back(ra - (ra.trace() / static_cast<double>(m)) * MatC::Identity(m, m));
        }
        // Flag K_1 in K_2 in ... in V of joint kernels.
        MatC current(m, 0);
        while (current.cols() < m) {
            const MatC P = MatC::Identity(m, m) - projector(current);
            MatC stacked(m * static_cast<int>(nil.size()), m);
            for (std::size_t i = 0; i < nil.size(); ++i) stacked.middleRows(static_cast<int>(i) * m, m) = P * nil[i];
            MatC next = null_space(stacked, tol * 10.0);
            if (next.cols() <= current.cols()) next = MatC::Identity(m, m);
            // Complement of `current` inside `next`.
            MatC extra = (MatC::Identity(m, m) - projector(current)) * next;
            extra = column_space(extra, 1e-8);
            for (int j = 0; j < extra.cols(); ++j) basis.push_back(V * extra.col(j));
            MatC joined(m, current.cols() + extra.cols());
            joined << current, extra;
            current = column_space(joined, 1e-10);
        }
    }
    return basis;
}

}  // namespace

std::vector<MatC> components(const Connection& D) {
    require_constant(D.is_constant(), "components");
    std::vector<MatC> out;
    for (int s = 0; s < D.A.nslots(); ++s) out.push_back(D.A.matrix(0, s));
    return out;
}

std::vector<MatC> components(const HiggsOp& dpp) {
    require_constant(dpp.is_constant(), "components");
    FormField t = dpp.total();
    std::vector<MatC> out;
    for (int s = 0; s < t.nslots(); ++s) out.push_back(t.matrix(0, s));
    return out;
}

double invariance_residual(const std::vector<MatC>& family, const MatC& basis) {
    const MatC q = column_space(basis, 1e-12);
    const MatC P = projector(q);
    const MatC Q = MatC::Identity(P.rows(), P.cols()) - P;
    double worst = 0.0;
    for (const auto& m : family) worst = std::max(worst, (Q * m * P).norm());
    return worst;
}

MatC invariant_hull(const std::vector<MatC>& family, const MatC& basis, double tol) {
    MatC w = column_space(basis, tol);
    const int r = static_cast<int>(basis.rows());
    const double scale = family_scale(family);
    while (true) {
        MatC stacked(r, w.cols() * static_cast<int>(family.size() + 1));
        stacked.leftCols(w.cols()) = w;
        for (std::size_t i = 0; i < family.size(); ++i)
            stacked.middleCols(static_cast<int>(i + 1) * w.cols(), w.cols()) = family[i] * w / scale;
        MatC next = column_space(stacked, tol * 10.0);
        if (next.cols() == w.cols()) return w;
        w = next;
    }
}

std::vector<MatC> invariant_subspaces(const std::vector<MatC>& family, double tol) {
    if (family.empty()) throw BundleError("invariant_subspaces: empty family");
    const int r = static_cast<int>(family.front().rows());
    if (r > 6) throw BundleError("invariant_subspaces: rank above the enumeration cap");
    auto basis = adapted_basis(family, tol);
    std::vector<MatC> found;
    for (unsigned mask = 1; mask + 1 < (1u << r); ++mask) {
        std::vector<VecC> cols;
        for (int j = 0; j < r; ++j)
            if (mask & (1u << j)) cols.push_back(basis[static_cast<std::size_t>(j)]);
        MatC b(r, static_cast<int>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) b.col(static_cast<int>(j)) = cols[j];
        MatC hull = invariant_hull(family, b, tol);
        if (hull.cols() == 0 || hull.cols() == r) continue;
        bool dup = false;
        for (const auto& f : found) dup = dup || same_subspace(f, hull);
        if (!dup) found.push_back(hull);
    }
    std::stable_sort(found.begin(), found.end(), [](const MatC& a, const MatC& b) { return a.cols() < b.cols(); });
    return found;
}

std::vector<MatC> invariant_subspaces(const Connection& D, double tol) {
    return invariant_subspaces(components(D), tol);
}

std::vector<MatC> invariant_subspaces(const HiggsOp& dpp, double tol) {
    return invariant_subspaces(components(dpp), tol);
}

Connection restrict_to(const Connection& D, const MatC& basis) {
    return Connection(sandwich(left_inverse(basis), D.A, basis), D.background);
}

HiggsOp restrict_to(const HiggsOp& dpp, const MatC& basis) {
    const MatC li = left_inverse(basis);
    return HiggsOp(sandwich(li, dpp.B, basis), sandwich(li, dpp.theta, basis), dpp.background);
}

HermitianMetric restrict_metric(const HermitianMetric& h, const MatC& basis) {
    return HermitianMetric(sandwich(basis.adjoint(), h.H(), basis));
}

MatC orthogonal_complement(const HermitianMetric& h, const MatC& basis) {
    require_constant(h.is_constant(), "orthogonal_complement");
    const MatC H = h.H().at(0);
    MatC v = null_space(basis.adjoint() * H, 1e-10);
    return v * hermitian_inv_sqrt_matrix(v.adjoint() * H * v);
}

namespace {

struct SlopeCompare {
    SlopeConvention convention;
    double tie;
    // Positive when the subspace slope lies on the stable side of the total slope.
    double margin(double sub, double total) const {
        return convention == SlopeConvention::SubslopeLarger ? sub - total : total - sub;
    }
};

bool polystable_piece(const std::vector<MatC>& family, const MatC& Q,
                      const std::function<double(const MatC&)>& slope_of, const SlopeCompare& cmp, double tol,
                      int depth) {
    if (family.front().rows() <= 1) return true;
    const double mu = slope_of(Q);
    auto subs = invariant_subspaces(family, tol);
    std::vector<double> slopes;
    bool stable = true;
    for (const auto& w : subs) {
        slopes.push_back(slope_of(Q * w));
        if (cmp.margin(slopes.back(), mu) <= cmp.tie) stable = false;
    }
    if (stable) return true;
    if (depth > 8) return false;
    const int r = static_cast<int>(family.front().rows());
    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (std::abs(slopes[i] - mu) > cmp.tie) continue;
        for (std::size_t j = 0; j < subs.size(); ++j) {
            if (subs[i].cols() + subs[j].cols() != r || std::abs(slopes[j] - mu) > cmp.tie) continue;
            MatC joined(r, r);
            joined << subs[i], subs[j];
            if (column_space(joined, 1e-8).cols() != r) continue;
            if (polystable_piece(restrict_family(family, subs[i]), Q * subs[i], slope_of, cmp, tol, depth + 1) &&
                polystable_piece(restrict_family(family, subs[j]), Q * subs[j], slope_of, cmp, tol, depth + 1))
                return true;
        }
    }
    return false;
}

bool has_invariant_complement(const std::vector<MatC>& subs, std::size_t i, int r) {
    for (std::size_t j = 0; j < subs.size(); ++j) {
        if (j == i || subs[i].cols() + subs[j].cols() != r) continue;
        MatC joined(r, r);
        joined << subs[i], subs[j];
        if (column_space(joined, 1e-8).cols() == r) return true;
    }
    return false;
}

}  // namespace

SubbundleReport classify(const std::vector<MatC>& family, double total_slope,
                         const std::function<double(const MatC&)>& slope_of, SlopeConvention convention,
                         const StabilityOptions& opts) {
    SubbundleReport rep;
    rep.slope = total_slope;
    const int r = static_cast<int>(family.front().rows());
    const SlopeCompare cmp{convention, opts.slope_tie};
    auto subs = invariant_subspaces(family, opts.invariance_tol);
    double worst = std::numeric_limits<double>::infinity();
    std::optional<std::size_t> worst_index;
    bool tie = false;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        InvariantSubspace s{subs[i], slope_of(subs[i]), invariance_residual(family, subs[i])};
        const double m = cmp.margin(s.slope, total_slope);
        if (m < worst) {
            worst = m;
            worst_index = i;
        }
        if (std::abs(m) <= opts.slope_tie) tie = true;
        rep.subspaces.push_back(s);
    }
    if (worst_index && worst < -opts.slope_tie) {
        rep.classification = Classification::Unstable;
        rep.witness = rep.subspaces[*worst_index];
        return rep;
    }
    if (!tie) {
        rep.classification = Classification::Stable;
        return rep;
    }
    if (polystable_piece(family, MatC::Identity(r, r), slope_of, cmp, opts.invariance_tol, 0)) {
        rep.classification = Classification::Polystable;
        return rep;
    }
    rep.classification = Classification::SemistableNotStable;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (std::abs(cmp.margin(rep.subspaces[i].slope, total_slope)) > opts.slope_tie) continue;
        if (!rep.witness || !has_invariant_complement(subs, i, r)) rep.witness = rep.subspaces[i];
    }
    return rep;
}

SubbundleReport classify_flat(const Connection& D, const MetricG& g, const HermitianMetric& h,
                              const StabilityOptions& opts) {
    require_constant(D.is_constant(), "classify_flat");
    auto slope_of = [&](const MatC& basis) {
        return slope_flat(restrict_to(D, basis), g, restrict_metric(h, basis));
    };
    return classify(components(D), slope_flat(D, g, h), slope_of,
                    opts.conventional_flat ? SlopeConvention::SubslopeSmaller : SlopeConvention::SubslopeLarger, opts);
}

SubbundleReport classify_higgs(const HiggsOp& dpp, const MetricG& g, const HermitianMetric& h,
                               const StabilityOptions& opts) {
    require_constant(dpp.is_constant(), "classify_higgs");
    auto slope_of = [&](const MatC& basis) {
        return slope_higgs(restrict_to(dpp, basis), g, restrict_metric(h, basis));
    };
    return classify(components(dpp), slope_higgs(dpp, g, h), slope_of, SlopeConvention::SubslopeSmaller, opts);
}

std::vector<bool> higgs_derivative_slots(int n) {
    std::vector<bool> out(static_cast<std::size_t>(2 * n), false);
    for (int a = n; a < 2 * n; ++a) out[static_cast<std::size_t>(a)] = true;
    return out;
}

std::vector<Intertwiner> intertwiners(const std::vector<MatC>& family1, const std::vector<MatC>& family2,
                                      const LatticeTorus& t, int max_mode, double tol,
                                      const std::vector<bool>& derivative_slots) {
    const int r1 = static_cast<int>(family1.front().rows());
    const int r2 = static_cast<int>(family2.front().rows());
    const int dim = t.real_dim();
    const int m = r1 * r2;
    const MatC& C = t.complex_from_axes();
    const MatC I1 = MatC::Identity(r1, r1), I2 = MatC::Identity(r2, r2);
    std::vector<MatC> lifted;
    for (std::size_t a = 0; a < family1.size(); ++a)
        lifted.push_back(Eigen::kroneckerProduct(I1, family2[a]).eval() -
                         Eigen::kroneckerProduct(family1[a].transpose(), I2).eval());

    std::vector<Intertwiner> out;
    std::vector<int> k(static_cast<std::size_t>(dim), -max_mode);
    while (true) {
        MatC stacked(m * static_cast<int>(lifted.size()), m);
        for (std::size_t a = 0; a < lifted.size(); ++a) {
            cd sym = 0.0;
            if (derivative_slots.empty() || derivative_slots[a])
                for (int j = 0; j < dim; ++j)
                    sym += C(static_cast<int>(a), j) * 2.0 * kPi * kI * static_cast<double>(k[j]);
            stacked.middleRows(static_cast<int>(a) * m, m) = lifted[a] + sym * MatC::Identity(m, m);
        }
        MatC ns = null_space(stacked, tol);
        for (int j = 0; j < ns.cols(); ++j) {
            MatC F(r2, r1);
            for (int c = 0; c < r1; ++c) F.col(c) = ns.col(j).segment(c * r2, r2);
            out.push_back({k, F});
        }
        int pos = 0;
        while (pos < dim && k[pos] == max_mode) k[pos++] = -max_mode;
        if (pos == dim) break;
        ++k[pos];
    }
    return out;
}

namespace {

void require_equal_background(const LineBackground& a, const LineBackground& b) {
    const bool ea = a.empty(), eb = b.empty();
    if (ea && eb) return;
    if (ea != eb || (a.slope() - b.slope()).norm() > 1e-12)
        throw BundleError("intertwiners: objects must share the central background");
}

}  // namespace

std::vector<Intertwiner> intertwiners(const Connection& D1, const Connection& D2, int max_mode, double tol) {
    require_equal_background(D1.background, D2.background);
    return intertwiners(components(D1), components(D2), *D1.base(), max_mode, tol);
}

std::vector<Intertwiner> intertwiners(const HiggsOp& d1, const HiggsOp& d2, int max_mode, double tol) {
    require_equal_background(d1.background, d2.background);
    return intertwiners(components(d1), components(d2), *d1.base(), max_mode, tol,
                        higgs_derivative_slots(d1.base()->n()));
}

int commutant_dimension(const Connection& D, int max_mode) {
    return static_cast<int>(intertwiners(D, D, max_mode).size());
}

int commutant_dimension(const HiggsOp& dpp, int max_mode) {
    return static_cast<int>(intertwiners(dpp, dpp, max_mode).size());
}

bool simplicity_check(const Connection& D) { return commutant_dimension(D) == 1; }
bool simplicity_check(const HiggsOp& dpp) { return commutant_dimension(dpp) == 1; }

Connection quotient_connection(const Connection& D, const HermitianMetric& h, const MatC& basis) {
    const MatC perp = orthogonal_complement(h, basis);
    const int r = static_cast<int>(basis.rows());
    const int k = static_cast<int>(basis.cols());
    MatC T(r, r);
    T << basis, perp;
    const MatC Tinv = T.inverse();
    return Connection(sandwich(Tinv.bottomRows(r - k), D.A, T.rightCols(r - k)), D.background);
}

QuotientSlope quotient_slope(const Connection& D, const MatC& basis, const MetricG& g, const HermitianMetric& h) {
    if (invariance_residual(components(D), basis) > 1e-8 * family_scale(components(D)))
        throw BundleError("quotient_slope: subspace is not invariant");
    const MatC perp = orthogonal_complement(h, basis);
    const Connection q = quotient_connection(D, h, basis);
    const double deg_q = degree_flat(q, g, restrict_metric(h, perp));
    const double deg_e = degree_flat(D, g, h);
    const double deg_f = degree_flat(restrict_to(D, basis), g, restrict_metric(h, basis));
    QuotientSlope out;
    out.slope = deg_q / static_cast<double>(perp.cols());
    out.degree_by_additivity = deg_e - deg_f;
    out.additivity_residual = std::abs(deg_q - out.degree_by_additivity);
    return out;
}

namespace {

void split_recursive(const Connection& D, const HermitianMetric& h, const MatC& Q, const MetricG& g,
                     std::vector<Summand>& out) {
    auto subs = invariant_subspaces(D);
    if (subs.empty()) {
        Summand s;
        s.basis = Q;
        s.D = D;
        s.h = h;
        auto rep = einstein_residual_flat(D, g, h);
        s.einstein_residual = rep.residual_norm;
        s.c = rep.c;
        out.push_back(std::move(s));
        return;
    }
    const MatC H = h.H().at(0);
    MatC w = subs.front();
    w = w * hermitian_inv_sqrt_matrix(w.adjoint() * H * w);
    const MatC perp = orthogonal_complement(h, w);
    const auto fam = components(D);
    if (invariance_residual(fam, perp) > 1e-6 * family_scale(fam))
        throw BundleError("polystable_decomposition: orthogonal complement is not invariant");
    split_recursive(restrict_to(D, w), restrict_metric(h, w), Q * w, g, out);
    split_recursive(restrict_to(D, perp), restrict_metric(h, perp), Q * perp, g, out);
}

}  // namespace

Decomposed polystable_decomposition(const Connection& D, const MetricG& g, const HermitianMetric& h,
                                    double einstein_tol) {
    require_constant(D.is_constant() && h.is_constant(), "polystable_decomposition");
    const auto rep = einstein_residual_flat(D, g, h);
    if (rep.residual_norm > einstein_tol) throw BundleError("polystable_decomposition: metric is not Einstein");
    Decomposed out;
    const int r = D.rank();
    split_recursive(D, h, MatC::Identity(r, r), g, out.summands);
    const auto higgs = components(to_higgs(D, h));
    const MatC H = h.H().at(0);
    for (std::size_t i = 0; i < out.summands.size(); ++i) {
        out.higgs_invariance_residual =
            std::max(out.higgs_invariance_residual, invariance_residual(higgs, out.summands[i].basis));
        for (std::size_t j = 0; j < out.summands.size(); ++j) {
            if (i == j) continue;
            out.orthogonality_residual = std::max(
                out.orthogonality_residual, (out.summands[i].basis.adjoint() * H * out.summands[j].basis).norm());
        }
    }
    return out;
}

namespace {

RigidityVerdict rigidity(std::vector<Intertwiner> basis) {
    RigidityVerdict v;
    v.dimension = static_cast<int>(basis.size());
    v.min_relative_singular = basis.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    for (const auto& it : basis) {
        Eigen::JacobiSVD<MatC> svd(it.F);
        const auto& s = svd.singularValues();
        const double rel = (it.F.rows() != it.F.cols() || s(0) == 0.0) ? 0.0 : s(s.size() - 1) / s(0);
        v.min_relative_singular = std::min(v.min_relative_singular, rel);
        if (rel < 1e-6) v.all_invertible = false;
    }
    v.basis = std::move(basis);
    return v;
}

}  // namespace

RigidityVerdict hom_rigidity_check(const Connection& D1, const Connection& D2, int max_mode) {
    return rigidity(intertwiners(D1, D2, max_mode));
}

RigidityVerdict hom_rigidity_check(const HiggsOp& d1, const HiggsOp& d2, int max_mode) {
    return rigidity(intertwiners(d1, d2, max_mode));
}

std::optional<FormField> find_isomorphism(const std::vector<MatC>& family1, const std::vector<MatC>& family2,
                                          const TorusPtr& base, int max_mode, double max_condition,
                                          const std::vector<bool>& derivative_slots) {
    if (family1.front().rows() != family2.front().rows()) return std::nullopt;
    auto basis = intertwiners(family1, family2, *base, max_mode, 1e-8, derivative_slots);
    if (basis.empty()) return std::nullopt;
    bool all_constant = true;
    for (const auto& b : basis)
        for (int k : b.mode) all_constant = all_constant && k == 0;
    const int r = static_cast<int>(family1.front().rows());
    std::mt19937_64 rng(0x150);
    std::normal_distribution<double> nd;
    for (int attempt = 0; attempt < 8; ++attempt) {
        std::vector<cd> coef;
        for (std::size_t i = 0; i < basis.size(); ++i) coef.emplace_back(nd(rng), nd(rng));
        FormField f = FormField::zeros(base, 0, r, r, all_constant);
        double worst = 0.0;
        for (std::size_t p = 0; p < f.npts(); ++p) {
            const auto x = base->coords(p);
            MatC v = MatC::Zero(r, r);
            for (std::size_t i = 0; i < basis.size(); ++i) {
                double phase = 0.0;
                for (std::size_t j = 0; j < x.size(); ++j) phase += basis[i].mode[j] * x[j];
                v += coef[i] * std::exp(2.0 * kPi * kI * phase) * basis[i].F;
            }
            Eigen::JacobiSVD<MatC> svd(v);
            const auto& s = svd.singularValues();
            worst = std::max(worst, s(r - 1) > 0.0 ? s(0) / s(r - 1) : std::numeric_limits<double>::infinity());
            f.mat(p, 0) = v;
        }
        if (worst < max_condition) return f;
    }
    return std::nullopt;
}

std::optional<FormField> find_isomorphism(const Connection& D1, const Connection& D2, int max_mode,
                                          double max_condition) {
    require_equal_background(D1.background, D2.background);
    return find_isomorphism(components(D1), components(D2), D1.base(), max_mode, max_condition);
}

std::optional<FormField> find_isomorphism(const HiggsOp& d1, const HiggsOp& d2, int max_mode, double max_condition) {
    require_equal_background(d1.background, d2.background);
    return find_isomorphism(components(d1), components(d2), d1.base(), max_mode, max_condition,
                            higgs_derivative_slots(d1.base()->n()));
}

}  // namespace fh
