#pragma once

#include "flathiggs/fixtures.hpp"

namespace fh::testing {

inline TorusPtr surface(int N = 6) {
    MatC tau(2, 2);
    tau << cd(0.2, 1.0), cd(0.05, 0.1), cd(-0.1, 0.05), cd(0.1, 1.2);
    return LatticeTorus::make(2, N, tau);
}

// Diagonal period matrix; degree backgrounds need it.
inline TorusPtr product_surface(int N = 6) {
    MatC tau(2, 2);
    tau << cd(0.2, 1.0), cd(0.0, 0.0), cd(0.0, 0.0), cd(0.1, 1.2);
    return LatticeTorus::make(2, N, tau);
}

inline TorusPtr curve(int N = 32) {
    MatC tau(1, 1);
    tau << cd(0.3, 0.9);
    return LatticeTorus::make(1, N, tau);
}

inline MatC random_unitary(Rng& rng, int r) {
    Eigen::HouseholderQR<MatC> qr(random_matrix(rng, r, r));
    return qr.householderQ() * MatC::Identity(r, r);
}

// Commuting normal components U diag(l_a) U^dagger.
inline std::vector<MatC> normal_family(Rng& rng, int r, int count, double scale = 1.0) {
    const MatC U = random_unitary(rng, r);
    std::vector<MatC> out;
    for (int a = 0; a < count; ++a) {
        VecC l(r);
        for (int i = 0; i < r; ++i) l(i) = scale * complex_normal(rng);
        out.push_back(U * l.asDiagonal() * U.adjoint());
    }
    return out;
}

// Components conjugated by a fixed invertible matrix, returned with that matrix.
inline std::vector<MatC> conjugated_diagonal_family(Rng& rng, int r, int count, MatC* P, double scale = 1.0) {
    *P = random_matrix(rng, r, r) + 2.0 * MatC::Identity(r, r);
    const MatC Pinv = P->inverse();
    std::vector<MatC> out;
    for (int a = 0; a < count; ++a) {
        VecC l(r);
        for (int i = 0; i < r; ++i) l(i) = scale * complex_normal(rng);
        out.push_back(*P * l.asDiagonal() * Pinv);
    }
    return out;
}

inline FormField random_section(const TorusPtr& base, Rng& rng, int r) { return smooth_form(base, rng, 0, r, 1, 1); }

}  // namespace fh::testing
