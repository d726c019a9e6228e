#pragma once

#include "flathiggs/bundle_calculus.hpp"
#include "flathiggs/random_fields.hpp"

namespace fh {

// Commuting matrices as polynomials in one random matrix; with a Jordan block when
// `jordan` is set, otherwise diagonalizable with distinct eigenvalues.
std::vector<MatC> random_commuting_family(Rng& rng, int r, int count, bool jordan = false, double scale = 1.0);

// Constant-mode flat connection d + sum A_a e_a with commuting components.
Connection random_flat_constant(const TorusPtr& base, Rng& rng, int r, bool jordan = false, double scale = 1.0);
// Constant-mode integrable Higgs operator with commuting components.
HiggsOp random_integrable_constant(const TorusPtr& base, Rng& rng, int r, bool jordan = false, double scale = 1.0);
// Constant-mode connection with independent random components (generally not flat).
Connection random_connection_constant(const TorusPtr& base, Rng& rng, int r, double scale = 1.0);
HiggsOp random_higgs_constant(const TorusPtr& base, Rng& rng, int r, double scale = 1.0);

HermitianMetric random_metric_constant(const TorusPtr& base, Rng& rng, int r);
HermitianMetric random_metric_lattice(const TorusPtr& base, Rng& rng, int r, int max_mode = 1, double amplitude = 0.15);

// Flat connection on the lattice: g^{-1} D0 g for a smooth complex gauge g.
Connection random_flat_lattice(const TorusPtr& base, Rng& rng, int r, int max_mode = 1, double amplitude = 0.15);
HiggsOp random_integrable_lattice(const TorusPtr& base, Rng& rng, int r, int max_mode = 1, double amplitude = 0.15);

// Connection form sum_a m[a] e_a as a constant field.
FormField constant_one_form(const TorusPtr& base, const std::vector<MatC>& components);

}  // namespace fh
