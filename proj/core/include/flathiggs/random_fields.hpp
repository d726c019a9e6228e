#pragma once

#include <random>

#include "flathiggs/geometry.hpp"

namespace fh {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo = -1.0, double hi = 1.0);
cd complex_normal(Rng& rng);
MatC random_matrix(Rng& rng, int rows, int cols, double scale = 1.0);
MatC random_hermitian(Rng& rng, int r, double scale = 1.0);
// Positive definite Hermitian matrix with eigenvalues in [lo, hi].
MatC random_positive(Rng& rng, int r, double lo = 0.5, double hi = 2.0);

// Band-limited complex trigonometric polynomial with |frequency| <= max_mode per axis.
FormField smooth_function(const TorusPtr& base, Rng& rng, int max_mode = 2, double amplitude = 1.0);
// Real-valued variant.
FormField smooth_real_function(const TorusPtr& base, Rng& rng, int max_mode = 2, double amplitude = 1.0);
// Smooth r x r matrix-valued function.
FormField smooth_matrix_function(const TorusPtr& base, Rng& rng, int r, int max_mode = 2, double amplitude = 1.0);
// Smooth form of the given degree with r x c fibers.
FormField smooth_form(const TorusPtr& base, Rng& rng, int degree, int rows, int cols, int max_mode = 2,
                      double amplitude = 1.0);
// Smooth pointwise positive Hermitian matrix function exp(smooth Hermitian) * base_matrix.
FormField smooth_positive_function(const TorusPtr& base, Rng& rng, int r, int max_mode = 1, double amplitude = 0.3);
// Smooth invertible matrix function exp(X) with X small.
FormField smooth_gauge(const TorusPtr& base, Rng& rng, int r, int max_mode = 1, double amplitude = 0.3);
// Hermitian metric on the torus, a smooth positive perturbation of scale * I.
MetricG smooth_metric(const TorusPtr& base, Rng& rng, double scale = 1.0, int max_mode = 1, double amplitude = 0.2);

}  // namespace fh
