#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "rbmlab/rng.hpp"

namespace rbm {

/// Evaluates a vector field R^d -> R^d. `x` and `out` point to `dim` doubles.
using VectorFieldFn = std::function<void(const double* x, double* out)>;

/// Coefficients of b(x) = -a x, K(x) = -kappa x. Present only when the model
/// is linear, which is what makes the Gaussian mean-field closure exact.
struct LinearModelCoeffs {
    double a = 0.0;
    double kappa = 0.0;
};

/// Drift field b, pairwise interaction kernel K, and diffusion coefficient
/// sigma of the particle system
///   dX^i = b(X^i) dt + (1/(N-1)) sum_{j != i} K(X^i - X^j) dt + sqrt(2 sigma) dW^i.
/// Immutable after construction; field evaluations are pure, so a ModelSpec
/// may be shared freely across threads.
struct ModelSpec {
    int dim = 1;
    double sigma = 0.0;
    std::string label;
    VectorFieldFn drift;
    VectorFieldFn kernel;
    std::optional<LinearModelCoeffs> linear;
};

/// Builds one of the named models:
///   linear_ou          b(x) = -a x, K = 0            (params: a, sigma[, dim])
///   linear_interacting b(x) = -a x, K(x) = -kappa x  (params: a, kappa, sigma[, dim])
///   bounded_kernel     b(x) = -a x, K(x) = kappa x / (1 + |x|^2)
///                                                    (params: a, kappa, sigma[, dim])
/// Requires a > 0 (confinement), sigma >= 0, dim >= 1, all parameters finite.
/// Unknown names, unknown keys, and missing keys are ConfigErrors.
ModelSpec builtin_model(const std::string& name, const std::map<std::string, double>& params);

/// Empirical estimates of the structural constants of a model: Lipschitz
/// constants of b and K, confinement pair (alpha, beta) with
///   (x - y) . (b(x) - b(y)) <= alpha - beta |x - y|^2
/// on all sampled pairs, and the sup of |K^xi - F| over sampled particle
/// configurations. Estimates are suprema over the sampled point set: they
/// never exceed the true constants and are nondecreasing in sample_count for
/// a fixed seed.
struct AssumptionReport {
    double lipschitz_b = 0.0;
    double lipschitz_k = 0.0;
    double confinement_alpha = 0.0;
    double confinement_beta = 0.0;
    bool beta_exceeds_2l = false;
    double kernel_deviation_bound = 0.0;
    long sample_count = 0;
};

/// Samples n_samples point pairs uniformly from [-box_radius, box_radius]^d
/// and fits the report. beta is taken as minus the largest ratio
/// [(x-y).(b(x)-b(y))] / |x-y|^2 over pairs with |x-y| >= box_radius / 10
/// (the restriction keeps the ratio away from 0/0 noise); alpha is then the
/// smallest value making the confinement inequality hold on every pair,
/// clamped below at 0. The kernel-deviation bound is the sup of
/// |K^xi(x_i) - F(x_i)| over random 8-particle configurations paired into
/// batches of 2; for kernels with unbounded growth it is an estimate over the
/// box only. Degenerate pairs (|x-y| = 0) are resampled; a non-finite field
/// evaluation raises NumericError naming the point.
AssumptionReport check_assumptions(const ModelSpec& model, long n_samples, double box_radius,
                                   RngStream& rng);

} // namespace rbm
