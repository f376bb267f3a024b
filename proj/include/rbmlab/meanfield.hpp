#pragma once

#include <span>
#include <vector>

#include "rbmlab/model.hpp"

namespace rbm {

/// Gaussian reference solution of the mean-field equation: mean m(t) and
/// covariance Sigma(t). Row-major d x d covariance, kept symmetric PSD (up to
/// a -1e-12 * trace eigenvalue tolerance).
struct GaussianLaw {
    std::vector<double> mean;
    std::vector<double> cov;
    double time = 0.0;

    int dim() const { return static_cast<int>(mean.size()); }
    double mean_1d() const;
    double var_1d() const;
    /// Smallest eigenvalue of the symmetrized covariance.
    double min_cov_eigenvalue() const;
};

/// Integrates the exact Gaussian closure of the mean-field dynamics for
/// linear models (b = -a x, K = -kappa x):
///   m' = -a m,   Sigma' = -2 (a + kappa) Sigma + 2 sigma I,
/// with classical RK4 at step dt_ode. Exact because K * rho(x) reduces to
/// -kappa (x - m) when rho is Gaussian. Rejects nonlinear models.
GaussianLaw gaussian_reference(const ModelSpec& model, std::vector<double> mean0,
                               std::vector<double> cov0, double horizon, double dt_ode = 1e-3);

/// Convenience: isotropic initial covariance var0 * I.
GaussianLaw gaussian_reference(const ModelSpec& model, std::vector<double> mean0, double var0,
                               double horizon, double dt_ode = 1e-3);

/// Cell-averaged density on a uniform 1D grid. Cell j covers
/// [x_lo + j dx, x_lo + (j+1) dx]; values integrate to 1.
struct DensityField1D {
    double x_lo = 0.0;
    double x_hi = 0.0;
    int n_cells = 0;
    std::vector<double> values;
    double time = 0.0;

    double dx() const { return (x_hi - x_lo) / n_cells; }
    double center(int j) const { return x_lo + (j + 0.5) * dx(); }
    double face(int j) const { return x_lo + j * dx(); }
    double mass() const;
    double mean() const;
    double variance() const;
    /// Mass sitting in the first and last cell (boundary-truncation monitor).
    double boundary_mass() const;
};

/// Gaussian N(mean, var) discretized by exact cell masses, renormalized to
/// unit mass.
DensityField1D discretize_gaussian(double mean, double var, double x_lo, double x_hi,
                                   int n_cells);

/// Explicit conservative finite-volume solve of
///   d_t rho = -d_x((b(x) + (K*rho)(x)) rho) + sigma d_xx rho
/// to time `horizon`: upwind advection, centered diffusion, zero-flux
/// boundaries, convolution by direct quadrature over cells. dt <= 0 picks
/// 0.4 * min(dx / max|v|, dx^2 / (2 sigma)); an explicit dt violating either
/// stability condition is rejected. Aborts on cell values below -1e-12 or
/// boundary mass above 1e-8.
DensityField1D fp_solve_1d(const ModelSpec& model, DensityField1D rho0, double horizon,
                           double dt = 0.0);

struct LawDistance {
    double w1 = 0.0;
    double mean_gap = 0.0;
    double var_gap = 0.0;
};

/// Cross-validates the two references (d = 1): W1 from the CDFs by
/// quadrature, plus moment gaps.
LawDistance law_distance(const GaussianLaw& gaussian, const DensityField1D& density);

} // namespace rbm
