#include "rbmlab/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "rbmlab/errors.hpp"

namespace rbm {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

} // namespace

double GaussianLaw::mean_1d() const {
    if (dim() != 1) throw ConfigError("mean_1d requires a one-dimensional law");
    return mean[0];
}

double GaussianLaw::var_1d() const {
    if (dim() != 1) throw ConfigError("var_1d requires a one-dimensional law");
    return cov[0];
}

double GaussianLaw::min_cov_eigenvalue() const {
    const int d = dim();
    Eigen::Map<const Eigen::MatrixXd> c(cov.data(), d, d);
    Eigen::MatrixXd sym = 0.5 * (c + c.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

GaussianLaw gaussian_reference(const ModelSpec& model, std::vector<double> mean0,
                               std::vector<double> cov0, double horizon, double dt_ode) {
    if (!model.linear)
        throw ConfigError("gaussian reference requires a linear model (b = -a x, K = -kappa x)");
    const int d = model.dim;
    if (mean0.size() != static_cast<std::size_t>(d) ||
        cov0.size() != static_cast<std::size_t>(d) * d)
        throw ConfigError("initial mean/covariance dimensions do not match the model");
    if (horizon < 0.0) throw ConfigError("horizon must be >= 0");
    if (!(dt_ode > 0.0)) throw ConfigError("dt_ode must be > 0");

    const double a = model.linear->a;
    const double kappa = model.linear->kappa;
    const double sigma = model.sigma;
    const double rate = 2.0 * (a + kappa);

    using Vec = Eigen::VectorXd;
    using Mat = Eigen::MatrixXd;
    Vec m = Eigen::Map<const Vec>(mean0.data(), d);
    Mat s = Eigen::Map<const Mat>(cov0.data(), d, d);

    auto dm = [&](const Vec& v) -> Vec { return -a * v; };
    auto ds = [&](const Mat& c) -> Mat {
        return -rate * c + 2.0 * sigma * Mat::Identity(d, d);
    };

    const long n_steps = static_cast<long>(std::ceil(horizon / dt_ode - 1e-12));
    const double h = n_steps > 0 ? horizon / static_cast<double>(n_steps) : 0.0;
    for (long k = 0; k < n_steps; ++k) {
        const Vec k1 = dm(m);
        const Vec k2 = dm(m + 0.5 * h * k1);
        const Vec k3 = dm(m + 0.5 * h * k2);
        const Vec k4 = dm(m + h * k3);
        const Mat l1 = ds(s);
        const Mat l2 = ds(s + 0.5 * h * l1);
        const Mat l3 = ds(s + 0.5 * h * l2);
        const Mat l4 = ds(s + h * l3);
        m += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
    }
    s = 0.5 * (s + s.transpose().eval());

    GaussianLaw law;
    law.mean.assign(m.data(), m.data() + d);
    law.cov.assign(s.data(), s.data() + static_cast<std::size_t>(d) * d);
    law.time = horizon;
    if (law.min_cov_eigenvalue() < -1e-12 * (1.0 + std::abs(s.trace())))
        throw NumericError("gaussian reference produced an indefinite covariance");
    return law;
}

GaussianLaw gaussian_reference(const ModelSpec& model, std::vector<double> mean0, double var0,
                               double horizon, double dt_ode) {
    const int d = model.dim;
    std::vector<double> cov0(static_cast<std::size_t>(d) * d, 0.0);
    for (int k = 0; k < d; ++k) cov0[static_cast<std::size_t>(k) * d + k] = var0;
    return gaussian_reference(model, std::move(mean0), std::move(cov0), horizon, dt_ode);
}

double DensityField1D::mass() const {
    return std::accumulate(values.begin(), values.end(), 0.0) * dx();
}

double DensityField1D::mean() const {
    const double h = dx();
    double acc = 0.0;
    for (int j = 0; j < n_cells; ++j) acc += values[j] * center(j);
    return acc * h;
}

double DensityField1D::variance() const {
    const double m = mean();
    const double h = dx();
    double acc = 0.0;
    for (int j = 0; j < n_cells; ++j) {
        const double c = center(j) - m;
        // Cell-averaged second moment of a piecewise-constant density:
        // integral of (x - m)^2 over the cell is (c^2 + h^2/12) h.
        acc += values[j] * (c * c + h * h / 12.0);
    }
    return acc * h;
}

double DensityField1D::boundary_mass() const {
    if (n_cells == 0) return 0.0;
    return (values.front() + values.back()) * dx();
}

DensityField1D discretize_gaussian(double mean, double var, double x_lo, double x_hi,
                                   int n_cells) {
    if (n_cells < 2) throw ConfigError("density grid needs at least 2 cells");
    if (!(x_hi > x_lo)) throw ConfigError("density grid requires x_hi > x_lo");
    if (!(var > 0.0)) throw ConfigError("discretize_gaussian requires variance > 0");

    DensityField1D rho;
    rho.x_lo = x_lo;
    rho.x_hi = x_hi;
    rho.n_cells = n_cells;
    rho.values.resize(n_cells);
    const double sd = std::sqrt(var);
    const double h = rho.dx();
    double total = 0.0;
    for (int j = 0; j < n_cells; ++j) {
        const double lo = (rho.face(j) - mean) / sd;
        const double hi = (rho.face(j + 1) - mean) / sd;
        const double cell_mass = normal_cdf(hi) - normal_cdf(lo);
        rho.values[j] = cell_mass / h;
        total += cell_mass;
    }
    if (!(total > 0.0))
        throw ConfigError("gaussian has no mass inside the grid; widen [x_lo, x_hi]");
    for (double& v : rho.values) v /= total;
    return rho;
}

DensityField1D fp_solve_1d(const ModelSpec& model, DensityField1D rho0, double horizon,
                           double dt) {
    if (model.dim != 1) throw ConfigError("fp_solve_1d requires a one-dimensional model");
    if (horizon < 0.0) throw ConfigError("horizon must be >= 0");
    const int n = rho0.n_cells;
    if (n < 2 || rho0.values.size() != static_cast<std::size_t>(n))
        throw ConfigError("initial density grid is malformed");

    const double h = rho0.dx();
    const double sigma = model.sigma;

    // Face-sampled pieces are time-independent: self drift b(face) and the
    // quadrature weights K(face - center_j) h for the convolution.
    std::vector<double> b_face(n + 1);
    std::vector<double> kmat(static_cast<std::size_t>(n + 1) * n);
    {
        double out = 0.0;
        for (int f = 0; f <= n; ++f) {
            const double xf = rho0.face(f);
            model.drift(&xf, &out);
            b_face[f] = out;
            for (int j = 0; j < n; ++j) {
                const double diff = xf - rho0.center(j);
                model.kernel(&diff, &out);
                kmat[static_cast<std::size_t>(f) * n + j] = out * h;
            }
        }
    }

    auto max_speed = [&](const std::vector<double>& rho, std::vector<double>& v) {
        double vmax = 0.0;
        for (int f = 0; f <= n; ++f) {
            const double* row = kmat.data() + static_cast<std::size_t>(f) * n;
            double conv = 0.0;
            for (int j = 0; j < n; ++j) conv += row[j] * rho[j];
            v[f] = b_face[f] + conv;
            vmax = std::max(vmax, std::abs(v[f]));
        }
        return vmax;
    };

    std::vector<double> v(n + 1);
    const double vmax0 = max_speed(rho0.values, v);
    if (dt <= 0.0) {
        double limit = std::numeric_limits<double>::infinity();
        if (vmax0 > 0.0) limit = std::min(limit, h / vmax0);
        if (sigma > 0.0) limit = std::min(limit, h * h / (2.0 * sigma));
        dt = std::isfinite(limit) ? 0.4 * limit : horizon;
        if (!(dt > 0.0)) dt = horizon > 0.0 ? horizon : 1.0;
    }
    if (sigma > 0.0 && 2.0 * sigma * dt > h * h)
        throw ConfigError("diffusion CFL violated: require 2 sigma dt <= dx^2");

    const long n_steps =
        horizon > 0.0 ? std::max<long>(1, static_cast<long>(std::ceil(horizon / dt - 1e-12)))
                      : 0;
    if (n_steps > 0) dt = horizon / static_cast<double>(n_steps);

    const double mass0 = rho0.mass();
    std::vector<double> flux(n + 1, 0.0);
    std::vector<double> next(n);
    for (long step = 0; step < n_steps; ++step) {
        const double vmax = max_speed(rho0.values, v);
        if (vmax * dt > h)
            throw NumericError("advection CFL violated during the solve; reduce dt", -1, step);

        flux[0] = 0.0;
        flux[n] = 0.0;
        for (int f = 1; f < n; ++f) {
            const double upwind = v[f] > 0.0 ? rho0.values[f - 1] : rho0.values[f];
            flux[f] = v[f] * upwind - sigma * (rho0.values[f] - rho0.values[f - 1]) / h;
        }
        for (int j = 0; j < n; ++j)
            next[j] = rho0.values[j] - (dt / h) * (flux[j + 1] - flux[j]);
        rho0.values.swap(next);

        for (int j = 0; j < n; ++j) {
            if (!std::isfinite(rho0.values[j]))
                throw NumericError("density solver produced a non-finite value", j, step);
            if (rho0.values[j] < -1e-12)
                throw NumericError("density solver produced a negative cell value", j, step);
        }
        if (rho0.boundary_mass() > 1e-8)
            throw NumericError("density mass reached the grid boundary; widen [x_lo, x_hi]",
                               -1, step);
        if (std::abs(rho0.mass() - mass0) > 1e-8)
            throw NumericError("density solver lost mass conservation", -1, step);
    }
    rho0.time += horizon;
    return rho0;
}

namespace {

// Antiderivative pieces: integral of Phi over (-inf, z] is z Phi(z) + phi(z);
// integral of (1 - Phi) over [z, inf) is phi(z) - z (1 - Phi(z)).
double gaussian_cdf_left_integral(double z) { return z * normal_cdf(z) + normal_pdf(z); }

double gaussian_sf_right_integral(double z) {
    return normal_pdf(z) - z * (1.0 - normal_cdf(z));
}

} // namespace

LawDistance law_distance(const GaussianLaw& gaussian, const DensityField1D& density) {
    if (gaussian.dim() != 1) throw ConfigError("law_distance requires one-dimensional laws");
    const double m = gaussian.mean_1d();
    const double var = gaussian.var_1d();
    if (!(var > 0.0)) throw ConfigError("law_distance requires positive reference variance");
    const double sd = std::sqrt(var);

    // W1 = integral |F_rho - F_gauss|. F_rho is piecewise linear, so Simpson
    // on subdivided cells is cheap and accurate; absolute values keep it
    // first order near sign changes, hence the fine subdivision.
    const int n = density.n_cells;
    const double h = density.dx();
    constexpr int kSub = 16;
    double w1 = 0.0;
    double cum = 0.0;
    for (int j = 0; j < n; ++j) {
        const double x0 = density.face(j);
        const double slope = density.values[j];
        const double sub = h / kSub;
        for (int q = 0; q < kSub; ++q) {
            const double a = x0 + q * sub;
            auto gap = [&](double x) {
                const double f_rho = cum + slope * (x - x0);
                return std::abs(f_rho - normal_cdf((x - m) / sd));
            };
            w1 += (sub / 6.0) * (gap(a) + 4.0 * gap(a + 0.5 * sub) + gap(a + sub));
        }
        cum += slope * h;
    }
    // Outside the grid F_rho is 0 (left) and cum (right); the Gaussian tails
    // integrate in closed form.
    w1 += sd * gaussian_cdf_left_integral((density.x_lo - m) / sd);
    const double z_hi = (density.x_hi - m) / sd;
    // Right tail: |cum - F_gauss| <= (1 - F_gauss) + (1 - cum) with cum ~ 1.
    w1 += sd * gaussian_sf_right_integral(z_hi);

    LawDistance out;
    out.w1 = w1;
    out.mean_gap = std::abs(density.mean() - m);
    out.var_gap = std::abs(density.variance() - var);
    return out;
}

} // namespace rbm
