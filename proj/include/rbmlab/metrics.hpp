#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbmlab/meanfield.hpp"
#include "rbmlab/rng.hpp"

namespace rbm {

struct ParticleEnsemble;

/// Time-indexed series of scalar diagnostics. Times must be nondecreasing
/// per (metric, replica) series.
struct MetricsRecord {
    struct Entry {
        double time;
        std::string metric;
        double value;
        int replica;
    };

    std::vector<Entry> entries;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::vector<std::string> notes;

    void append(double time, std::string metric, double value, int replica = 0);
    /// Merge another record, keeping per-series time order.
    void merge(MetricsRecord other);
};

/// Exact W1 between two equal-size empirical measures on R: sort both and
/// average |a_(i) - b_(i)|.
double w1_empirical_1d(std::span<const double> a, std::span<const double> b);

/// W1 between the empirical measure of `samples` and N(mean, std^2):
/// integral of |F_emp - F_law|, evaluated in closed form between consecutive
/// order statistics (splitting each piece at its level crossing) with exact
/// Gaussian tail integrals outside the sample range.
double w1_sample_vs_gaussian(std::span<const double> samples, double mean, double stddev);

/// Same, against a d = 1 GaussianLaw.
double w1_sample_vs_law(std::span<const double> samples, const GaussianLaw& law);

/// Sliced W1 for d >= 2: average of w1_empirical_1d over projections onto
/// n_directions uniformly random unit directions.
double sliced_w1(std::span<const double> a, std::span<const double> b, int n_particles, int dim,
                 int n_directions, RngStream& stream);

/// (1/N) sum_i |x_i|^order. Orders restricted to {2, 4, 6, 8}.
double moment(const ParticleEnsemble& ens, int order);
std::vector<double> moments(const ParticleEnsemble& ens, std::span<const int> orders);

/// Gaussian KL surrogate for the rescaled relative entropy: fits a Gaussian
/// to the samples by moment matching (MLE covariance) and returns the
/// closed-form KL(fit || ref). An exact-in-distribution surrogate only for
/// linear models, where the single-particle marginal is Gaussian; it observes
/// marginals, not the N-particle joint law.
double kl_gaussian_fit(std::span<const double> samples, int n_samples, int dim,
                       const GaussianLaw& ref);

/// Least-squares line through (ln x, ln y); slope estimates the convergence
/// order. `floor`, when set, was subtracted from every y before fitting
/// (two-term bounds of the form C x^alpha + floor).
struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<std::pair<double, double>> points; // (ln x, ln y - floor)
    std::optional<double> floor;
};

/// Requires >= 3 strictly positive points.
RateFit fit_rate(std::span<const std::pair<double, double>> points);

/// Fits y = C x^alpha + floor by scanning floor over [0, min y) and keeping
/// the value that minimizes the log-space residual.
RateFit fit_rate_with_floor(std::span<const std::pair<double, double>> points);

} // namespace rbm
