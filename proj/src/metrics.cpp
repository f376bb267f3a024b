#include "rbmlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "rbmlab/ensemble.hpp"
#include "rbmlab/errors.hpp"

namespace rbm {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

// Antiderivative of Phi; vanishes at -inf.
double cdf_antiderivative(double z) { return z * normal_cdf(z) + normal_pdf(z); }

} // namespace

void MetricsRecord::append(double time, std::string metric, double value, int replica) {
    entries.push_back(Entry{time, std::move(metric), value, replica});
}

void MetricsRecord::merge(MetricsRecord other) {
    entries.reserve(entries.size() + other.entries.size());
    std::move(other.entries.begin(), other.entries.end(), std::back_inserter(entries));
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.metric != b.metric) return a.metric < b.metric;
        if (a.replica != b.replica) return a.replica < b.replica;
        return a.time < b.time;
    });
    for (std::string& note : other.notes) notes.push_back(std::move(note));
}

double w1_empirical_1d(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty())
        throw ConfigError("w1_empirical_1d needs two nonempty samples of equal size");
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) acc += std::abs(sa[i] - sb[i]);
    return acc / static_cast<double>(sa.size());
}

double w1_sample_vs_gaussian(std::span<const double> samples, double mean, double stddev) {
    if (samples.empty()) throw ConfigError("w1_sample_vs_gaussian needs a nonempty sample");
    if (!(stddev > 0.0)) throw ConfigError("w1_sample_vs_gaussian needs stddev > 0");

    // Work in standardized coordinates z = (x - mean) / stddev; the distance
    // scales back by stddev. Between consecutive order statistics F_emp is the
    // constant level = i/n, so the integrand |level - Phi(z)| integrates in
    // closed form, splitting once where Phi crosses the level.
    const std::size_t n = samples.size();
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(samples[i]))
            throw NumericError("w1_sample_vs_gaussian given a non-finite sample");
        z[i] = (samples[i] - mean) / stddev;
    }
    std::sort(z.begin(), z.end());

    auto segment = [](double lo, double hi, double level) {
        // integral over [lo, hi] of |level - Phi(z)| dz
        auto signed_part = [&](double a, double b) {
            return level * (b - a) - (cdf_antiderivative(b) - cdf_antiderivative(a));
        };
        if (level <= 0.0) return -signed_part(lo, hi);
        if (level >= 1.0) return signed_part(lo, hi);
        // Phi is increasing: level - Phi changes sign at most once, at
        // z* = Phi^{-1}(level). Bisection to machine precision.
        double a = lo, b = hi;
        const double fa = level - normal_cdf(a);
        const double fb = level - normal_cdf(b);
        if (fa >= 0.0 && fb >= 0.0) return signed_part(lo, hi);
        if (fa <= 0.0 && fb <= 0.0) return -signed_part(lo, hi);
        for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
            const double mid = 0.5 * (a + b);
            if ((level - normal_cdf(mid) >= 0.0) == (fa >= 0.0))
                a = mid;
            else
                b = mid;
        }
        const double split = 0.5 * (a + b);
        const double left = signed_part(lo, split);
        const double right = signed_part(split, hi);
        return std::abs(left) + std::abs(right);
    };

    // Left tail: F_emp = 0, integrand Phi(z); right tail: 1 - Phi(z).
    double acc = cdf_antiderivative(z.front());
    acc += normal_pdf(z.back()) - z.back() * (1.0 - normal_cdf(z.back()));
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double level = static_cast<double>(i + 1) / static_cast<double>(n);
        acc += segment(z[i], z[i + 1], level);
    }
    return stddev * acc;
}

double w1_sample_vs_law(std::span<const double> samples, const GaussianLaw& law) {
    return w1_sample_vs_gaussian(samples, law.mean_1d(), std::sqrt(law.var_1d()));
}

double sliced_w1(std::span<const double> a, std::span<const double> b, int n_particles, int dim,
                 int n_directions, RngStream& stream) {
    if (dim < 2) throw ConfigError("sliced_w1 is for dim >= 2; use w1_empirical_1d in 1D");
    if (n_directions < 1) throw ConfigError("sliced_w1 needs at least one direction");
    const std::size_t expect = static_cast<std::size_t>(n_particles) * dim;
    if (a.size() != expect || b.size() != expect)
        throw ConfigError("sliced_w1 sample buffers do not match N x d");

    std::vector<double> dir(dim);
    std::vector<double> pa(n_particles);
    std::vector<double> pb(n_particles);
    double acc = 0.0;
    for (int s = 0; s < n_directions; ++s) {
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (int k = 0; k < dim; ++k) {
                dir[k] = stream.normal();
                norm2 += dir[k] * dir[k];
            }
        } while (norm2 == 0.0);
        const double inv = 1.0 / std::sqrt(norm2);
        for (int k = 0; k < dim; ++k) dir[k] *= inv;
        for (int i = 0; i < n_particles; ++i) {
            double da = 0.0, db = 0.0;
            for (int k = 0; k < dim; ++k) {
                da += dir[k] * a[static_cast<std::size_t>(i) * dim + k];
                db += dir[k] * b[static_cast<std::size_t>(i) * dim + k];
            }
            pa[i] = da;
            pb[i] = db;
        }
        acc += w1_empirical_1d(pa, pb);
    }
    return acc / n_directions;
}

double moment(const ParticleEnsemble& ens, int order) {
    if (order != 2 && order != 4 && order != 6 && order != 8)
        throw ConfigError("moment order must be one of {2, 4, 6, 8}");
    if (ens.n_particles < 1) throw ConfigError("moment of an empty ensemble");
    const int half = order / 2;
    double acc = 0.0;
    for (int i = 0; i < ens.n_particles; ++i) {
        const double* x = ens.at(i);
        double r2 = 0.0;
        for (int k = 0; k < ens.dim; ++k) r2 += x[k] * x[k];
        double term = 1.0;
        for (int q = 0; q < half; ++q) term *= r2;
        acc += term;
    }
    return acc / ens.n_particles;
}

std::vector<double> moments(const ParticleEnsemble& ens, std::span<const int> orders) {
    std::vector<double> out;
    out.reserve(orders.size());
    for (int order : orders) out.push_back(moment(ens, order));
    return out;
}

double kl_gaussian_fit(std::span<const double> samples, int n_samples, int dim,
                       const GaussianLaw& ref) {
    if (n_samples < 2) throw ConfigError("kl_gaussian_fit needs at least 2 samples");
    if (ref.dim() != dim) throw ConfigError("reference law dimension mismatch");
    if (samples.size() != static_cast<std::size_t>(n_samples) * dim)
        throw ConfigError("sample buffer does not match N x d");

    using Mat = Eigen::MatrixXd;
    using Vec = Eigen::VectorXd;
    Eigen::Map<const Mat> x(samples.data(), dim, n_samples); // column per sample
    const Vec mhat = x.rowwise().mean();
    Mat centered = x.colwise() - mhat;
    const Mat shat = (centered * centered.transpose()) / static_cast<double>(n_samples);

    Eigen::Map<const Vec> mu(ref.mean.data(), dim);
    Eigen::Map<const Mat> sigma(ref.cov.data(), dim, dim);

    const Eigen::LLT<Mat> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw NumericError("reference covariance is not positive definite");
    const Mat solved = llt.solve(shat);
    const Vec gap = mhat - mu;
    const double quad = gap.dot(llt.solve(gap));

    const double logdet_ref =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const Eigen::LLT<Mat> llt_hat(shat);
    if (llt_hat.info() != Eigen::Success)
        throw NumericError("sample covariance is singular; the Gaussian KL fit needs more "
                           "samples (larger N) or more spread");
    const double logdet_hat =
        2.0 * llt_hat.matrixL().toDenseMatrix().diagonal().array().log().sum();

    const double kl =
        0.5 * (solved.trace() + quad - dim + logdet_ref - logdet_hat);
    return std::max(kl, 0.0);
}

RateFit fit_rate(std::span<const std::pair<double, double>> points) {
    if (points.size() < 3) throw ConfigError("rate fit needs at least 3 points");
    RateFit fit;
    fit.points.reserve(points.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : points) {
        if (!(x > 0.0) || !(y > 0.0))
            throw ConfigError("rate fit needs strictly positive coordinates");
        const double lx = std::log(x);
        const double ly = std::log(y);
        fit.points.emplace_back(lx, ly);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        syy += ly * ly;
    }
    const double n = static_cast<double>(points.size());
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) throw ConfigError("rate fit abscissae are degenerate");
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    for (const auto& [lx, ly] : fit.points) {
        const double r = ly - (fit.intercept + fit.slope * lx);
        ss_res += r * r;
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

RateFit fit_rate_with_floor(std::span<const std::pair<double, double>> points) {
    if (points.size() < 3) throw ConfigError("rate fit needs at least 3 points");
    double y_min = std::numeric_limits<double>::infinity();
    for (const auto& [x, y] : points) {
        if (!(x > 0.0) || !(y > 0.0))
            throw ConfigError("rate fit needs strictly positive coordinates");
        y_min = std::min(y_min, y);
    }

    // Scan the floor over [0, y_min); keep whichever subtraction leaves the
    // straightest log-log line. 0 stays in the scan so a pure power law is
    // never made worse.
    constexpr int kScan = 2000;
    RateFit best;
    double best_res = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> shifted(points.size());
    for (int s = 0; s < kScan; ++s) {
        const double floor = y_min * (static_cast<double>(s) / kScan) * 0.999;
        bool ok = true;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double y = points[i].second - floor;
            if (!(y > 0.0)) {
                ok = false;
                break;
            }
            shifted[i] = {points[i].first, y};
        }
        if (!ok) continue;
        RateFit fit = fit_rate(shifted);
        double ss_res = 0.0;
        for (const auto& [lx, ly] : fit.points) {
            const double r = ly - (fit.intercept + fit.slope * lx);
            ss_res += r * r;
        }
        if (ss_res < best_res) {
            best_res = ss_res;
            best = std::move(fit);
            best.floor = floor;
        }
    }
    if (!best.floor.has_value()) throw NumericError("floor scan found no admissible fit");
    return best;
}

} // namespace rbm
