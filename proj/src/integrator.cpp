#include "rbmlab/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rbmlab/errors.hpp"

namespace rbm {

namespace {

constexpr double kDivergenceLimit = 1e10;

void check_finite(const ParticleEnsemble& ens, long step) {
    const int dim = ens.dim;
    for (int i = 0; i < ens.n_particles; ++i) {
        const double* x = ens.at(i);
        for (int k = 0; k < dim; ++k) {
            if (!std::isfinite(x[k])) {
                std::ostringstream msg;
                msg << "non-finite position for particle " << i << " at step " << step;
                throw NumericError(msg.str(), i, step);
            }
            if (std::abs(x[k]) > kDivergenceLimit) {
                std::ostringstream msg;
                msg << "trajectory divergence (|x| > 1e10) for particle " << i << " at step "
                    << step;
                throw NumericError(msg.str(), i, step);
            }
        }
    }
}

} // namespace

void BatchPartition::validate() const {
    if (p < 2) throw ConfigError("batch size p must be >= 2");
    if (n_batches * p != n_particles) throw ConfigError("batch size p must divide N");
    std::vector<int> count(n_batches, 0);
    for (int b : assignment) {
        if (b < 0 || b >= n_batches) throw ConfigError("batch index out of range");
        ++count[b];
    }
    for (int c : count)
        if (c != p) throw ConfigError("every batch must contain exactly p particles");
}

BatchPartition sample_partition(int n_particles, int p, RngStream& stream) {
    if (p < 2) throw ConfigError("batch size p must be >= 2");
    if (p > n_particles || n_particles % p != 0)
        throw ConfigError("batch size p must divide the particle count N");

    BatchPartition part;
    part.n_particles = n_particles;
    part.p = p;
    part.n_batches = n_particles / p;
    part.members.resize(n_particles);
    part.assignment.resize(n_particles);

    std::iota(part.members.begin(), part.members.end(), 0);
    for (int i = n_particles - 1; i > 0; --i) {
        const auto j = stream.bounded(static_cast<std::uint32_t>(i + 1));
        std::swap(part.members[i], part.members[j]);
    }
    // Batches are unordered sets: sorting members inside each chunk fixes the
    // summation order without touching the partition's distribution.
    for (int b = 0; b < part.n_batches; ++b) {
        auto begin = part.members.begin() + static_cast<std::ptrdiff_t>(b) * p;
        std::sort(begin, begin + p);
        for (int slot = 0; slot < p; ++slot) part.assignment[begin[slot]] = b;
    }
    return part;
}

void batch_force(std::span<const double> positions, int n_particles, int dim, int i,
                 const BatchPartition& partition, const VectorFieldFn& kernel, double* out,
                 double* scratch) {
    (void)n_particles;
    double* diff = scratch;
    double* kval = scratch + dim;
    std::fill(out, out + dim, 0.0);
    const double* xi = positions.data() + static_cast<std::size_t>(i) * dim;
    for (int j : partition.batch(partition.assignment[i])) {
        if (j == i) continue;
        const double* xj = positions.data() + static_cast<std::size_t>(j) * dim;
        for (int k = 0; k < dim; ++k) diff[k] = xi[k] - xj[k];
        kernel(diff, kval);
        for (int k = 0; k < dim; ++k) out[k] += kval[k];
    }
    const double inv = 1.0 / (partition.p - 1);
    for (int k = 0; k < dim; ++k) out[k] *= inv;
}

void full_force(std::span<const double> positions, int n_particles, int dim, int i,
                const VectorFieldFn& kernel, double* out, double* scratch) {
    std::fill(out, out + dim, 0.0);
    if (n_particles < 2) return;
    double* diff = scratch;
    double* kval = scratch + dim;
    const double* xi = positions.data() + static_cast<std::size_t>(i) * dim;
    for (int j = 0; j < n_particles; ++j) {
        if (j == i) continue;
        const double* xj = positions.data() + static_cast<std::size_t>(j) * dim;
        for (int k = 0; k < dim; ++k) diff[k] = xi[k] - xj[k];
        kernel(diff, kval);
        for (int k = 0; k < dim; ++k) out[k] += kval[k];
    }
    const double inv = 1.0 / (n_particles - 1);
    for (int k = 0; k < dim; ++k) out[k] *= inv;
}

namespace {

enum class ForceKind { full, batch };

// Jacobi update: every force reads the pre-step state, per the discrete
// scheme. Noise enters as sqrt(2 sigma tau) z_i.
void em_step_impl(ParticleEnsemble& ens, const SimConfig& cfg, std::span<const double> noise,
                  ForceKind force_kind, const BatchPartition* partition) {
    const int n = ens.n_particles;
    const int dim = ens.dim;
    const ModelSpec& model = *cfg.model;
    if (noise.size() != static_cast<std::size_t>(n) * dim)
        throw ConfigError("noise buffer must hold N x d standard normals");

    const double tau = cfg.tau;
    const double diffusion = std::sqrt(2.0 * model.sigma * tau);
    std::vector<double> next(ens.positions.size());
    std::vector<double> scratch(3 * static_cast<std::size_t>(dim));
    double* force = scratch.data() + 2 * dim;
    std::vector<double> drift(dim);

    for (int i = 0; i < n; ++i) {
        const double* x = ens.at(i);
        model.drift(x, drift.data());
        if (force_kind == ForceKind::full)
            full_force(ens.positions, n, dim, i, model.kernel, force, scratch.data());
        else
            batch_force(ens.positions, n, dim, i, *partition, model.kernel, force,
                        scratch.data());
        double* out = next.data() + static_cast<std::size_t>(i) * dim;
        const double* z = noise.data() + static_cast<std::size_t>(i) * dim;
        for (int k = 0; k < dim; ++k)
            out[k] = x[k] + tau * drift[k] + tau * force[k] + diffusion * z[k];
    }

    ens.positions = std::move(next);
    ens.step += 1;
    ens.time = static_cast<double>(ens.step) * tau;
    check_finite(ens, ens.step);
}

} // namespace

void full_em_step(ParticleEnsemble& ens, const SimConfig& cfg, std::span<const double> noise) {
    em_step_impl(ens, cfg, noise, ForceKind::full, nullptr);
}

void rbm_step(ParticleEnsemble& ens, const BatchPartition& partition, const SimConfig& cfg,
              std::span<const double> noise) {
    if (partition.n_particles != ens.n_particles)
        throw ConfigError("partition does not match the ensemble size");
    em_step_impl(ens, cfg, noise, ForceKind::batch, &partition);
}

ParticleEnsemble interpolate(const ParticleEnsemble& at_grid_point,
                             const BatchPartition& partition, const SimConfig& cfg, double t,
                             std::span<const double> bridge_noise) {
    const double t_k = at_grid_point.time;
    const double elapsed = t - t_k;
    if (elapsed < 0.0 || elapsed >= cfg.tau)
        throw ConfigError("interpolation time must lie in [T_k, T_{k+1})");

    const int n = at_grid_point.n_particles;
    const int dim = at_grid_point.dim;
    const ModelSpec& model = *cfg.model;
    if (bridge_noise.size() != static_cast<std::size_t>(n) * dim)
        throw ConfigError("noise buffer must hold N x d standard normals");

    ParticleEnsemble out = at_grid_point;
    out.time = t;
    if (elapsed == 0.0) return out;

    const double diffusion = std::sqrt(2.0 * model.sigma * elapsed);
    std::vector<double> scratch(3 * static_cast<std::size_t>(dim));
    double* force = scratch.data() + 2 * dim;
    std::vector<double> drift(dim);
    for (int i = 0; i < n; ++i) {
        const double* x = at_grid_point.at(i);
        model.drift(x, drift.data());
        batch_force(at_grid_point.positions, n, dim, i, partition, model.kernel, force,
                    scratch.data());
        double* dst = out.at(i);
        const double* z = bridge_noise.data() + static_cast<std::size_t>(i) * dim;
        for (int k = 0; k < dim; ++k)
            dst[k] = x[k] + elapsed * (drift[k] + force[k]) + diffusion * z[k];
    }
    check_finite(out, at_grid_point.step);
    return out;
}

std::vector<double> InitialDist::mean_vector(int dim) const {
    std::vector<double> m(dim, 0.0);
    if (mean.size() == 1) {
        std::fill(m.begin(), m.end(), mean[0]);
    } else if (!mean.empty()) {
        if (mean.size() != static_cast<std::size_t>(dim))
            throw ConfigError("initial mean must have 1 or dim entries");
        m = mean;
    }
    return m;
}

double InitialDist::isotropic_variance() const {
    switch (kind) {
        case InitialKind::gaussian: return variance;
        case InitialKind::uniform_box: return half_width * half_width / 3.0;
        case InitialKind::point: return 0.0;
    }
    return 0.0;
}

void SimConfig::validate() const {
    if (!model) throw ConfigError("simulation requires a model");
    if (n_particles < 1) throw ConfigError("particle count N must be >= 1");
    if (!(tau > 0.0)) throw ConfigError("time step tau must be > 0");
    if (horizon < 0.0) throw ConfigError("horizon T must be >= 0");
    if (replicas < 1) throw ConfigError("replicas must be >= 1");
    if (kind == IntegratorKind::rbm) {
        if (batch_size < 2) throw ConfigError("batch size p must be >= 2");
        if (n_particles % batch_size != 0) {
            std::ostringstream msg;
            msg << "batch size p = " << batch_size << " must divide the particle count N = "
                << n_particles;
            throw ConfigError(msg.str());
        }
    }
    if (init.kind == InitialKind::gaussian && init.variance < 0.0)
        throw ConfigError("initial variance must be >= 0");
    if (init.kind == InitialKind::uniform_box && init.half_width < 0.0)
        throw ConfigError("initial half_width must be >= 0");
}

long SimConfig::step_count() const {
    return static_cast<long>(std::floor(horizon / tau + 1e-9));
}

StreamDomain SimConfig::noise_domain() const {
    if (coupling == NoiseCoupling::common) return StreamDomain::noise;
    return kind == IntegratorKind::full_em ? StreamDomain::noise_full : StreamDomain::noise_rbm;
}

ParticleEnsemble sample_initial(const SimConfig& cfg) {
    const int dim = cfg.model->dim;
    ParticleEnsemble ens;
    ens.n_particles = cfg.n_particles;
    ens.dim = dim;
    ens.positions.resize(static_cast<std::size_t>(cfg.n_particles) * dim);

    const std::vector<double> mean = cfg.init.mean_vector(dim);
    const double sd = std::sqrt(std::max(cfg.init.variance, 0.0));
    for (int i = 0; i < cfg.n_particles; ++i) {
        RngStream stream = init_stream(cfg.seed, cfg.replica_id, static_cast<std::uint32_t>(i));
        double* x = ens.at(i);
        switch (cfg.init.kind) {
            case InitialKind::gaussian:
                for (int k = 0; k < dim; ++k) x[k] = mean[k] + sd * stream.normal();
                break;
            case InitialKind::uniform_box:
                for (int k = 0; k < dim; ++k)
                    x[k] = mean[k] + cfg.init.half_width * (2.0 * stream.uniform() - 1.0);
                break;
            case InitialKind::point:
                for (int k = 0; k < dim; ++k) x[k] = mean[k];
                break;
        }
    }
    check_finite(ens, 0);
    return ens;
}

ParticleEnsemble run(const SimConfig& cfg, const RunOptions& options, MetricsRecord& record) {
    cfg.validate();
    const int n = cfg.n_particles;
    const int dim = cfg.model->dim;
    const long steps = cfg.step_count();
    const StreamDomain domain = cfg.noise_domain();

    ParticleEnsemble ens = sample_initial(cfg);

    auto notify = [&](const ParticleEnsemble& state, bool boundary) {
        for (const Observer& obs : options.observers) {
            if (boundary || (obs.stride > 0 && state.step % obs.stride == 0))
                obs.fn(state, record);
        }
        if (options.snapshot_sink &&
            (boundary || (options.snapshot_stride > 0 && state.step % options.snapshot_stride == 0)))
            options.snapshot_sink(state);
    };

    notify(ens, true);
    std::vector<double> noise(static_cast<std::size_t>(n) * dim);
    for (long k = 0; k < steps; ++k) {
        for (int i = 0; i < n; ++i) {
            RngStream stream = noise_stream(cfg.seed, cfg.replica_id, static_cast<std::uint32_t>(i),
                                            static_cast<std::uint32_t>(k), domain);
            stream.fill_normal({noise.data() + static_cast<std::size_t>(i) * dim,
                                static_cast<std::size_t>(dim)});
        }
        if (cfg.kind == IntegratorKind::rbm) {
            RngStream shuffle =
                partition_stream(cfg.seed, cfg.replica_id, static_cast<std::uint32_t>(k));
            const BatchPartition partition = sample_partition(n, cfg.batch_size, shuffle);
            rbm_step(ens, partition, cfg, noise);
        } else {
            full_em_step(ens, cfg, noise);
        }
        notify(ens, k + 1 == steps);
    }
    return ens;
}

} // namespace rbm
