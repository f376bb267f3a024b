#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rbmlab/ensemble.hpp"
#include "rbmlab/metrics.hpp"
#include "rbmlab/model.hpp"
#include "rbmlab/rng.hpp"

namespace rbm {

/// A division of {0, ..., N-1} into n = N/p disjoint batches of size p.
/// Batch members are stored in ascending index order so that sums over a
/// batch use the same evaluation order as sums over all particles; with
/// p = N this makes the RBM force bit-identical to the full force.
struct BatchPartition {
    int n_particles = 0;
    int p = 0;
    int n_batches = 0;
    std::vector<int> assignment;      // particle -> batch index
    std::vector<int> members;         // batch b occupies [b*p, (b+1)*p), ascending

    std::span<const int> batch(int b) const {
        return {members.data() + static_cast<std::size_t>(b) * p, static_cast<std::size_t>(p)};
    }
    void validate() const;
};

/// Uniformly random partition into N/p unordered batches of size p:
/// Fisher-Yates shuffle, then chunking into consecutive blocks.
/// Requires p >= 2 and p | N.
BatchPartition sample_partition(int n_particles, int p, RngStream& stream);

enum class IntegratorKind { full_em, rbm };

/// In coupled mode the full-system and RBM runs read the same noise streams,
/// so particle i receives the same Gaussian increment at step k in both.
enum class NoiseCoupling { common, independent };

enum class InitialKind { gaussian, uniform_box, point };

/// Initial distribution rho_0; particles are drawn i.i.d. from it.
struct InitialDist {
    InitialKind kind = InitialKind::gaussian;
    std::vector<double> mean;   // broadcast to dim if a single entry
    double variance = 1.0;      // gaussian: isotropic variance
    double half_width = 1.0;    // uniform_box: box is mean +/- half_width

    std::vector<double> mean_vector(int dim) const;
    double isotropic_variance() const;
};

struct SimConfig {
    int n_particles = 0;
    int batch_size = 2;     // p; must satisfy p >= 2 and p | N
    double tau = 0.0;
    double horizon = 0.0;   // T
    std::shared_ptr<const ModelSpec> model;
    IntegratorKind kind = IntegratorKind::rbm;
    NoiseCoupling coupling = NoiseCoupling::common;
    InitialDist init;
    int replicas = 1;
    std::uint64_t seed = 0;
    std::uint32_t replica_id = 0;

    void validate() const;
    long step_count() const;
    StreamDomain noise_domain() const;
};

/// (1/(p-1)) sum over batch-mates j != i of K(x_i - x_j).
/// `scratch` must hold at least 2*dim doubles.
void batch_force(std::span<const double> positions, int n_particles, int dim, int i,
                 const BatchPartition& partition, const VectorFieldFn& kernel, double* out,
                 double* scratch);

/// F(x_i) = (1/(N-1)) sum over j != i of K(x_i - x_j); zero when N = 1.
void full_force(std::span<const double> positions, int n_particles, int dim, int i,
                const VectorFieldFn& kernel, double* out, double* scratch);

/// One Euler-Maruyama step of the full system:
/// x_i += tau b(x_i) + tau F(x_i) + sqrt(2 sigma tau) z_i, forces at the
/// pre-step state. `noise` holds N standard-normal d-vectors.
void full_em_step(ParticleEnsemble& ens, const SimConfig& cfg, std::span<const double> noise);

/// One RBM step: as full_em_step with F replaced by the batch force of the
/// given partition.
void rbm_step(ParticleEnsemble& ens, const BatchPartition& partition, const SimConfig& cfg,
              std::span<const double> noise);

/// Continuous-time interpolant on [T_k, T_{k+1}): drift and batch force
/// frozen at T_k advance by (t - T_k); the diffusion term is
/// sqrt(2 sigma (t - T_k)) * bridge_noise. t must lie in [T_k, T_{k+1}).
ParticleEnsemble interpolate(const ParticleEnsemble& at_grid_point,
                             const BatchPartition& partition, const SimConfig& cfg, double t,
                             std::span<const double> bridge_noise);

/// Observer invoked every `stride` steps (and at t = 0 and the final state).
struct Observer {
    long stride = 1;
    std::function<void(const ParticleEnsemble&, MetricsRecord&)> fn;
};

struct RunOptions {
    std::vector<Observer> observers;
    /// Invoked like an observer when set; used for trajectory dumps.
    std::function<void(const ParticleEnsemble&)> snapshot_sink;
    long snapshot_stride = 1;
};

/// Draws the initial ensemble from cfg.init (replica-keyed streams).
ParticleEnsemble sample_initial(const SimConfig& cfg);

/// Runs floor(T / tau) steps of the configured integrator; RBM resamples a
/// fresh partition every step from the dedicated shuffle stream. Metrics
/// recorded so far survive a NumericError abort (the record is the caller's).
ParticleEnsemble run(const SimConfig& cfg, const RunOptions& options, MetricsRecord& record);

} // namespace rbm
