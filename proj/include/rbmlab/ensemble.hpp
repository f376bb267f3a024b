#pragma once

#include <span>
#include <vector>

namespace rbm {

/// N particle positions in R^d plus the simulation clock. Positions are kept
/// finite by the steppers; time == step * tau after whole-step evolution.
struct ParticleEnsemble {
    int n_particles = 0;
    int dim = 0;
    std::vector<double> positions; // row-major, n_particles x dim
    double time = 0.0;
    long step = 0;

    double* at(int i) { return positions.data() + static_cast<std::size_t>(i) * dim; }
    const double* at(int i) const { return positions.data() + static_cast<std::size_t>(i) * dim; }

    /// The i-th particle's coordinates as a span.
    std::span<const double> particle(int i) const { return {at(i), static_cast<std::size_t>(dim)}; }
};

} // namespace rbm
