#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rbmlab/integrator.hpp"
#include "rbmlab/metrics.hpp"

namespace rbm {

/// What a sweep measures at the horizon, per replica:
///   mean_bias        |empirical mean - reference mean| (Euclidean)
///   var_bias         |average marginal variance - reference variance|
///   w1_vs_reference  w1_sample_vs_law against the Gaussian reference (d = 1)
///   strong_error     RMS over particles of |X_rbm - X_full| under common noise
///   step_wall_time   median per-step wall-clock seconds
///   kl_vs_reference  kl_gaussian_fit against the Gaussian reference
enum class Observable {
    mean_bias,
    var_bias,
    w1_vs_reference,
    strong_error,
    step_wall_time,
    kl_vs_reference,
};

enum class SweepAxis { tau, n_particles, batch_size };

std::string to_string(Observable obs);
std::string to_string(SweepAxis axis);
/// Throws ConfigError listing the valid names on an unknown identifier.
Observable observable_from_string(const std::string& name);
SweepAxis sweep_axis_from_string(const std::string& name);

struct SweepPlan {
    SimConfig base;
    SweepAxis axis = SweepAxis::tau;
    std::vector<double> values;
    Observable observable = Observable::var_bias;
    int replicas = 8;
    double reference_dt_ode = 1e-3;
};

struct SweepPoint {
    double axis_value = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
    int replicas_done = 0;
    int replicas_aborted = 0;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::tau;
    Observable observable = Observable::var_bias;
    std::vector<SweepPoint> points;
    /// Log-log fit over (axis value, point mean); floor-subtracted for
    /// tau sweeps of w1/kl observables (two-term bound: C x^a + floor).
    /// Absent when fewer than 3 points survived.
    std::optional<RateFit> fit;
    bool partial = false;
    double abort_fraction = 0.0;
    /// Per-replica observable values keyed (metric, replica) at axis times.
    MetricsRecord record;
    std::vector<std::string> abort_messages;
};

/// Runs plan.replicas independent simulations per axis value on up to
/// n_threads workers and aggregates. Replica aborts (numerical blow-ups) are
/// recorded and skipped; the fit uses surviving points. step_wall_time
/// sweeps run on a single worker so timings are not polluted by contention.
SweepResult run_sweep(const SweepPlan& plan, int n_threads);

struct UniformityReport {
    bool passed = false;
    std::vector<int> orders;
    std::vector<double> times;
    /// values[q][s] = moment of orders[q] at times[s].
    std::vector<std::vector<double>> values;
    /// Per order: max over the first half, max over the second half, and the
    /// mean over the second half (the plateau estimate).
    std::vector<double> first_half_max;
    std::vector<double> second_half_max;
    std::vector<double> plateau;
    std::string message;
};

/// Samples |x|^order moments every unit of time up to t_long and passes iff
/// no order's running max over (t_long/2, t_long] exceeds its max over
/// [0, t_long/2] by more than 20%. A numerical abort fails the check.
UniformityReport moment_uniformity_check(const SimConfig& cfg, double t_long,
                                         std::span<const int> orders);

} // namespace rbm
