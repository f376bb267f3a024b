#include "rbmlab/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>

#include "rbmlab/errors.hpp"
#include "rbmlab/meanfield.hpp"
#include "rbmlab/threadpool.hpp"

namespace rbm {

std::string to_string(Observable obs) {
    switch (obs) {
        case Observable::mean_bias: return "mean_bias";
        case Observable::var_bias: return "var_bias";
        case Observable::w1_vs_reference: return "w1_vs_reference";
        case Observable::strong_error: return "strong_error";
        case Observable::step_wall_time: return "step_wall_time";
        case Observable::kl_vs_reference: return "kl_vs_reference";
    }
    return "unknown";
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::tau: return "tau";
        case SweepAxis::n_particles: return "n_particles";
        case SweepAxis::batch_size: return "batch_size";
    }
    return "unknown";
}

Observable observable_from_string(const std::string& name) {
    if (name == "mean_bias") return Observable::mean_bias;
    if (name == "var_bias") return Observable::var_bias;
    if (name == "w1_vs_reference") return Observable::w1_vs_reference;
    if (name == "strong_error") return Observable::strong_error;
    if (name == "step_wall_time") return Observable::step_wall_time;
    if (name == "kl_vs_reference") return Observable::kl_vs_reference;
    throw ConfigError("unknown observable '" + name +
                      "'; valid: mean_bias, var_bias, w1_vs_reference, strong_error, "
                      "step_wall_time, kl_vs_reference");
}

SweepAxis sweep_axis_from_string(const std::string& name) {
    if (name == "tau") return SweepAxis::tau;
    if (name == "n_particles" || name == "N") return SweepAxis::n_particles;
    if (name == "batch_size" || name == "p") return SweepAxis::batch_size;
    throw ConfigError("unknown sweep axis '" + name +
                      "'; valid: tau, n_particles, batch_size");
}

namespace {

SimConfig config_for(const SweepPlan& plan, double value) {
    SimConfig cfg = plan.base;
    switch (plan.axis) {
        case SweepAxis::tau:
            cfg.tau = value;
            break;
        case SweepAxis::n_particles:
            cfg.n_particles = static_cast<int>(std::lround(value));
            break;
        case SweepAxis::batch_size:
            cfg.batch_size = static_cast<int>(std::lround(value));
            break;
    }
    cfg.validate();
    return cfg;
}

bool needs_reference(Observable obs) {
    switch (obs) {
        case Observable::mean_bias:
        case Observable::var_bias:
        case Observable::w1_vs_reference:
        case Observable::kl_vs_reference:
            return true;
        default:
            return false;
    }
}

double empirical_mean_gap(const ParticleEnsemble& ens, const GaussianLaw& ref) {
    const int d = ens.dim;
    std::vector<double> m(d, 0.0);
    for (int i = 0; i < ens.n_particles; ++i)
        for (int k = 0; k < d; ++k) m[k] += ens.at(i)[k];
    double gap2 = 0.0;
    for (int k = 0; k < d; ++k) {
        m[k] /= ens.n_particles;
        const double g = m[k] - ref.mean[k];
        gap2 += g * g;
    }
    return std::sqrt(gap2);
}

double empirical_var_gap(const ParticleEnsemble& ens, const GaussianLaw& ref) {
    const int d = ens.dim;
    const int n = ens.n_particles;
    std::vector<double> m(d, 0.0), v(d, 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k) m[k] += ens.at(i)[k];
    for (int k = 0; k < d; ++k) m[k] /= n;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k) {
            const double c = ens.at(i)[k] - m[k];
            v[k] += c * c;
        }
    double avg_var = 0.0;
    for (int k = 0; k < d; ++k) avg_var += v[k] / n;
    avg_var /= d;
    double ref_var = 0.0;
    for (int k = 0; k < d; ++k) ref_var += ref.cov[static_cast<std::size_t>(k) * d + k];
    ref_var /= d;
    return std::abs(avg_var - ref_var);
}

double strong_error_value(const SimConfig& base, int replica) {
    SimConfig full = base;
    full.kind = IntegratorKind::full_em;
    full.coupling = NoiseCoupling::common;
    full.replica_id = replica;
    SimConfig rb = base;
    rb.kind = IntegratorKind::rbm;
    rb.coupling = NoiseCoupling::common;
    rb.replica_id = replica;

    MetricsRecord scratch;
    const ParticleEnsemble xf = run(full, RunOptions{}, scratch);
    const ParticleEnsemble xr = run(rb, RunOptions{}, scratch);
    double acc = 0.0;
    for (int i = 0; i < xf.n_particles; ++i) {
        double d2 = 0.0;
        for (int k = 0; k < xf.dim; ++k) {
            const double g = xr.at(i)[k] - xf.at(i)[k];
            d2 += g * g;
        }
        acc += d2;
    }
    return std::sqrt(acc / xf.n_particles);
}

double step_wall_time_value(const SimConfig& base, int replica) {
    SimConfig cfg = base;
    cfg.replica_id = replica;
    cfg.validate();
    const long steps = cfg.step_count();
    if (steps < 1)
        throw ConfigError("step_wall_time needs at least one step (horizon >= tau)");

    const int n = cfg.n_particles;
    const int dim = cfg.model->dim;
    const StreamDomain domain = cfg.noise_domain();
    ParticleEnsemble ens = sample_initial(cfg);
    std::vector<double> noise(static_cast<std::size_t>(n) * dim);
    std::vector<double> per_step(steps);
    using clock = std::chrono::steady_clock;
    for (long k = 0; k < steps; ++k) {
        const auto t0 = clock::now();
        for (int i = 0; i < n; ++i) {
            RngStream stream = noise_stream(cfg.seed, cfg.replica_id,
                                            static_cast<std::uint32_t>(i),
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
        per_step[k] = std::chrono::duration<double>(clock::now() - t0).count();
    }
    std::nth_element(per_step.begin(), per_step.begin() + steps / 2, per_step.end());
    return per_step[steps / 2];
}

double evaluate_replica(const SweepPlan& plan, const SimConfig& point_cfg, int replica,
                        const GaussianLaw* ref) {
    switch (plan.observable) {
        case Observable::strong_error:
            return strong_error_value(point_cfg, replica);
        case Observable::step_wall_time:
            return step_wall_time_value(point_cfg, replica);
        default:
            break;
    }
    SimConfig cfg = point_cfg;
    cfg.replica_id = replica;
    MetricsRecord scratch;
    const ParticleEnsemble ens = run(cfg, RunOptions{}, scratch);
    switch (plan.observable) {
        case Observable::mean_bias:
            return empirical_mean_gap(ens, *ref);
        case Observable::var_bias:
            return empirical_var_gap(ens, *ref);
        case Observable::w1_vs_reference:
            return w1_sample_vs_law(ens.positions, *ref);
        case Observable::kl_vs_reference:
            return kl_gaussian_fit(ens.positions, ens.n_particles, ens.dim, *ref);
        default:
            throw ConfigError("unhandled observable");
    }
}

} // namespace

SweepResult run_sweep(const SweepPlan& plan, int n_threads) {
    if (plan.values.empty()) throw ConfigError("sweep has an empty value list");
    if (plan.replicas < 1) throw ConfigError("sweep replicas must be >= 1");

    const std::size_t n_points = plan.values.size();
    std::vector<SimConfig> point_cfgs;
    point_cfgs.reserve(n_points);
    for (double v : plan.values) point_cfgs.push_back(config_for(plan, v));

    // References are per point: the realized final time steps * tau can vary
    // with tau, and the reference must match it.
    std::vector<GaussianLaw> refs;
    if (needs_reference(plan.observable)) {
        refs.reserve(n_points);
        for (const SimConfig& cfg : point_cfgs) {
            const double t_final = cfg.step_count() * cfg.tau;
            refs.push_back(gaussian_reference(*cfg.model, cfg.init.mean_vector(cfg.model->dim),
                                              cfg.init.isotropic_variance(), t_final,
                                              plan.reference_dt_ode));
        }
    }

    // Wall-clock sweeps run sequentially so contention cannot skew timings.
    const int workers = plan.observable == Observable::step_wall_time ? 1 : n_threads;

    const std::size_t total = n_points * static_cast<std::size_t>(plan.replicas);
    std::vector<double> values(total, 0.0);
    std::vector<char> ok(total, 0);
    std::vector<std::string> aborts(total);
    parallel_for(total, workers, [&](std::size_t task) {
        const std::size_t pi = task / plan.replicas;
        const int replica = static_cast<int>(task % plan.replicas);
        const GaussianLaw* ref = refs.empty() ? nullptr : &refs[pi];
        try {
            values[task] = evaluate_replica(plan, point_cfgs[pi], replica, ref);
            ok[task] = 1;
        } catch (const NumericError& e) {
            std::ostringstream msg;
            msg << to_string(plan.axis) << " = " << plan.values[pi] << ", replica " << replica
                << ": " << e.what();
            aborts[task] = msg.str();
        }
    });

    SweepResult result;
    result.axis = plan.axis;
    result.observable = plan.observable;
    result.points.resize(n_points);
    long aborted_total = 0;
    for (std::size_t pi = 0; pi < n_points; ++pi) {
        SweepPoint& pt = result.points[pi];
        pt.axis_value = plan.values[pi];
        double sum = 0.0;
        std::vector<double> done;
        for (int r = 0; r < plan.replicas; ++r) {
            const std::size_t task = pi * plan.replicas + r;
            if (ok[task]) {
                done.push_back(values[task]);
                sum += values[task];
            } else {
                ++pt.replicas_aborted;
                result.abort_messages.push_back(aborts[task]);
            }
        }
        pt.replicas_done = static_cast<int>(done.size());
        aborted_total += pt.replicas_aborted;
        if (!done.empty()) {
            pt.mean = sum / static_cast<double>(done.size());
            if (done.size() > 1) {
                double ss = 0.0;
                for (double v : done) ss += (v - pt.mean) * (v - pt.mean);
                pt.std_error = std::sqrt(ss / (done.size() - 1.0) / done.size());
            }
        }
    }
    result.partial = aborted_total > 0;
    result.abort_fraction = static_cast<double>(aborted_total) / static_cast<double>(total);

    // Per-replica entries, ascending axis value so times stay sorted.
    std::vector<std::size_t> order(n_points);
    for (std::size_t i = 0; i < n_points; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return plan.values[a] < plan.values[b]; });
    result.record.notes.push_back("sweep axis " + to_string(plan.axis) +
                                  ": the time column holds the axis value");
    for (std::size_t oi : order)
        for (int r = 0; r < plan.replicas; ++r) {
            const std::size_t task = oi * plan.replicas + r;
            if (ok[task])
                result.record.append(plan.values[oi], to_string(plan.observable), values[task],
                                     r);
        }

    std::vector<std::pair<double, double>> fit_points;
    for (const SweepPoint& pt : result.points)
        if (pt.replicas_done > 0 && pt.mean > 0.0)
            fit_points.emplace_back(pt.axis_value, pt.mean);
    if (fit_points.size() >= 3) {
        const bool use_floor =
            plan.axis == SweepAxis::tau && (plan.observable == Observable::w1_vs_reference ||
                                            plan.observable == Observable::kl_vs_reference);
        result.fit = use_floor ? fit_rate_with_floor(fit_points) : fit_rate(fit_points);
    }
    return result;
}

UniformityReport moment_uniformity_check(const SimConfig& cfg, double t_long,
                                         std::span<const int> orders) {
    if (!(t_long > 0.0)) throw ConfigError("uniformity check horizon must be > 0");
    if (orders.empty()) throw ConfigError("uniformity check needs at least one moment order");

    SimConfig long_cfg = cfg;
    long_cfg.horizon = t_long;
    long_cfg.validate();

    UniformityReport report;
    report.orders.assign(orders.begin(), orders.end());

    const long stride = std::max<long>(1, std::lround(1.0 / long_cfg.tau));
    Observer obs;
    obs.stride = stride;
    obs.fn = [&](const ParticleEnsemble& ens, MetricsRecord&) {
        report.times.push_back(ens.time);
        for (std::size_t q = 0; q < report.orders.size(); ++q)
            report.values[q].push_back(moment(ens, report.orders[q]));
    };
    report.values.resize(orders.size());

    MetricsRecord scratch;
    RunOptions options;
    options.observers.push_back(obs);
    try {
        run(long_cfg, options, scratch);
    } catch (const NumericError& e) {
        report.passed = false;
        report.message = std::string("numerical abort: ") + e.what();
        return report;
    }

    const double half = t_long / 2.0;
    report.first_half_max.assign(orders.size(), 0.0);
    report.second_half_max.assign(orders.size(), 0.0);
    report.plateau.assign(orders.size(), 0.0);
    report.passed = true;
    std::ostringstream msg;
    for (std::size_t q = 0; q < report.orders.size(); ++q) {
        double max1 = 0.0, max2 = 0.0, sum2 = 0.0;
        long count2 = 0;
        for (std::size_t s = 0; s < report.times.size(); ++s) {
            const double v = report.values[q][s];
            if (report.times[s] <= half) {
                max1 = std::max(max1, v);
            } else {
                max2 = std::max(max2, v);
                sum2 += v;
                ++count2;
            }
        }
        report.first_half_max[q] = max1;
        report.second_half_max[q] = max2;
        report.plateau[q] = count2 > 0 ? sum2 / count2 : max2;
        const bool order_ok = max2 <= 1.2 * max1 + 1e-12;
        if (!order_ok) report.passed = false;
        msg << "order " << report.orders[q] << ": first-half max " << max1
            << ", second-half max " << max2 << ", plateau " << report.plateau[q]
            << (order_ok ? " (ok)" : " (drift upward)") << "; ";
    }
    report.message = msg.str();
    return report;
}

} // namespace rbm
