#include "rbmlab/session.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "rbmlab.h"

#include "rbmlab/errors.hpp"
#include "rbmlab/io.hpp"
#include "rbmlab/meanfield.hpp"
#include "rbmlab/metrics.hpp"
#include "rbmlab/threadpool.hpp"

namespace rbm {

const char* const kToolVersion = "0.1.0";

namespace {

constexpr const char* kKlSurrogateNote =
    "kl_vs_reference fits a Gaussian to single-particle marginals; it is an exact-in-"
    "distribution surrogate only for linear models and never observes the joint law";

std::string fmt(double v) { return format_double(v); }

} // namespace

void Session::load_config_file(const std::string& path) {
    config_ = ConfigFile::parse_file(path);
}

void Session::load_config_text(const std::string& text, const std::string& origin) {
    config_ = ConfigFile::parse_text(text, origin);
}

void Session::apply_override(const std::string& assignment) {
    config_.apply_override(assignment);
}

void Session::set_seed(std::uint64_t seed) { seed_override_ = seed; }
void Session::set_threads(int n_threads) { threads_ = n_threads; }
void Session::set_output_dir(const std::string& dir) { out_override_ = dir; }
void Session::set_force(bool force) { force_ = force; }

std::uint64_t Session::effective_seed() const {
    if (seed_override_) return *seed_override_;
    return static_cast<std::uint64_t>(config_.get_long("sim", "seed", 0));
}

int Session::effective_threads() const {
    if (threads_ > 0) return threads_;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string Session::output_dir() const {
    if (out_override_) return *out_override_;
    return config_.get_string("output", "dir", "out");
}

std::shared_ptr<const ModelSpec> Session::build_model() const {
    const std::string name = config_.get_string("model", "name");
    std::map<std::string, double> params;
    for (const std::string& key : config_.keys("model")) {
        if (key == "name") continue;
        params[key] = config_.get_double("model", key);
    }
    return std::make_shared<const ModelSpec>(builtin_model(name, params));
}

InitialDist Session::build_init() const {
    InitialDist init;
    const std::string kind = config_.get_string("init", "kind", "gaussian");
    if (kind == "gaussian")
        init.kind = InitialKind::gaussian;
    else if (kind == "uniform_box")
        init.kind = InitialKind::uniform_box;
    else if (kind == "point")
        init.kind = InitialKind::point;
    else
        throw ConfigError("unknown init.kind '" + kind +
                          "'; valid: gaussian, uniform_box, point");
    if (config_.has("init", "mean"))
        init.mean = config_.get_double_list("init", "mean");
    else
        init.mean = {0.0};
    init.variance = config_.get_double("init", "variance", 1.0);
    init.half_width = config_.get_double("init", "half_width", 1.0);
    return init;
}

SimConfig Session::build_sim(std::shared_ptr<const ModelSpec> model) const {
    SimConfig cfg;
    cfg.model = std::move(model);
    cfg.n_particles = static_cast<int>(config_.get_long("sim", "n_particles"));
    cfg.batch_size = static_cast<int>(config_.get_long("sim", "batch_size", 2));
    cfg.tau = config_.get_double("sim", "tau");
    cfg.horizon = config_.get_double("sim", "horizon");
    cfg.replicas = static_cast<int>(config_.get_long("sim", "replicas", 1));
    cfg.seed = effective_seed();

    const std::string integrator = config_.get_string("sim", "integrator", "rbm");
    if (integrator == "rbm")
        cfg.kind = IntegratorKind::rbm;
    else if (integrator == "full_em")
        cfg.kind = IntegratorKind::full_em;
    else
        throw ConfigError("unknown sim.integrator '" + integrator + "'; valid: rbm, full_em");

    const std::string coupling = config_.get_string("sim", "coupling", "common");
    if (coupling == "common")
        cfg.coupling = NoiseCoupling::common;
    else if (coupling == "independent")
        cfg.coupling = NoiseCoupling::independent;
    else
        throw ConfigError("unknown sim.coupling '" + coupling +
                          "'; valid: common, independent");

    cfg.init = build_init();
    cfg.validate();
    return cfg;
}

SweepPlan Session::build_sweep_plan(bool bench) const {
    SweepPlan plan;
    plan.base = build_sim(build_model());
    if (bench) {
        plan.axis = sweep_axis_from_string(config_.get_string("sweep", "axis", "n_particles"));
        plan.observable = Observable::step_wall_time;
    } else {
        plan.axis = sweep_axis_from_string(config_.get_string("sweep", "axis"));
        plan.observable = observable_from_string(config_.get_string("sweep", "observable"));
    }
    plan.values = config_.get_double_list("sweep", "values");
    const long default_replicas = plan.observable == Observable::step_wall_time ? 3 : 8;
    plan.replicas =
        static_cast<int>(config_.get_long("sweep", "replicas", default_replicas));
    plan.reference_dt_ode = config_.get_double("sweep", "reference_dt_ode", 1e-3);
    return plan;
}

int Session::run_command(const std::string& command) {
    report_.clear();
    error_.clear();
    try {
        if (command == "simulate") return cmd_simulate();
        if (command == "sweep") return cmd_sweep(false);
        if (command == "bench") return cmd_sweep(true);
        if (command == "check") return cmd_check();
        if (command == "reference") return cmd_reference();
        throw ConfigError("unknown command '" + command +
                          "'; valid: simulate, sweep, check, reference, bench");
    } catch (const ConfigError& e) {
        error_ = e.what();
        return RBM_ERR_CONFIG;
    } catch (const NumericError& e) {
        error_ = e.what();
        return RBM_ERR_NUMERIC;
    } catch (const std::exception& e) {
        error_ = std::string("internal error: ") + e.what();
        return RBM_ERR_NUMERIC;
    }
}

int Session::cmd_simulate() {
    const SimConfig base = build_sim(build_model());
    const std::string dir = output_dir();
    ensure_directory(dir);

    const long steps = base.step_count();
    long stride = config_.get_long("output", "stride", 0);
    if (stride <= 0) stride = std::max<long>(1, steps / 100);
    const bool want_trajectory = config_.get_bool("output", "trajectory", false);

    MetricsRecord record;
    record.seed = base.seed;
    record.config_digest = config_.digest();
    record.notes.push_back("model " + base.model->label);

    std::unique_ptr<TrajectoryWriter> trajectory;
    if (want_trajectory)
        trajectory =
            std::make_unique<TrajectoryWriter>(join_path(dir, "trajectory.csv"),
                                               base.model->dim);

    std::mutex merge_mutex;
    std::string numeric_failure;
    auto run_replica = [&](std::size_t r) {
        SimConfig cfg = base;
        cfg.replica_id = static_cast<int>(r);
        MetricsRecord local;
        Observer obs;
        obs.stride = stride;
        obs.fn = [&](const ParticleEnsemble& ens, MetricsRecord& rec) {
            double mean0 = 0.0;
            for (int i = 0; i < ens.n_particles; ++i) mean0 += ens.at(i)[0];
            mean0 /= ens.n_particles;
            double var = 0.0;
            std::vector<double> m(ens.dim, 0.0);
            for (int i = 0; i < ens.n_particles; ++i)
                for (int k = 0; k < ens.dim; ++k) m[k] += ens.at(i)[k];
            for (double& v : m) v /= ens.n_particles;
            for (int i = 0; i < ens.n_particles; ++i)
                for (int k = 0; k < ens.dim; ++k) {
                    const double c = ens.at(i)[k] - m[k];
                    var += c * c;
                }
            var /= static_cast<double>(ens.n_particles) * ens.dim;
            rec.append(ens.time, "mean_x0", mean0, cfg.replica_id);
            rec.append(ens.time, "variance", var, cfg.replica_id);
            rec.append(ens.time, "moment2", moment(ens, 2), cfg.replica_id);
            rec.append(ens.time, "moment4", moment(ens, 4), cfg.replica_id);
        };
        RunOptions options;
        options.observers.push_back(obs);
        if (trajectory) {
            options.snapshot_stride = stride;
            options.snapshot_sink = [&](const ParticleEnsemble& ens) {
                trajectory->append(ens, cfg.replica_id);
            };
        }
        try {
            run(cfg, options, local);
            std::lock_guard<std::mutex> lock(merge_mutex);
            record.merge(std::move(local));
        } catch (const NumericError& e) {
            // Flush whatever this replica measured before the abort.
            std::lock_guard<std::mutex> lock(merge_mutex);
            record.merge(std::move(local));
            if (numeric_failure.empty()) numeric_failure = e.what();
        }
    };

    // Trajectory rows must come out in replica order, so that path is serial.
    const int workers = trajectory ? 1 : effective_threads();
    parallel_for(static_cast<std::size_t>(base.replicas), workers, run_replica);

    const std::string metrics_path = join_path(dir, "metrics.csv");
    write_metrics_csv(metrics_path, record);

    RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.command = "simulate";
    manifest.config_digest = record.config_digest;
    manifest.seed = base.seed;
    manifest.started_at = iso8601_utc_now();
    manifest.outputs.push_back(metrics_path);
    if (trajectory) manifest.outputs.push_back(trajectory->path());
    manifest.extra.emplace_back("model", base.model->label);
    manifest.extra.emplace_back("integrator",
                                base.kind == IntegratorKind::rbm ? "rbm" : "full_em");
    manifest.extra.emplace_back("n_particles", std::to_string(base.n_particles));
    manifest.extra.emplace_back("tau", fmt(base.tau));
    manifest.extra.emplace_back("horizon", fmt(base.horizon));
    manifest.extra.emplace_back("replicas", std::to_string(base.replicas));
    if (!numeric_failure.empty()) manifest.extra.emplace_back("aborted", numeric_failure);
    manifest.finished_at = iso8601_utc_now();
    const std::string manifest_path = join_path(dir, "manifest.json");
    write_manifest(manifest_path, manifest);

    std::ostringstream out;
    out << "simulate: model=" << base.model->label << " N=" << base.n_particles
        << " tau=" << fmt(base.tau) << " T=" << fmt(base.horizon)
        << " integrator=" << (base.kind == IntegratorKind::rbm ? "rbm" : "full_em")
        << " replicas=" << base.replicas << " seed=" << base.seed << "\n";
    out << "steps=" << steps << " stride=" << stride << " entries=" << record.entries.size()
        << "\n";
    if (!numeric_failure.empty())
        out << "aborted: " << numeric_failure << " (partial metrics written)\n";
    out << "wrote " << metrics_path;
    if (trajectory) out << ", " << trajectory->path();
    out << ", " << manifest_path << "\n";
    report_ = out.str();
    if (!numeric_failure.empty()) {
        error_ = numeric_failure;
        return RBM_ERR_NUMERIC;
    }
    return 0;
}

int Session::cmd_sweep(bool bench) {
    const SweepPlan plan = build_sweep_plan(bench);
    const std::string dir = output_dir();
    ensure_directory(dir);

    const std::string started = iso8601_utc_now();
    SweepResult result = run_sweep(plan, effective_threads());
    result.record.seed = plan.base.seed;
    result.record.config_digest = config_.digest();
    if (plan.observable == Observable::kl_vs_reference)
        result.record.notes.push_back(kKlSurrogateNote);

    const std::string sweep_path = join_path(dir, "sweep.csv");
    const std::string metrics_path = join_path(dir, "metrics.csv");
    write_sweep_csv(sweep_path, result);
    write_metrics_csv(metrics_path, result.record);

    RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.command = bench ? "bench" : "sweep";
    manifest.config_digest = result.record.config_digest;
    manifest.seed = plan.base.seed;
    manifest.started_at = started;
    manifest.outputs = {sweep_path, metrics_path};
    manifest.extra.emplace_back("axis", to_string(plan.axis));
    manifest.extra.emplace_back("observable", to_string(plan.observable));
    manifest.extra.emplace_back("replicas", std::to_string(plan.replicas));
    manifest.extra.emplace_back("partial", result.partial ? "true" : "false");
    manifest.extra.emplace_back("abort_fraction", fmt(result.abort_fraction));
    if (result.fit) {
        manifest.extra.emplace_back("fit_slope", fmt(result.fit->slope));
        manifest.extra.emplace_back("fit_intercept", fmt(result.fit->intercept));
        manifest.extra.emplace_back("fit_r_squared", fmt(result.fit->r_squared));
        if (result.fit->floor)
            manifest.extra.emplace_back("fit_floor", fmt(*result.fit->floor));
    }
    if (plan.observable == Observable::kl_vs_reference)
        manifest.extra.emplace_back("kl_note", kKlSurrogateNote);
    manifest.finished_at = iso8601_utc_now();
    const std::string manifest_path = join_path(dir, "manifest.json");
    write_manifest(manifest_path, manifest);

    std::ostringstream out;
    out << (bench ? "bench" : "sweep") << ": axis=" << to_string(plan.axis)
        << " observable=" << to_string(plan.observable) << " replicas=" << plan.replicas
        << " seed=" << plan.base.seed << "\n";
    for (const SweepPoint& pt : result.points)
        out << "  " << to_string(plan.axis) << "=" << fmt(pt.axis_value)
            << " mean=" << fmt(pt.mean) << " stderr=" << fmt(pt.std_error)
            << " replicas=" << pt.replicas_done << " aborted=" << pt.replicas_aborted << "\n";
    if (result.fit) {
        out << "fit: slope=" << fmt(result.fit->slope)
            << " intercept=" << fmt(result.fit->intercept)
            << " r_squared=" << fmt(result.fit->r_squared);
        if (result.fit->floor) out << " floor=" << fmt(*result.fit->floor);
        out << "\n";
    } else {
        out << "fit: not enough usable points\n";
    }
    if (result.partial) {
        out << "partial: " << fmt(100.0 * result.abort_fraction) << "% of replicas aborted\n";
        for (const std::string& msg : result.abort_messages) out << "  abort: " << msg << "\n";
    }
    out << "wrote " << sweep_path << ", " << metrics_path << ", " << manifest_path << "\n";
    report_ = out.str();

    if (result.abort_fraction > 0.25) {
        error_ = "sweep lost more than 25% of replicas to numerical aborts";
        return RBM_ERR_PARTIAL;
    }
    return 0;
}

int Session::cmd_check() {
    const std::shared_ptr<const ModelSpec> model = build_model();
    const long samples = config_.get_long("check", "samples", 20000);
    const double box_radius = config_.get_double("check", "box_radius", 10.0);
    const std::uint64_t seed = effective_seed();

    RngStream stream(seed, StreamDomain::probe, 0, 0, 0);
    const AssumptionReport rep =
        check_assumptions(*model, static_cast<int>(samples), box_radius, stream);

    const bool beta_positive = rep.confinement_beta > 0.0;
    const bool gate_ok = beta_positive && rep.beta_exceeds_2l;

    std::ostringstream out;
    out << "check: model=" << model->label << " samples=" << rep.sample_count
        << " box_radius=" << fmt(box_radius) << " seed=" << seed << "\n";
    out << "  lipschitz_b (r) = " << fmt(rep.lipschitz_b) << "\n";
    out << "  lipschitz_k (L) = " << fmt(rep.lipschitz_k) << "\n";
    out << "  confinement alpha = " << fmt(rep.confinement_alpha) << "\n";
    out << "  confinement beta = " << fmt(rep.confinement_beta) << "  ["
        << (beta_positive ? "PASS" : "FAIL") << " beta > 0]\n";
    out << "  beta > 2L = " << (rep.beta_exceeds_2l ? "true" : "false") << "  ["
        << (rep.beta_exceeds_2l ? "PASS" : "FAIL") << " beta > 2L]\n";
    out << "  kernel deviation sup |K^xi - F| = " << fmt(rep.kernel_deviation_bound)
        << " (over the sampled box only)\n";

    bool uniformity_requested = config_.get_bool("check", "uniformity", false);
    bool uniformity_passed = true;
    std::string uniformity_message;
    if (uniformity_requested) {
        const SimConfig cfg = build_sim(model);
        const double t_long = config_.get_double("check", "t_long", 50.0);
        std::vector<int> orders;
        if (config_.has("check", "orders")) {
            for (double v : config_.get_double_list("check", "orders"))
                orders.push_back(static_cast<int>(std::lround(v)));
        } else {
            orders = {2, 4};
        }
        const UniformityReport uni = moment_uniformity_check(cfg, t_long, orders);
        uniformity_passed = uni.passed;
        uniformity_message = uni.message;
        out << "  moment uniformity to t=" << fmt(t_long) << ": "
            << (uni.passed ? "PASS" : "FAIL") << " (" << uni.message << ")\n";
    }

    const std::string dir = output_dir();
    ensure_directory(dir);
    RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.command = "check";
    manifest.config_digest = config_.digest();
    manifest.seed = seed;
    manifest.started_at = iso8601_utc_now();
    manifest.extra.emplace_back("model", model->label);
    manifest.extra.emplace_back("lipschitz_b", fmt(rep.lipschitz_b));
    manifest.extra.emplace_back("lipschitz_k", fmt(rep.lipschitz_k));
    manifest.extra.emplace_back("confinement_alpha", fmt(rep.confinement_alpha));
    manifest.extra.emplace_back("confinement_beta", fmt(rep.confinement_beta));
    manifest.extra.emplace_back("beta_exceeds_2l", rep.beta_exceeds_2l ? "true" : "false");
    manifest.extra.emplace_back("kernel_deviation_bound", fmt(rep.kernel_deviation_bound));
    if (uniformity_requested) {
        manifest.extra.emplace_back("uniformity_passed", uniformity_passed ? "true" : "false");
        manifest.extra.emplace_back("uniformity_detail", uniformity_message);
    }
    manifest.extra.emplace_back("gate_passed", gate_ok ? "true" : "false");
    manifest.finished_at = iso8601_utc_now();
    const std::string manifest_path = join_path(dir, "manifest.json");
    write_manifest(manifest_path, manifest);
    manifest.outputs.push_back(manifest_path);

    if (!gate_ok) {
        out << "gating assumption "
            << (beta_positive ? "beta > 2L failed" : "beta > 0 failed (no confinement)");
        out << (force_ ? "; continuing under --force\n" : "; use --force to proceed anyway\n");
    }
    out << "wrote " << manifest_path << "\n";
    report_ = out.str();
    if (!gate_ok && !force_) {
        error_ = beta_positive ? "assumption gate failed: beta <= 2L"
                               : "assumption gate failed: beta <= 0";
        return RBM_ERR_ASSUMPTION;
    }
    return 0;
}

int Session::cmd_reference() {
    const std::shared_ptr<const ModelSpec> model = build_model();
    const double horizon = config_.get_double("sim", "horizon");
    const InitialDist init = build_init();
    const int dim = model->dim;

    const bool want_gaussian = config_.get_bool("reference", "gaussian", model->linear.has_value());
    const bool want_fp = config_.get_bool("reference", "fp", false);
    if (!want_gaussian && !want_fp)
        throw ConfigError("reference: nothing to do; set reference.gaussian and/or reference.fp");
    if (want_gaussian && !model->linear)
        throw ConfigError("gaussian reference requires a linear model (b = -a x, K = -kappa x); "
                          "model '" + model->label + "' is nonlinear");
    const double dt_ode = config_.get_double("reference", "dt_ode", 1e-3);

    const std::string dir = output_dir();
    ensure_directory(dir);

    RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.command = "reference";
    manifest.config_digest = config_.digest();
    manifest.seed = effective_seed();
    manifest.started_at = iso8601_utc_now();

    std::ostringstream out;
    out << "reference: model=" << model->label << " T=" << fmt(horizon) << "\n";

    std::optional<GaussianLaw> law_at_horizon;
    if (want_gaussian) {
        const long n_samples = config_.get_long("reference", "samples", 101);
        if (n_samples < 2) throw ConfigError("reference.samples must be >= 2");
        std::vector<LawSample> path;
        path.reserve(n_samples);
        const std::vector<double> m0 = init.mean_vector(dim);
        const double v0 = init.isotropic_variance();
        for (long s = 0; s < n_samples; ++s) {
            const double t = horizon * static_cast<double>(s) / (n_samples - 1.0);
            const GaussianLaw law = gaussian_reference(*model, m0, v0, t, dt_ode);
            double avg_var = 0.0;
            for (int k = 0; k < dim; ++k)
                avg_var += law.cov[static_cast<std::size_t>(k) * dim + k];
            avg_var /= dim;
            path.push_back(LawSample{t, law.mean[0], avg_var});
            if (s + 1 == n_samples) law_at_horizon = law;
        }
        const std::string law_path = join_path(dir, "law.csv");
        write_law_csv(law_path, path);
        manifest.outputs.push_back(law_path);
        out << "gaussian: mean(T)=" << fmt(law_at_horizon->mean[0])
            << " variance(T)=" << fmt(path.back().variance) << "; wrote " << law_path << "\n";
    }

    std::optional<DensityField1D> density;
    if (want_fp) {
        if (dim != 1) throw ConfigError("the finite-volume reference requires dim = 1");
        const double x_lo = config_.get_double("reference", "x_lo", -8.0);
        const double x_hi = config_.get_double("reference", "x_hi", 8.0);
        const long n_cells = config_.get_long("reference", "n_cells", 400);
        const double dt = config_.get_double("reference", "dt", 0.0);

        DensityField1D rho0;
        const double mean0 = init.mean_vector(1)[0];
        switch (init.kind) {
            case InitialKind::gaussian:
                rho0 = discretize_gaussian(mean0, init.variance, x_lo, x_hi,
                                           static_cast<int>(n_cells));
                break;
            case InitialKind::uniform_box: {
                rho0.x_lo = x_lo;
                rho0.x_hi = x_hi;
                rho0.n_cells = static_cast<int>(n_cells);
                rho0.values.assign(rho0.n_cells, 0.0);
                const double lo = mean0 - init.half_width;
                const double hi = mean0 + init.half_width;
                if (lo < x_lo || hi > x_hi)
                    throw ConfigError("uniform_box initial law sticks out of the grid");
                const double h = rho0.dx();
                double mass = 0.0;
                for (int j = 0; j < rho0.n_cells; ++j) {
                    const double a = std::max(lo, rho0.face(j));
                    const double b = std::min(hi, rho0.face(j + 1));
                    const double overlap = std::max(0.0, b - a);
                    rho0.values[j] = overlap / (hi - lo) / h;
                    mass += rho0.values[j] * h;
                }
                for (double& v : rho0.values) v /= mass;
                break;
            }
            case InitialKind::point:
                throw ConfigError(
                    "the finite-volume reference needs a spread initial law; "
                    "use init.kind = gaussian or uniform_box");
        }
        density = fp_solve_1d(*model, std::move(rho0), horizon, dt);
        const std::string density_path = join_path(dir, "density.csv");
        write_density_csv(density_path, *density);
        manifest.outputs.push_back(density_path);
        const double mass_dev = std::abs(density->mass() - 1.0);
        out << "fp: mass conservation deviation = " << fmt(mass_dev)
            << ", boundary mass = " << fmt(density->boundary_mass()) << ", mean(T)="
            << fmt(density->mean()) << " variance(T)=" << fmt(density->variance())
            << "; wrote " << density_path << "\n";
        manifest.extra.emplace_back("mass_deviation", fmt(mass_dev));
        manifest.extra.emplace_back("boundary_mass", fmt(density->boundary_mass()));
    }

    if (law_at_horizon && density) {
        const LawDistance gap = law_distance(*law_at_horizon, *density);
        out << "cross-validation: w1=" << fmt(gap.w1) << " mean_gap=" << fmt(gap.mean_gap)
            << " var_gap=" << fmt(gap.var_gap) << "\n";
        manifest.extra.emplace_back("cross_w1", fmt(gap.w1));
        manifest.extra.emplace_back("cross_mean_gap", fmt(gap.mean_gap));
        manifest.extra.emplace_back("cross_var_gap", fmt(gap.var_gap));
    }

    manifest.finished_at = iso8601_utc_now();
    const std::string manifest_path = join_path(dir, "manifest.json");
    write_manifest(manifest_path, manifest);
    out << "wrote " << manifest_path << "\n";
    report_ = out.str();
    return 0;
}

} // namespace rbm
