// Acceptance harness: runs the numbered correctness criteria end to end and
// prints one [PASS]/[FAIL] line per criterion. Criteria 9 and 10 are
// informational: their lines are printed but they never fail the process.
//
//   acceptance             runs every criterion
//   acceptance --criterion N   runs criterion N only

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rbmlab/integrator.hpp"
#include "rbmlab/meanfield.hpp"
#include "rbmlab/metrics.hpp"
#include "rbmlab/model.hpp"
#include "rbmlab/rng.hpp"
#include "rbmlab/sweep.hpp"
#include "support/chi_square.hpp"
#include "support/partition_enum.hpp"

using namespace rbm;

namespace {

std::shared_ptr<const ModelSpec> make_model(const std::string& name,
                                            const std::map<std::string, double>& params) {
    return std::make_shared<const ModelSpec>(builtin_model(name, params));
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(4);
    out << v;
    return out.str();
}

// ---- criterion 1: coupled full and batch dynamics coincide at p = N ----

bool criterion_1(std::string& detail) {
    std::mt19937 pick(1234);
    std::uniform_int_distribution<int> n_dist(2, 8);
    std::uniform_int_distribution<int> step_dist(1, 5);
    std::uniform_real_distribution<double> coeff(0.5, 1.5);
    std::uniform_real_distribution<double> sig(0.0, 1.0);
    const double taus[] = {0.05, 0.1, 0.2};

    int mismatches = 0;
    for (int trial = 0; trial < 20; ++trial) {
        SimConfig cfg;
        cfg.n_particles = n_dist(pick);
        cfg.batch_size = cfg.n_particles;
        cfg.tau = taus[trial % 3];
        cfg.horizon = step_dist(pick) * cfg.tau;
        cfg.model = make_model("linear_interacting",
                               {{"a", coeff(pick)}, {"kappa", coeff(pick)}, {"sigma", sig(pick)}});
        cfg.coupling = NoiseCoupling::common;
        cfg.seed = 9000 + trial;
        cfg.init.kind = InitialKind::gaussian;
        cfg.init.mean = {0.0};
        cfg.init.variance = 1.0;

        MetricsRecord r1, r2;
        cfg.kind = IntegratorKind::rbm;
        auto a = run(cfg, {}, r1);
        cfg.kind = IntegratorKind::full_em;
        auto b = run(cfg, {}, r2);
        if (a.positions != b.positions) ++mismatches;
    }
    detail = std::to_string(20 - mismatches) + "/20 random configs bit-identical";
    return mismatches == 0;
}

// ---- criterion 2: partition-averaged batch force is unbiased ----

bool criterion_2(std::string& detail) {
    auto model = make_model("bounded_kernel", {{"a", 1.0}, {"kappa", 1.5}, {"sigma", 1.0}});
    const double eps = std::numeric_limits<double>::epsilon();
    double worst = 0.0;
    for (auto [n, p] : std::vector<std::pair<int, int>>{{4, 2}, {6, 2}, {6, 3}}) {
        const auto partitions = rbmtest::enumerate_partitions(n, p);
        RngStream pos_stream(808, StreamDomain::probe, 0, static_cast<std::uint32_t>(n * 10 + p),
                             0);
        for (int set = 0; set < 100; ++set) {
            std::vector<double> xs(n);
            for (double& x : xs) x = 4.0 * pos_stream.uniform() - 2.0;
            std::vector<double> scratch(4);
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                for (const auto& batches : partitions) {
                    BatchPartition part;
                    part.n_particles = n;
                    part.p = p;
                    part.n_batches = n / p;
                    part.assignment.assign(n, 0);
                    for (int b = 0; b < part.n_batches; ++b)
                        for (int idx : batches[b]) {
                            part.members.push_back(idx);
                            part.assignment[idx] = b;
                        }
                    double out = 0.0;
                    batch_force(xs, n, 1, i, part, model->kernel, &out, scratch.data());
                    acc += out;
                }
                acc /= static_cast<double>(partitions.size());
                double full = 0.0;
                full_force(xs, n, 1, i, model->kernel, &full, scratch.data());
                const double tol = 10.0 * eps * n * (1.0 + std::abs(full));
                worst = std::max(worst, std::abs(acc - full) / tol);
            }
        }
    }
    detail = "worst gap " + fmt(worst) + "x the 10 eps N allowance";
    return worst <= 1.0;
}

// ---- criterion 3: random partitions are uniform over pairings ----

bool criterion_3(std::string& detail) {
    struct Case {
        int n, p;
        double critical; // chi-square 0.001 upper tail at (#partitions - 1) dof
    };
    const Case cases[] = {{4, 2, 13.815510557964274}, {6, 3, 27.877164871256568}};
    const long draws = 100000;

    std::ostringstream note;
    bool ok = true;
    for (const Case& c : cases) {
        const auto all = rbmtest::enumerate_partitions(c.n, c.p);
        std::map<std::string, long> counts;
        for (long i = 0; i < draws; ++i) {
            RngStream stream(4242, StreamDomain::shuffle, 0, static_cast<std::uint32_t>(c.n),
                             static_cast<std::uint32_t>(i));
            counts[rbmtest::partition_id(sample_partition(c.n, c.p, stream))]++;
        }
        if (counts.size() > all.size()) {
            detail = "sampler produced an unknown partition";
            return false;
        }
        const double stat =
            rbmtest::chi2_statistic(counts, draws, static_cast<int>(all.size()));
        ok = ok && stat < c.critical;
        if (note.tellp() > 0) note << ", ";
        note << "(" << c.n << "," << c.p << "): chi2 " << fmt(stat) << " < " << fmt(c.critical);
    }
    detail = note.str();
    return ok;
}

// ---- shared sweep base for criteria 4, 5, 10 ----

SimConfig convergence_base() {
    SimConfig cfg;
    cfg.n_particles = 10000;
    cfg.batch_size = 2;
    cfg.tau = 0.1;
    cfg.horizon = 2.0;
    cfg.model = make_model("linear_interacting", {{"a", 1.0}, {"kappa", 1.0}, {"sigma", 1.0}});
    cfg.kind = IntegratorKind::rbm;
    cfg.seed = 101;
    cfg.init.kind = InitialKind::gaussian;
    cfg.init.mean = {0.0};
    cfg.init.variance = 0.5;
    return cfg;
}

// ---- criterion 4: variance bias scales linearly in tau ----

bool criterion_4(std::string& detail) {
    SweepPlan plan;
    plan.base = convergence_base();
    plan.axis = SweepAxis::tau;
    plan.values = {0.2, 0.1, 0.05, 0.025};
    plan.observable = Observable::var_bias;
    plan.replicas = 16;

    auto result = run_sweep(plan, 1);
    if (!result.fit || result.partial) {
        detail = "sweep incomplete";
        return false;
    }
    const double slope = result.fit->slope;
    detail = "slope " + fmt(slope) + ", want [0.7, 1.3]";
    return slope >= 0.7 && slope <= 1.3;
}

// ---- criterion 5: W1 gap to the limit law shrinks like 1/sqrt(N) ----

bool criterion_5(std::string& detail) {
    SweepPlan plan;
    plan.base = convergence_base();
    plan.base.tau = 0.005;
    plan.axis = SweepAxis::n_particles;
    plan.values = {250, 500, 1000, 2000};
    plan.observable = Observable::w1_vs_reference;
    plan.replicas = 32;

    auto result = run_sweep(plan, 1);
    if (!result.fit || result.partial) {
        detail = "sweep incomplete";
        return false;
    }
    const double slope = result.fit->slope;
    detail = "slope " + fmt(slope) + ", want [-0.7, -0.3]";
    return slope >= -0.7 && slope <= -0.3;
}

// ---- criterion 6: long-run moments stay uniformly bounded ----

bool criterion_6(std::string& detail) {
    SimConfig cfg;
    cfg.n_particles = 1000;
    cfg.batch_size = 2;
    cfg.tau = 0.01;
    cfg.horizon = 1.0; // replaced by the check's own horizon
    cfg.model = make_model("linear_ou", {{"a", 1.0}, {"sigma", 1.0}});
    cfg.seed = 606;
    cfg.init.kind = InitialKind::gaussian;
    cfg.init.mean = {0.0};
    cfg.init.variance = 1.0;

    const std::vector<int> orders = {2, 4};
    auto report = moment_uniformity_check(cfg, 50.0, orders);
    const double plateau_gap = std::abs(report.plateau[0] - 1.0);
    detail = std::string(report.passed ? "no growth" : report.message) +
             "; order-2 plateau " + fmt(report.plateau[0]) + " (want within 10% of 1)";
    return report.passed && plateau_gap <= 0.1;
}

// ---- criterion 7: finite-volume and Gaussian references agree ----

bool criterion_7(std::string& detail) {
    auto model = make_model("linear_interacting", {{"a", 1.0}, {"kappa", 1.0}, {"sigma", 1.0}});
    auto rho0 = discretize_gaussian(0.5, 0.25, -5.0, 5.0, 400);
    const double mass0 = rho0.mass();
    auto rho = fp_solve_1d(*model, std::move(rho0), 2.0);
    auto law = gaussian_reference(*model, {0.5}, 0.25, 2.0);
    auto gap = law_distance(law, rho);
    const double mass_drift = std::abs(rho.mass() - mass0);
    detail = "W1 " + fmt(gap.w1) + " (want < 0.01), mass drift " + fmt(mass_drift) +
             " (want < 1e-10)";
    return gap.w1 < 1e-2 && mass_drift < 1e-10;
}

// ---- criterion 8: per-step cost scales linearly (RBM), quadratically (full) ----

bool criterion_8(std::string& detail) {
    SweepPlan plan;
    plan.base = convergence_base();
    plan.base.tau = 0.01;
    plan.base.horizon = 0.03;
    plan.axis = SweepAxis::n_particles;
    plan.values = {512, 1024, 2048, 4096};
    plan.observable = Observable::step_wall_time;
    plan.replicas = 3;

    plan.base.kind = IntegratorKind::rbm;
    auto rbm_result = run_sweep(plan, 1);
    plan.base.kind = IntegratorKind::full_em;
    auto full_result = run_sweep(plan, 1);
    if (!rbm_result.fit || !full_result.fit) {
        detail = "sweep incomplete";
        return false;
    }
    const double s_rbm = rbm_result.fit->slope;
    const double s_full = full_result.fit->slope;
    detail = "batch slope " + fmt(s_rbm) + " (want [0.8, 1.2]), full slope " + fmt(s_full) +
             " (want [1.7, 2.3])";
    return s_rbm >= 0.8 && s_rbm <= 1.2 && s_full >= 1.7 && s_full <= 2.3;
}

// ---- criterion 9 (informational): strong coupling error ~ sqrt(tau) ----

bool criterion_9(std::string& detail) {
    SweepPlan plan;
    plan.base = convergence_base();
    plan.base.n_particles = 2000;
    plan.base.horizon = 1.0;
    plan.axis = SweepAxis::tau;
    plan.values = {0.1, 0.05, 0.025, 0.0125};
    plan.observable = Observable::strong_error;
    plan.replicas = 4;

    auto result = run_sweep(plan, 1);
    if (!result.fit || result.partial) {
        detail = "sweep incomplete";
        return false;
    }
    const double slope = result.fit->slope;
    detail = "slope " + fmt(slope) + ", want [0.35, 0.7]";
    return slope >= 0.35 && slope <= 0.7;
}

// ---- criterion 10 (informational): Gaussian KL fit decays at order tau^2 ----

bool criterion_10(std::string& detail) {
    SweepPlan plan;
    plan.base = convergence_base();
    plan.axis = SweepAxis::tau;
    plan.values = {0.2, 0.1, 0.05, 0.025};
    plan.observable = Observable::kl_vs_reference;
    plan.replicas = 16;

    auto result = run_sweep(plan, 1);
    if (!result.fit || result.partial) {
        detail = "sweep incomplete";
        return false;
    }
    const double slope = result.fit->slope;
    std::ostringstream note;
    note << "slope " << fmt(slope) << ", want [1.4, 2.6]";
    if (result.fit->floor) note << " (floor " << fmt(*result.fit->floor) << ")";
    detail = note.str();
    return slope >= 1.4 && slope <= 2.6;
}

struct Criterion {
    int id;
    const char* label;
    bool informational;
    std::function<bool(std::string&)> fn;
};

const Criterion kCriteria[] = {
    {1, "coupled full and batch dynamics coincide at p = N", false, criterion_1},
    {2, "partition-averaged batch force is unbiased", false, criterion_2},
    {3, "random partitions are uniform over pairings", false, criterion_3},
    {4, "variance bias scales linearly in tau", false, criterion_4},
    {5, "W1 gap to the limit law shrinks like 1/sqrt(N)", false, criterion_5},
    {6, "long-run moments stay uniformly bounded", false, criterion_6},
    {7, "finite-volume and Gaussian references agree", false, criterion_7},
    {8, "per-step cost scales linearly (batch) and quadratically (full)", false, criterion_8},
    {9, "strong coupling error scales like sqrt(tau)", true, criterion_9},
    {10, "Gaussian KL fit decays at second order in tau", true, criterion_10},
};

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
            return 2;
        }
    }

    int gating_failures = 0;
    int matched = 0;
    for (const Criterion& c : kCriteria) {
        if (only != 0 && c.id != only) continue;
        ++matched;
        std::string detail;
        bool passed = false;
        try {
            passed = c.fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %d: %s%s%s%s\n", passed ? "PASS" : "FAIL", c.id, c.label,
                    detail.empty() ? "" : " -- ", detail.c_str(),
                    c.informational ? " [informational]" : "");
        std::fflush(stdout);
        if (!passed && !c.informational) ++gating_failures;
    }
    if (only != 0 && matched == 0) {
        std::fprintf(stderr, "no criterion numbered %d\n", only);
        return 2;
    }
    return gating_failures == 0 ? 0 : 1;
}
