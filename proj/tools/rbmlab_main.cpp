#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rbmlab.h"

namespace {

struct SessionDeleter {
    void operator()(rbm_session* s) const { rbm_session_destroy(s); }
};

int fail(const rbm_session* session, rbm_status status) {
    const char* message = rbm_session_error(session);
    std::fprintf(stderr, "rbmlab: error: %s\n",
                 message && *message ? message : "unknown failure");
    return static_cast<int>(status);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rbmlab: random-batch and full pairwise particle simulation laboratory"};
    app.set_version_flag("--version", std::string(rbm_version()));
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    std::string out_dir;
    bool force = false;

    app.add_option("--config", config_path, "Config file (INI-style sections)");
    app.add_option("--seed", seed, "Seed override (64-bit)");
    app.add_option("--threads", threads, "Worker threads (default: machine parallelism)");
    app.add_option("--out", out_dir, "Output directory (default: output.dir or ./out)");
    app.add_flag("--force", force, "Proceed despite failed gating assumptions (check)");

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "Run one simulation and write metrics"},
        {"sweep", "Run a parameter sweep and fit the convergence rate"},
        {"check", "Estimate model assumption constants and gate on them"},
        {"reference", "Compute mean-field reference laws"},
        {"bench", "Shortcut: step wall-time sweep"},
    };
    std::vector<std::vector<std::string>> extras(commands.size());
    std::vector<CLI::App*> subs;
    for (std::size_t c = 0; c < commands.size(); ++c) {
        CLI::App* sub = app.add_subcommand(commands[c].first, commands[c].second);
        sub->fallthrough(); // global options may follow the subcommand name
        sub->add_option("overrides", extras[c], "Config overrides: section.key=value");
        subs.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);
    seed_set = app.count("--seed") > 0;

    std::unique_ptr<rbm_session, SessionDeleter> session(rbm_session_create());
    if (!session) {
        std::fprintf(stderr, "rbmlab: error: cannot create session\n");
        return static_cast<int>(RBM_ERR_NUMERIC);
    }

    if (!config_path.empty()) {
        const rbm_status rc = rbm_session_load_config(session.get(), config_path.c_str());
        if (rc != RBM_OK) return fail(session.get(), rc);
    }

    std::string command;
    for (std::size_t c = 0; c < commands.size(); ++c) {
        if (!subs[c]->parsed()) continue;
        command = commands[c].first;
        for (const std::string& assignment : extras[c]) {
            const rbm_status rc = rbm_session_set(session.get(), assignment.c_str());
            if (rc != RBM_OK) return fail(session.get(), rc);
        }
    }

    if (seed_set) {
        const rbm_status rc = rbm_session_set_seed(session.get(), seed);
        if (rc != RBM_OK) return fail(session.get(), rc);
    }
    if (threads > 0) {
        const rbm_status rc = rbm_session_set_threads(session.get(), threads);
        if (rc != RBM_OK) return fail(session.get(), rc);
    }
    if (!out_dir.empty()) {
        const rbm_status rc = rbm_session_set_output_dir(session.get(), out_dir.c_str());
        if (rc != RBM_OK) return fail(session.get(), rc);
    }
    if (force) {
        const rbm_status rc = rbm_session_set_force(session.get(), 1);
        if (rc != RBM_OK) return fail(session.get(), rc);
    }

    rbm_status rc = RBM_OK;
    if (command == "simulate") rc = rbm_run_simulate(session.get());
    else if (command == "sweep") rc = rbm_run_sweep(session.get());
    else if (command == "check") rc = rbm_run_check(session.get());
    else if (command == "reference") rc = rbm_run_reference(session.get());
    else if (command == "bench") rc = rbm_run_bench(session.get());

    const char* report = rbm_session_report(session.get());
    if (report && *report) std::fputs(report, stdout);
    if (rc != RBM_OK) return fail(session.get(), rc);
    return 0;
}
