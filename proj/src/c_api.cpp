#include "rbmlab.h"

#include <functional>
#include <string>

#include "rbmlab/errors.hpp"
#include "rbmlab/session.hpp"

struct rbm_session {
    rbm::Session impl;
    std::string setup_error; // errors from load/set calls, pre-command
};

namespace {

rbm_status guard_setup(rbm_session* session,
                       const std::function<void(rbm::Session&)>& action) {
    if (!session) return RBM_ERR_CONFIG;
    try {
        action(session->impl);
        session->setup_error.clear();
        return RBM_OK;
    } catch (const rbm::ConfigError& e) {
        session->setup_error = e.what();
        return RBM_ERR_CONFIG;
    } catch (const std::exception& e) {
        session->setup_error = e.what();
        return RBM_ERR_NUMERIC;
    }
}

rbm_status run_command(rbm_session* session, const char* command) {
    if (!session) return RBM_ERR_CONFIG;
    session->setup_error.clear();
    return static_cast<rbm_status>(session->impl.run_command(command));
}

} // namespace

extern "C" {

const char* rbm_version(void) { return rbm::kToolVersion; }

rbm_session* rbm_session_create(void) {
    try {
        return new rbm_session();
    } catch (...) {
        return nullptr;
    }
}

void rbm_session_destroy(rbm_session* session) { delete session; }

const char* rbm_session_error(const rbm_session* session) {
    if (!session) return "null session";
    if (!session->setup_error.empty()) return session->setup_error.c_str();
    return session->impl.error().c_str();
}

const char* rbm_session_report(const rbm_session* session) {
    return session ? session->impl.report().c_str() : "";
}

rbm_status rbm_session_load_config(rbm_session* session, const char* path) {
    return guard_setup(session, [&](rbm::Session& s) {
        if (!path) throw rbm::ConfigError("null config path");
        s.load_config_file(path);
    });
}

rbm_status rbm_session_load_config_text(rbm_session* session, const char* text,
                                        const char* origin) {
    return guard_setup(session, [&](rbm::Session& s) {
        if (!text) throw rbm::ConfigError("null config text");
        s.load_config_text(text, origin ? origin : "inline");
    });
}

rbm_status rbm_session_set(rbm_session* session, const char* assignment) {
    return guard_setup(session, [&](rbm::Session& s) {
        if (!assignment) throw rbm::ConfigError("null override");
        s.apply_override(assignment);
    });
}

rbm_status rbm_session_set_seed(rbm_session* session, uint64_t seed) {
    return guard_setup(session, [&](rbm::Session& s) { s.set_seed(seed); });
}

rbm_status rbm_session_set_threads(rbm_session* session, int n_threads) {
    return guard_setup(session, [&](rbm::Session& s) { s.set_threads(n_threads); });
}

rbm_status rbm_session_set_output_dir(rbm_session* session, const char* dir) {
    return guard_setup(session, [&](rbm::Session& s) {
        if (!dir) throw rbm::ConfigError("null output directory");
        s.set_output_dir(dir);
    });
}

rbm_status rbm_session_set_force(rbm_session* session, int force) {
    return guard_setup(session, [&](rbm::Session& s) { s.set_force(force != 0); });
}

rbm_status rbm_run_simulate(rbm_session* session) { return run_command(session, "simulate"); }
rbm_status rbm_run_sweep(rbm_session* session) { return run_command(session, "sweep"); }
rbm_status rbm_run_check(rbm_session* session) { return run_command(session, "check"); }
rbm_status rbm_run_reference(rbm_session* session) { return run_command(session, "reference"); }
rbm_status rbm_run_bench(rbm_session* session) { return run_command(session, "bench"); }

} // extern "C"
