#ifndef RBMLAB_H
#define RBMLAB_H

/* C interface to the rbmlab shared library.
 *
 * Usage: create a session, load a config file and/or set overrides, run one
 * command, read the report, destroy the session. Sessions are not
 * thread-safe; use one per thread. All strings returned by the library are
 * owned by the session and valid until the next call on that session.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct rbm_session rbm_session;

/* Values double as process exit codes. */
typedef enum rbm_status {
    RBM_OK = 0,
    RBM_ERR_CONFIG = 2,     /* invalid config, key, or value */
    RBM_ERR_NUMERIC = 3,    /* numerical abort (divergence, NaN, singularity) */
    RBM_ERR_PARTIAL = 4,    /* sweep finished but > 25% of replicas aborted */
    RBM_ERR_ASSUMPTION = 5  /* a gating model assumption failed (see --force) */
} rbm_status;

const char* rbm_version(void);

rbm_session* rbm_session_create(void);
void rbm_session_destroy(rbm_session* session);

/* Message describing the last error on this session; empty string if none. */
const char* rbm_session_error(const rbm_session* session);

/* Human-readable summary of the last command that ran (also what the CLI
 * prints); empty until a command runs. */
const char* rbm_session_report(const rbm_session* session);

rbm_status rbm_session_load_config(rbm_session* session, const char* path);
/* Inline config text, e.g. for embedding; origin names it in diagnostics. */
rbm_status rbm_session_load_config_text(rbm_session* session, const char* text,
                                        const char* origin);
/* Override of the form "section.key=value". */
rbm_status rbm_session_set(rbm_session* session, const char* assignment);

rbm_status rbm_session_set_seed(rbm_session* session, uint64_t seed);
rbm_status rbm_session_set_threads(rbm_session* session, int n_threads);
rbm_status rbm_session_set_output_dir(rbm_session* session, const char* dir);
/* force != 0 lets `check` report gating failures without failing. */
rbm_status rbm_session_set_force(rbm_session* session, int force);

rbm_status rbm_run_simulate(rbm_session* session);
rbm_status rbm_run_sweep(rbm_session* session);
rbm_status rbm_run_check(rbm_session* session);
rbm_status rbm_run_reference(rbm_session* session);
/* step_wall_time sweep shortcut. */
rbm_status rbm_run_bench(rbm_session* session);

#ifdef __cplusplus
}
#endif

#endif /* RBMLAB_H */
