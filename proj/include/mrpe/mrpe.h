/* C interface to the multi-reward policy-evaluation toolkit.
 *
 * Objects are opaque handles created by *_create / *_load and released by
 * the matching *_destroy. Every fallible call returns an mrpe_status; on
 * failure mrpe_last_error() describes what went wrong (per thread).
 * Matrices are dense row-major doubles. Transition tensors are laid out as
 * P[(s * A + a) * S + s'].
 */
#ifndef MRPE_MRPE_H
#define MRPE_MRPE_H

#include <stddef.h>
#include <stdint.h>

#if defined(MRPE_BUILDING_LIBRARY)
#define MRPE_API __attribute__((visibility("default")))
#else
#define MRPE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mrpe_status {
  MRPE_OK = 0,
  MRPE_ERR_INVALID_ARGUMENT = 1,
  MRPE_ERR_ROW_NOT_STOCHASTIC = 2,
  MRPE_ERR_DISCOUNT_OUT_OF_RANGE = 3,
  MRPE_ERR_REWARD_OUT_OF_BOX = 4,
  MRPE_ERR_SINGULAR_SYSTEM = 5,
  MRPE_ERR_INDEX_OUT_OF_RANGE = 6,
  MRPE_ERR_SHAPE_MISMATCH = 7,
  MRPE_ERR_INFEASIBLE = 8,
  MRPE_ERR_UNBOUNDED = 9,
  MRPE_ERR_ITERATION_LIMIT = 10,
  MRPE_ERR_INVALID_DELTA = 11,
  MRPE_ERR_K_TOO_LARGE = 12,
  MRPE_ERR_EMPTY_SAMPLE = 13,
  MRPE_ERR_ALL_ZERO_COMPLEXITY = 14,
  MRPE_ERR_IO = 15,
  MRPE_ERR_PARSE = 16,
  MRPE_ERR_CONFIG = 17,
  MRPE_ERR_INTERNAL = 99
} mrpe_status;

typedef struct mrpe_mdp mrpe_mdp;
typedef struct mrpe_reward_set mrpe_reward_set;
typedef struct mrpe_experiment mrpe_experiment;

MRPE_API const char* mrpe_version(void);
MRPE_API const char* mrpe_status_string(mrpe_status status);
/* Message of the last failed call on this thread; "" if none. */
MRPE_API const char* mrpe_last_error(void);
/* Releases strings returned through char** out-parameters. */
MRPE_API void mrpe_free(void* ptr);

/* ---- models ---- */

MRPE_API mrpe_status mrpe_mdp_create(int num_states, int num_actions, double gamma, const double* transitions,
                                     mrpe_mdp** out);
/* Benchmark environment from text such as "riverswim n=5 p=0.7 gamma=0.9". */
MRPE_API mrpe_status mrpe_env_create(const char* spec, mrpe_mdp** out);
MRPE_API mrpe_status mrpe_mdp_load(const char* path, mrpe_mdp** out);
MRPE_API mrpe_status mrpe_mdp_save(const mrpe_mdp* mdp, const char* path);
MRPE_API void mrpe_mdp_destroy(mrpe_mdp* mdp);

MRPE_API mrpe_status mrpe_mdp_shape(const mrpe_mdp* mdp, int* num_states, int* num_actions, double* gamma);
/* Copies S*A*S probabilities. */
MRPE_API mrpe_status mrpe_mdp_transitions(const mrpe_mdp* mdp, double* out);

typedef struct mrpe_validation {
  int ok;            /* no fatal issue */
  int communicating; /* under the uniform policy */
  int aperiodic;
} mrpe_validation;

/* report (optional) receives a human-readable summary; free with mrpe_free. */
MRPE_API mrpe_status mrpe_mdp_validate(const mrpe_mdp* mdp, mrpe_validation* out, char** report);

/* ---- evaluation algebra ---- */

/* value_out[S] = V^pi for the state reward r in [0,1]^S. */
MRPE_API mrpe_status mrpe_policy_value(const mrpe_mdp* mdp, const int* policy, const double* reward,
                                       double* value_out);
/* Optimal deterministic policy for an S x A reward. */
MRPE_API mrpe_status mrpe_policy_iteration(const mrpe_mdp* mdp, const double* reward_sa, int* policy_out);
/* rho_out[S*S]: row s holds V(s') - P(s, pi(s)) . V. */
MRPE_API mrpe_status mrpe_rho_matrix(const mrpe_mdp* mdp, const int* policy, const double* reward, double* rho_out);

/* ---- reward sets ---- */

MRPE_API mrpe_status mrpe_reward_set_finite(int num_states, int count, const double* rewards, mrpe_reward_set** out);
MRPE_API mrpe_status mrpe_reward_set_box(int num_states, mrpe_reward_set** out);
/* {r in [0,1]^S : lhs r <= rhs}, lhs is rows x S. */
MRPE_API mrpe_status mrpe_reward_set_polytope(int num_states, int rows, const double* lhs, const double* rhs,
                                              mrpe_reward_set** out);
MRPE_API mrpe_status mrpe_reward_set_load_polytope(const char* path, mrpe_reward_set** out);
MRPE_API void mrpe_reward_set_destroy(mrpe_reward_set* set);

/* sup over the set of |rho(s, s')| for policy pi. */
MRPE_API mrpe_status mrpe_sup_abs_rho(const mrpe_mdp* mdp, const int* policy, int s, int s_prime,
                                      const mrpe_reward_set* set, double* out);

typedef struct mrpe_allocation {
  double u_value;
  double certified_gap; /* NaN when not certified */
  int iterations;
} mrpe_allocation;

/* Optimal exploration allocation for n_policies policies (row-major,
 * n_policies x S) each paired with sets[i]. omega_out (optional) receives
 * S*A entries. */
MRPE_API mrpe_status mrpe_solve_allocation(const mrpe_mdp* mdp, int n_policies, const int* policies,
                                           const mrpe_reward_set* const* sets, double eps, mrpe_allocation* out,
                                           double* omega_out);
/* Same problem without the flow constraints. */
MRPE_API mrpe_status mrpe_generative_allocation(const mrpe_mdp* mdp, int n_policies, const int* policies,
                                                const mrpe_reward_set* const* sets, double eps, mrpe_allocation* out,
                                                double* omega_out);

/* Value gap of the two-state example for each alternative p2 in grid. */
MRPE_API mrpe_status mrpe_nonconvexity_curve(const double* grid, size_t count, double* gaps_out);
/* "p2,gap" CSV over [lo, hi] with the given step; free with mrpe_free. */
MRPE_API mrpe_status mrpe_nonconvexity_csv(double lo, double hi, double step, char** csv_out);

/* ---- experiments ---- */

MRPE_API mrpe_status mrpe_experiment_load(const char* path, mrpe_experiment** out);
MRPE_API mrpe_status mrpe_experiment_parse(const char* text, mrpe_experiment** out);
MRPE_API void mrpe_experiment_destroy(mrpe_experiment* exp);
MRPE_API mrpe_status mrpe_experiment_set_threads(mrpe_experiment* exp, int threads);
MRPE_API mrpe_status mrpe_experiment_set_output(mrpe_experiment* exp, const char* directory);
MRPE_API mrpe_status mrpe_experiment_describe(const mrpe_experiment* exp, char** text_out);

/* Runs every (seed, agent); writes records.csv and summary.csv into the
 * output directory (created if missing). */
MRPE_API mrpe_status mrpe_experiment_run(const mrpe_experiment* exp, size_t* n_records);

/* Complexity sweep as CSV (param,value,set_label,u_star,u_generative,
 * certified_gap). omega_out (optional) receives the allocation of the first
 * row as text. */
MRPE_API mrpe_status mrpe_experiment_complexity(const mrpe_experiment* exp, char** csv_out, char** omega_out);

typedef struct mrpe_stopping_summary {
  size_t runs;
  size_t stopped;
  size_t violations;
  double violation_rate;
  uint64_t max_stop_step;
} mrpe_stopping_summary;

/* PAC Monte-Carlo of the stopping rule, one run per seed. runs_csv_out
 * (optional) receives "seed,stopped,stop_step,max_error,violated". */
MRPE_API mrpe_status mrpe_experiment_stopping_check(const mrpe_experiment* exp, mrpe_stopping_summary* out,
                                                    char** runs_csv_out);

#ifdef __cplusplus
}
#endif

#endif /* MRPE_MRPE_H */
