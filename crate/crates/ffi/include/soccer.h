#ifndef SOCCER_H
#define SOCCER_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Values per agent command.
 */
#define SOCCER_ACTION_DIM 5

/**
 * Result code of every API call.
 */
typedef enum SoccerStatus {
  SOCCER_STATUS_OK = 0,
  SOCCER_STATUS_NULL_POINTER = 1,
  SOCCER_STATUS_INVALID_ARGUMENT = 2,
  SOCCER_STATUS_CONFIG = 3,
  SOCCER_STATUS_CHECKPOINT = 4,
  SOCCER_STATUS_IO = 5,
  SOCCER_STATUS_BUFFER_TOO_SMALL = 6,
  SOCCER_STATUS_SIMULATION = 7,
  SOCCER_STATUS_PANIC = 8,
} SoccerStatus;

/**
 * One game instance with its configuration.
 */
typedef struct SoccerEnv SoccerEnv;

/**
 * A trained network loaded from a checkpoint.
 */
typedef struct SoccerPolicy SoccerPolicy;

/**
 * Observation sizes. A flat observation is `local` values, then
 * `n_max * entity` teammate values, `n_max * entity` opponent values,
 * `n_max` teammate mask flags and `n_max` opponent mask flags (0 or 1).
 */
typedef struct SoccerObsDims {
  uint32_t local;
  uint32_t entity;
  uint32_t n_max;
  uint32_t total;
} SoccerObsDims;

/**
 * Outcome of one control step.
 */
typedef struct SoccerStepResult {
  /**
   * 1 once the episode has ended.
   */
  int done;
  /**
   * 0 running, 1 blue won, 2 red won, 3 time limit.
   */
  int outcome;
  /**
   * 1 if a goal was scored this step.
   */
  int goal;
  /**
   * 1 if the ball left the field (outside the goals) this step.
   */
  int ball_out;
} SoccerStepResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Valid until the next
 * failing call on the same thread; never null.
 */
const char *soccer_last_error(void);

/**
 * Creates an environment. `config_toml` may be null for the default
 * configuration; otherwise it is the configuration file's text.
 *
 * # Safety
 * `config_toml` must be null or a valid NUL-terminated string; `out` must
 * be a valid pointer.
 */
enum SoccerStatus soccer_env_create(const char *config_toml,
                                    uint64_t seed,
                                    uint32_t n_blue,
                                    uint32_t n_red,
                                    struct SoccerEnv **out);

/**
 * Destroys an environment. Null is ignored.
 *
 * # Safety
 * `env` must be null or a handle from [`soccer_env_create`] not yet freed.
 */
void soccer_env_free(struct SoccerEnv *env);

/**
 * Starts a new episode drawn from `seed`.
 *
 * # Safety
 * `env` must be a live handle.
 */
enum SoccerStatus soccer_env_reset(struct SoccerEnv *env, uint64_t seed);

/**
 * Number of agents; blue agents come first.
 *
 * # Safety
 * `env` must be a live handle and `out` valid.
 */
enum SoccerStatus soccer_env_num_agents(const struct SoccerEnv *env, uint32_t *out);

/**
 * Observation sizes for this environment's configuration.
 *
 * # Safety
 * `env` must be a live handle and `out` valid.
 */
enum SoccerStatus soccer_env_obs_dims(const struct SoccerEnv *env, struct SoccerObsDims *out);

/**
 * Writes the flat observation of `agent` (see [`SoccerObsDims`]). Actor
 * observations carry sensor noise; critic observations (`critic != 0`) do
 * not.
 *
 * # Safety
 * `env` must be a live handle; `out` must hold `len` doubles.
 */
enum SoccerStatus soccer_env_observe(struct SoccerEnv *env,
                                     uint32_t agent,
                                     int critic,
                                     double *out,
                                     size_t len);

/**
 * Advances one control step. `actions` holds `5 * num_agents` values in
 * agent order, each in [-1, 1]. `rewards` may be null; otherwise it
 * receives one reward per blue agent.
 *
 * # Safety
 * `env` must be a live handle; `actions` must hold `n_actions` doubles;
 * `rewards` must be null or hold `rewards_len` doubles; `out` valid.
 */
enum SoccerStatus soccer_env_step(struct SoccerEnv *env,
                                  const double *actions,
                                  size_t n_actions,
                                  double *rewards,
                                  size_t rewards_len,
                                  struct SoccerStepResult *out);

/**
 * Number of values written by [`soccer_env_state`].
 *
 * # Safety
 * `env` must be a live handle and `out` valid.
 */
enum SoccerStatus soccer_env_state_len(const struct SoccerEnv *env, size_t *out);

/**
 * World snapshot: sim time, ball x, y, vx, vy, then per agent x, y,
 * heading, vx, vy, angular velocity and team (0 blue, 1 red).
 *
 * # Safety
 * `env` must be a live handle; `out` must hold `len` doubles.
 */
enum SoccerStatus soccer_env_state(const struct SoccerEnv *env, double *out, size_t len);

/**
 * Command the scripted bot would give `agent`.
 *
 * # Safety
 * `env` must be a live handle; `out` must hold 5 doubles.
 */
enum SoccerStatus soccer_env_bot_action(const struct SoccerEnv *env, uint32_t agent, double *out);

/**
 * Loads a policy from a checkpoint file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` valid.
 */
enum SoccerStatus soccer_policy_load(const char *path, struct SoccerPolicy **out);

/**
 * Destroys a policy. Null is ignored.
 *
 * # Safety
 * `policy` must be null or a handle from [`soccer_policy_load`] not yet
 * freed.
 */
void soccer_policy_free(struct SoccerPolicy *policy);

/**
 * Policy command for `agent` in `env`: the distribution mode when
 * `deterministic != 0`, otherwise a sample from the environment's stream.
 *
 * # Safety
 * Handles must be live; `out` must hold 5 doubles.
 */
enum SoccerStatus soccer_policy_act(const struct SoccerPolicy *policy,
                                    struct SoccerEnv *env,
                                    uint32_t agent,
                                    int deterministic,
                                    double *out);

/**
 * Critic value of `agent`'s current (noise-free) observation.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum SoccerStatus soccer_policy_value(const struct SoccerPolicy *policy,
                                      struct SoccerEnv *env,
                                      uint32_t agent,
                                      double *out);

/**
 * Square-to-disc remapping applied to base and kick commands.
 *
 * # Safety
 * `out_x` and `out_y` must be valid pointers.
 */
enum SoccerStatus soccer_remap(double x, double y, double *out_x, double *out_y);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOCCER_H */
