#ifndef VVLC_SIM_H
#define VVLC_SIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum VvlcStatus {
  VVLC_STATUS_OK = 0,
  VVLC_STATUS_NULL_POINTER = 1,
  VVLC_STATUS_INVALID_ARGUMENT = 2,
  VVLC_STATUS_CONFIG = 3,
  VVLC_STATUS_RUNTIME = 4,
  VVLC_STATUS_PANIC = 5,
} VvlcStatus;

/**
 * Headlight selector.
 */
typedef enum VvlcSide {
  VVLC_SIDE_LEFT = 0,
  VVLC_SIDE_RIGHT = 1,
} VvlcSide;

/**
 * Opaque scenario handle.
 */
typedef struct VvlcScenario VvlcScenario;

/**
 * Received-power breakdown for one instant. Two-element arrays are indexed
 * by headlight, left first.
 */
typedef struct VvlcPower {
  double time_s;
  double distance_m;
  double los_w[2];
  double sb1_w[2];
  double sb2_w[2];
  double sb3_w[2];
  double total_w;
  double total_bare_w;
  double noise_total_a2;
  double snr_db;
} VvlcPower;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a scenario from a named preset (`"paper-table"`).
 *
 * # Safety
 * `name` must be a valid NUL-terminated string; `out` must be valid for writes.
 */
enum VvlcStatus vvlc_scenario_preset(const char *name, struct VvlcScenario **out);

/**
 * Create a scenario from configuration text.
 *
 * # Safety
 * `config` must be a valid NUL-terminated string; `out` must be valid for writes.
 */
enum VvlcStatus vvlc_scenario_parse(const char *config, struct VvlcScenario **out);

/**
 * Create a scenario from a configuration file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` must be valid for writes.
 */
enum VvlcStatus vvlc_scenario_load(const char *path, struct VvlcScenario **out);

/**
 * Release a scenario. Null is accepted.
 *
 * # Safety
 * `scn` must be null or a handle returned by this library and not yet freed.
 */
void vvlc_scenario_free(struct VvlcScenario *scn);

/**
 * Received power at time `t_s` along the scenario trajectory.
 *
 * # Safety
 * `scn` must be a live handle; `out` must be valid for writes.
 */
enum VvlcStatus vvlc_received_power(const struct VvlcScenario *scn,
                                    double t_s,
                                    struct VvlcPower *out);

/**
 * Received power at link length `distance_m`.
 *
 * # Safety
 * `scn` must be a live handle; `out` must be valid for writes.
 */
enum VvlcStatus vvlc_received_power_at_distance(const struct VvlcScenario *scn,
                                                double distance_m,
                                                struct VvlcPower *out);

/**
 * LoS impulse gain of one headlight at link length `distance_m`.
 * `side` is 0 for the left headlight and 1 for the right.
 *
 * # Safety
 * `scn` must be a live handle; `out` must be valid for writes.
 */
enum VvlcStatus vvlc_los_gain(const struct VvlcScenario *scn,
                              double distance_m,
                              int32_t side,
                              double *out);

/**
 * SNR in dB at link length `distance_m`; `-inf` when no power is received.
 *
 * # Safety
 * `scn` must be a live handle; `out` must be valid for writes.
 */
enum VvlcStatus vvlc_snr_db(const struct VvlcScenario *scn, double distance_m, double *out);

/**
 * Trajectory sweep as CSV text. Release the result with `vvlc_string_free`.
 *
 * # Safety
 * `scn` must be a live handle; `out` must be valid for writes.
 */
enum VvlcStatus vvlc_sweep_csv(const struct VvlcScenario *scn, char **out);

/**
 * Release a string returned by this library. Null is accepted.
 *
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void vvlc_string_free(char *s);

/**
 * Message for the most recent failure on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *vvlc_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VVLC_SIM_H */
