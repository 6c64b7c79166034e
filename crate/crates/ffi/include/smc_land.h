#ifndef SMC_LAND_H
#define SMC_LAND_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Far-field phase tracking a fixed azimuth.
#define SMC_PHASE_FIXED_AZIMUTH 1

// Target-relative phase (also used throughout single-phase runs).
#define SMC_PHASE_TARGET_RELATIVE 2

#define SMC_MODE_SINGLE 0

#define SMC_MODE_TWO_PHASE 1

#define SMC_OUTCOME_TOUCHDOWN 0

#define SMC_OUTCOME_TIMEOUT 1

typedef enum SmcStatus {
  SMC_STATUS_OK = 0,
  SMC_STATUS_NULL_POINTER = 1,
  SMC_STATUS_INVALID_ARGUMENT = 2,
  SMC_STATUS_CONFIG = 3,
  SMC_STATUS_VALIDATION = 4,
  SMC_STATUS_UNKNOWN_PRESET = 5,
  SMC_STATUS_SINGULAR = 6,
  SMC_STATUS_DEGENERATE_GEOMETRY = 7,
  SMC_STATUS_DIVERGED = 8,
  SMC_STATUS_IO = 9,
  SMC_STATUS_OUT_OF_RANGE = 10,
  SMC_STATUS_PANIC = 11,
} SmcStatus;

// Opaque finished run: trajectory log plus summary.
typedef struct SmcRun SmcRun;

// Opaque scenario configuration.
typedef struct SmcScenario SmcScenario;

// One logged step.
typedef struct SmcRecord {
  double t;
  double uav[3];
  double target[2];
  double range_xy;
  double range_z;
  double range;
  double azimuth;
  double elevation;
  double speed;
  double heading;
  double flight_path;
  double target_speed;
  double target_heading;
  double range_xy_rate;
  double range_z_rate;
  double azimuth_rate;
  double sliding[3];
  // Unclamped `(V̇p, α̇p, γ̇)`.
  double raw[3];
  // Applied `(V̇p, α̇p, γ̇)`.
  double command[3];
  uint32_t clamp_bits;
  uint32_t phase;
  uint32_t stage;
} SmcRecord;

// Run summary. Times that do not apply are NaN.
typedef struct SmcSummary {
  uint32_t outcome;
  double final_time;
  double touchdown_time;
  uint64_t steps;
  double terminal_range_xy;
  double terminal_range_z;
  double terminal_range_xy_rate;
  double terminal_range_z_rate;
  double terminal_azimuth_error;
  double terminal_elevation_error;
  double terminal_speed;
  double terminal_speed_error;
  double terminal_heading_error;
  double terminal_flight_path;
  double peak_speed;
  double peak_speed_rate;
  double peak_heading_rate;
  double peak_flight_path_rate;
  double peak_range_xy_rate;
  double reach_time[3];
  uint64_t clamped_steps;
  uint64_t singular_steps;
  double max_pose_range_error;
} SmcSummary;

// Guidance parameters; field meanings match the JSON schema.
typedef struct SmcParams {
  double k_a;
  double k_b;
  double k_c;
  double k1;
  double k2;
  double k3;
  uint32_t m;
  uint32_t n;
  double desired_azimuth_offset;
  double desired_elevation;
  double phase1_azimuth;
  double min_speed;
  double min_cos_flight_path;
  double max_speed_rate;
  double max_heading_rate;
  double max_flight_path_rate;
} SmcParams;

// Relative engagement state for a one-shot guidance evaluation.
typedef struct SmcState {
  double range_xy;
  // Target altitude minus UAV altitude, m.
  double range_z;
  double azimuth;
  double speed;
  double heading;
  double flight_path;
  double target_speed;
  double target_heading;
} SmcState;

typedef struct SmcTargetRates {
  double speed_rate;
  double heading_rate;
  double heading_accel;
} SmcTargetRates;

typedef struct SmcGuidance {
  double sliding[3];
  double raw[3];
  double command[3];
  uint32_t clamp_bits;
} SmcGuidance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer is
// valid until the next call into this library on the same thread.
const char *smc_last_error(void);

// Library version as a static NUL-terminated string.
const char *smc_version(void);

// # Safety
// `s` is NULL or a string returned by this library and not yet freed.
void smc_string_free(char *s);

// Builds the named preset, e.g. `"table1-sline"`.
//
// # Safety
// `name` is a NUL-terminated string; `out` is valid for a pointer write.
enum SmcStatus smc_scenario_from_preset(const char *name, struct SmcScenario **out);

// Parses and validates a JSON scenario document.
//
// # Safety
// `json` is a NUL-terminated string; `out` is valid for a pointer write.
enum SmcStatus smc_scenario_from_json(const char *json, struct SmcScenario **out);

// Serializes the scenario as pretty JSON; free with [`smc_string_free`].
//
// # Safety
// `scenario` is a live handle; `out` is valid for a pointer write.
enum SmcStatus smc_scenario_to_json(const struct SmcScenario *scenario, char **out);

// Sets the integration step, s.
//
// # Safety
// `scenario` is a live handle.
enum SmcStatus smc_scenario_set_dt(struct SmcScenario *scenario, double dt);

// Sets the run horizon, s.
//
// # Safety
// `scenario` is a live handle.
enum SmcStatus smc_scenario_set_t_max(struct SmcScenario *scenario, double t_max);

// Selects `SMC_MODE_SINGLE` or `SMC_MODE_TWO_PHASE`.
//
// # Safety
// `scenario` is a live handle.
enum SmcStatus smc_scenario_set_mode(struct SmcScenario *scenario, uint32_t mode);

// # Safety
// `scenario` is NULL or a live handle; it must not be used afterwards.
void smc_scenario_free(struct SmcScenario *scenario);

// Runs the scenario to touchdown or timeout. A timeout is not an error;
// check the summary outcome.
//
// # Safety
// `scenario` is a live handle; `out` is valid for a pointer write.
enum SmcStatus smc_run(const struct SmcScenario *scenario, struct SmcRun **out);

// Number of logged steps, 0 for NULL.
//
// # Safety
// `run` is NULL or a live handle.
size_t smc_run_len(const struct SmcRun *run);

// Copies record `index` into `out`.
//
// # Safety
// `run` is a live handle; `out` is valid for a write of [`SmcRecord`].
enum SmcStatus smc_run_record(const struct SmcRun *run, size_t index, struct SmcRecord *out);

// # Safety
// `run` is a live handle; `out` is valid for a write of [`SmcSummary`].
enum SmcStatus smc_run_summary(const struct SmcRun *run, struct SmcSummary *out);

// Writes the trajectory CSV to `path`.
//
// # Safety
// `run` is a live handle; `path` is a NUL-terminated string.
enum SmcStatus smc_run_write_csv(const struct SmcRun *run, const char *path);

// # Safety
// `run` is NULL or a live handle; it must not be used afterwards.
void smc_run_free(struct SmcRun *run);

// Copies the parameter set active in `phase` of the scenario.
//
// # Safety
// `scenario` is a live handle; `out` is valid for a write of [`SmcParams`].
enum SmcStatus smc_scenario_params(const struct SmcScenario *scenario,
                                   uint32_t phase,
                                   struct SmcParams *out);

// Evaluates the guidance law once: sliding vector, unclamped solve and
// limited command. Parameters are not validated.
//
// # Safety
// Pointers are valid for their types.
enum SmcStatus smc_guidance_command(const struct SmcState *state,
                                    const struct SmcTargetRates *target,
                                    const struct SmcParams *params,
                                    uint32_t phase,
                                    struct SmcGuidance *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SMC_LAND_H */
