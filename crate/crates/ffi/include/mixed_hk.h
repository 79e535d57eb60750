#ifndef MIXED_HK_H
#define MIXED_HK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Zero is success.
typedef enum MhkStatus {
  MHK_STATUS_OK = 0,
  MHK_STATUS_NULL_POINTER = 1,
  MHK_STATUS_INVALID_UTF8 = 2,
  MHK_STATUS_CONFIG = 3,
  MHK_STATUS_PARSE = 4,
  MHK_STATUS_SCHEDULE_EXHAUSTED = 5,
  MHK_STATUS_DOMAIN = 6,
  MHK_STATUS_PRECONDITION = 7,
  MHK_STATUS_SIZE_LIMIT = 8,
  MHK_STATUS_NUMERICAL = 9,
  MHK_STATUS_INTEGRITY = 10,
  MHK_STATUS_IO = 11,
  MHK_STATUS_JSON = 12,
  MHK_STATUS_PANIC = 13,
} MhkStatus;

// Opaque model configuration.
typedef struct MhkConfig MhkConfig;

// Opaque simulated or loaded trajectory.
typedef struct MhkTrajectory MhkTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Free with [`mhk_string_free`].
char *mhk_last_error(void);

// # Safety
// `s` must come from this library and not have been freed.
void mhk_string_free(char *s);

// Parse a TOML model config. Relative initial-state paths resolve against the working directory.
//
// # Safety
// `toml` must be a NUL-terminated string; `out` must be writable.
enum MhkStatus mhk_config_from_toml(const char *toml, struct MhkConfig **out);

// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum MhkStatus mhk_config_from_file(const char *path, struct MhkConfig **out);

// # Safety
// `config` must be a live handle.
enum MhkStatus mhk_config_set_seed(struct MhkConfig *config, uint64_t seed);

// # Safety
// `config` must be NULL or a handle not yet freed.
void mhk_config_free(struct MhkConfig *config);

// # Safety
// `config` must be a live handle; `out` must be writable.
enum MhkStatus mhk_simulate(const struct MhkConfig *config, struct MhkTrajectory **out);

// Read a CSV (with sidecar) or JSON trajectory.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum MhkStatus mhk_trajectory_read(const char *path, struct MhkTrajectory **out);

// Write as JSON when `json` is nonzero, otherwise CSV plus a `.json` sidecar.
//
// # Safety
// `traj` must be a live handle; `path` a NUL-terminated string.
enum MhkStatus mhk_trajectory_write(const struct MhkTrajectory *traj, const char *path, int json);

// Number of recorded states and the dimensions of each.
//
// # Safety
// `traj` must be a live handle; the out pointers must be writable.
enum MhkStatus mhk_trajectory_shape(const struct MhkTrajectory *traj,
                                    size_t *states,
                                    size_t *n,
                                    size_t *d);

// Copy state `k` into `out`, which must hold `n * d` doubles.
//
// # Safety
// `traj` must be a live handle; `out` must point to `len` writable doubles.
enum MhkStatus mhk_trajectory_state(const struct MhkTrajectory *traj,
                                    size_t k,
                                    double *out,
                                    size_t len);

// Post-hoc check report as JSON. A NaN `delta` means epsilon / 4.
//
// # Safety
// `traj` must be a live handle; `out` must be writable.
enum MhkStatus mhk_check_json(const struct MhkTrajectory *traj, double delta, char **out);

// # Safety
// `traj` must be NULL or a handle not yet freed.
void mhk_trajectory_free(struct MhkTrajectory *traj);

// One mixed update of `n` agents in `d` dimensions.
//
// # Safety
// `x` and `out` must hold `n * d` doubles, `alpha` must hold `n`.
enum MhkStatus mhk_step(size_t n,
                        size_t d,
                        double epsilon,
                        const double *x,
                        const double *alpha,
                        double *out);

// Sum of truncated squared distances over ordered pairs.
//
// # Safety
// `x` must hold `n * d` doubles; `out` must be writable.
enum MhkStatus mhk_energy(size_t n, size_t d, double epsilon, const double *x, double *out);

// Contraction factor of a stubbornness vector; needs `n >= 2`.
//
// # Safety
// `alpha` must hold `n` doubles; `out` must be writable.
enum MhkStatus mhk_beta(size_t n, const double *alpha, double *out);

// Spectral report of the epsilon-graph of `x` as JSON.
//
// # Safety
// `x` must hold `n * d` doubles; `out` must be writable.
enum MhkStatus mhk_spectral_json(size_t n, size_t d, double epsilon, const double *x, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIXED_HK_H */
