#ifndef PCS_SIM_H
#define PCS_SIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Atom level selector: `PCS_ATOM_G = 0`, `PCS_ATOM_E = 1`.
 */
#define PCS_ATOM_G 0

#define PCS_ATOM_E 1

/**
 * Result code of every fallible call.
 */
typedef enum PcsStatus {
  PCS_STATUS_OK = 0,
  PCS_STATUS_NULL_POINTER = 1,
  PCS_STATUS_INVALID_ARGUMENT = 2,
  PCS_STATUS_INPUT = 3,
  PCS_STATUS_CONFIG = 4,
  PCS_STATUS_INTEGRATION = 5,
  PCS_STATUS_TRUNCATION = 6,
  PCS_STATUS_IO = 7,
  PCS_STATUS_PANIC = 8,
} PcsStatus;

/**
 * Columns of an observable series.
 */
typedef enum PcsColumn {
  PCS_COLUMN_TIME = 0,
  PCS_COLUMN_SZ = 1,
  PCS_COLUMN_POL_RE = 2,
  PCS_COLUMN_POL_IM = 3,
  PCS_COLUMN_TRACE = 4,
  PCS_COLUMN_PURITY = 5,
  PCS_COLUMN_Q_MEAN = 6,
  PCS_COLUMN_LEAK = 7,
  PCS_COLUMN_FIDELITY_PCS = 8,
} PcsColumn;

/**
 * Density matrix.
 */
typedef struct PcsDensity PcsDensity;

/**
 * Sampled observables of a run.
 */
typedef struct PcsSeries PcsSeries;

/**
 * Truncated Hilbert space.
 */
typedef struct PcsSpace PcsSpace;

/**
 * Pure state.
 */
typedef struct PcsState PcsState;

/**
 * Effective-model run parameters.
 */
typedef struct PcsRunParams {
  double alpha;
  double xi_re;
  double xi_im;
  double gamma;
  double dt;
  double t_final;
  uint64_t n_traj;
  uint64_t master_seed;
  uint64_t output_every;
} PcsRunParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the same
 * thread.
 */
const char *pcs_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pcs_version(void);

enum PcsStatus pcs_space_new(uint64_t cutoff, struct PcsSpace **out_space);

void pcs_space_free(struct PcsSpace *space);

/**
 * Hilbert-space dimension `2(N+1)²`, or 0 for a null handle.
 */
uint64_t pcs_space_dim(const struct PcsSpace *space);

enum PcsStatus pcs_space_flat_index(const struct PcsSpace *space,
                                    int32_t atom_level,
                                    uint64_t n,
                                    uint64_t m,
                                    uint64_t *out_index);

enum PcsStatus pcs_state_fock(const struct PcsSpace *space,
                              int32_t atom_level,
                              uint64_t n,
                              uint64_t m,
                              struct PcsState **out_state);

/**
 * `|atom⟩ ⊗ |ξ, q⟩`.
 */
enum PcsStatus pcs_state_pcs(const struct PcsSpace *space,
                             double xi_re,
                             double xi_im,
                             int64_t q,
                             int32_t atom_level,
                             struct PcsState **out_state);

void pcs_state_free(struct PcsState *state);

/**
 * Number of amplitudes, or 0 for a null handle.
 */
uint64_t pcs_state_len(const struct PcsState *state);

/**
 * Copies the amplitudes into `re` and `im`, each of capacity `len`.
 */
enum PcsStatus pcs_state_amplitudes(const struct PcsState *state,
                                    double *re,
                                    double *im,
                                    uint64_t len);

/**
 * Accumulated truncation leak of the state.
 */
enum PcsStatus pcs_state_leak(const struct PcsState *state, double *out_leak);

enum PcsStatus pcs_state_inversion(const struct PcsState *state, double *out_sz);

enum PcsStatus pcs_state_polarization(const struct PcsState *state, double *out_re, double *out_im);

enum PcsStatus pcs_state_charge_stats(const struct PcsState *state,
                                      double *out_mean,
                                      double *out_var);

/**
 * `|⟨a|b⟩|²`
 */
enum PcsStatus pcs_state_fidelity(const struct PcsState *a,
                                  const struct PcsState *b,
                                  double *out_fidelity);

/**
 * Writes `P(n, m)` at `probs[n·(N+1) + m]`; `len` must be at least `(N+1)²`.
 */
enum PcsStatus pcs_state_marginal(const struct PcsState *state, double *probs, uint64_t len);

enum PcsStatus pcs_density_from_state(const struct PcsState *state,
                                      struct PcsDensity **out_density);

void pcs_density_free(struct PcsDensity *density);

enum PcsStatus pcs_density_purity(const struct PcsDensity *density, double *out_purity);

enum PcsStatus pcs_density_inversion(const struct PcsDensity *density, double *out_sz);

/**
 * `⟨ψ|ρ|ψ⟩`
 */
enum PcsStatus pcs_density_fidelity(const struct PcsDensity *density,
                                    const struct PcsState *state,
                                    double *out_fidelity);

enum PcsStatus pcs_density_marginal(const struct PcsDensity *density, double *probs, uint64_t len);

/**
 * Modified Bessel function of the first kind `I_q(x)`.
 */
enum PcsStatus pcs_bessel_i(int64_t q, double x, double *out_value);

/**
 * Integrates the master equation of the effective model from a pure state.
 * `target` may be null; when given, the series carries its fidelity.
 * `out_density` may be null if the final state is not wanted.
 */
enum PcsStatus pcs_master_equation(const struct PcsState *initial,
                                   const struct PcsRunParams *params,
                                   const struct PcsState *target,
                                   struct PcsSeries **out_series,
                                   struct PcsDensity **out_density);

/**
 * Quantum-jump ensemble of `params.n_traj` trajectories. `out_stderr` and
 * `out_density` may be null.
 */
enum PcsStatus pcs_mc_ensemble(const struct PcsState *initial,
                               const struct PcsRunParams *params,
                               const struct PcsState *target,
                               struct PcsSeries **out_mean,
                               struct PcsSeries **out_stderr,
                               struct PcsDensity **out_density);

void pcs_series_free(struct PcsSeries *series);

/**
 * Number of samples, or 0 for a null handle.
 */
uint64_t pcs_series_len(const struct PcsSeries *series);

/**
 * Whether the series has the given column (purity and fidelity are
 * optional).
 */
bool pcs_series_has_column(const struct PcsSeries *series, enum PcsColumn column);

/**
 * Copies one column into `values` (capacity `len`).
 */
enum PcsStatus pcs_series_column(const struct PcsSeries *series,
                                 enum PcsColumn column,
                                 double *values,
                                 uint64_t len);

/**
 * Runs a scenario as the command-line tool does. `config_text` (TOML or
 * JSON) and `out_dir` may be null; `out_dir` overrides the configured output
 * directory.
 */
enum PcsStatus pcs_run_scenario(const char *scenario, const char *config_text, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PCS_SIM_H */
