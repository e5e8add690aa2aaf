#ifndef BILINEAR_LAB_H
#define BILINEAR_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define BILAB_OK 0

#define BILAB_NULL_POINTER 1

#define BILAB_CONFIG_ERROR 2

#define BILAB_NUMERIC_ERROR 3

#define BILAB_TOLERANCE_NOT_MET 4

#define BILAB_PANIC 5

#define BILAB_BUFFER_TOO_SMALL 6

#define BILAB_MODEL_KS 0

#define BILAB_MODEL_CH 1

/**
 * Real field on the torus, stored as a truncated Fourier series.
 */
typedef struct BilabField BilabField;

/**
 * Result of the two-phase steering to a constant.
 */
typedef struct BilabGlobalReport BilabGlobalReport;

/**
 * Version string of the library (static, do not free).
 */
const char *bilab_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated).
 *
 * # Safety
 * `buf` must point to `len` writable bytes.
 */
int32_t bilab_last_error(char *buf, uintptr_t len);

/**
 * Field from cosine and sine coefficients of modes 0..n (the sine entry of mode 0 is ignored).
 *
 * # Safety
 * `cos` and `sin` must point to `n` doubles; `out` must be writable.
 */
int32_t bilab_field_from_cos_sin(uintptr_t k,
                                 uintptr_t grid,
                                 const double *cos,
                                 const double *sin,
                                 uintptr_t n,
                                 struct BilabField **out);

/**
 * Field from an expression such as `"2 + 0.5 sin(x)"`, projected onto modes |j| ≤ k.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
int32_t bilab_field_from_expr(const char *text,
                              uintptr_t k,
                              uintptr_t grid,
                              struct BilabField **out);

/**
 * Number of grid points of the field.
 *
 * # Safety
 * `field` must be a live handle; `len` must be writable.
 */
int32_t bilab_field_grid_len(const struct BilabField *field, uintptr_t *len);

/**
 * Writes u(x_j), x_j = 2πj/grid, into `buf`.
 *
 * # Safety
 * `field` must be a live handle; `buf` must point to `len` doubles.
 */
int32_t bilab_field_grid_values(const struct BilabField *field, double *buf, uintptr_t len);

/**
 * L² norm over the torus.
 *
 * # Safety
 * `field` must be a live handle; `norm` must be writable.
 */
int32_t bilab_field_l2_norm(const struct BilabField *field, double *norm);

/**
 * # Safety
 * `field` must be null or a handle not yet freed.
 */
void bilab_field_free(struct BilabField *field);

/**
 * Integrates to time `t` under the constant control p·(1, cos x, sin x).
 *
 * # Safety
 * `u0` must be a live handle; `p` must point to 3 doubles; `out` must be writable.
 */
int32_t bilab_simulate(int32_t model_code,
                       const struct BilabField *u0,
                       const double *p,
                       double t,
                       struct BilabField **out);

/**
 * Steers `u0` to the constant `phi` (same strict sign) at time `t` with default settings.
 *
 * # Safety
 * `u0` must be a live handle; `out` must be writable.
 */
int32_t bilab_global_to_constant(int32_t model_code,
                                 const struct BilabField *u0,
                                 double phi,
                                 double t,
                                 struct BilabGlobalReport **out);

/**
 * L² distance between u(T) and the target constant.
 *
 * # Safety
 * `report` must be a live handle; `err` must be writable.
 */
int32_t bilab_global_terminal_error(const struct BilabGlobalReport *report, double *err);

/**
 * Copy of the terminal state u(T) as a new field handle.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
int32_t bilab_global_terminal_state(const struct BilabGlobalReport *report,
                                    struct BilabField **out);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void bilab_global_report_free(struct BilabGlobalReport *report);

#endif  /* BILINEAR_LAB_H */
