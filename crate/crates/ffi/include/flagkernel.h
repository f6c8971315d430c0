#ifndef FLAGKERNEL_H
#define FLAGKERNEL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum {
  FK_STATUS_OK = 0,
  FK_STATUS_NULL_POINTER = 1,
  FK_STATUS_INVALID_UTF8 = 2,
  /**
   * Invalid layout, order, algebra or configuration.
   */
  FK_STATUS_INVALID_INPUT = 3,
  /**
   * Expression syntax error; the message carries the position.
   */
  FK_STATUS_PARSE = 4,
  /**
   * Numerical failure (quadrature, regression, resolution, ...).
   */
  FK_STATUS_RUNTIME = 5,
  /**
   * A panic was caught at the boundary.
   */
  FK_STATUS_PANIC = 6,
} FkStatus;

/**
 * Group law handle.
 */
typedef struct FkGroupLaw FkGroupLaw;

/**
 * Kernel handle.
 */
typedef struct FkKernel FkKernel;

/**
 * Graded layout handle.
 */
typedef struct FkLayout FkLayout;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread; do not free.
 */
const char *fk_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void fk_string_free(char *s);

/**
 * Library version, static storage.
 */
const char *fk_version(void);

/**
 * Parses `p:n,p:n,...`. `flag_blocks` nonzero allows equal consecutive exponents.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
FkStatus fk_layout_parse(const char *spec, int32_t flag_blocks, FkLayout **out);

/**
 * # Safety
 * `l` must come from `fk_layout_parse` or be null.
 */
void fk_layout_free(FkLayout *l);

/**
 * Number of coordinates, or 0 for a null handle.
 *
 * # Safety
 * `l` must be a live handle or null.
 */
size_t fk_layout_dim(const FkLayout *l);

/**
 * Homogeneous dimension `Q`, or NaN for a null handle.
 *
 * # Safety
 * `l` must be a live handle or null.
 */
double fk_layout_homogeneous_dim(const FkLayout *l);

/**
 * Homogeneous norm (default smooth variant) of `x[0..n]`.
 *
 * # Safety
 * `x` must point to `n` doubles and `out` to one.
 */
FkStatus fk_layout_norm(const FkLayout *l, const double *x, size_t n, double *out);

/**
 * Flag power kernel of the given order, written `"-1/2,0"`. `norm_m` 0 picks
 * the default smooth norm; a positive value selects `smooth:norm_m`.
 *
 * # Safety
 * `layout` must be live, `order` NUL-terminated and `out` valid.
 */
FkStatus fk_kernel_flag_power(const FkLayout *layout,
                              const char *order,
                              uint32_t norm_m,
                              FkKernel **out);

/**
 * Gaussian `exp(-|x|^2 / scale^2)` on a layout.
 *
 * # Safety
 * `layout` must be live and `out` valid.
 */
FkStatus fk_kernel_gaussian(const FkLayout *layout, double scale, FkKernel **out);

/**
 * # Safety
 * `k` must come from a kernel constructor or be null.
 */
void fk_kernel_free(FkKernel *k);

/**
 * Kernel value at `x[0..n]`; points on the singular set are an error.
 *
 * # Safety
 * `x` must point to `n` doubles and `out` to one.
 */
FkStatus fk_kernel_eval(const FkKernel *k, const double *x, size_t n, double *out);

/**
 * Claimed class as text, e.g. `F[-1/2]`; free with `fk_string_free`.
 *
 * # Safety
 * `k` must be live and `out` valid.
 */
FkStatus fk_kernel_class(const FkKernel *k, char **out);

/**
 * Preset law: `"abelian"` (size = dimension), `"heisenberg"` (size ignored)
 * or `"filiform"` (size = step, 2 to 4).
 *
 * # Safety
 * `name` must be NUL-terminated and `out` valid.
 */
FkStatus fk_group_law_preset(const char *name, size_t size, FkGroupLaw **out);

/**
 * # Safety
 * `g` must come from `fk_group_law_preset` or be null.
 */
void fk_group_law_free(FkGroupLaw *g);

/**
 * Dimension of the group, or 0 for a null handle.
 *
 * # Safety
 * `g` must be live or null.
 */
size_t fk_group_law_dim(const FkGroupLaw *g);

/**
 * `out = x * y`; all three arrays hold `n` doubles and `n` must equal the dimension.
 *
 * # Safety
 * Pointers must be valid for `n` doubles each.
 */
FkStatus fk_group_law_multiply(const FkGroupLaw *g,
                               const double *x,
                               const double *y,
                               size_t n,
                               double *out);

/**
 * Canonical polynomial text of the law; free with `fk_string_free`.
 *
 * # Safety
 * `g` must be live and `out` valid.
 */
FkStatus fk_group_law_text(const FkGroupLaw *g, char **out);

/**
 * Evaluates an order-calculus expression on a layout. The result text goes
 * to `out`; `composable` is set to 1 for a class and 0 for a gate failure.
 *
 * # Safety
 * `expr` must be NUL-terminated, `layout` live, `out` and `composable` valid.
 */
FkStatus fk_classcalc(const char *expr, const FkLayout *layout, char **out, int32_t *composable);

/**
 * Runs every check of a TOML configuration given as text. The suite JSON
 * goes to `out`; `passed` is 1 when every verdict passes. Nothing is
 * written to disk.
 *
 * # Safety
 * `config` must be NUL-terminated, `out` and `passed` valid.
 */
FkStatus fk_verify_config(const char *config, char **out, int32_t *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLAGKERNEL_H */
