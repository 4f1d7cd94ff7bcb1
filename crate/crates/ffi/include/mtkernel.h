#ifndef MTKERNEL_H
#define MTKERNEL_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MtkStatus {
  MTK_STATUS_OK = 0,
  MTK_STATUS_NULL_POINTER = 1,
  MTK_STATUS_INVALID_ARGUMENT = 2,
  MTK_STATUS_DIMENSION_MISMATCH = 3,
  MTK_STATUS_DOMAIN_VIOLATION = 4,
  MTK_STATUS_DUPLICATE_POINTS = 5,
  MTK_STATUS_SINGULAR = 6,
  MTK_STATUS_ILL_CONDITIONED = 7,
  MTK_STATUS_IO = 8,
  MTK_STATUS_BUFFER_TOO_SMALL = 9,
  MTK_STATUS_PANIC = 10,
} MtkStatus;

/**
 * Opaque factorized Gram matrix, together with its kernel.
 */
typedef struct MtkGram MtkGram;

/**
 * Opaque multi-task kernel.
 */
typedef struct MtkKernel MtkKernel;

/**
 * Opaque fitted model.
 */
typedef struct MtkModel MtkModel;

/**
 * ADMM settings for [`mtk_fit_l1`].
 */
typedef struct MtkAdmmParams {
  double rho;
  size_t max_iters;
  double eps_abs;
  double eps_rel;
  bool adaptive_rho;
} MtkAdmmParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL terminated,
 * truncated to `len`) and returns the full message length in bytes.
 */
size_t mtk_last_error_message(char *buf, size_t len);

/**
 * Builds K = k·A from a scalar kernel descriptor (e.g. `"exponential:r=1.0"`,
 * `"brownian_motion"`) and a row-major `d × d` coupling matrix. A null
 * `coupling` with `d == 1` means A = [1].
 */
enum MtkStatus mtk_kernel_new(const char *descriptor,
                              const double *coupling,
                              size_t d,
                              struct MtkKernel **out);

void mtk_kernel_free(struct MtkKernel *kernel);

/**
 * Output dimension d, or 0 for a null handle.
 */
size_t mtk_kernel_outputs(const struct MtkKernel *kernel);

/**
 * Writes the `d × d` block K(s, t) row-major into `out`.
 */
enum MtkStatus mtk_kernel_eval(const struct MtkKernel *kernel,
                               const double *s,
                               const double *t,
                               size_t n,
                               double *out);

/**
 * Assembles and factorizes K[x] for `m` points of dimension `n`.
 */
enum MtkStatus mtk_gram_assemble(const struct MtkKernel *kernel,
                                 const double *points,
                                 size_t m,
                                 size_t n,
                                 struct MtkGram **out);

void mtk_gram_free(struct MtkGram *gram);

/**
 * Side length m·d, or 0 for a null handle.
 */
size_t mtk_gram_size(const struct MtkGram *gram);

/**
 * 1-norm condition number estimate, or NaN for a null handle.
 */
double mtk_gram_condition_estimate(const struct MtkGram *gram);

/**
 * Copies the dense symmetric Gram matrix (`size × size`) into `out`.
 */
enum MtkStatus mtk_gram_copy(const struct MtkGram *gram, double *out, size_t len);

/**
 * Lebesgue function ‖K[x]⁻¹K_x(t)‖₁ at the point `t` of dimension `n`.
 */
enum MtkStatus mtk_lebesgue_function(const struct MtkGram *gram,
                                     const double *t,
                                     size_t n,
                                     double *out);

/**
 * Library defaults.
 */
struct MtkAdmmParams mtk_admm_params_default(void);

/**
 * ℓ¹ regularization network on `m` points of dimension `n` with targets `y`
 * (length m·d). A null `params` uses the defaults.
 */
enum MtkStatus mtk_fit_l1(const struct MtkKernel *kernel,
                          const double *points,
                          size_t m,
                          size_t n,
                          const double *y,
                          double lambda,
                          const struct MtkAdmmParams *params,
                          struct MtkModel **out);

/**
 * Kernel ridge regression (K[x] + λI)⁻¹y.
 */
enum MtkStatus mtk_fit_ridge(const struct MtkKernel *kernel,
                             const double *points,
                             size_t m,
                             size_t n,
                             const double *y,
                             double lambda,
                             struct MtkModel **out);

void mtk_model_free(struct MtkModel *model);

/**
 * Number of coefficients m·d, or 0 for a null handle.
 */
size_t mtk_model_len(const struct MtkModel *model);

/**
 * Number of nonzero coefficients, or 0 for a null handle.
 */
size_t mtk_model_nnz(const struct MtkModel *model);

/**
 * Objective value at the returned coefficients, or NaN for a null handle.
 */
double mtk_model_objective(const struct MtkModel *model);

/**
 * Writes iteration count and convergence flag; either pointer may be null.
 */
enum MtkStatus mtk_model_status(const struct MtkModel *model, size_t *iterations, bool *converged);

enum MtkStatus mtk_model_coefficients(const struct MtkModel *model, double *out, size_t len);

/**
 * Evaluates the model at `t` (dimension `n`), writing d values.
 */
enum MtkStatus mtk_model_predict(const struct MtkModel *model,
                                 const double *t,
                                 size_t n,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MTKERNEL_H */
