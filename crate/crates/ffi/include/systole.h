#ifndef SYSTOLE_H
#define SYSTOLE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SYSTOLE_ABI_VERSION 1

typedef enum SystoleStatus {
  SYSTOLE_STATUS_OK = 0,
  SYSTOLE_STATUS_NULL_POINTER = 1,
  SYSTOLE_STATUS_INVALID_ARGUMENT = 2,
  SYSTOLE_STATUS_NON_CONVERGENCE = 3,
  SYSTOLE_STATUS_INTERNAL = 4,
} SystoleStatus;

/**
 * Opaque cylinder `Y_j`.
 */
typedef struct SystoleCylinder SystoleCylinder;

/**
 * Opaque result of the minimal-mass LP for `[M]` in `Y_j`.
 */
typedef struct SystoleMassCertificate SystoleMassCertificate;

typedef struct SystoleFreedomReport {
  uint32_t j;
  double volume;
  double sys1_estimate;
  double sys2_lower;
  /**
   * `volume / (sys1_estimate * sys2_lower)`
   */
  double ratio;
  /**
   * False if loop shortening hit its iteration cap; the report is still
   * written and the call returns `NonConvergence`.
   */
  bool sys1_converged;
} SystoleFreedomReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

uint32_t systole_abi_version(void);

/**
 * Message for the last failed call on this thread, or null if there was
 * none. Valid until the next failing call on the same thread.
 */
const char *systole_last_error_message(void);

void systole_clear_error(void);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum SystoleStatus systole_cylinder_new(uint32_t j, struct SystoleCylinder **out);

/**
 * # Safety
 * `c` must come from [`systole_cylinder_new`] and not be freed twice. Null is
 * ignored.
 */
void systole_cylinder_free(struct SystoleCylinder *c);

/**
 * # Safety
 * `c` must be a live handle; `out` valid for writes.
 */
enum SystoleStatus systole_cylinder_j(const struct SystoleCylinder *c, uint32_t *out);

/**
 * # Safety
 * `c` must be a live handle; `out` valid for writes.
 */
enum SystoleStatus systole_cylinder_volume(const struct SystoleCylinder *c,
                                           double tol,
                                           double *out);

/**
 * Area of the surface `M = {y = 0}`.
 *
 * # Safety
 * `c` must be a live handle; `out` valid for writes.
 */
enum SystoleStatus systole_cylinder_area_m(const struct SystoleCylinder *c,
                                           double tol,
                                           double *out);

/**
 * Writes the Gram matrix at `(x, y, z)` row-major into `out[0..9]`.
 *
 * # Safety
 * `c` must be a live handle; `out` valid for 9 writes.
 */
enum SystoleStatus systole_cylinder_metric_at(const struct SystoleCylinder *c,
                                              double x,
                                              double y,
                                              double z,
                                              double *out);

/**
 * `int_M phi_j alpha` for the standard cutoff.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SystoleStatus systole_calibration_integral(uint32_t j, double tol, double *out);

/**
 * # Safety
 * `length` valid for writes; `coefficients` valid for 2 writes or null.
 */
enum SystoleStatus systole_flat_torus_systole(double a,
                                              double b,
                                              double d,
                                              double *length,
                                              int64_t *coefficients);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum SystoleStatus systole_flat_torus_diameter(double a, double b, double d, double *out);

/**
 * `systole^2 / area`; at most `2 / sqrt(3)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SystoleStatus systole_flat_torus_loewner_ratio(double a, double b, double d, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum SystoleStatus systole_torus3_report(uint32_t j,
                                         uint32_t restarts,
                                         uint64_t seed,
                                         struct SystoleFreedomReport *out);

/**
 * Solves the LP on an `nx x ny x nz` grid; zero sizes pick the default
 * `8j x 8 x 8`. A handle is written even when the solver stops early or the
 * certificate is rejected; the status is then `NonConvergence`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SystoleStatus systole_lp_solve(uint32_t j,
                                    size_t nx,
                                    size_t ny,
                                    size_t nz,
                                    double tol,
                                    struct SystoleMassCertificate **out);

/**
 * # Safety
 * `h` must come from [`systole_lp_solve`] and not be freed twice. Null is
 * ignored.
 */
void systole_lp_free(struct SystoleMassCertificate *h);

/**
 * # Safety
 * `h` must be a live handle or null.
 */
double systole_lp_primal_mass(const struct SystoleMassCertificate *h);

/**
 * # Safety
 * `h` must be a live handle or null.
 */
double systole_lp_dual_pairing(const struct SystoleMassCertificate *h);

/**
 * # Safety
 * `h` must be a live handle or null.
 */
double systole_lp_gap(const struct SystoleMassCertificate *h);

/**
 * # Safety
 * `h` must be a live handle or null.
 */
double systole_lp_reference_mass(const struct SystoleMassCertificate *h);

/**
 * # Safety
 * `h` must be a live handle or null.
 */
bool systole_lp_certificate_ok(const struct SystoleMassCertificate *h);

/**
 * Number of faces, i.e. the length of the chain and dual vectors.
 *
 * # Safety
 * `h` must be a live handle or null.
 */
size_t systole_lp_num_faces(const struct SystoleMassCertificate *h);

/**
 * Copies the minimizing chain (one coefficient per face) into `buf`.
 *
 * # Safety
 * `h` must be a live handle; `buf` valid for `len` writes.
 */
enum SystoleStatus systole_lp_copy_chain(const struct SystoleMassCertificate *h,
                                         double *buf,
                                         size_t len);

/**
 * Copies the dual calibration (one value per face) into `buf`.
 *
 * # Safety
 * `h` must be a live handle; `buf` valid for `len` writes.
 */
enum SystoleStatus systole_lp_copy_dual(const struct SystoleMassCertificate *h,
                                        double *buf,
                                        size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYSTOLE_H */
