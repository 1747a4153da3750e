#ifndef UIDFORGE_H
#define UIDFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define UF_SEX_MALE 0

#define UF_SEX_FEMALE 1

#define UF_POLICY_AT_BIRTH 0

#define UF_POLICY_AT_AGE_ONE 1

#define UF_POLICY_FULL 2

typedef enum UfStatus {
  UF_STATUS_OK = 0,
  UF_STATUS_NULL_POINTER = 1,
  UF_STATUS_INVALID_ARGUMENT = 2,
  UF_STATUS_DOMAIN = 3,
  UF_STATUS_CONSISTENCY = 4,
  UF_STATUS_ALLOCATION = 5,
  UF_STATUS_UNDEFINED_ESTIMATE = 6,
  UF_STATUS_INSUFFICIENT = 7,
  UF_STATUS_INITIALIZATION = 8,
  UF_STATUS_CONFIG = 9,
  UF_STATUS_PARSE = 10,
  UF_STATUS_DATA = 11,
  UF_STATUS_IO = 12,
  UF_STATUS_PANIC = 13,
} UfStatus;

typedef struct UfChain UfChain;

typedef struct UfDemandSeries UfDemandSeries;

typedef struct UfFertility UfFertility;

typedef struct UfPyramid UfPyramid;

typedef struct UfSurvival UfSurvival;

/**
 * One year of a demand series, counts unrounded.
 */
typedef struct UfDemandRow {
  int32_t year;
  double new_cards_male;
  double new_cards_female;
  double returned_cards;
} UfDemandRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none.
 * The pointer stays valid until the next failing call on the thread.
 */
const char *uf_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *uf_version(void);

/**
 * Empty pyramid with every cell from age 0 to `max_age` set to zero.
 *
 * # Safety
 * `region` must be a NUL-terminated string and `out` writable.
 */
enum UfStatus uf_pyramid_new(const char *region,
                             int32_t year,
                             size_t max_age,
                             struct UfPyramid **out);

/**
 * Loads a single-region population CSV.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum UfStatus uf_pyramid_load_csv(const char *path,
                                  size_t max_age,
                                  int32_t year,
                                  struct UfPyramid **out);

/**
 * # Safety
 * `pyramid` must be a live handle.
 */
enum UfStatus uf_pyramid_set(struct UfPyramid *pyramid, uint32_t sex, size_t age, double count);

/**
 * # Safety
 * `pyramid` must be a live handle and `out` writable.
 */
enum UfStatus uf_pyramid_get(const struct UfPyramid *pyramid,
                             uint32_t sex,
                             size_t age,
                             double *out);

/**
 * # Safety
 * `pyramid` must be a live handle and `out` writable.
 */
enum UfStatus uf_pyramid_total(const struct UfPyramid *pyramid, double *out);

/**
 * # Safety
 * `pyramid` must be null or a handle not yet freed.
 */
void uf_pyramid_free(struct UfPyramid *pyramid);

/**
 * Survival schedule from one-year probabilities for ages 0..len-1. The
 * last value of each sex must be 0.
 *
 * # Safety
 * `male` and `female` must point to `len` values and `out` be writable.
 */
enum UfStatus uf_survival_new(const double *male,
                              const double *female,
                              size_t len,
                              struct UfSurvival **out);

/**
 * Loads a single-region survival CSV.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum UfStatus uf_survival_load_csv(const char *path, struct UfSurvival **out);

/**
 * # Safety
 * `survival` must be null or a handle not yet freed.
 */
void uf_survival_free(struct UfSurvival *survival);

/**
 * Fertility with every rate zero; set rates with [`uf_fertility_set_rate`].
 *
 * # Safety
 * `out` must be writable.
 */
enum UfStatus uf_fertility_new(double eligible_proportion,
                               double sex_ratio_at_birth,
                               double infant_mortality,
                               struct UfFertility **out);

/**
 * # Safety
 * `fertility` must be a live handle.
 */
enum UfStatus uf_fertility_set_rate(struct UfFertility *fertility, size_t age, double rate);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum UfStatus uf_fertility_load_csv(const char *path, struct UfFertility **out);

/**
 * # Safety
 * `fertility` must be null or a handle not yet freed.
 */
void uf_fertility_free(struct UfFertility *fertility);

/**
 * Projects `horizon` years and returns the final pyramid as a new handle.
 *
 * # Safety
 * Input handles must be live and `out` writable.
 */
enum UfStatus uf_project(const struct UfPyramid *pyramid,
                         const struct UfSurvival *survival,
                         const struct UfFertility *fertility,
                         size_t horizon,
                         struct UfPyramid **out);

/**
 * Annual card demand for `horizon` years. `flows_path` may be null for no
 * international migration.
 *
 * # Safety
 * Input handles must be live, `flows_path` null or a NUL-terminated string,
 * and `out` writable.
 */
enum UfStatus uf_demand_series(const struct UfPyramid *pyramid,
                               const struct UfSurvival *survival,
                               const struct UfFertility *fertility,
                               const char *flows_path,
                               size_t horizon,
                               uint32_t policy,
                               struct UfDemandSeries **out);

/**
 * Number of years in the series; 0 for a null handle.
 *
 * # Safety
 * `series` must be null or a live handle.
 */
size_t uf_demand_len(const struct UfDemandSeries *series);

/**
 * # Safety
 * `series` must be a live handle and `out` writable.
 */
enum UfStatus uf_demand_row(const struct UfDemandSeries *series,
                            size_t index,
                            struct UfDemandRow *out);

/**
 * Writes the series as rounded CSV.
 *
 * # Safety
 * `series` must be a live handle and `path` a NUL-terminated string.
 */
enum UfStatus uf_demand_write_csv(const struct UfDemandSeries *series, const char *path);

/**
 * Writes the series as an SVG line chart.
 *
 * # Safety
 * `series` must be a live handle and `path` a NUL-terminated string.
 */
enum UfStatus uf_demand_write_svg(const struct UfDemandSeries *series, const char *path);

/**
 * # Safety
 * `series` must be null or a handle not yet freed.
 */
void uf_demand_free(struct UfDemandSeries *series);

/**
 * Lincoln-Petersen estimate n1·n2/m.
 *
 * # Safety
 * `out` must be writable.
 */
enum UfStatus uf_dual_system_estimate(uint64_t first_list,
                                      uint64_t second_list,
                                      uint64_t matched,
                                      double *out);

/**
 * Metropolis chain for the demand rate under a Gamma(shape, rate) prior.
 *
 * # Safety
 * `counts` and `exposures` must point to `n_obs` values and `out` be
 * writable.
 */
enum UfStatus uf_metropolis_sample(const uint64_t *counts,
                                   const double *exposures,
                                   size_t n_obs,
                                   double prior_shape,
                                   double prior_rate,
                                   size_t n_samples,
                                   uint64_t seed,
                                   double proposal_scale,
                                   struct UfChain **out);

/**
 * Total draws including burn-in; 0 for a null handle.
 *
 * # Safety
 * `chain` must be null or a live handle.
 */
size_t uf_chain_len(const struct UfChain *chain);

/**
 * Leading draws to discard as burn-in.
 *
 * # Safety
 * `chain` must be null or a live handle.
 */
size_t uf_chain_burn_in(const struct UfChain *chain);

/**
 * Pointer to the draws, valid while the handle lives; null for a null
 * handle.
 *
 * # Safety
 * `chain` must be null or a live handle.
 */
const double *uf_chain_samples(const struct UfChain *chain);

/**
 * # Safety
 * `chain` must be null or a live handle.
 */
double uf_chain_acceptance_rate(const struct UfChain *chain);

/**
 * # Safety
 * `chain` must be null or a handle not yet freed.
 */
void uf_chain_free(struct UfChain *chain);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UIDFORGE_H */
