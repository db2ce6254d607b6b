#ifndef GRIDLENS_H
#define GRIDLENS_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum GridlensStatus {
  GRIDLENS_STATUS_OK = 0,
  GRIDLENS_STATUS_NULL_ARGUMENT = 1,
  GRIDLENS_STATUS_INVALID_UTF8 = 2,
  /**
   * Input data failed validation.
   */
  GRIDLENS_STATUS_VALIDATION = 3,
  GRIDLENS_STATUS_IO = 4,
  /**
   * Bad query parameters or an undefined result.
   */
  GRIDLENS_STATUS_QUERY = 5,
  /**
   * Output buffer too small; the required length was written.
   */
  GRIDLENS_STATUS_BUFFER_TOO_SMALL = 6,
  GRIDLENS_STATUS_INVALID_CONFIG = 7,
  GRIDLENS_STATUS_PANIC = 8,
} GridlensStatus;

typedef enum GridlensOverloadCategory {
  GRIDLENS_OVERLOAD_CATEGORY_NONE = 0,
  GRIDLENS_OVERLOAD_CATEGORY_NORMAL_CYCLIC = 1,
  GRIDLENS_OVERLOAD_CATEGORY_LONG_TIME_EMERGENCY = 2,
  GRIDLENS_OVERLOAD_CATEGORY_SHORT_TIME_EMERGENCY = 3,
  GRIDLENS_OVERLOAD_CATEGORY_CRITICAL = 4,
} GridlensOverloadCategory;

/**
 * Opaque scenario handle.
 */
typedef struct GridlensStore GridlensStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *gridlens_last_error(void);

/**
 * Library version as a static string.
 */
const char *gridlens_version(void);

/**
 * Load a scenario from a manifest or cache file.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out_store` writable.
 */
enum GridlensStatus gridlens_store_load(const char *path, struct GridlensStore **out_store);

/**
 * Release a store. Null is ignored.
 *
 * # Safety
 * `store` must come from [`gridlens_store_load`] and not be used afterwards.
 */
void gridlens_store_free(struct GridlensStore *store);

/**
 * Write the binary cache of a store.
 *
 * # Safety
 * `store` must be a live handle and `path` a nul-terminated string.
 */
enum GridlensStatus gridlens_store_write_cache(const struct GridlensStore *store, const char *path);

/**
 * # Safety
 * `store` must be a live handle and `out_count` writable.
 */
enum GridlensStatus gridlens_store_agent_count(const struct GridlensStore *store,
                                               size_t *out_count);

/**
 * # Safety
 * `store` must be a live handle and `out_count` writable.
 */
enum GridlensStatus gridlens_store_step_count(const struct GridlensStore *store, size_t *out_count);

/**
 * Copy the per-minute total load (kW) into `buffer`. With a null buffer or
 * one shorter than the step count, only `out_len` is set.
 *
 * # Safety
 * `buffer` must hold `capacity` doubles when non-null; `out_len` writable.
 */
enum GridlensStatus gridlens_store_total_load(const struct GridlensStore *store,
                                              double *buffer,
                                              size_t capacity,
                                              size_t *out_len);

/**
 * KPI report as JSON; with a non-null `reference`, includes the comparison.
 *
 * # Safety
 * Handles must be live (or `reference` null) and `out_json` writable.
 */
enum GridlensStatus gridlens_kpi_json(const struct GridlensStore *store,
                                      const struct GridlensStore *reference,
                                      char **out_json);

/**
 * Downsampled series as JSON. `scope` is `"aggregate"`, an agent id or
 * null; null bounds mean the scenario start or end.
 *
 * # Safety
 * Strings must be nul-terminated or null where allowed; `out_json` writable.
 */
enum GridlensStatus gridlens_series_json(const struct GridlensStore *store,
                                         const char *variable,
                                         const char *scope,
                                         const char *from,
                                         const char *to,
                                         size_t buckets,
                                         char **out_json);

/**
 * Load factor of the store's total load.
 *
 * # Safety
 * `store` must be a live handle and `out_value` writable.
 */
enum GridlensStatus gridlens_store_load_factor(const struct GridlensStore *store,
                                               double *out_value);

/**
 * Coincidence factor of the store.
 *
 * # Safety
 * `store` must be a live handle and `out_value` writable.
 */
enum GridlensStatus gridlens_store_coincidence_factor(const struct GridlensStore *store,
                                                      double *out_value);

/**
 * Load factor of an arbitrary series.
 *
 * # Safety
 * `values` must hold `len` doubles; `out_value` writable.
 */
enum GridlensStatus gridlens_load_factor(const double *values, size_t len, double *out_value);

/**
 * Overload band of a load-to-capacity ratio.
 *
 * # Safety
 * `out_category` must be writable.
 */
enum GridlensStatus gridlens_classify_ratio(double ratio,
                                            enum GridlensOverloadCategory *out_category);

/**
 * Generate a synthetic scenario into `out_dir` and return its manifest path.
 * Dates are `YYYY-MM-DD`; `end_date` is exclusive.
 *
 * # Safety
 * Strings must be nul-terminated and `out_manifest` writable.
 */
enum GridlensStatus gridlens_generate(uint64_t seed,
                                      size_t n_agents,
                                      const char *start_date,
                                      const char *end_date,
                                      double capacity_kw,
                                      bool inject_dst_bug,
                                      const char *out_dir,
                                      char **out_manifest);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void gridlens_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRIDLENS_H */
