#ifndef INTRICACY_H
#define INTRICACY_H

/* C interface to the intricacy library. Every function returns a status code;
 * on failure, intricacy_last_error() describes the most recent error on the
 * calling thread. Strings returned through out-parameters are owned by the
 * caller and released with intricacy_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(INTRICACY_BUILDING_LIBRARY)
#    define INTRICACY_API __declspec(dllexport)
#  else
#    define INTRICACY_API __declspec(dllimport)
#  endif
#else
#  define INTRICACY_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum intricacy_status {
    INTRICACY_OK = 0,
    INTRICACY_CONFIG_ERROR = 1,    /* invalid configuration or argument */
    INTRICACY_NUMERICAL_ERROR = 2, /* instability, solver failure */
    INTRICACY_INTERNAL_ERROR = 3
} intricacy_status;

typedef struct intricacy_scenario intricacy_scenario;

INTRICACY_API const char* intricacy_version(void);

/* Message of the last failed call on this thread; "" when none. */
INTRICACY_API const char* intricacy_last_error(void);

INTRICACY_API void intricacy_string_free(char* s);

/* Scenario lifecycle. The JSON text is parsed strictly. */
INTRICACY_API intricacy_status intricacy_scenario_parse(const char* json_text, intricacy_scenario** out);
/* Supplies the kind; a document declaring a different kind is rejected. */
INTRICACY_API intricacy_status intricacy_scenario_parse_kind(const char* json_text, const char* kind,
                                                              intricacy_scenario** out);
INTRICACY_API intricacy_status intricacy_scenario_set_seed(intricacy_scenario* s, uint64_t seed);
INTRICACY_API intricacy_status intricacy_scenario_set_output_dir(intricacy_scenario* s, const char* dir);
INTRICACY_API intricacy_status intricacy_scenario_set_formats(intricacy_scenario* s, int csv, int json);
/* Resolved configuration, defaults filled, as JSON. */
INTRICACY_API intricacy_status intricacy_scenario_config(const intricacy_scenario* s, char** json_out);
/* Runs the scenario and returns the run manifest as JSON. */
INTRICACY_API intricacy_status intricacy_scenario_run(intricacy_scenario* s, char** manifest_out);
INTRICACY_API void intricacy_scenario_destroy(intricacy_scenario* s);

/* Names of the scenario kinds, NULL-terminated. */
INTRICACY_API const char* const* intricacy_scenario_kinds(void);

/* Detector order-of-magnitude estimates (CGS) for the default parameters
 * overridden by the optional JSON object of detector keys, as JSON. */
INTRICACY_API intricacy_status intricacy_detector_estimates(const char* params_json, char** json_out);

/* Traveling-wave profile on [-domain_length, 0]. Writes up to capacity
 * samples into z and g and the sample count into *count. */
INTRICACY_API intricacy_status intricacy_wave_profile(double domain_length, double tolerance, double* z, double* g,
                                                      size_t capacity, size_t* count);

/* One fluctuation matrix of size n and its positive/negative traces. */
INTRICACY_API intricacy_status intricacy_predecoherence_sample(size_t n, uint64_t seed, double* k_plus,
                                                               double* k_minus, double* ks);

/* Born-rule experiment with a constant schedule: channel j carries summed
 * intricacy sums[j] (0 = mute). Writes per-channel frequencies. */
INTRICACY_API intricacy_status intricacy_born_experiment(const double* p, const double* sums, size_t channels,
                                                         size_t trials, uint64_t seed, double* frequency,
                                                         size_t* no_collapse);

#ifdef __cplusplus
}
#endif

#endif
