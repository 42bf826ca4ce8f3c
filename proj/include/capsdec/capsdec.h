/* C interface to the capsdec library. Every function returns a status code;
 * on failure capsdec_last_error() describes the problem (per thread). Strings
 * returned through char** belong to the caller and go back through
 * capsdec_string_free. */
#ifndef CAPSDEC_H
#define CAPSDEC_H

#include <stddef.h>

#if defined(CAPSDEC_BUILDING)
#define CAPSDEC_API __attribute__((visibility("default")))
#else
#define CAPSDEC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum capsdec_status {
    CAPSDEC_OK = 0,
    CAPSDEC_INVALID_ARGUMENT = 1,
    CAPSDEC_SHAPE_MISMATCH = 2,
    CAPSDEC_NON_FINITE = 3,
    CAPSDEC_IO_ERROR = 4,
    CAPSDEC_PARSE_ERROR = 5,
    CAPSDEC_NOT_FOUND = 6,
    CAPSDEC_INTERNAL_ERROR = 7
} capsdec_status;

typedef struct capsdec_config capsdec_config;
typedef struct capsdec_model capsdec_model;
typedef struct capsdec_inventory capsdec_inventory;

CAPSDEC_API const char* capsdec_version(void);
CAPSDEC_API const char* capsdec_status_name(capsdec_status status);
/* Message of the most recent failure on this thread; "" after a success. */
CAPSDEC_API const char* capsdec_last_error(void);
CAPSDEC_API void capsdec_string_free(char* s);

/* --- run configuration ---------------------------------------------------- */

CAPSDEC_API capsdec_status capsdec_config_new(capsdec_config** out);
CAPSDEC_API void capsdec_config_free(capsdec_config* cfg);
/* Unknown keys are rejected. Later assignments override earlier ones. */
CAPSDEC_API capsdec_status capsdec_config_set(capsdec_config* cfg, const char* key, const char* value);
CAPSDEC_API capsdec_status capsdec_config_load(capsdec_config* cfg, const char* path);

/* Runs train, eval, decompose, attn-dump, sense-sim or synth. `report` may be
 * NULL; otherwise it receives the command's text report. */
CAPSDEC_API capsdec_status capsdec_run(const capsdec_config* cfg, const char* command, char** report);

/* --- models ----------------------------------------------------------------- */

CAPSDEC_API capsdec_status capsdec_model_load(const char* path, capsdec_model** out);
CAPSDEC_API capsdec_status capsdec_model_save(const capsdec_model* model, const char* path);
CAPSDEC_API void capsdec_model_free(capsdec_model* model);
/* Directory of precomputed context vectors for a precomputed-encoder model. */
CAPSDEC_API capsdec_status capsdec_model_attach_precomputed(capsdec_model* model, const char* dir);
CAPSDEC_API capsdec_status capsdec_model_dims(const capsdec_model* model, size_t* capsules, size_t* capsule_dim);

/* Writes the sense vector of token `index` in whitespace-tokenised `sentence`
 * into out[0 .. capsule_dim). */
CAPSDEC_API capsdec_status capsdec_sense_vector(const capsdec_model* model, const char* sentence, size_t index,
                                                double* out, size_t out_len);
/* Probability that the two marked occurrences share a sense. */
CAPSDEC_API capsdec_status capsdec_match_probability(const capsdec_model* model, const char* sentence_a,
                                                     size_t index_a, const char* sentence_b, size_t index_b,
                                                     double* probability);

/* --- sense inventories -------------------------------------------------------- */

CAPSDEC_API capsdec_status capsdec_inventory_load(const char* path, capsdec_inventory** out);
CAPSDEC_API void capsdec_inventory_free(capsdec_inventory* inventory);
CAPSDEC_API capsdec_status capsdec_predict_sense(const capsdec_model* model, const capsdec_inventory* inventory,
                                                 const char* sentence, size_t index, const char* lemma, char** sense);

#ifdef __cplusplus
}
#endif

#endif
