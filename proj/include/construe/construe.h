#ifndef CONSTRUE_H
#define CONSTRUE_H

/* Stable C interface to the tutoring engine. Strings are UTF-8. Strings
 * returned through `char** out` are owned by the caller and released with
 * cns_string_free. On failure a function returns a non-zero status and
 * cns_last_error() describes it (per thread). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CNS_API __declspec(dllexport)
#else
#define CNS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cns_status {
  CNS_OK = 0,
  CNS_EMPTY_INPUT,
  CNS_MISSING_FILE,
  CNS_SCHEMA_VIOLATION,
  CNS_DANGLING_REFERENCE,
  CNS_UNKNOWN_LEMMA,
  CNS_INVALID_FEATURES,
  CNS_UNKNOWN_TOKEN,
  CNS_RECIPE_FAILED,
  CNS_GENERATION_GAP,
  CNS_UNKNOWN_EXERCISE,
  CNS_OUT_OF_ORDER_ATTEMPT,
  CNS_DEGENERATE,
  CNS_EMPTY_POOL,
  CNS_NO_LEVEL,
  CNS_EMPTY_BANK,
  CNS_UNKNOWN_LEARNER,
  CNS_UNSUPPORTED_LANGUAGE,
  CNS_EMPTY_TEXT,
  CNS_FORBIDDEN,
  CNS_NOT_FOUND,
  CNS_NO_CANDIDATES,
  CNS_EXHAUSTED_ATTEMPTS,
  CNS_UNAUTHORIZED,
  CNS_BAD_REQUEST,
  CNS_IO,
  CNS_INTERNAL,
  CNS_INVALID_ARGUMENT
} cns_status;

typedef struct cns_pack cns_pack;
typedef struct cns_service cns_service;

CNS_API const char* cns_version(void);
CNS_API const char* cns_status_name(cns_status status);
CNS_API const char* cns_last_error(void);
CNS_API void cns_string_free(char* s);

/* Writes {"valid": bool, "violations": [...]} to *out. Returns CNS_OK even
 * when the pack is invalid; the report says why. */
CNS_API cns_status cns_pack_validate(const char* dir, char** out);

CNS_API cns_status cns_pack_open(const char* dir, cns_pack** out);
CNS_API void cns_pack_close(cns_pack* pack);
CNS_API const char* cns_pack_language(const cns_pack* pack);

/* Tokens, analyses, chunks and construct instances as JSON. */
CNS_API cns_status cns_annotate(const cns_pack* pack, const char* story_id, const char* text, char** out);

/* Runs detection over a gold file (or the pack's own gold corpus when
 * `gold_path` is NULL) and writes the detected instances in gold shape. */
CNS_API cns_status cns_detect_gold(const cns_pack* pack, const char* gold_path, char** out);

/* Synthetic learner simulation. `spec_json` may be NULL or an object with
 * learners, constructs, answers, theta_sd, b_sd, seed. When `events_path` is
 * non-NULL the attempt log is written there. */
CNS_API cns_status cns_simulate(const char* spec_json, const char* events_path, char** out);

/* `config_json`: {"packs": {"fi": "/path"}, "data_dir": "/path", "default_density": 3} */
CNS_API cns_status cns_service_create(const char* config_json, cns_service** out);
CNS_API void cns_service_destroy(cns_service* service);

/* Dispatches one API request without HTTP. `query` is a URL query string
 * (may be NULL), `token` the bearer token (may be NULL). */
CNS_API cns_status cns_service_handle(cns_service* service, const char* method, const char* path, const char* query,
                                      const char* token, const char* body, int* http_status, char** out);

/* Blocks until cns_service_stop. `on_ready` gets the bound port. */
CNS_API cns_status cns_service_serve(cns_service* service, const char* host, int port,
                                     void (*on_ready)(int port, void* user), void* user);
CNS_API void cns_service_stop(cns_service* service);

#ifdef __cplusplus
}
#endif

#endif
