/* C interface to the sll library. All handles are opaque; every call that can fail returns an
 * sll_status and leaves a message retrievable with sll_last_error() on the calling thread. */
#ifndef SLL_SLL_H
#define SLL_SLL_H

#include <stddef.h>

#if defined(_WIN32)
#define SLL_API __declspec(dllexport)
#else
#define SLL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values match the library's internal error codes. */
typedef enum sll_status {
  SLL_OK = 0,
  SLL_INVALID_ARGUMENT = 1,
  SLL_COINCIDENT_POINTS = 2,
  SLL_NON_ZERO_MEAN = 3,
  SLL_STEP_TOO_LARGE = 4,
  SLL_ON_NODAL_LINE = 5,
  SLL_AT_SINGULAR_POINT = 6,
  SLL_GRID_TOO_COARSE = 7,
  SLL_OUT_OF_DOMAIN = 8,
  SLL_S_OUT_OF_BOX = 9,
  SLL_BALL_NOT_IN_DOMAIN = 10,
  SLL_NOT_CRITICAL = 11,
  SLL_NONE_FOUND = 12,
  SLL_DOMAIN_ESCAPE = 13,
  SLL_TOPOLOGY_MISMATCH = 14,
  SLL_NO_FEASIBLE_SPLIT = 15,
  SLL_SETUP_INFEASIBLE = 16,
  SLL_SCALE_TOO_LARGE = 17,
  SLL_BALLS_OVERLAP = 18,
  SLL_DOMAIN_X = 19,
  SLL_NORMALIZATION_FAILED = 20,
  SLL_PARSE_ERROR = 21,
  SLL_SEMANTIC_ERROR = 22,
  SLL_IO = 23,
  SLL_INTERNAL = 99
} sll_status;

typedef struct sll_session sll_session;
typedef struct sll_result sll_result;

SLL_API const char* sll_version(void);
SLL_API const char* sll_status_name(sll_status s);
/* Message of the last failed call on this thread; empty string if none. */
SLL_API const char* sll_last_error(void);

/* Parses and validates a JSON configuration. */
SLL_API sll_status sll_session_create(const char* config_json, int lenient, sll_session** out);
SLL_API void sll_session_destroy(sll_session* s);
/* Normalized configuration (all defaults explicit). Owned by the session. */
SLL_API const char* sll_session_config(const sll_session* s);
/* output.path from the configuration. Owned by the session. */
SLL_API const char* sll_session_output_path(const sll_session* s);

/* options_json may be NULL or an object with optional keys "seed" (integer), "tol" (number),
 * "timings" (bool). */
SLL_API sll_status sll_run(sll_session* s, const char* command, const char* options_json, sll_result** out);
SLL_API int sll_result_exit_code(const sll_result* r);
SLL_API const char* sll_result_report(const sll_result* r);
SLL_API size_t sll_result_artifact_count(const sll_result* r);
SLL_API const char* sll_result_artifact_name(const sll_result* r, size_t i);
SLL_API const char* sll_result_artifact_data(const sll_result* r, size_t i);
SLL_API void sll_result_destroy(sll_result* r);

/* Psi and Phi at a configuration given as n chart points (2n doubles). */
SLL_API sll_status sll_evaluate(const sll_session* s, const double* chart, int n, double* psi, double* phi);
/* Green's function of the session surface between two chart points. */
SLL_API sll_status sll_green(const sll_session* s, const double* x, const double* p, double* out);

#ifdef __cplusplus
}
#endif

#endif
