/* Copyright 2026 The sqlpref Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* sqlpref C API.
 *
 * Every function returns a status code. On failure a message describing the
 * error is available from sqlpref_last_error() on the calling thread until
 * the next call into the library from that thread.
 *
 * Functions that produce a document write a NUL-terminated JSON string to
 * *out_json; release it with sqlpref_free(). */

#ifndef SQLPREF_SQLPREF_H_
#define SQLPREF_SQLPREF_H_

#include <stddef.h>

#if defined(SQLPREF_BUILDING_LIBRARY)
#define SQLPREF_API __attribute__((visibility("default")))
#else
#define SQLPREF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sqlpref_status {
  SQLPREF_OK = 0,
  SQLPREF_ERR_INVALID_ARGUMENT = 1, /* bad argument, unknown name, round out of range */
  SQLPREF_ERR_IO = 2,
  SQLPREF_ERR_PLAN = 3,             /* plan file missing or malformed */
  SQLPREF_ERR_DATASET = 4,
  SQLPREF_ERR_INTEGRITY = 5,        /* store conflict or corrupt record */
  SQLPREF_ERR_ENDPOINT = 6,         /* model endpoint unhealthy */
  SQLPREF_ERR_VERIFICATION = 7,     /* export re-verification failed */
  SQLPREF_ERR_LOCKED = 8,           /* run directory held by another process */
  SQLPREF_ERR_PRECONDITION = 9,     /* earlier round missing */
  SQLPREF_ERR_INTERNAL = 10
} sqlpref_status;

typedef struct sqlpref_run sqlpref_run;

SQLPREF_API const char* sqlpref_version(void);
SQLPREF_API const char* sqlpref_status_name(sqlpref_status status);
SQLPREF_API const char* sqlpref_last_error(void);
SQLPREF_API void sqlpref_free(char* ptr);
/* Suppresses warnings the library prints to stderr. */
SQLPREF_API void sqlpref_set_quiet(int quiet);

/* Opens the run described by a YAML plan file. overrides_json may be NULL or
 * a JSON object of dotted plan paths, e.g. {"sampling.endpoint_url": "..."}.
 * With dry_run set every verb describes its actions and writes nothing; no
 * lock is taken. */
SQLPREF_API sqlpref_status sqlpref_run_open(const char* plan_path, const char* overrides_json,
                                            int dry_run, sqlpref_run** out_run);
SQLPREF_API void sqlpref_run_close(sqlpref_run* run);
/* Resolved plan as JSON. */
SQLPREF_API sqlpref_status sqlpref_run_plan(sqlpref_run* run, char** out_json);

SQLPREF_API sqlpref_status sqlpref_validate(sqlpref_run* run, char** out_json);
SQLPREF_API sqlpref_status sqlpref_generate(sqlpref_run* run, size_t round_index, int resume,
                                            char** out_json);
/* strategy: NULL, "furthest", "nearest" or "random". */
SQLPREF_API sqlpref_status sqlpref_pair(sqlpref_run* run, size_t round_index,
                                        const char* strategy, char** out_json);
/* kind: "sft" or "dpo". */
SQLPREF_API sqlpref_status sqlpref_export(sqlpref_run* run, const size_t* round_indices,
                                          size_t n_rounds, const char* kind, char** out_json);
/* kind: NULL/"auto", "sql" or "completion"; split: NULL for all tasks. */
SQLPREF_API sqlpref_status sqlpref_eval_predictions(sqlpref_run* run, const char* predictions_path,
                                                    const char* kind, const char* split,
                                                    char** out_json);
SQLPREF_API sqlpref_status sqlpref_eval_greedy(sqlpref_run* run, size_t round_index,
                                               char** out_json);
SQLPREF_API sqlpref_status sqlpref_report(sqlpref_run* run, char** out_json);

/* Stateless helpers. */
SQLPREF_API sqlpref_status sqlpref_extract_final_sql(const char* completion, int bare_sql_fallback,
                                                     char** out_json);
SQLPREF_API sqlpref_status sqlpref_edit_distance(const char* a, const char* b, size_t* out_distance);
SQLPREF_API sqlpref_status sqlpref_execute(const char* db_path, const char* sql, double timeout_s,
                                           double float_tolerance, char** out_json);
/* mode: "set" or "multiset". *out_equivalent is 1 when both queries succeed
 * and their normalized results match. */
SQLPREF_API sqlpref_status sqlpref_compare(const char* db_path, const char* candidate_sql,
                                           const char* gold_sql, const char* mode,
                                           int* out_equivalent);

#ifdef __cplusplus
}
#endif

#endif /* SQLPREF_SQLPREF_H_ */
