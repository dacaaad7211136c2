#ifndef TEMPO_H
#define TEMPO_H

/* This file is generated from the tempo-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a query.
typedef enum {
  // A fixpoint certified that the fact is not entailed.
  TEMPO_ANSWER_NO = 0,
  // The fact is entailed.
  TEMPO_ANSWER_YES = 1,
  // The round cap ran out before either answer was certified.
  TEMPO_ANSWER_UNKNOWN = 2,
} TempoAnswer;

// Status of a call. Anything other than `Ok` leaves a human-readable
// explanation in [`tempo_last_error`].
typedef enum {
  // The call succeeded.
  TEMPO_STATUS_OK = 0,
  // A required pointer argument was NULL.
  TEMPO_STATUS_NULL_ARGUMENT = 1,
  // An input string was not valid UTF-8.
  TEMPO_STATUS_INVALID_UTF8 = 2,
  // A program, dataset, or query failed to parse.
  TEMPO_STATUS_PARSE_ERROR = 3,
  // The program or dataset is unbounded, so entailment is undecidable
  // by materialisation and the query was refused.
  TEMPO_STATUS_UNBOUNDED_INPUT = 4,
  // The magic rewriting rejected the program/query combination.
  TEMPO_STATUS_REWRITE_ERROR = 5,
} TempoStatus;

// An engine holds a parsed program, the facts loaded so far, and the
// predicate arity table they were checked against.
typedef struct TempoEngine TempoEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static string; never freed.
const char *tempo_version(void);

// Detail of the most recent failure on this thread, or NULL if no call has
// failed yet. Borrowed; valid until the next library call on this thread.
const char *tempo_last_error(void);

// Parses `program_text` (rules, optionally embedded facts) and returns a
// new engine through `out_engine`. On failure `*out_engine` is NULL.
//
// # Safety
// `program_text` must be NULL or NUL-terminated; `out_engine` must be NULL
// or valid for a single pointer write.
TempoStatus tempo_engine_new(const char *program_text, TempoEngine **out_engine);

// Releases an engine. NULL is a no-op.
//
// # Safety
// `engine` must be NULL or a pointer from [`tempo_engine_new`] that has not
// been freed already.
void tempo_engine_free(TempoEngine *engine);

// Parses `facts_text` as a dataset and adds the facts to the engine.
// Predicates must agree in arity with every earlier load.
//
// # Safety
// `engine` must be a live engine pointer; `facts_text` must be NULL or
// NUL-terminated.
TempoStatus tempo_engine_add_facts(TempoEngine *engine, const char *facts_text);

// Number of facts currently loaded (after deduplication).
//
// # Safety
// `engine` must be NULL or a live engine pointer; `out_count` must be NULL
// or valid for a single write.
TempoStatus tempo_engine_fact_count(const TempoEngine *engine, size_t *out_count);

// Answers a ground query such as `P(a)@10` or `P(a)@[2,5]` using the
// goal-directed (magic) route. `max_rounds` caps the derivation rounds;
// pass 0 for the default of 1000. `Unknown` means the cap ran out.
//
// # Safety
// `engine` must be a live engine pointer; `query_text` must be NULL or
// NUL-terminated; `out_answer` must be NULL or valid for a single write.
TempoStatus tempo_engine_query(TempoEngine *engine,
                               const char *query_text,
                               size_t max_rounds,
                               TempoAnswer *out_answer);

// Produces the magic rewriting of the loaded program for `query_text`:
// the rewritten rules followed by the loaded facts and the magic seed, in
// the same text format the parser accepts. The result is written to
// `*out_text` as a NUL-terminated string owned by the caller; release it
// with [`tempo_string_free`].
//
// # Safety
// `engine` must be a live engine pointer; `query_text` must be NULL or
// NUL-terminated; `out_text` must be NULL or valid for a single write.
TempoStatus tempo_engine_rewrite(TempoEngine *engine, const char *query_text, char **out_text);

// Releases a string returned by this library. NULL is a no-op.
//
// # Safety
// `s` must be NULL or a pointer returned by this library that has not been
// freed already.
void tempo_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* TEMPO_H */
