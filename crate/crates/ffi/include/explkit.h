#ifndef EXPLKIT_H
#define EXPLKIT_H

#include <stddef.h>
#include <stdint.h>

typedef enum ExplkitStatus {
  EXPLKIT_STATUS_OK = 0,
  EXPLKIT_STATUS_NULL_POINTER = 1,
  EXPLKIT_STATUS_INVALID_UTF8 = 2,
  EXPLKIT_STATUS_IO = 3,
  EXPLKIT_STATUS_FORMAT = 4,
  EXPLKIT_STATUS_INVALID_INPUT = 5,
  EXPLKIT_STATUS_BUDGET = 6,
  EXPLKIT_STATUS_BACKEND_REQUIRED = 7,
  EXPLKIT_STATUS_NOT_FOUND = 8,
  EXPLKIT_STATUS_ZERO_GOLD_ACCURACY = 9,
  EXPLKIT_STATUS_OTHER = 10,
  EXPLKIT_STATUS_PANIC = 11,
} ExplkitStatus;

// A loaded canonical dataset.
typedef struct ExplkitDataset ExplkitDataset;

// Accumulates evaluated instances for one metric report.
typedef struct ExplkitEvalSet ExplkitEvalSet;

// Token-length statistics. Means and deviations are NaN when undefined.
typedef struct ExplkitStats {
  uintptr_t count;
  uintptr_t explanation_count;
  double mean_input_tokens;
  double sd_input_tokens;
  double mean_expl_tokens;
  double sd_expl_tokens;
} ExplkitStats;

// Scores of an eval set. Accuracy, ROUGE-L and METEOR are fractions; BLEU
// is on the 0-100 scale. Generation metrics are NaN when no instance had a
// reference.
typedef struct ExplkitReport {
  double accuracy;
  double bleu;
  double rouge_l;
  double meteor;
  uintptr_t n_evaluated;
  uintptr_t n_parse_failures;
} ExplkitReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the
// next failing call on the same thread.
const char *explkit_last_error_message(void);

// Library version as a static string.
const char *explkit_version(void);

// Loads a canonical JSONL dataset. `split` is `train`, `dev` or `test`.
//
// # Safety
// `path` and `split` must be nul-terminated strings; `out` must be writable.
enum ExplkitStatus explkit_dataset_load(const char *path,
                                        const char *split,
                                        struct ExplkitDataset **out);

// Number of instances; 0 for a null handle.
//
// # Safety
// `ds` must be null or a live handle.
uintptr_t explkit_dataset_len(const struct ExplkitDataset *ds);

// # Safety
// `ds` must be a live handle and `out` writable.
enum ExplkitStatus explkit_dataset_stats(const struct ExplkitDataset *ds, struct ExplkitStats *out);

// # Safety
// `ds` must be null or a handle not yet freed.
void explkit_dataset_free(struct ExplkitDataset *ds);

// Training pairs of one stage as JSONL. `structure` is `joint`, `etp` or
// `pte`; `etp_sl` needs a model server and fails with `BackendRequired`.
//
// # Safety
// `ds` must be a live handle, the strings nul-terminated and `out` writable.
enum ExplkitStatus explkit_compile_pairs_jsonl(const struct ExplkitDataset *ds,
                                               const char *structure,
                                               const char *stage,
                                               double budget_percent,
                                               uint64_t seed,
                                               char **out);

// Model input of instance `id` for `stage`. `label` and `explanation` are
// the injected values the stage needs, or null.
//
// # Safety
// `ds` must be a live handle, non-null strings nul-terminated and `out`
// writable.
enum ExplkitStatus explkit_render_input(const struct ExplkitDataset *ds,
                                        const char *id,
                                        const char *stage,
                                        const char *label,
                                        const char *explanation,
                                        char **out);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void explkit_string_free(char *s);

// `acc_generated / acc_gold` as a percentage.
//
// # Safety
// `out` must be writable.
enum ExplkitStatus explkit_recover_ratio(double acc_generated, double acc_gold, double *out);

struct ExplkitEvalSet *explkit_eval_set_new(void);

// Adds one evaluated instance. `references` holds `n_references` strings;
// it may be null when `n_references` is 0.
//
// # Safety
// `set` must be a live handle and every string nul-terminated.
enum ExplkitStatus explkit_eval_set_push(struct ExplkitEvalSet *set,
                                         const char *candidate,
                                         const char *const *references,
                                         uintptr_t n_references,
                                         const char *gold_label,
                                         const char *predicted_label);

// # Safety
// `set` must be a live handle and `out` writable.
enum ExplkitStatus explkit_eval_set_report(const struct ExplkitEvalSet *set,
                                           struct ExplkitReport *out);

// # Safety
// `set` must be null or a handle not yet freed.
void explkit_eval_set_free(struct ExplkitEvalSet *set);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EXPLKIT_H */
