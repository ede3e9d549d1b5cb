#ifndef BIASAUDIT_H
#define BIASAUDIT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result of every fallible call.
typedef enum BaStatus {
  BA_STATUS_OK = 0,
  BA_STATUS_NULL_POINTER = 1,
  BA_STATUS_INVALID_ARGUMENT = 2,
  // File missing, unreadable or malformed.
  BA_STATUS_IO = 3,
  // The data cannot support the request (quota, stratum or pool too small).
  BA_STATUS_INFEASIBLE = 4,
  // Input data violates an invariant (shape, label values, single class).
  BA_STATUS_INVALID_DATA = 5,
  // A metric's denominator is zero.
  BA_STATUS_UNDEFINED = 6,
  // A Rust panic was caught at the boundary.
  BA_STATUS_PANIC = 7,
} BaStatus;

typedef enum BaStrategy {
  BA_STRATEGY_NO_REPAIR = 0,
  BA_STRATEGY_SMOTE_F = 1,
  BA_STRATEGY_COUNTERFACTUAL_F = 2,
  BA_STRATEGY_COUNTERFACTUAL_L = 3,
} BaStrategy;

typedef enum BaLearner {
  BA_LEARNER_LOG_REG = 0,
  BA_LEARNER_GAUSSIAN_NB = 1,
  BA_LEARNER_KNN = 2,
  BA_LEARNER_DECISION_TREE = 3,
  BA_LEARNER_NEURAL_NET = 4,
} BaLearner;

// Opaque dataset handle.
typedef struct BaDataset BaDataset;

// Opaque trained-model handle.
typedef struct BaModel BaModel;

// Synthetic generator settings; fill with `ba_synth_config_default`.
typedef struct BaSynthConfig {
  size_t n;
  double p_minority;
  double class_rate;
  double minority_share;
  double sat_noise_sd;
  uint64_t seed;
} BaSynthConfig;

// Audit of a model on a test set. Undefined metrics are NaN with the
// matching `*_defined` flag cleared.
typedef struct BaAuditReport {
  double us_s;
  double di_s;
  double balanced_accuracy;
  bool us_s_defined;
  bool di_s_defined;
  bool balanced_accuracy_defined;
  size_t n_test;
} BaAuditReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Description of the last failure on this thread. The pointer stays valid
// until the next failing call on the same thread.
const char *ba_last_error(void);

// Library version as a static NUL-terminated string.
const char *ba_version(void);

enum BaStatus ba_synth_config_default(struct BaSynthConfig *cfg);

// Draws a synthetic dataset with features `IQ, SAT`.
enum BaStatus ba_dataset_generate(const struct BaSynthConfig *cfg, struct BaDataset **dataset);

// Copies `n` rows of `d` row-major features plus 0/1 target and sensitive
// columns. Features are named `x0, x1, ...`.
enum BaStatus ba_dataset_from_arrays(size_t n,
                                     size_t d,
                                     const double *features,
                                     const uint8_t *target,
                                     const uint8_t *sensitive,
                                     struct BaDataset **dataset);

// Loads a CSV file. `schema` is a preset name (`adult`, `recidivism`,
// `synthetic`) or the path of a TOML schema file.
enum BaStatus ba_dataset_load_csv(const char *path, const char *schema, struct BaDataset **dataset);

// Writes feature columns, then `S`, then `Y`.
enum BaStatus ba_dataset_write_csv(const struct BaDataset *dataset, const char *path);

enum BaStatus ba_dataset_shape(const struct BaDataset *dataset, size_t *rows, size_t *features);

// Copies the target column into `buf`, which must hold `len >= rows` bytes.
enum BaStatus ba_dataset_target(const struct BaDataset *dataset, uint8_t *buf, size_t len);

// Copies the sensitive column into `buf`, which must hold `len >= rows` bytes.
enum BaStatus ba_dataset_sensitive(const struct BaDataset *dataset, uint8_t *buf, size_t len);

// Class-stratified train/test split.
enum BaStatus ba_dataset_split(const struct BaDataset *dataset,
                               double train_fraction,
                               uint64_t seed,
                               struct BaDataset **train,
                               struct BaDataset **test);

void ba_dataset_free(struct BaDataset *dataset);

// Original rows followed by the rows the strategy adds.
enum BaStatus ba_repair(const struct BaDataset *dataset,
                        enum BaStrategy method,
                        double amount,
                        uint64_t seed,
                        struct BaDataset **repaired);

// Picks an augmentation amount by k-fold cross-validation on `dataset`
// (`folds = 0` uses the default).
enum BaStatus ba_tune_amount(const struct BaDataset *dataset,
                             enum BaStrategy method,
                             enum BaLearner learner,
                             double reg,
                             bool include_sensitive,
                             size_t folds,
                             uint64_t seed,
                             double *amount);

// Trains a model. `reg` is the learner's regularization knob.
enum BaStatus ba_model_fit(const struct BaDataset *train,
                           enum BaLearner learner,
                           double reg,
                           bool include_sensitive,
                           uint64_t seed,
                           struct BaModel **model);

// Writes one 0/1 prediction per row into `labels` (`len >= rows`).
enum BaStatus ba_model_predict(const struct BaModel *model,
                               const struct BaDataset *dataset,
                               uint8_t *labels,
                               size_t len);

void ba_model_free(struct BaModel *model);

// Predicts `test` with `model` and reports the three metrics.
enum BaStatus ba_audit(const struct BaModel *model,
                       const struct BaDataset *test,
                       struct BaAuditReport *result);

// Metrics from raw label arrays of length `n`.
enum BaStatus ba_audit_predictions(const uint8_t *y_true,
                                   const uint8_t *y_pred,
                                   const uint8_t *sensitive,
                                   size_t n,
                                   struct BaAuditReport *result);

// `P(yhat = 1 | S = 0) / P(y = 1 | S = 0)`.
enum BaStatus ba_underestimation_score(const uint8_t *y_true,
                                       const uint8_t *y_pred,
                                       const uint8_t *sensitive,
                                       size_t n,
                                       double *value);

// `P(yhat = 1 | S = 0) / P(yhat = 1 | S = 1)`.
enum BaStatus ba_disparate_impact(const uint8_t *y_pred,
                                  const uint8_t *sensitive,
                                  size_t n,
                                  double *value);

enum BaStatus ba_balanced_accuracy(const uint8_t *y_true,
                                   const uint8_t *y_pred,
                                   size_t n,
                                   double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BIASAUDIT_H */
