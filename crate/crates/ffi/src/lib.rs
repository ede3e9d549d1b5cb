//! C ABI over `biasaudit`.
//!
//! Datasets and trained models cross the boundary as opaque handles that the
//! caller releases with the matching `*_free` function. Every fallible call
//! returns a [`BaStatus`]; on anything other than `BA_STATUS_OK` a description is
//! available from [`ba_last_error`] on the same thread. Output pointers are
//! written only on success.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use biasaudit::augment::{repair, RepairSpec, RepairStrategy};
use biasaudit::dataset::{split, SplitSpec};
use biasaudit::io::{load_csv, write_dataset_csv, IngestSchema};
use biasaudit::learners::{fit, LearnerKind, LearnerSpec, TrainedModel};
use biasaudit::metrics::{audit, AuditReport, Metric};
use biasaudit::synth::{generate, SynthConfig};
use biasaudit::tune::{tune_amount, DEFAULT_FOLDS};
use biasaudit::{Dataset, Error};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// File missing, unreadable or malformed.
    Io = 3,
    /// The data cannot support the request (quota, stratum or pool too small).
    Infeasible = 4,
    /// Input data violates an invariant (shape, label values, single class).
    InvalidData = 5,
    /// A metric's denominator is zero.
    Undefined = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaLearner {
    LogReg = 0,
    GaussianNb = 1,
    Knn = 2,
    DecisionTree = 3,
    NeuralNet = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaStrategy {
    NoRepair = 0,
    SmoteF = 1,
    CounterfactualF = 2,
    CounterfactualL = 3,
}

/// Synthetic generator settings; fill with `ba_synth_config_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BaSynthConfig {
    pub n: usize,
    pub p_minority: f64,
    pub class_rate: f64,
    pub minority_share: f64,
    pub sat_noise_sd: f64,
    pub seed: u64,
}

/// Audit of a model on a test set. Undefined metrics are NaN with the
/// matching `*_defined` flag cleared.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BaAuditReport {
    pub us_s: f64,
    pub di_s: f64,
    pub balanced_accuracy: f64,
    pub us_s_defined: bool,
    pub di_s_defined: bool,
    pub balanced_accuracy_defined: bool,
    pub n_test: usize,
}

/// Opaque dataset handle.
pub struct BaDataset(Dataset);

/// Opaque trained-model handle.
pub struct BaModel(TrainedModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> BaStatus {
    match e {
        Error::InvalidArgument(_) | Error::Config { .. } | Error::NotTwoDimensional(_) => BaStatus::InvalidArgument,
        Error::InfeasibleQuota { .. }
        | Error::StratumTooSmall { .. }
        | Error::ClassTooSmall { .. }
        | Error::EmptySourcePool(_)
        | Error::TooFewMinorityPositives(_)
        | Error::AllAmountsUndefined => BaStatus::Infeasible,
        Error::UndefinedMetric(_) => BaStatus::Undefined,
        Error::Io(_) | Error::Csv(_) | Error::MissingColumn(_) | Error::UnparseableRow { .. } | Error::EmptyAfterFiltering => {
            BaStatus::Io
        }
        _ => BaStatus::InvalidData,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Arg(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BaStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("`{what}` is null"));
            BaStatus::NullPointer
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg);
            BaStatus::InvalidArgument
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            BaStatus::Panic
        }
    }
}

unsafe fn href<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn text(p: *const c_char, what: &'static str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(String::from)
        .map_err(|_| Failure::Arg(format!("`{what}` is not valid UTF-8")))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

fn learner_spec(kind: BaLearner, reg: f64, include_sensitive: bool, seed: u64) -> LearnerSpec {
    let kind = match kind {
        BaLearner::LogReg => LearnerKind::LogReg,
        BaLearner::GaussianNb => LearnerKind::GaussianNB,
        BaLearner::Knn => LearnerKind::Knn,
        BaLearner::DecisionTree => LearnerKind::DecisionTree,
        BaLearner::NeuralNet => LearnerKind::NeuralNet,
    };
    LearnerSpec::default_for(kind)
        .with_reg(reg)
        .with_sensitive(include_sensitive)
        .with_seed(seed)
}

fn strategy(s: BaStrategy) -> RepairStrategy {
    match s {
        BaStrategy::NoRepair => RepairStrategy::NoRepair,
        BaStrategy::SmoteF => RepairStrategy::SmoteF,
        BaStrategy::CounterfactualF => RepairStrategy::CounterfactualF,
        BaStrategy::CounterfactualL => RepairStrategy::CounterfactualL,
    }
}

/// Description of the last failure on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ba_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ba_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn ba_synth_config_default(cfg: *mut BaSynthConfig) -> BaStatus {
    guard(|| {
        let d = SynthConfig::default();
        *out(cfg, "cfg")? = BaSynthConfig {
            n: d.n,
            p_minority: d.p_minority,
            class_rate: d.class_rate,
            minority_share: d.minority_share,
            sat_noise_sd: d.sat_noise_sd,
            seed: d.seed,
        };
        Ok(())
    })
}

/// Draws a synthetic dataset with features `IQ, SAT`.
#[no_mangle]
pub unsafe extern "C" fn ba_dataset_generate(cfg: *const BaSynthConfig, dataset: *mut *mut BaDataset) -> BaStatus {
    guard(|| {
        let c = href(cfg, "cfg")?;
        let slot = out(dataset, "dataset")?;
        let d = generate(&SynthConfig {
            n: c.n,
            p_minority: c.p_minority,
            class_rate: c.class_rate,
            minority_share: c.minority_share,
            sat_noise_sd: c.sat_noise_sd,
            seed: c.seed,
            ..SynthConfig::default()
        })?;
        *slot = boxed(BaDataset(d));
        Ok(())
    })
}

/// Copies `n` rows of `d` row-major features plus 0/1 target and sensitive
/// columns. Features are named `x0, x1, ...`.
#[no_mangle]
pub unsafe extern "C" fn ba_dataset_from_arrays(
    n: usize,
    d: usize,
    features: *const f64,
    target: *const u8,
    sensitive: *const u8,
    dataset: *mut *mut BaDataset,
) -> BaStatus {
    guard(|| {
        let len = n.checked_mul(d).ok_or_else(|| Failure::Arg("n * d overflows".into()))?;
        let x = slice(features, len, "features")?.to_vec();
        let y = slice(target, n, "target")?.to_vec();
        let s = slice(sensitive, n, "sensitive")?.to_vec();
        let slot = out(dataset, "dataset")?;
        let names = (0..d).map(|j| format!("x{j}")).collect();
        *slot = boxed(BaDataset(Dataset::from_flat(names, x, y, s)?));
        Ok(())
    })
}

/// Loads a CSV file. `schema` is a preset name (`adult`, `recidivism`,
/// `synthetic`) or the path of a TOML schema file.
#[no_mangle]
pub unsafe extern "C" fn ba_dataset_load_csv(
    path: *const c_char,
    schema: *const c_char,
    dataset: *mut *mut BaDataset,
) -> BaStatus {
    guard(|| {
        let path = PathBuf::from(text(path, "path")?);
        let schema = IngestSchema::resolve(&text(schema, "schema")?)?;
        let slot = out(dataset, "dataset")?;
        *slot = boxed(BaDataset(load_csv(path, &schema)?.data));
        Ok(())
    })
}

/// Writes feature columns, then `S`, then `Y`.
#[no_mangle]
pub unsafe extern "C" fn ba_dataset_write_csv(dataset: *const BaDataset, path: *const c_char) -> BaStatus {
    guard(|| {
        let d = href(dataset, "dataset")?;
        write_dataset_csv(&d.0, PathBuf::from(text(path, "path")?))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ba_dataset_shape(dataset: *const BaDataset, rows: *mut usize, features: *mut usize) -> BaStatus {
    guard(|| {
        let d = &href(dataset, "dataset")?.0;
        *out(rows, "rows")? = d.n();
        *out(features, "features")? = d.n_features();
        Ok(())
    })
}

/// Copies the target column into `buf`, which must hold `len >= rows` bytes.
#[no_mangle]
pub unsafe extern "C" fn ba_dataset_target(dataset: *const BaDataset, buf: *mut u8, len: usize) -> BaStatus {
    guard(|| {
        let d = &href(dataset, "dataset")?.0;
        copy_into(d.target(), buf, len)
    })
}

/// Copies the sensitive column into `buf`, which must hold `len >= rows` bytes.
#[no_mangle]
pub unsafe extern "C" fn ba_dataset_sensitive(dataset: *const BaDataset, buf: *mut u8, len: usize) -> BaStatus {
    guard(|| {
        let d = &href(dataset, "dataset")?.0;
        copy_into(d.sensitive(), buf, len)
    })
}

unsafe fn copy_into<T: Copy>(src: &[T], buf: *mut T, len: usize) -> Result<(), Failure> {
    if len < src.len() {
        return Err(Failure::Arg(format!("buffer holds {len} values, {} needed", src.len())));
    }
    if src.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return Err(Failure::Null("buf"));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Class-stratified train/test split.
#[no_mangle]
pub unsafe extern "C" fn ba_dataset_split(
    dataset: *const BaDataset,
    train_fraction: f64,
    seed: u64,
    train: *mut *mut BaDataset,
    test: *mut *mut BaDataset,
) -> BaStatus {
    guard(|| {
        let d = &href(dataset, "dataset")?.0;
        let (train_slot, test_slot) = (out(train, "train")?, out(test, "test")?);
        let (a, b) = split(
            d,
            &SplitSpec {
                train_fraction,
                ..SplitSpec::new(seed)
            },
        )?;
        *train_slot = boxed(BaDataset(a));
        *test_slot = boxed(BaDataset(b));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ba_dataset_free(dataset: *mut BaDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Original rows followed by the rows the strategy adds.
#[no_mangle]
pub unsafe extern "C" fn ba_repair(
    dataset: *const BaDataset,
    method: BaStrategy,
    amount: f64,
    seed: u64,
    repaired: *mut *mut BaDataset,
) -> BaStatus {
    guard(|| {
        let d = &href(dataset, "dataset")?.0;
        let slot = out(repaired, "repaired")?;
        let a = repair(d, &RepairSpec::new(strategy(method), amount, seed))?;
        *slot = boxed(BaDataset(a.data));
        Ok(())
    })
}

/// Picks an augmentation amount by k-fold cross-validation on `dataset`
/// (`folds = 0` uses the default).
#[no_mangle]
pub unsafe extern "C" fn ba_tune_amount(
    dataset: *const BaDataset,
    method: BaStrategy,
    learner: BaLearner,
    reg: f64,
    include_sensitive: bool,
    folds: usize,
    seed: u64,
    amount: *mut f64,
) -> BaStatus {
    guard(|| {
        let d = &href(dataset, "dataset")?.0;
        let slot = out(amount, "amount")?;
        let spec = learner_spec(learner, reg, include_sensitive, seed);
        let k = if folds == 0 { DEFAULT_FOLDS } else { folds };
        *slot = tune_amount(d, strategy(method), &spec, k, seed)?.amount;
        Ok(())
    })
}

/// Trains a model. `reg` is the learner's regularization knob.
#[no_mangle]
pub unsafe extern "C" fn ba_model_fit(
    train: *const BaDataset,
    learner: BaLearner,
    reg: f64,
    include_sensitive: bool,
    seed: u64,
    model: *mut *mut BaModel,
) -> BaStatus {
    guard(|| {
        let d = &href(train, "train")?.0;
        let slot = out(model, "model")?;
        *slot = boxed(BaModel(fit(&learner_spec(learner, reg, include_sensitive, seed), d)?));
        Ok(())
    })
}

/// Writes one 0/1 prediction per row into `labels` (`len >= rows`).
#[no_mangle]
pub unsafe extern "C" fn ba_model_predict(
    model: *const BaModel,
    dataset: *const BaDataset,
    labels: *mut u8,
    len: usize,
) -> BaStatus {
    guard(|| {
        let m = &href(model, "model")?.0;
        let d = &href(dataset, "dataset")?.0;
        copy_into(&m.predict_dataset(d)?, labels, len)
    })
}

#[no_mangle]
pub unsafe extern "C" fn ba_model_free(model: *mut BaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

fn report(r: &AuditReport) -> BaAuditReport {
    let v = |m: Metric| m.value().unwrap_or(f64::NAN);
    BaAuditReport {
        us_s: v(r.us_s),
        di_s: v(r.di_s),
        balanced_accuracy: v(r.balanced_accuracy),
        us_s_defined: r.us_s.is_defined(),
        di_s_defined: r.di_s.is_defined(),
        balanced_accuracy_defined: r.balanced_accuracy.is_defined(),
        n_test: r.n_test,
    }
}

/// Predicts `test` with `model` and reports the three metrics.
#[no_mangle]
pub unsafe extern "C" fn ba_audit(model: *const BaModel, test: *const BaDataset, result: *mut BaAuditReport) -> BaStatus {
    guard(|| {
        let m = &href(model, "model")?.0;
        let d = &href(test, "test")?.0;
        let slot = out(result, "result")?;
        *slot = report(&audit(m, d)?);
        Ok(())
    })
}

/// Metrics from raw label arrays of length `n`.
#[no_mangle]
pub unsafe extern "C" fn ba_audit_predictions(
    y_true: *const u8,
    y_pred: *const u8,
    sensitive: *const u8,
    n: usize,
    result: *mut BaAuditReport,
) -> BaStatus {
    guard(|| {
        let y = slice(y_true, n, "y_true")?;
        let yh = slice(y_pred, n, "y_pred")?;
        let s = slice(sensitive, n, "sensitive")?;
        *out(result, "result")? = report(&AuditReport::from_predictions(y, yh, s));
        Ok(())
    })
}

unsafe fn metric(
    f: impl FnOnce() -> Result<f64, Failure>,
    value: *mut f64,
) -> BaStatus {
    guard(|| {
        let slot = out(value, "value")?;
        *slot = f()?;
        Ok(())
    })
}

/// `P(yhat = 1 | S = 0) / P(y = 1 | S = 0)`.
#[no_mangle]
pub unsafe extern "C" fn ba_underestimation_score(
    y_true: *const u8,
    y_pred: *const u8,
    sensitive: *const u8,
    n: usize,
    value: *mut f64,
) -> BaStatus {
    metric(
        || {
            let (y, yh, s) = (slice(y_true, n, "y_true")?, slice(y_pred, n, "y_pred")?, slice(sensitive, n, "sensitive")?);
            Ok(biasaudit::metrics::underestimation_score(y, yh, s)?)
        },
        value,
    )
}

/// `P(yhat = 1 | S = 0) / P(yhat = 1 | S = 1)`.
#[no_mangle]
pub unsafe extern "C" fn ba_disparate_impact(
    y_pred: *const u8,
    sensitive: *const u8,
    n: usize,
    value: *mut f64,
) -> BaStatus {
    metric(
        || {
            let (yh, s) = (slice(y_pred, n, "y_pred")?, slice(sensitive, n, "sensitive")?);
            Ok(biasaudit::metrics::disparate_impact(yh, s)?)
        },
        value,
    )
}

#[no_mangle]
pub unsafe extern "C" fn ba_balanced_accuracy(y_true: *const u8, y_pred: *const u8, n: usize, value: *mut f64) -> BaStatus {
    metric(
        || {
            let (y, yh) = (slice(y_true, n, "y_true")?, slice(y_pred, n, "y_pred")?);
            Ok(biasaudit::metrics::balanced_accuracy(y, yh)?)
        },
        value,
    )
}
