//! C ABI over `explkit`.
//!
//! Every fallible function returns an [`ExplkitStatus`]; on failure the
//! message is available from [`explkit_last_error_message`] on the same
//! thread. Strings returned through out-parameters are owned by the caller
//! and released with [`explkit_string_free`]. Handles are opaque and released
//! with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use explkit::corpus::{compute_stats, read_canonical, sample_budget, Dataset, Split};
use explkit::metrics::{evaluate, recover_ratio, EvalPair};
use explkit::pipelines::{compile_training_pairs, CompiledPairs, StructureKind, StructureSpec};
use explkit::taskformat::{render_input, Injected, StageKind};
use explkit::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExplkitStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Format = 4,
    InvalidInput = 5,
    Budget = 6,
    BackendRequired = 7,
    NotFound = 8,
    ZeroGoldAccuracy = 9,
    Other = 10,
    Panic = 11,
}

/// A loaded canonical dataset.
pub struct ExplkitDataset {
    inner: Dataset,
}

/// Accumulates evaluated instances for one metric report.
pub struct ExplkitEvalSet {
    pairs: Vec<EvalPair>,
}

/// Token-length statistics. Means and deviations are NaN when undefined.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ExplkitStats {
    pub count: usize,
    pub explanation_count: usize,
    pub mean_input_tokens: f64,
    pub sd_input_tokens: f64,
    pub mean_expl_tokens: f64,
    pub sd_expl_tokens: f64,
}

/// Scores of an eval set. Accuracy, ROUGE-L and METEOR are fractions; BLEU
/// is on the 0-100 scale. Generation metrics are NaN when no instance had a
/// reference.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ExplkitReport {
    pub accuracy: f64,
    pub bleu: f64,
    pub rouge_l: f64,
    pub meteor: f64,
    pub n_evaluated: usize,
    pub n_parse_failures: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(ExplkitStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.code() {
            "io" => ExplkitStatus::Io,
            "format" | "invalid_instance" | "format_contract" => ExplkitStatus::Format,
            "budget" => ExplkitStatus::Budget,
            "backend_required" => ExplkitStatus::BackendRequired,
            "invalid_input" | "label_vocabulary" => ExplkitStatus::InvalidInput,
            "zero_gold_accuracy" => ExplkitStatus::ZeroGoldAccuracy,
            _ => ExplkitStatus::Other,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ExplkitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ExplkitStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            ExplkitStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(ExplkitStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(ExplkitStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn optional_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn dataset<'a>(ds: *const ExplkitDataset) -> Result<&'a Dataset, Failure> {
    ds.as_ref().map(|d| &d.inner).ok_or_else(|| null("dataset"))
}

fn parsed<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, Failure> {
    s.parse().map_err(Failure::from)
}

fn give_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s)
        .map_err(|_| Failure(ExplkitStatus::Format, "output contains a nul byte".into()))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

fn nan_if_none(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn explkit_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn explkit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a canonical JSONL dataset. `split` is `train`, `dev` or `test`.
///
/// # Safety
/// `path` and `split` must be nul-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn explkit_dataset_load(
    path: *const c_char,
    split: *const c_char,
    out: *mut *mut ExplkitDataset,
) -> ExplkitStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = text(path, "path")?;
        let split: Split = parsed(text(split, "split")?)?;
        let inner = read_canonical(Path::new(path), split)?;
        *out = Box::into_raw(Box::new(ExplkitDataset { inner }));
        Ok(())
    })
}

/// Number of instances; 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn explkit_dataset_len(ds: *const ExplkitDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.len())
}

/// # Safety
/// `ds` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn explkit_dataset_stats(
    ds: *const ExplkitDataset,
    out: *mut ExplkitStats,
) -> ExplkitStatus {
    guard(|| {
        let ds = dataset(ds)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = compute_stats(ds);
        *out = ExplkitStats {
            count: s.count,
            explanation_count: s.explanation_count,
            mean_input_tokens: nan_if_none(s.mean_input_tokens),
            sd_input_tokens: nan_if_none(s.sd_input_tokens),
            mean_expl_tokens: nan_if_none(s.mean_expl_tokens),
            sd_expl_tokens: nan_if_none(s.sd_expl_tokens),
        };
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn explkit_dataset_free(ds: *mut ExplkitDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Training pairs of one stage as JSONL. `structure` is `joint`, `etp` or
/// `pte`; `etp_sl` needs a model server and fails with `BackendRequired`.
///
/// # Safety
/// `ds` must be a live handle, the strings nul-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn explkit_compile_pairs_jsonl(
    ds: *const ExplkitDataset,
    structure: *const c_char,
    stage: *const c_char,
    budget_percent: f64,
    seed: u64,
    out: *mut *mut c_char,
) -> ExplkitStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ds = dataset(ds)?;
        let kind: StructureKind = parsed(text(structure, "structure")?)?;
        let stage: StageKind = parsed(text(stage, "stage")?)?;
        let spec = StructureSpec::new(kind);
        if !spec.stages.contains(&stage) {
            return Err(Failure(
                ExplkitStatus::InvalidInput,
                format!("{} has no stage {stage}", kind.slug()),
            ));
        }
        let view = sample_budget(ds, budget_percent, seed)?;
        let compiled = compile_training_pairs(&view, &spec, None)?;
        give_string(out, CompiledPairs::to_jsonl(compiled.pairs(stage)))
    })
}

/// Model input of instance `id` for `stage`. `label` and `explanation` are
/// the injected values the stage needs, or null.
///
/// # Safety
/// `ds` must be a live handle, non-null strings nul-terminated and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn explkit_render_input(
    ds: *const ExplkitDataset,
    id: *const c_char,
    stage: *const c_char,
    label: *const c_char,
    explanation: *const c_char,
    out: *mut *mut c_char,
) -> ExplkitStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ds = dataset(ds)?;
        let id = text(id, "id")?;
        let inst = ds
            .get(id)
            .ok_or_else(|| Failure(ExplkitStatus::NotFound, format!("no instance `{id}`")))?;
        let stage: StageKind = parsed(text(stage, "stage")?)?;
        let injected = Injected {
            label: optional_text(label, "label")?,
            explanation: optional_text(explanation, "explanation")?,
        };
        give_string(out, render_input(inst, stage, injected)?)
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn explkit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `acc_generated / acc_gold` as a percentage.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn explkit_recover_ratio(
    acc_generated: f64,
    acc_gold: f64,
    out: *mut f64,
) -> ExplkitStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = recover_ratio(acc_generated, acc_gold)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn explkit_eval_set_new() -> *mut ExplkitEvalSet {
    Box::into_raw(Box::new(ExplkitEvalSet { pairs: Vec::new() }))
}

/// Adds one evaluated instance. `references` holds `n_references` strings;
/// it may be null when `n_references` is 0.
///
/// # Safety
/// `set` must be a live handle and every string nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn explkit_eval_set_push(
    set: *mut ExplkitEvalSet,
    candidate: *const c_char,
    references: *const *const c_char,
    n_references: usize,
    gold_label: *const c_char,
    predicted_label: *const c_char,
) -> ExplkitStatus {
    guard(|| {
        let set = set.as_mut().ok_or_else(|| null("eval set"))?;
        let refs = if n_references == 0 {
            Vec::new()
        } else if references.is_null() {
            return Err(null("references"));
        } else {
            std::slice::from_raw_parts(references, n_references)
                .iter()
                .map(|&r| text(r, "reference").map(str::to_string))
                .collect::<Result<_, _>>()?
        };
        let id = set.pairs.len().to_string();
        set.pairs.push(EvalPair {
            id,
            candidate: text(candidate, "candidate")?.to_string(),
            references: refs,
            gold_label: text(gold_label, "gold_label")?.to_string(),
            predicted_label: text(predicted_label, "predicted_label")?.to_string(),
            clean_parse: true,
        });
        Ok(())
    })
}

/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn explkit_eval_set_report(
    set: *const ExplkitEvalSet,
    out: *mut ExplkitReport,
) -> ExplkitStatus {
    guard(|| {
        let set = set.as_ref().ok_or_else(|| null("eval set"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = evaluate(&set.pairs)?;
        *out = ExplkitReport {
            accuracy: r.accuracy,
            bleu: nan_if_none(r.bleu),
            rouge_l: nan_if_none(r.rouge_l),
            meteor: nan_if_none(r.meteor),
            n_evaluated: r.n_evaluated,
            n_parse_failures: r.n_parse_failures,
        };
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn explkit_eval_set_free(set: *mut ExplkitEvalSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}
