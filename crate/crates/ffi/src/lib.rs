//! C ABI over the evalcontract engine.
//!
//! Every fallible function returns an [`EcStatus`]; on failure a message is
//! available from [`ec_last_error`] on the same thread. Handles are opaque and
//! owned by the caller until passed to their `_free` function. Strings
//! returned through `char **` out-parameters must be released with
//! [`ec_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use evalcontract::analytics::{ordinal_predict, OrdinalModelCoefficients};
use evalcontract::contract::{parse_bundle, validate_contract, EvaluationContract};
use evalcontract::gateway::{JudgeGateway, JuryPool, ScriptFile, ScriptedBackend, Verdict};
use evalcontract::grading::{classify_vote_pattern, grade_task, jury_consensus, Submission, VotePattern};
use evalcontract::trace::{audit_trace, read_trace, replay_scores, RunTrace};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    IoError = 5,
    GradingError = 6,
    Panic = 7,
}

/// Juror vote codes accepted by the consensus functions.
pub const EC_VOTE_PASS: i32 = 1;
pub const EC_VOTE_FAIL: i32 = 0;
pub const EC_VOTE_UNUSABLE: i32 = -1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcVotePattern {
    Unanimous = 0,
    OneDissenter = 1,
    Split = 2,
    Reduced = 3,
}

/// Population-level cumulative-logit coefficients with the run effect
/// already resolved to a scalar.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EcOrdinalCoefficients {
    pub alpha: f64,
    pub beta_length: f64,
    pub beta_compact: f64,
    pub beta_interaction: f64,
    pub run_effect: f64,
    pub random_intercept: f64,
    pub tau0: f64,
    pub tau1: f64,
}

/// Opaque parsed contract.
pub struct EcContract {
    inner: EvaluationContract,
}

/// Opaque run trace read from disk.
pub struct EcTrace {
    inner: RunTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(EcStatus, String);

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            EcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EcStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(EcStatus::NullArgument, format!("`{name}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(EcStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(EcStatus::InvalidArgument, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn votes_arg(votes: *const i32, len: usize) -> Result<Vec<Verdict>, Failure> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if votes.is_null() {
        return Err(null("votes"));
    }
    std::slice::from_raw_parts(votes, len)
        .iter()
        .map(|&v| match v {
            EC_VOTE_PASS => Ok(Verdict::Pass),
            EC_VOTE_FAIL => Ok(Verdict::Fail),
            EC_VOTE_UNUSABLE => Ok(Verdict::Unusable),
            other => Err(Failure(EcStatus::InvalidArgument, format!("unknown vote code {other}"))),
        })
        .collect()
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ec_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse one contract document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_contract_parse(json: *const c_char, out: *mut *mut EcContract) -> EcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let raw = str_arg(json, "json")?;
        let inner = parse_bundle(raw).map_err(|e| Failure(EcStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(EcContract { inner }));
        Ok(())
    })
}

/// Rescale criterion weights in place so they sum to 100.
///
/// # Safety
/// `contract` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ec_contract_normalize(contract: *mut EcContract) -> EcStatus {
    guard(|| {
        let c = contract.as_mut().ok_or_else(|| null("contract"))?;
        c.inner = c.inner.clone().normalized().map_err(|e| Failure(EcStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

/// Validation report as JSON; `runnable` receives 1 when there are no violations.
///
/// # Safety
/// `contract` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_contract_validate(
    contract: *const EcContract,
    runnable: *mut i32,
    report_json: *mut *mut c_char,
) -> EcStatus {
    guard(|| {
        let c = contract.as_ref().ok_or_else(|| null("contract"))?;
        if runnable.is_null() {
            return Err(null("runnable"));
        }
        let report = validate_contract(&c.inner);
        *runnable = report.is_runnable() as i32;
        if !report_json.is_null() {
            put_string(report_json, serde_json::to_string(&report).expect("serializable report"))?;
        }
        Ok(())
    })
}

/// # Safety
/// `contract` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_contract_to_json(contract: *const EcContract, out: *mut *mut c_char) -> EcStatus {
    guard(|| {
        let c = contract.as_ref().ok_or_else(|| null("contract"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        put_string(out, c.inner.to_json())
    })
}

/// # Safety
/// `contract` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ec_contract_free(contract: *mut EcContract) {
    if !contract.is_null() {
        drop(Box::from_raw(contract));
    }
}

/// Strict-majority decision over vote codes; `decision` receives 1 for pass, 0 for fail.
///
/// # Safety
/// `votes` must point to `len` values (may be null when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn ec_jury_consensus(votes: *const i32, len: usize, decision: *mut i32) -> EcStatus {
    guard(|| {
        let v = votes_arg(votes, len)?;
        if decision.is_null() {
            return Err(null("decision"));
        }
        *decision = jury_consensus(v).is_pass() as i32;
        Ok(())
    })
}

/// # Safety
/// `votes` must point to `len` values (may be null when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn ec_classify_vote_pattern(
    votes: *const i32,
    len: usize,
    pattern: *mut EcVotePattern,
) -> EcStatus {
    guard(|| {
        let v = votes_arg(votes, len)?;
        if pattern.is_null() {
            return Err(null("pattern"));
        }
        *pattern = match classify_vote_pattern(v) {
            VotePattern::Unanimous => EcVotePattern::Unanimous,
            VotePattern::OneDissenter => EcVotePattern::OneDissenter,
            VotePattern::Split => EcVotePattern::Split,
            VotePattern::Reduced | VotePattern::NotApplicable => EcVotePattern::Reduced,
        };
        Ok(())
    })
}

/// Grade a submission with scripted judges. `pool_json` is a pool config and
/// `script_json` a script document; the task result is returned as JSON.
///
/// # Safety
/// All pointers must be valid; `result_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_grade_scripted(
    contract: *const EcContract,
    submission: *const c_char,
    pool_json: *const c_char,
    script_json: *const c_char,
    result_json: *mut *mut c_char,
) -> EcStatus {
    guard(|| {
        let c = contract.as_ref().ok_or_else(|| null("contract"))?;
        if result_json.is_null() {
            return Err(null("result_json"));
        }
        let text = str_arg(submission, "submission")?;
        let pool: JuryPool = serde_json::from_str(str_arg(pool_json, "pool_json")?)
            .map_err(|e| Failure(EcStatus::ParseError, format!("pool: {e}")))?;
        pool.validate().map_err(|e| Failure(EcStatus::InvalidArgument, e.to_string()))?;
        let script: ScriptFile = serde_json::from_str(str_arg(script_json, "script_json")?)
            .map_err(|e| Failure(EcStatus::ParseError, format!("script: {e}")))?;
        let normalized = c.inner.clone().normalized().map_err(|e| Failure(EcStatus::InvalidArgument, e.to_string()))?;
        let sub = Submission::new(&normalized.task_id, "ffi", text);
        let gateway = JudgeGateway::scripted(ScriptedBackend::from_file(script));
        let result = grade_task(&normalized, &sub, &pool, &gateway, 1)
            .map_err(|e| Failure(EcStatus::GradingError, e.to_string()))?;
        put_string(result_json, serde_json::to_string(&result).expect("serializable result"))
    })
}

/// Category probabilities `Pr(D=0), Pr(D=1), Pr(D=2)` written to `probs[0..3]`.
///
/// # Safety
/// `coefficients` must be valid; `probs` must point to three writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ec_ordinal_predict(
    coefficients: *const EcOrdinalCoefficients,
    length: f64,
    compact: f64,
    probs: *mut f64,
) -> EcStatus {
    guard(|| {
        let k = coefficients.as_ref().ok_or_else(|| null("coefficients"))?;
        if probs.is_null() {
            return Err(null("probs"));
        }
        let coeffs = OrdinalModelCoefficients {
            alpha: k.alpha + k.run_effect,
            beta_length: k.beta_length,
            beta_compact: k.beta_compact,
            beta_interaction: k.beta_interaction,
            run_effects: Default::default(),
            cutpoints: [k.tau0, k.tau1],
            random_intercept: k.random_intercept,
        };
        let p = ordinal_predict(&coeffs, length, compact, None)
            .map_err(|e| Failure(EcStatus::InvalidArgument, e.to_string()))?;
        std::slice::from_raw_parts_mut(probs, 3).copy_from_slice(&p);
        Ok(())
    })
}

/// # Safety
/// `root` and `run_id` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_trace_read(root: *const c_char, run_id: *const c_char, out: *mut *mut EcTrace) -> EcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let root = str_arg(root, "root")?;
        let run_id = str_arg(run_id, "run_id")?;
        let inner = read_trace(Path::new(root), run_id).map_err(|e| Failure(EcStatus::IoError, e.to_string()))?;
        *out = Box::into_raw(Box::new(EcTrace { inner }));
        Ok(())
    })
}

/// Recompute task scores for `pool_id` from raw votes; JSON object task_id → score.
///
/// # Safety
/// `trace` must be a live handle; `pool_id` NUL-terminated; `scores_json` writable.
#[no_mangle]
pub unsafe extern "C" fn ec_trace_replay(
    trace: *const EcTrace,
    pool_id: *const c_char,
    scores_json: *mut *mut c_char,
) -> EcStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        if scores_json.is_null() {
            return Err(null("scores_json"));
        }
        let pool = str_arg(pool_id, "pool_id")?;
        let scores = replay_scores(&t.inner, pool).map_err(|e| Failure(EcStatus::InvalidArgument, e.to_string()))?;
        put_string(scores_json, serde_json::to_string(&scores).expect("serializable scores"))
    })
}

/// Number of integrity findings in a trace; 0 means stored scores replay exactly.
///
/// # Safety
/// `trace` must be a live handle; `findings` writable.
#[no_mangle]
pub unsafe extern "C" fn ec_trace_audit(trace: *const EcTrace, findings: *mut usize) -> EcStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        if findings.is_null() {
            return Err(null("findings"));
        }
        *findings = audit_trace(&t.inner).len();
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ec_trace_free(trace: *mut EcTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}
