//! C ABI over the `implang` experiment library.
//!
//! Handles are opaque; every fallible call returns an [`ImplangStatus`] and
//! leaves a message for [`implang_last_error`] on the calling thread.
//! Strings handed out by this library are freed with [`implang_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use implang::harness::config::{seeds_for, FileConfig, RunConfig};
use implang::harness::protocol::{build_stimuli, stimuli_json, SystemClock};
use implang::harness::{build_learner, orchestrate_run, parse_learner_spec, RunStatus, RunSummary};
use implang::learners::{InflightLimiter, Learner, LearnerError, Step};
use implang::{ConditionId, Error};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImplangStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Config = 3,
    /// The learner failed mid-run; the run directory holds the partial transcript.
    RunFailed = 4,
    /// The run has not completed, so it has no metrics yet.
    NotReady = 5,
    Internal = 6,
}

/// One configured run.
pub struct ImplangRun {
    config: RunConfig,
    status: Option<RunStatus>,
    summary: Option<RunSummary>,
}

/// Host-side learner: write a NUL-terminated reply of at most
/// `reply_capacity - 1` bytes into `reply` and return its length, or return
/// a negative value to fail the run.
pub type ImplangRespondFn = Option<
    unsafe extern "C" fn(
        user_data: *mut c_void,
        prompt: *const c_char,
        reply: *mut c_char,
        reply_capacity: usize,
    ) -> isize,
>;

pub const IMPLANG_REPLY_CAPACITY: usize = 65536;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("NUL bytes removed"));
}

enum Fail {
    Status(ImplangStatus, String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Learner(LearnerError::Config(_))
            | Error::Config(_)
            | Error::UnknownCondition { .. }
            | Error::UnknownExperiment(_)
            | Error::Grammar(_)
            | Error::GrammarSyntax { .. }
            | Error::Io { .. } => ImplangStatus::Config,
            _ => ImplangStatus::Internal,
        };
        Fail::Status(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ImplangStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ImplangStatus::Ok
        }
        Ok(Err(Fail::Status(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ImplangStatus::Internal
        }
    }
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Status(
            ImplangStatus::NullArgument,
            format!("{name} is null"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Status(ImplangStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn opt_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        arg(p, name).map(Some)
    }
}

fn out_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Status(
            ImplangStatus::NullArgument,
            "output pointer is null".into(),
        ));
    }
    let c = CString::new(s)
        .map_err(|_| Fail::Status(ImplangStatus::Internal, "NUL byte in output".into()))?;
    // SAFETY: checked non-null; the caller owns the slot.
    unsafe { *out = c.into_raw() };
    Ok(())
}

fn condition(experiment: &str, label: &str) -> Result<ConditionId, Fail> {
    Ok(ConditionId::new(experiment.parse()?, label)?)
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn implang_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn implang_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` is null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn implang_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Stimuli for one seed cell as JSON, written to `*out_json`.
///
/// # Safety
/// String arguments are valid NUL-terminated strings; `out_json` is writable.
#[no_mangle]
pub unsafe extern "C" fn implang_generate(
    experiment: *const c_char,
    condition_label: *const c_char,
    seed: u64,
    cell: u32,
    out_json: *mut *mut c_char,
) -> ImplangStatus {
    guard(|| {
        let cond = condition(
            arg(experiment, "experiment")?,
            arg(condition_label, "condition")?,
        )?;
        let file = FileConfig::default();
        let cfg = RunConfig {
            seeds: seeds_for(seed, &cond, cell as usize, 0),
            condition: cond.clone(),
            learner: String::new(),
            learner_config: file.learner,
            cell: cell as usize,
            rep: 0,
            morphosyntax: file.morphosyntax,
            syntax: file.syntax,
            annotations: file.annotations,
            out_dir: PathBuf::new(),
        };
        let stimuli = build_stimuli(&cfg)?;
        let json = serde_json::to_string(&stimuli_json(&cond, &stimuli)).map_err(Error::from)?;
        out_string(out_json, json)
    })
}

/// Configures a run. `config_path` may be null for defaults. The learner
/// spec is used by [`implang_run_execute`] and recorded in the run config.
///
/// # Safety
/// String arguments are valid NUL-terminated strings (or null where noted);
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn implang_run_new(
    experiment: *const c_char,
    condition_label: *const c_char,
    learner: *const c_char,
    seed: u64,
    cell: u32,
    rep: u32,
    out_dir: *const c_char,
    config_path: *const c_char,
    out: *mut *mut ImplangRun,
) -> ImplangStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Status(
                ImplangStatus::NullArgument,
                "out is null".into(),
            ));
        }
        let cond = condition(
            arg(experiment, "experiment")?,
            arg(condition_label, "condition")?,
        )?;
        let learner = arg(learner, "learner")?.to_owned();
        parse_learner_spec(&learner)?;
        let out_dir = PathBuf::from(arg(out_dir, "out_dir")?);
        let file = match opt_arg(config_path, "config_path")? {
            Some(p) => FileConfig::load(p.as_ref())?,
            None => FileConfig::default(),
        };
        let (cell, rep) = (cell as usize, rep as usize);
        let seeds = seeds_for(seed, &cond, cell, rep);
        let run = ImplangRun {
            config: RunConfig {
                condition: cond,
                learner,
                learner_config: file.learner,
                seeds,
                cell,
                rep,
                morphosyntax: file.morphosyntax,
                syntax: file.syntax,
                annotations: file.annotations,
                out_dir,
            },
            status: None,
            summary: None,
        };
        *out = Box::into_raw(Box::new(run));
        Ok(())
    })
}

/// # Safety
/// `run` is null or a handle from [`implang_run_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn implang_run_free(run: *mut ImplangRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `run` is null or a live handle.
unsafe fn handle<'a>(run: *mut ImplangRun) -> Result<&'a mut ImplangRun, Fail> {
    run.as_mut()
        .ok_or_else(|| Fail::Status(ImplangStatus::NullArgument, "run is null".into()))
}

/// The run id, e.g. `morphology-5R4E-c0-r0`.
///
/// # Safety
/// `run` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn implang_run_id(
    run: *mut ImplangRun,
    out: *mut *mut c_char,
) -> ImplangStatus {
    guard(|| {
        let run = handle(run)?;
        out_string(out, run.config.run_id())
    })
}

fn finish(run: &mut ImplangRun, learner: &mut dyn Learner) -> Result<(), Fail> {
    let report = orchestrate_run(&run.config, learner, &SystemClock)?;
    run.status = Some(report.status);
    run.summary = report.summary;
    match report.status {
        RunStatus::Failed => Err(Fail::Status(
            ImplangStatus::RunFailed,
            report.failure.unwrap_or_default(),
        )),
        _ => Ok(()),
    }
}

/// Runs the session with the configured learner spec.
///
/// # Safety
/// `run` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn implang_run_execute(run: *mut ImplangRun) -> ImplangStatus {
    guard(|| {
        let run = handle(run)?;
        let spec = parse_learner_spec(&run.config.learner)?;
        let limiter = InflightLimiter::new(run.config.learner_config.max_inflight);
        let mut learner = build_learner(
            &spec,
            &run.config.learner_config,
            run.config.seeds.learner,
            &limiter,
        )?;
        finish(run, learner.as_mut())
    })
}

struct CallbackLearner {
    respond: unsafe extern "C" fn(*mut c_void, *const c_char, *mut c_char, usize) -> isize,
    user_data: *mut c_void,
    exchanges: usize,
}

// SAFETY: the callback runs on the thread that called
// `implang_run_execute_with`; the pointer never crosses threads.
unsafe impl Send for CallbackLearner {}

impl Learner for CallbackLearner {
    fn respond(&mut self, step: &Step) -> Result<String, LearnerError> {
        self.exchanges += 1;
        let prompt = CString::new(step.text.replace('\0', " ")).expect("NUL bytes removed");
        let mut buf = vec![0u8; IMPLANG_REPLY_CAPACITY];
        // SAFETY: the host promised a callback with this signature; the
        // buffer is writable for its full capacity.
        let n = unsafe {
            (self.respond)(
                self.user_data,
                prompt.as_ptr(),
                buf.as_mut_ptr().cast(),
                buf.len(),
            )
        };
        if n < 0 {
            return Err(LearnerError::Protocol {
                detail: format!("callback failed with {n} at exchange {}", self.exchanges),
                payload: String::new(),
            });
        }
        let n = n as usize;
        if n >= buf.len() {
            return Err(LearnerError::Protocol {
                detail: format!("callback reply of {n} bytes exceeds the buffer"),
                payload: String::new(),
            });
        }
        buf.truncate(n);
        String::from_utf8(buf).map_err(|e| LearnerError::Protocol {
            detail: "callback reply is not UTF-8".into(),
            payload: String::from_utf8_lossy(e.as_bytes()).into_owned(),
        })
    }

    fn name(&self) -> String {
        "callback".into()
    }
}

/// Runs the session with a host-provided learner; the configured learner
/// spec is only recorded.
///
/// # Safety
/// `run` is a live handle; `respond` follows [`ImplangRespondFn`] and may be
/// called with `user_data` until this function returns.
#[no_mangle]
pub unsafe extern "C" fn implang_run_execute_with(
    run: *mut ImplangRun,
    respond: ImplangRespondFn,
    user_data: *mut c_void,
) -> ImplangStatus {
    guard(|| {
        let run = handle(run)?;
        let respond = respond
            .ok_or_else(|| Fail::Status(ImplangStatus::NullArgument, "respond is null".into()))?;
        let mut learner = CallbackLearner {
            respond,
            user_data,
            exchanges: 0,
        };
        finish(run, &mut learner)
    })
}

/// Metrics of a completed run as JSON.
///
/// # Safety
/// `run` is a live handle; `out_json` is writable.
#[no_mangle]
pub unsafe extern "C" fn implang_run_metrics_json(
    run: *mut ImplangRun,
    out_json: *mut *mut c_char,
) -> ImplangStatus {
    guard(|| {
        let run = handle(run)?;
        let summary = run
            .summary
            .as_ref()
            .ok_or_else(|| Fail::Status(ImplangStatus::NotReady, "run has not completed".into()))?;
        out_string(
            out_json,
            serde_json::to_string(summary).map_err(Error::from)?,
        )
    })
}

/// Directory the run writes into, for locating transcripts and CSVs.
///
/// # Safety
/// `run` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn implang_run_dir(
    run: *mut ImplangRun,
    out: *mut *mut c_char,
) -> ImplangStatus {
    guard(|| {
        let run = handle(run)?;
        out_string(out, run.config.run_dir().to_string_lossy().into_owned())
    })
}
