use std::ffi::{c_char, c_void, CStr, CString};
use std::ptr;

use implang_ffi::*;

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { implang_string_free(s) };
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(implang_last_error()) }
        .to_str()
        .unwrap()
        .to_owned()
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn new_run(
    experiment: &str,
    condition: &str,
    learner: &str,
    out: &std::path::Path,
) -> *mut ImplangRun {
    let (e, k, l, o) = (
        c(experiment),
        c(condition),
        c(learner),
        c(out.to_str().unwrap()),
    );
    let mut run = ptr::null_mut();
    let status = unsafe {
        implang_run_new(
            e.as_ptr(),
            k.as_ptr(),
            l.as_ptr(),
            0,
            0,
            0,
            o.as_ptr(),
            ptr::null(),
            &mut run,
        )
    };
    assert_eq!(status, ImplangStatus::Ok, "{}", last_error());
    run
}

#[test]
fn version_and_generate() {
    let v = unsafe { CStr::from_ptr(implang_version()) }
        .to_str()
        .unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let (e, k) = (c("syntax"), c("grammarB"));
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { implang_generate(e.as_ptr(), k.as_ptr(), 1, 0, &mut out) },
        ImplangStatus::Ok
    );
    let json: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(json["blocks"].as_array().unwrap().len(), 6);
    assert_eq!(json["condition"], "syntax/grammarB");
}

#[test]
fn argument_errors() {
    let k = c("5R4E");
    let mut out = ptr::null_mut();
    let status = unsafe { implang_generate(ptr::null(), k.as_ptr(), 0, 0, &mut out) };
    assert_eq!(status, ImplangStatus::NullArgument);
    assert!(last_error().contains("experiment"));
    let e = c("morphology");
    let bad = c("9R9E");
    assert_eq!(
        unsafe { implang_generate(e.as_ptr(), bad.as_ptr(), 0, 0, &mut out) },
        ImplangStatus::Config
    );
    let invalid = [0xffu8, 0];
    let status = unsafe { implang_generate(invalid.as_ptr().cast(), k.as_ptr(), 0, 0, &mut out) };
    assert_eq!(status, ImplangStatus::InvalidUtf8);
    assert_eq!(
        unsafe { implang_run_execute(ptr::null_mut()) },
        ImplangStatus::NullArgument
    );
    unsafe { implang_run_free(ptr::null_mut()) };
    unsafe { implang_string_free(ptr::null_mut()) };
}

#[test]
fn baseline_run_through_handle() {
    let dir = tempfile::tempdir().unwrap();
    let run = new_run("morphology", "5R4E", "baseline:majority", dir.path());
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { implang_run_metrics_json(run, &mut out) },
        ImplangStatus::NotReady
    );
    assert_eq!(unsafe { implang_run_execute(run) }, ImplangStatus::Ok);
    assert_eq!(
        unsafe { implang_run_metrics_json(run, &mut out) },
        ImplangStatus::Ok
    );
    let metrics: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(metrics["metrics"]["regularization_rate"], 1.0);
    assert_eq!(unsafe { implang_run_id(run, &mut out) }, ImplangStatus::Ok);
    assert_eq!(take(out), "morphology-5R4E-c0-r0");
    assert_eq!(unsafe { implang_run_dir(run, &mut out) }, ImplangStatus::Ok);
    assert!(std::path::Path::new(&take(out))
        .join("transcript.jsonl")
        .is_file());
    unsafe { implang_run_free(run) };
}

struct Script {
    calls: usize,
    fail_at: usize,
}

unsafe extern "C" fn respond(
    user: *mut c_void,
    prompt: *const c_char,
    reply: *mut c_char,
    cap: usize,
) -> isize {
    let script = &mut *user.cast::<Script>();
    script.calls += 1;
    if script.calls == script.fail_at {
        return -1;
    }
    assert!(!CStr::from_ptr(prompt).to_bytes().is_empty());
    let text: &[u8] = b"correct";
    assert!(text.len() < cap);
    ptr::copy_nonoverlapping(text.as_ptr(), reply.cast::<u8>(), text.len());
    *reply.add(text.len()) = 0;
    text.len() as isize
}

#[test]
fn callback_learner() {
    let dir = tempfile::tempdir().unwrap();
    let run = new_run("morphosyntax", "high-S1", "scripted:host", dir.path());
    let mut script = Script {
        calls: 0,
        fail_at: 0,
    };
    let status = unsafe {
        implang_run_execute_with(run, Some(respond), (&mut script as *mut Script).cast())
    };
    assert_eq!(status, ImplangStatus::Ok, "{}", last_error());
    assert_eq!(script.calls, 107);
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { implang_run_metrics_json(run, &mut out) },
        ImplangStatus::Ok
    );
    let metrics: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(metrics["metrics"]["score"]["recall"], 1.0);
    unsafe { implang_run_free(run) };

    let run = new_run("morphosyntax", "low-S1", "scripted:host", dir.path());
    let mut script = Script {
        calls: 0,
        fail_at: 5,
    };
    let status = unsafe {
        implang_run_execute_with(run, Some(respond), (&mut script as *mut Script).cast())
    };
    assert_eq!(status, ImplangStatus::RunFailed);
    assert!(last_error().contains("callback failed"));
    assert_eq!(
        unsafe { implang_run_execute_with(run, None, ptr::null_mut()) },
        ImplangStatus::NullArgument
    );
    unsafe { implang_run_free(run) };
}
