use std::ffi::{CStr, CString};
use std::ptr;

use vcnls_ffi::*;

fn last_error() -> String {
    let p = vcnls_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load(name: &str) -> *mut VcnlsScenario {
    let name = CString::new(name).unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { vcnls_scenario_load(name.as_ptr(), &mut sc) }, VcnlsStatus::Ok);
    sc
}

fn assemble(sc: *const VcnlsScenario, params: &[(&str, f64)]) -> Result<*mut VcnlsRun, VcnlsStatus> {
    let keys: Vec<CString> = params.iter().map(|(k, _)| CString::new(*k).unwrap()).collect();
    let ptrs: Vec<_> = keys.iter().map(|k| k.as_ptr()).collect();
    let values: Vec<f64> = params.iter().map(|p| p.1).collect();
    let mut run = ptr::null_mut();
    let st = unsafe { vcnls_run_assemble(sc, ptrs.as_ptr(), values.as_ptr(), params.len(), &mut run) };
    if st == VcnlsStatus::Ok {
        Ok(run)
    } else {
        assert!(run.is_null());
        Err(st)
    }
}

#[test]
fn blowup_time_through_the_abi() {
    let sc = load("example3_toy");
    let run = assemble(sc, &[("alpha0", -0.25)]).unwrap();
    let (mut t, mut found) = (0.0, false);
    assert_eq!(unsafe { vcnls_run_blowup_time(run, &mut t, &mut found) }, VcnlsStatus::Ok);
    assert!(found && (t - 2.0).abs() < 1e-9);
    let mut p = VcnlsPhases::default();
    assert_eq!(unsafe { vcnls_run_phases(run, 1.0, &mut p) }, VcnlsStatus::Ok);
    // μ(t) = μ(0) e^{3(1 - cos t)} (2α(0)t + 1), μ(0) = 1.
    let want = (3.0 * (1.0 - 1f64.cos())).exp() * 0.5;
    assert!((p.mu - want).abs() < 1e-8 * want);
    unsafe {
        vcnls_run_free(run);
        vcnls_scenario_free(sc);
    }
}

#[test]
fn psi_and_verify() {
    let sc = load("sch1");
    let mut dim = 0;
    assert_eq!(unsafe { vcnls_scenario_dimension(sc, &mut dim) }, VcnlsStatus::Ok);
    assert_eq!(dim, 1);
    let run = assemble(sc, &[]).unwrap();
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { vcnls_run_psi(run, 0.0, 0.0, 0.0, &mut re, &mut im) }, VcnlsStatus::Ok);
    // sqrt(-2v/3) with v = -2.
    assert!((re.hypot(im) - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
    let grid = CString::new("0.1:6:21,-8:8:41").unwrap();
    let mut s = VcnlsVerifySummary {
        pde_residual: 0.0,
        system_residual: 0.0,
        closed_form_deviation: 0.0,
        mass_law: 0.0,
        passed: false,
    };
    assert_eq!(unsafe { vcnls_run_verify(run, grid.as_ptr(), 1e-6, &mut s) }, VcnlsStatus::Ok);
    assert!(s.passed && s.pde_residual < 1e-6, "{s:?}");
    let bad = CString::new("nonsense").unwrap();
    assert_eq!(unsafe { vcnls_run_verify(run, bad.as_ptr(), 1e-6, &mut s) }, VcnlsStatus::InvalidArgument);
    assert_eq!(
        unsafe { vcnls_run_psi(run, 100.0, 0.0, 0.0, &mut re, &mut im) },
        VcnlsStatus::InvalidArgument
    );
    unsafe {
        vcnls_run_free(run);
        vcnls_scenario_free(sc);
    }
}

#[test]
fn errors_are_reported() {
    let name = CString::new("no_such_scenario").unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { vcnls_scenario_load(name.as_ptr(), &mut sc) }, VcnlsStatus::UnknownScenario);
    assert!(sc.is_null());
    assert!(last_error().contains("no_such_scenario"));
    vcnls_clear_error();
    assert!(vcnls_last_error_message().is_null());

    assert_eq!(unsafe { vcnls_scenario_load(ptr::null(), &mut sc) }, VcnlsStatus::NullPointer);
    assert_eq!(unsafe { vcnls_scenario_load(name.as_ptr(), ptr::null_mut()) }, VcnlsStatus::NullPointer);

    let sc = load("sch1");
    assert_eq!(assemble(sc, &[("bogus", 1.0)]), Err(VcnlsStatus::InvalidArgument));
    assert!(last_error().contains("bogus"));
    unsafe {
        vcnls_scenario_free(sc);
        vcnls_scenario_free(ptr::null_mut());
        vcnls_run_free(ptr::null_mut());
    }
}

#[test]
fn error_state_is_thread_local() {
    let name = CString::new("missing").unwrap();
    let mut sc = ptr::null_mut();
    unsafe { vcnls_scenario_load(name.as_ptr(), &mut sc) };
    std::thread::spawn(|| assert!(vcnls_last_error_message().is_null()))
        .join()
        .unwrap();
    assert!(!vcnls_last_error_message().is_null());
}

#[test]
fn list_into_buffer() {
    let mut needed = 0;
    assert_eq!(
        unsafe { vcnls_list_scenarios(ptr::null_mut(), 0, &mut needed) },
        VcnlsStatus::BufferTooSmall
    );
    let mut buf = vec![0 as std::ffi::c_char; needed];
    assert_eq!(unsafe { vcnls_list_scenarios(buf.as_mut_ptr(), buf.len(), ptr::null_mut()) }, VcnlsStatus::Ok);
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
    assert!(s.lines().any(|l| l == "sch2"));
    let v = unsafe { CStr::from_ptr(vcnls_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
