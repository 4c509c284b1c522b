use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use kr_steer_ffi::*;

fn last_error() -> String {
    let p = krs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

#[test]
fn chain_round_trip() {
    let thetas = [0.1, 0.2, 0.3];
    let mut chain = ptr::null_mut();
    let st = unsafe { krs_chain_build(2, 0.1, 0.2, thetas.as_ptr(), 3, &mut chain) };
    assert_eq!(st, KrsStatus::Ok);
    assert_eq!(unsafe { krs_chain_dim(chain) }, 5);

    let state = [0.1, 0.2, 0.1, 0.2, 0.3];
    let mut x = [0.0; 5];
    assert_eq!(
        unsafe { krs_chain_forward_map(chain, state.as_ptr(), x.as_mut_ptr(), 5) },
        KrsStatus::Ok
    );
    assert_eq!(x[0], 0.1);
    assert!((x[2] - 0.1f64.tan()).abs() < 1e-15);

    let mut r = f64::NAN;
    let st = unsafe { krs_chain_pushforward_residual(chain, state.as_ptr(), 5, &mut r) };
    assert_eq!(st, KrsStatus::Ok);
    assert!(r < 1e-6, "residual {r}");

    let mut json = ptr::null_mut();
    assert_eq!(
        unsafe { krs_chain_report_json(chain, &mut json) },
        KrsStatus::Ok
    );
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    assert!(text.contains("\"kr_word\""));
    unsafe {
        krs_string_free(json);
        krs_chain_free(chain);
    }
}

#[test]
fn wrong_lengths_and_nulls_are_reported() {
    let mut chain = ptr::null_mut();
    let thetas = [0.0, 0.0];
    let st = unsafe { krs_chain_build(2, 0.0, 0.0, thetas.as_ptr(), 2, &mut chain) };
    assert_eq!(st, KrsStatus::DimensionMismatch);
    assert!(chain.is_null());
    assert!(last_error().contains("dimension"));

    let st = unsafe { krs_chain_build(0, 0.0, 0.0, ptr::null(), 1, &mut chain) };
    assert_eq!(st, KrsStatus::NullPointer);

    let mut x = [0.0; 5];
    let st = unsafe { krs_chain_forward_map(ptr::null(), x.as_ptr(), x.as_mut_ptr(), 5) };
    assert_eq!(st, KrsStatus::NullPointer);
    unsafe { krs_chain_free(ptr::null_mut()) };
}

#[test]
fn two_trailer_closed_form_and_window() {
    let state = [0.0, 0.0, 0.0, 0.0, std::f64::consts::FRAC_PI_4];
    let mut x = [0.0; 5];
    assert_eq!(
        unsafe { krs_two_trailer_map(state.as_ptr(), x.as_mut_ptr()) },
        KrsStatus::Ok
    );
    assert!((x[4] - 1.0).abs() < 1e-15);

    let (mut g, mut d) = (0.0, 0.0);
    assert_eq!(
        unsafe { krs_domain_window(0.0, 0.0, &mut g, &mut d) },
        KrsStatus::Ok
    );
    assert_eq!((g, d), (0.0, std::f64::consts::PI));
    let st = unsafe { krs_domain_window(2.0, 0.0, &mut g, &mut d) };
    assert_eq!(st, KrsStatus::OutsideDomain);

    // t2 = 0 is a pole of x5
    let pole = [0.0; 5];
    assert_eq!(
        unsafe { krs_two_trailer_map(pole.as_ptr(), x.as_mut_ptr()) },
        KrsStatus::Pole
    );
}

#[test]
fn plan_controls_and_verify() {
    let f = std::f64::consts::FRAC_PI_4;
    let z0 = [0.0, 0.0, 0.0, -f, 0.0];
    let zt = [0.0, 1.0, 0.0, f, 3.0 * f];
    let mut plan = ptr::null_mut();
    assert_eq!(
        unsafe { krs_plan_two_trailer(z0.as_ptr(), zt.as_ptr(), KRS_ROOT_MIN_ABS, &mut plan) },
        KrsStatus::Ok
    );

    let mut len = 0usize;
    let (mut u2, mut h) = (0.0, 0.0);
    let st = unsafe { krs_plan_controls(plan, ptr::null_mut(), 0, &mut len, &mut u2, &mut h) };
    assert_eq!(st, KrsStatus::BufferTooSmall);
    assert_eq!(len, 4);
    let mut u1 = vec![0.0; len];
    let st = unsafe { krs_plan_controls(plan, u1.as_mut_ptr(), len, &mut len, &mut u2, &mut h) };
    assert_eq!(st, KrsStatus::Ok);
    assert!(
        (u2 - 2.0).abs() < 1e-12 && h == 1.0,
        "u2 = {u2}, horizon = {h}"
    );

    let (mut err, mut passed) = (f64::NAN, false);
    assert_eq!(
        unsafe { krs_plan_verify(plan, 10_000, &mut err, &mut passed) },
        KrsStatus::Ok
    );
    assert!(passed && err < 1e-6, "terminal error {err}");

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { krs_plan_json(plan, &mut json) }, KrsStatus::Ok);
    assert!(unsafe { CStr::from_ptr(json) }
        .to_str()
        .unwrap()
        .contains("\"zetaT\""));
    unsafe {
        krs_string_free(json);
        krs_plan_free(plan);
    }

    let st = unsafe { krs_plan_two_trailer(z0.as_ptr(), zt.as_ptr(), 7, &mut plan) };
    assert_eq!(st, KrsStatus::InvalidInput);
}

#[test]
fn reachability_matches_library() {
    for q in [
        [0.0, 1.0, 0.0, 1.0, 0.0],
        [0.0, -1000.0, 0.0, 1.0, 0.0],
        [0.3, 2.0, -0.2, -1.5, 0.1],
        [0.0, 1000.0, 0.0, -1.0, 0.0],
    ] {
        let mut r = false;
        assert_eq!(unsafe { krs_reachable(q.as_ptr(), &mut r) }, KrsStatus::Ok);
        assert_eq!(r, kr_steer::planner::reachable(&q).unwrap(), "{q:?}");
    }
    let mut r = true;
    let far_below = [0.0, -1000.0, 0.0, 1.0, 0.0];
    unsafe { krs_reachable(far_below.as_ptr(), &mut r) };
    assert!(!r);
}

#[test]
fn nilpotency_json() {
    let word = CString::new("R(0).S").unwrap();
    let mut json = ptr::null_mut();
    assert_eq!(
        unsafe { krs_nilpotency_report(word.as_ptr(), 200, &mut json) },
        KrsStatus::Ok
    );
    let v: serde_json::Value =
        serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    assert_eq!(v["dimension"], 6);
    unsafe { krs_string_free(json) };

    let bad = CString::new("R(").unwrap();
    let st = unsafe { krs_nilpotency_report(bad.as_ptr(), 200, &mut json) };
    assert_eq!(st, KrsStatus::InvalidInput);

    let small = CString::new("R(0).S").unwrap();
    let st = unsafe { krs_nilpotency_report(small.as_ptr(), 3, &mut json) };
    assert_eq!(st, KrsStatus::BudgetExceeded);
}

fn header() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/kr_steer.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).expect("build script writes the header");
    for f in [
        "krs_last_error",
        "krs_string_free",
        "krs_chain_build",
        "krs_chain_dim",
        "krs_chain_forward_map",
        "krs_chain_pushforward_residual",
        "krs_chain_report_json",
        "krs_chain_free",
        "krs_two_trailer_map",
        "krs_domain_window",
        "krs_reachable",
        "krs_plan_two_trailer",
        "krs_plan_controls",
        "krs_plan_verify",
        "krs_plan_json",
        "krs_plan_free",
        "krs_nilpotency_report",
    ] {
        assert!(text.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(text.contains("typedef struct KrsChain KrsChain;"));
    assert!(text.contains("KRS_STATUS_OK = 0"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler, skipping");
        return;
    };
    assert!(cc.status.success());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"kr_steer.h\"\nint main(void) { KrsChain *c = 0; return krs_chain_dim(c) == 0 ? 0 : 1; }\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header().parent().unwrap())
        .arg(&src)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
