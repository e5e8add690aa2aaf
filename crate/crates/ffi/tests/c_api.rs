use bilinear_lab_ffi::*;
use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    assert_eq!(unsafe { bilab_last_error(buf.as_mut_ptr(), buf.len()) }, BILAB_OK);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn field_round_trip_through_handles() {
    let cos = [2.0, 0.0, 0.3];
    let sin = [0.0, 0.5, 0.0];
    let mut f = ptr::null_mut();
    unsafe {
        assert_eq!(bilab_field_from_cos_sin(8, 32, cos.as_ptr(), sin.as_ptr(), 3, &mut f), BILAB_OK);
        let mut n = 0usize;
        assert_eq!(bilab_field_grid_len(f, &mut n), BILAB_OK);
        let mut vals = vec![0.0; n];
        assert_eq!(bilab_field_grid_values(f, vals.as_mut_ptr(), n), BILAB_OK);
        for (j, v) in vals.iter().enumerate() {
            let x = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            assert!((v - (2.0 + 0.5 * x.sin() + 0.3 * (2.0 * x).cos())).abs() < 1e-13);
        }
        assert_eq!(bilab_field_grid_values(f, vals.as_mut_ptr(), 3), BILAB_BUFFER_TOO_SMALL);
        bilab_field_free(f);
    }
}

#[test]
fn errors_are_codes_with_messages() {
    let mut f = ptr::null_mut();
    let bad = CString::new("sin(").unwrap();
    unsafe {
        assert_eq!(bilab_field_from_expr(bad.as_ptr(), 8, 32, &mut f), BILAB_CONFIG_ERROR);
        assert!(last_error().contains("parse"));
        assert!(f.is_null());
        assert_eq!(bilab_field_l2_norm(ptr::null(), ptr::null_mut()), BILAB_NULL_POINTER);
        let ok = CString::new("1").unwrap();
        assert_eq!(bilab_field_from_expr(ok.as_ptr(), 8, 32, &mut f), BILAB_OK);
        let p = [0.0; 3];
        let mut g = ptr::null_mut();
        assert_eq!(bilab_simulate(7, f, p.as_ptr(), 0.1, &mut g), BILAB_CONFIG_ERROR);
        let mut r = ptr::null_mut();
        assert_eq!(bilab_global_to_constant(BILAB_MODEL_CH, f, -1.0, 1.0, &mut r), BILAB_NUMERIC_ERROR);
        assert!(last_error().contains("sign"));
        bilab_field_free(f);
        bilab_field_free(ptr::null_mut());
    }
}

#[test]
fn simulate_preserves_mean_and_constants() {
    let text = CString::new("1.5").unwrap();
    let mut f = ptr::null_mut();
    let mut g = ptr::null_mut();
    let p = [0.0; 3];
    unsafe {
        assert_eq!(bilab_field_from_expr(text.as_ptr(), 16, 64, &mut f), BILAB_OK);
        assert_eq!(bilab_simulate(BILAB_MODEL_KS, f, p.as_ptr(), 0.5, &mut g), BILAB_OK);
        let (mut a, mut b) = (0.0, 0.0);
        bilab_field_l2_norm(f, &mut a);
        bilab_field_l2_norm(g, &mut b);
        assert!((a - b).abs() < 1e-12);
        bilab_field_free(f);
        bilab_field_free(g);
    }
}

#[test]
fn header_compiles_and_links_from_c() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = root.join("include/bilinear_lab.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in ["bilab_field_from_expr", "bilab_global_to_constant", "typedef struct BilabField BilabField", "BILAB_TOLERANCE_NOT_MET"] {
        assert!(text.contains(sym), "{sym}");
    }
    let Ok(cc) = which_cc() else { return };
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "bilinear_lab.h"
int main(void) {
    BilabField *f = NULL;
    if (bilab_field_from_expr("1 + 0.1 cos(x)", 8, 32, &f) != BILAB_OK) return 1;
    double n = 0.0;
    if (bilab_field_l2_norm(f, &n) != BILAB_OK) return 2;
    bilab_field_free(f);
    printf("%s %.6f\n", bilab_version(), n);
    return 0;
}
"#,
    )
    .unwrap();
    let lib_dir = root.join("../../target").join(if cfg!(debug_assertions) { "debug" } else { "release" });
    let staticlib = lib_dir.join("libbilinear_lab_ffi.a");
    let exe = tmp.path().join("smoke");
    let mut cmd = Command::new(&cc);
    cmd.arg("-I").arg(root.join("include")).arg(&src);
    if staticlib.exists() {
        cmd.arg(&staticlib).args(["-lm", "-lpthread", "-ldl", "-o"]).arg(&exe);
    } else {
        cmd.arg("-fsyntax-only");
    }
    let st = cmd.status().unwrap();
    assert!(st.success());
    if staticlib.exists() {
        let out = Command::new(&exe).output().unwrap();
        assert!(out.status.success());
        let line = String::from_utf8(out.stdout).unwrap();
        assert!(line.starts_with(env!("CARGO_PKG_VERSION")), "{line}");
    }
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
