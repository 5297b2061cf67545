use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use pmlde_ffi::*;

const SMALL: &str = r#"
[domain]
a1 = 1.0
a2 = 1.0
l1 = 0.5
l2 = 0.5

[grid]
nx = 24
ny = 24

[time]
tau = 0.02
t_end = 0.2

[model]
c = 1.0
beta = 100.0

[initial]
kind = "gaussian"
center = [0.2, 0.0]
decay = 20.0
"#;

fn from_toml(text: &str) -> (PmldeStatus, *mut PmldeSimulation) {
    let s = CString::new(text).unwrap();
    let mut h = ptr::null_mut();
    let st = unsafe { pmlde_simulation_from_toml(s.as_ptr(), &mut h) };
    (st, h)
}

fn last_error() -> String {
    let p = pmlde_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn step_and_read_back() {
    let (st, h) = from_toml(SMALL);
    assert_eq!(st, PmldeStatus::Ok);
    let mut row = PmldeEnergyRow::default();
    unsafe {
        assert_eq!(pmlde_simulation_step(h, &mut row), PmldeStatus::Ok);
        assert_eq!(row.n, 2);
        assert!(row.e_embed > 0.0);
        let (mut nx, mut ny, mut lv) = (0, 0, 0);
        assert_eq!(pmlde_simulation_dims(h, &mut nx, &mut ny, &mut lv), PmldeStatus::Ok);
        assert_eq!((nx, ny, lv), (24, 24, 1));
        let mut p = vec![0.0; nx * ny];
        assert_eq!(pmlde_simulation_copy_pressure(h, p.as_mut_ptr(), p.len()), PmldeStatus::Ok);
        assert!(p.iter().any(|v| *v != 0.0));
        assert_eq!(pmlde_simulation_copy_pressure(h, p.as_mut_ptr(), 3), PmldeStatus::InvalidArgument);
        assert!(last_error().contains("576"));
        assert_eq!(pmlde_simulation_run(h), PmldeStatus::Ok);
        let mut done = 0;
        assert_eq!(pmlde_simulation_is_done(h, &mut done), PmldeStatus::Ok);
        assert_eq!(done, 1);
        let (mut t, mut n) = (0.0, 0);
        assert_eq!(pmlde_simulation_time(h, &mut t, &mut n), PmldeStatus::Ok);
        assert_eq!(n, 10);
        assert!((t - 0.2).abs() < 1e-12);
        let mut last = PmldeEnergyRow::default();
        assert_eq!(pmlde_simulation_last_row(h, &mut last), PmldeStatus::Ok);
        assert_eq!(last.n, 10);
        pmlde_simulation_free(h);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let (st, h) = from_toml("[grid]\nnx = 3");
    assert_eq!(st, PmldeStatus::Config);
    assert!(h.is_null());
    assert!(!last_error().is_empty());

    let name = CString::new("no_such_preset").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { pmlde_simulation_from_preset(name.as_ptr(), &mut h) }, PmldeStatus::Config);
    assert!(last_error().contains("no_such_preset"));

    unsafe {
        assert_eq!(pmlde_simulation_step(ptr::null_mut(), ptr::null_mut()), PmldeStatus::InvalidArgument);
        assert_eq!(pmlde_simulation_from_toml(ptr::null(), &mut h), PmldeStatus::InvalidArgument);
        pmlde_simulation_free(ptr::null_mut());
    }

    let (st, h) = from_toml(SMALL);
    assert_eq!(st, PmldeStatus::Ok);
    let mut row = PmldeEnergyRow::default();
    assert_eq!(unsafe { pmlde_simulation_last_row(h, &mut row) }, PmldeStatus::InvalidArgument);
    let bad = CString::new("/nonexistent/dir/ck.bin").unwrap();
    assert_eq!(unsafe { pmlde_simulation_save_checkpoint(h, bad.as_ptr()) }, PmldeStatus::Io);
    unsafe { pmlde_simulation_free(h) };
}

#[test]
fn preset_handle_and_scalar_helpers() {
    let name = CString::new("example_4_1").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { pmlde_simulation_from_preset(name.as_ptr(), &mut h) }, PmldeStatus::Ok);
    let mut nx = 0;
    unsafe {
        assert_eq!(pmlde_simulation_dims(h, &mut nx, ptr::null_mut(), ptr::null_mut()), PmldeStatus::Ok);
        pmlde_simulation_free(h);
    }
    assert_eq!(nx, 128);
    assert_eq!(pmlde_psi_eps(0.0, 0.3), 0.5);
    assert!(pmlde_psi_eps(0.1, 0.0).is_nan());
    let v = unsafe { CStr::from_ptr(pmlde_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn artifacts_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_generated_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = manifest.join("include/pmlde.h");
    assert!(header.exists(), "header not generated");
    let lib = artifacts_dir().join("libpmlde_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "pmlde.h"
int main(void) {
    PmldeSimulation *sim = NULL;
    if (pmlde_simulation_from_preset("bogus", &sim) != PMLDE_STATUS_CONFIG || sim != NULL) return 10;
    if (pmlde_last_error_message() == NULL) return 11;
    if (pmlde_simulation_from_preset("example_4_1_free", &sim) != PMLDE_STATUS_OK) return 12;
    PmldeEnergyRow row;
    for (int k = 0; k < 3; ++k)
        if (pmlde_simulation_step(sim, &row) != PMLDE_STATUS_OK) return 13;
    size_t nx = 0, ny = 0, lv = 0;
    pmlde_simulation_dims(sim, &nx, &ny, &lv);
    printf("%llu %zu %zu %.3f\n", (unsigned long long)row.n, nx, ny, pmlde_psi_eps(0.0, 1.0));
    pmlde_simulation_free(sim);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("main");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "4 128 128 0.500");
}
