use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use seamdetect_ffi::*;

fn last_error() -> String {
    let p = sd_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn defaults() -> SdParams {
    let mut p = std::mem::MaybeUninit::<SdParams>::uninit();
    assert_eq!(unsafe { sd_params_default(p.as_mut_ptr()) }, SdStatus::Ok);
    unsafe { p.assume_init() }
}

/// Surface of an axis-aligned cube, `n` steps per side.
fn cube_xyz(n: i32, h: f64) -> Vec<f64> {
    let mut xyz = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                if [i, j, k].iter().any(|&c| c == 0 || c == n) {
                    xyz.extend([i as f64 * h, j as f64 * h, k as f64 * h]);
                }
            }
        }
    }
    xyz
}

#[test]
fn defaults_match_the_library() {
    let p = defaults();
    assert_eq!(p.edge_k, 100);
    assert_eq!(p.edge_lambda, 8.0);
    assert_eq!(p.corner_k, 20);
    assert!((p.theta1_deg - 60.0).abs() < 1e-12);
    assert!((p.theta2_deg - 130.0).abs() < 1e-12);
    assert_eq!(p.epsilon, 3.0);
    assert_eq!(p.corner_radius, 0.0);
}

#[test]
fn cube_corners_through_the_abi() {
    let xyz = cube_xyz(50, 0.002);
    let n = xyz.len() / 3;
    let mut cloud = ptr::null_mut();
    assert_eq!(unsafe { sd_cloud_from_xyz(xyz.as_ptr(), n, &mut cloud) }, SdStatus::Ok);
    assert_eq!(unsafe { sd_cloud_len(cloud) }, n);

    let mut p = defaults();
    p.edge_lambda = 1.0;
    p.corner_k = 21;
    p.epsilon = 1.0;
    p.theta1_deg = 30.0;
    p.theta2_deg = 140.0;
    let mut result = ptr::null_mut();
    assert_eq!(unsafe { sd_detect(cloud, &p, SD_DEPTH_SEAMS, &mut result) }, SdStatus::Ok);

    assert!(unsafe { sd_result_edge_count(result) } > 0);
    let count = unsafe { sd_result_corner_count(result) };
    assert_eq!(count, 8);
    let mut corners = vec![0.0; 3 * count];
    assert_eq!(unsafe { sd_result_corners(result, corners.as_mut_ptr(), count) }, SdStatus::Ok);
    for c in &corners {
        assert!(c.abs() < 0.003 || (c - 0.1).abs() < 0.003, "{c}");
    }

    let mut labels = vec![9u8; n];
    assert_eq!(unsafe { sd_result_labels(result, labels.as_mut_ptr(), n) }, SdStatus::Ok);
    assert!(labels.iter().all(|&l| l <= 2));
    assert!(labels.contains(&2));

    let seams = unsafe { sd_result_seam_count(result) };
    assert_eq!(seams, 12);
    let mut buf = vec![SdSeam { a: 0, b: 0, coverage: 0.0 }; seams];
    assert_eq!(unsafe { sd_result_seams(result, buf.as_mut_ptr(), seams) }, SdStatus::Ok);
    assert!(buf.iter().all(|s| s.a < s.b && s.b < count && s.coverage >= 0.7));

    // Wrong buffer sizes are rejected.
    assert_eq!(
        unsafe { sd_result_corners(result, corners.as_mut_ptr(), count - 1) },
        SdStatus::InvalidArgument
    );
    assert!(last_error().contains("corners"));

    unsafe {
        sd_result_free(result);
        sd_cloud_free(cloud);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut cloud = ptr::null_mut();
    assert_eq!(unsafe { sd_cloud_from_xyz(ptr::null(), 3, &mut cloud) }, SdStatus::NullPointer);
    assert!(cloud.is_null());

    let xyz = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, f64::NAN, 0.0, 0.0];
    assert_eq!(unsafe { sd_cloud_from_xyz(xyz.as_ptr(), 3, &mut cloud) }, SdStatus::InvalidArgument);

    let path = CString::new("/nonexistent/cloud.ply").unwrap();
    assert_eq!(unsafe { sd_cloud_load(path.as_ptr(), &mut cloud) }, SdStatus::Io);
    assert!(last_error().contains("/nonexistent/cloud.ply"));

    let small = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
    assert_eq!(unsafe { sd_cloud_from_xyz(small.as_ptr(), 3, &mut cloud) }, SdStatus::Ok);
    let p = defaults();
    let mut result = ptr::null_mut();
    assert_eq!(unsafe { sd_detect(cloud, &p, SD_DEPTH_EDGES, &mut result) }, SdStatus::TooFewPoints);
    assert!(result.is_null());
    assert_eq!(unsafe { sd_detect(cloud, &p, 7, &mut result) }, SdStatus::InvalidArgument);
    assert_eq!(unsafe { sd_detect(cloud, ptr::null(), 0, &mut result) }, SdStatus::NullPointer);
    let bad = SdParams { edge_lambda: -1.0, ..p };
    assert_eq!(unsafe { sd_detect(cloud, &bad, 0, &mut result) }, SdStatus::InvalidArgument);

    assert_eq!(unsafe { sd_result_corner_count(ptr::null()) }, 0);
    unsafe {
        sd_cloud_free(cloud);
        sd_cloud_free(ptr::null_mut());
        sd_result_free(ptr::null_mut());
    }
}

#[test]
fn loads_xyz_files() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.xyz");
    std::fs::write(&file, "0 0 0\n1 0 0\n0 1 0\n0 0 1\n").unwrap();
    let path = CString::new(file.to_str().unwrap()).unwrap();
    let mut cloud = ptr::null_mut();
    assert_eq!(unsafe { sd_cloud_load(path.as_ptr(), &mut cloud) }, SdStatus::Ok);
    assert_eq!(unsafe { sd_cloud_len(cloud) }, 4);
    unsafe { sd_cloud_free(cloud) };
    let v = unsafe { CStr::from_ptr(sd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

/// The newest static library next to this test binary, if any.
fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let deps = exe.parent()?;
    let mut found: Vec<(std::time::SystemTime, PathBuf)> = Vec::new();
    for dir in [deps, deps.parent()?] {
        for entry in std::fs::read_dir(dir).ok()?.flatten() {
            let name = entry.file_name().to_string_lossy().into_owned();
            if name.starts_with("libseamdetect_ffi") && name.ends_with(".a") {
                found.push((entry.metadata().ok()?.modified().ok()?, entry.path()));
            }
        }
    }
    found.into_iter().max().map(|(_, p)| p)
}

const C_PROGRAM: &str = r#"
#include "seamdetect.h"
#include <stdio.h>

int main(void) {
    SdParams p;
    if (sd_params_default(&p) != SD_STATUS_OK) return 1;
    double xyz[] = {0, 0, 0, 1, 0, 0, 0, 1, 0};
    SdCloud *cloud = NULL;
    if (sd_cloud_from_xyz(xyz, 3, &cloud) != SD_STATUS_OK) return 2;
    SdResult *result = NULL;
    SdStatus s = sd_detect(cloud, &p, SD_DEPTH_EDGES, &result);
    if (s != SD_STATUS_TOO_FEW_POINTS || result != NULL) return 3;
    printf("%s\n", sd_last_error());
    sd_cloud_free(cloud);
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let syntax = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header_dir())
        .arg(&src)
        .output()
        .unwrap();
    assert!(syntax.status.success(), "{}", String::from_utf8_lossy(&syntax.stderr));

    let Some(lib) = static_lib() else {
        eprintln!("static library not found; skipping link step");
        return;
    };
    let exe = dir.path().join("main");
    let link = Command::new(&cc)
        .args(["-std=c99", "-I"])
        .arg(header_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(link.status.success(), "{}", String::from_utf8_lossy(&link.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).contains("not enough points"));
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
