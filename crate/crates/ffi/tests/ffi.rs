use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use qdca_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(qdca_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn matrix_round_trip() {
    let data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { qdca_matrix_new(data.as_ptr(), 2, 3, &mut m) }, QdcaStatus::Ok);
    unsafe {
        assert_eq!(qdca_matrix_rows(m), 2);
        assert_eq!(qdca_matrix_cols(m), 3);
        let mut v = 0.0;
        assert_eq!(qdca_matrix_get(m, 1, 0, &mut v), QdcaStatus::Ok);
        assert_eq!(v, 4.0);
        assert_eq!(qdca_matrix_get(m, 2, 0, &mut v), QdcaStatus::InvalidArgument);
        qdca_matrix_free(m);
    }
}

#[test]
fn negative_entry_is_rejected_with_message() {
    let data = [1.0, -2.0];
    let mut m = ptr::null_mut();
    let st = unsafe { qdca_matrix_new(data.as_ptr(), 1, 2, &mut m) };
    assert_eq!(st, QdcaStatus::InvalidArgument);
    assert!(m.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_handles_are_reported() {
    let mut out = [0usize; 2];
    assert_eq!(
        unsafe { qdca_dca_solve(ptr::null(), 2, 10, 0, out.as_mut_ptr()) },
        QdcaStatus::NullPointer
    );
    assert_eq!(unsafe { qdca_matrix_rows(ptr::null()) }, 0);
    unsafe { qdca_matrix_free(ptr::null_mut()) };
}

#[test]
fn dca_recovers_generated_anchors() {
    let mut inst = ptr::null_mut();
    assert_eq!(
        unsafe { qdca_instance_generate(60, 20, 4, 0.0, 3, &mut inst) },
        QdcaStatus::Ok
    );
    let mut truth = [0usize; 4];
    let mut len = 0;
    let mut small = [0usize; 2];
    unsafe {
        assert_eq!(
            qdca_instance_anchors(inst, small.as_mut_ptr(), 2, &mut len),
            QdcaStatus::BufferTooSmall
        );
        assert_eq!(len, 4);
        assert_eq!(
            qdca_instance_anchors(inst, truth.as_mut_ptr(), 4, &mut len),
            QdcaStatus::Ok
        );
        let mut found = [0usize; 4];
        assert_eq!(
            qdca_dca_solve(qdca_instance_matrix(inst), 4, 20, 3, found.as_mut_ptr()),
            QdcaStatus::Ok
        );
        assert_eq!(found, truth);
        qdca_instance_free(inst);
    }
}

#[test]
fn exact_qdca_matches_core() {
    let inst = qdca::generate_separable(40, 12, 3, 0.0, 11).unwrap();
    let mut cfg = qdca_config_default(40, 12, 3, 11);
    cfg.exact = true;
    let core_cfg = {
        let mut c = qdca::QdcaConfig::for_shape(40, 12, 3, 11);
        c.readout = qdca::pipeline::ReadoutMode::Exact;
        c
    };
    let (expected, _) = qdca::qdca_solve(&inst.data, &core_cfg).unwrap();

    let rows: Vec<f64> = (0..40)
        .flat_map(|i| (0..12).map(move |j| (i, j)))
        .map(|(i, j)| inst.data.get(i, j))
        .collect();
    let mut m = ptr::null_mut();
    let mut found = [0usize; 3];
    unsafe {
        assert_eq!(qdca_matrix_new(rows.as_ptr(), 40, 12, &mut m), QdcaStatus::Ok);
        assert_eq!(qdca_qdca_solve(m, &cfg, found.as_mut_ptr()), QdcaStatus::Ok);
        qdca_matrix_free(m);
    }
    assert_eq!(&found[..], expected.indexes());
}

#[test]
fn gap_and_sample_counts() {
    let p = [1.0, 0.0];
    let mut n = 0u64;
    assert_eq!(
        unsafe { qdca_required_samples(p.as_ptr(), 2, 0.1, false, &mut n) },
        QdcaStatus::Ok
    );
    let mut g = QdcaGapReport::default();
    unsafe {
        assert_eq!(qdca_gap_condition(p.as_ptr(), 2, n, 0.1, false, &mut g), QdcaStatus::Ok);
        assert!(g.satisfied);
        assert_eq!(
            qdca_gap_condition(p.as_ptr(), 2, n - 1, 0.1, false, &mut g),
            QdcaStatus::Ok
        );
        assert!(!g.satisfied);
    }

    let flat = [0.5, 0.5];
    assert_eq!(
        unsafe { qdca_required_samples(flat.as_ptr(), 2, 0.1, false, &mut n) },
        QdcaStatus::NoFiniteSampleCount
    );

    let mut rate = 0.0;
    assert_eq!(
        unsafe { qdca_recovery_rate(p.as_ptr(), 2, 5, 20, 1, &mut rate) },
        QdcaStatus::Ok
    );
    assert_eq!(rate, 1.0);
}

#[test]
fn missing_csv_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("absent.csv").to_str().unwrap()).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { qdca_matrix_read_csv(path.as_ptr(), &mut m) }, QdcaStatus::Io);
    assert!(last_error().contains("absent.csv"));
}

#[test]
fn header_declares_the_surface() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/qdca.h")).unwrap();
    for name in [
        "QDCA_STATUS_OK",
        "typedef struct QdcaMatrix QdcaMatrix",
        "qdca_matrix_new",
        "qdca_instance_generate",
        "qdca_dca_solve",
        "qdca_qdca_solve",
        "qdca_required_samples",
        "qdca_last_error_message",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

fn staticlib() -> Option<PathBuf> {
    let deps = std::env::current_exe().ok()?.parent()?.to_path_buf();
    [deps.join("libqdca_ffi.a"), deps.parent()?.join("libqdca_ffi.a")]
        .into_iter()
        .find(|p| p.exists())
}

#[test]
fn c_program_links_against_the_static_library() {
    let Some(lib) = staticlib() else {
        eprintln!("skipping: static library not found");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(root.join("tests/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok 5"));
}
