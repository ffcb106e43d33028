use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sda::inference::{SdaTester, StatisticKind, TestConfig};
use sda::{Dataset, Outcome};
use sda_ffi::*;

fn fixture(n: usize, p: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
    let y = (0..n)
        .map(|i| x[i * p] - x[i * p + p - 1] + 0.5 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    (x, y)
}

fn last_error() -> String {
    let p = sda_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn new_dataset(x: &[f64], n: usize, p: usize, y: &[f64]) -> *mut SdaDataset {
    let mut d = ptr::null_mut();
    let s = unsafe { sda_dataset_new(x.as_ptr(), n, p, y.as_ptr(), &mut d) };
    assert_eq!(s, SdaStatus::Ok);
    d
}

#[test]
fn matches_library_result() {
    let (n, p) = (90, 5);
    let (x, y) = fixture(n, p, 11);
    let d = new_dataset(&x, n, p, &y);
    assert_eq!(unsafe { (sda_dataset_n(d), sda_dataset_p(d)) }, (n, p));

    let mut opts = sda_test_options_default();
    opts.l_draws = 400;
    opts.seed = 3;
    opts.statistic = SdaStatistic::Ks as i32;
    let mut out = SdaTestResult::default();
    assert_eq!(unsafe { sda_test_variable(d, 2, &opts, &mut out) }, SdaStatus::Ok);
    assert!(sda_last_error_message().is_null());

    let data = Dataset::new(DMatrix::from_row_slice(n, p, &x), Outcome::Continuous(y))
        .unwrap()
        .center_columns()
        .unwrap();
    let cfg = TestConfig {
        l_draws: 400,
        seed: 3,
        ..TestConfig::default()
    };
    let t = SdaTester::new(&data, cfg).unwrap().test(2, None).unwrap();
    let ks = t.outcome(StatisticKind::Ks);
    assert_eq!(out.statistic, ks.statistic);
    assert_eq!(out.p_value, ks.p_value);
    assert_eq!(out.critical_value, ks.critical_value);
    assert_eq!(out.rejected == 1, ks.rejected);
    assert_eq!(out.h_count, sda_default_h(n));
    assert_eq!(out.lambda, t.fit.as_ref().unwrap().lambda);
    unsafe { sda_dataset_free(d) };
}

#[test]
fn error_codes() {
    let (x, y) = fixture(20, 3, 1);
    let mut d = ptr::null_mut();
    let s = unsafe { sda_dataset_new(ptr::null(), 20, 3, y.as_ptr(), &mut d) };
    assert_eq!(s, SdaStatus::NullPointer);
    assert!(last_error().contains("x is null"));

    let mut bad = x.clone();
    bad[4] = f64::NAN;
    let s = unsafe { sda_dataset_new(bad.as_ptr(), 20, 3, y.as_ptr(), &mut d) };
    assert_eq!(s, SdaStatus::DataError);
    assert!(d.is_null());

    let d = new_dataset(&x, 20, 3, &y);
    let mut out = SdaTestResult::default();
    assert_eq!(unsafe { sda_test_variable(d, 3, ptr::null(), &mut out) }, SdaStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));
    let mut opts = sda_test_options_default();
    opts.statistic = 9;
    assert_eq!(unsafe { sda_test_variable(d, 0, &opts, &mut out) }, SdaStatus::InvalidArgument);
    opts = sda_test_options_default();
    opts.alpha = 1.5;
    assert_eq!(unsafe { sda_test_variable(d, 0, &opts, &mut out) }, SdaStatus::InvalidArgument);
    assert_eq!(unsafe { sda_test_variable(ptr::null(), 0, &opts, &mut out) }, SdaStatus::NullPointer);
    unsafe { sda_dataset_free(d) };
    unsafe { sda_dataset_free(ptr::null_mut()) };
    assert_eq!(unsafe { sda_dataset_n(ptr::null()) }, 0);
}

#[test]
fn survival_event_codes_validated() {
    let (x, _) = fixture(30, 2, 5);
    let time: Vec<f64> = (0..30).map(|i| 1.0 + i as f64).collect();
    let mut event = vec![1u8; 30];
    event[7] = 2;
    let mut d = ptr::null_mut();
    let s = unsafe { sda_dataset_new_survival(x.as_ptr(), 30, 2, time.as_ptr(), event.as_ptr(), &mut d) };
    assert_eq!(s, SdaStatus::DataError);
    assert!(last_error().contains("event indicator"));
    event[7] = 0;
    let s = unsafe { sda_dataset_new_survival(x.as_ptr(), 30, 2, time.as_ptr(), event.as_ptr(), &mut d) };
    assert_eq!(s, SdaStatus::Ok);
    unsafe { sda_dataset_free(d) };
}

#[test]
fn bh_through_c_abi() {
    let p = [0.01, 0.04, 0.03, 0.005];
    let mut adj = [0.0; 4];
    let mut rej = [0u8; 4];
    let s = unsafe { sda_bh_adjust(p.as_ptr(), 4, 0.05, adj.as_mut_ptr(), rej.as_mut_ptr()) };
    assert_eq!(s, SdaStatus::Ok);
    assert_eq!(rej, [1, 1, 1, 1]);
    assert!((adj[1] - 0.04).abs() < 1e-15);
    let s = unsafe { sda_bh_adjust(p.as_ptr(), 4, 0.0, adj.as_mut_ptr(), rej.as_mut_ptr()) };
    assert_eq!(s, SdaStatus::InvalidArgument);
    assert_eq!(sda_default_h(1000), 10);
}

fn profile_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/sda.h")).unwrap();
    for sym in [
        "sda_dataset_new",
        "sda_dataset_new_survival",
        "sda_dataset_free",
        "sda_test_variable",
        "sda_bh_adjust",
        "sda_default_h",
        "sda_last_error_message",
        "typedef struct SdaDataset SdaDataset;",
        "SDA_STATUS_DATA_ERROR = 3",
    ] {
        assert!(header.contains(sym), "header lacks {sym}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let lib = profile_dir().join("libsda_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("sda_smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .expect("run cc");
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke exited with {:?}: {}", out.status, String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
