//! C ABI over the `sda` library.
//!
//! Datasets live behind an opaque [`SdaDataset`] handle. Every fallible
//! function returns an [`SdaStatus`] code; the message of the most recent
//! failure on the calling thread is available from
//! [`sda_last_error_message`]. Matrices are passed row-major, `n` rows by
//! `p` columns, and all indices are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use sda::inference::{SdaTester, StatisticKind, TestConfig};
use sda::lasso::DEFAULT_FOLDS;
use sda::{Dataset, Outcome, SdaError};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DataError = 3,
    NoVarianceSignal = 4,
    NoConvergence = 5,
    Panic = 6,
}

/// Opaque dataset handle. Predictors are centered on construction.
pub struct SdaDataset {
    data: Dataset,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdaStatistic {
    Ks = 0,
    Cvm = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SdaTestOptions {
    /// Number of slices; 0 selects the default `ceil(n^(1/3))`.
    pub h: usize,
    pub l_draws: usize,
    pub alpha: f64,
    pub folds: usize,
    pub seed: u64,
    /// An `SdaStatistic` value.
    pub statistic: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SdaTestResult {
    pub index: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub critical_value: f64,
    /// 1 if the null of no association is rejected.
    pub rejected: u8,
    pub h_count: usize,
    pub degenerate_slices: usize,
    /// LASSO penalty chosen for the nodewise fit.
    pub lambda: f64,
    pub active_size: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &SdaError) -> SdaStatus {
    match e {
        SdaError::NoVarianceSignal => SdaStatus::NoVarianceSignal,
        SdaError::NoConvergence(_) => SdaStatus::NoConvergence,
        e if e.is_data_error() => SdaStatus::DataError,
        _ => SdaStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SdaStatus, String)>) -> SdaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SdaStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SdaStatus::Panic
        }
    }
}

fn lib_err(e: SdaError) -> (SdaStatus, String) {
    (status_of(&e), e.to_string())
}

fn null_err(what: &str) -> (SdaStatus, String) {
    (SdaStatus::NullPointer, format!("{what} is null"))
}

/// Borrows `len` elements; `len == 0` accepts any pointer.
unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (SdaStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null_err(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn build(
    x: *const f64,
    n: usize,
    p: usize,
    y: Outcome,
    out: *mut *mut SdaDataset,
) -> Result<(), (SdaStatus, String)> {
    if out.is_null() {
        return Err(null_err("out"));
    }
    let len = n
        .checked_mul(p)
        .ok_or((SdaStatus::InvalidArgument, "n * p overflows".to_string()))?;
    let xs = slice(x, len, "x")?;
    let m = DMatrix::from_row_slice(n, p, xs);
    let data = Dataset::new(m, y).and_then(|d| d.center_columns()).map_err(lib_err)?;
    *out = Box::into_raw(Box::new(SdaDataset { data }));
    Ok(())
}

/// Creates a dataset with a continuous outcome. `x` is `n x p` row-major,
/// `y` has `n` entries. On success `*out` owns a handle to free with
/// [`sda_dataset_free`].
///
/// # Safety
/// `x` must point to `n * p` doubles, `y` to `n` doubles, `out` to
/// writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn sda_dataset_new(
    x: *const f64,
    n: usize,
    p: usize,
    y: *const f64,
    out: *mut *mut SdaDataset,
) -> SdaStatus {
    guard(|| {
        let y = slice(y, n, "y")?.to_vec();
        build(x, n, p, Outcome::Continuous(y), out)
    })
}

/// Creates a dataset with a right-censored survival outcome; `event[j]`
/// is 1 for an observed event and 0 for censoring.
///
/// # Safety
/// As [`sda_dataset_new`], plus `time` and `event` must each hold `n`
/// entries.
#[no_mangle]
pub unsafe extern "C" fn sda_dataset_new_survival(
    x: *const f64,
    n: usize,
    p: usize,
    time: *const f64,
    event: *const u8,
    out: *mut *mut SdaDataset,
) -> SdaStatus {
    guard(|| {
        let time = slice(time, n, "time")?.to_vec();
        let event = slice(event, n, "event")?.to_vec();
        build(x, n, p, Outcome::Survival { time, event }, out)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `d` must come from a constructor in this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn sda_dataset_free(d: *mut SdaDataset) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Number of observations, or 0 for a null handle.
///
/// # Safety
/// `d` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sda_dataset_n(d: *const SdaDataset) -> usize {
    d.as_ref().map_or(0, |d| d.data.n())
}

/// Number of predictors, or 0 for a null handle.
///
/// # Safety
/// `d` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sda_dataset_p(d: *const SdaDataset) -> usize {
    d.as_ref().map_or(0, |d| d.data.p())
}

/// Library defaults: CvM, 1000 draws, alpha 0.05, 10 folds, seed 0.
#[no_mangle]
pub extern "C" fn sda_test_options_default() -> SdaTestOptions {
    let cfg = TestConfig::default();
    SdaTestOptions {
        h: 0,
        l_draws: cfg.l_draws,
        alpha: cfg.alpha,
        folds: DEFAULT_FOLDS,
        seed: cfg.seed,
        statistic: SdaStatistic::Cvm as i32,
    }
}

/// Tests whether predictor `index` is associated with the outcome given
/// all other predictors. `opts` may be null for the defaults.
///
/// # Safety
/// `d` must be a live handle, `opts` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sda_test_variable(
    d: *const SdaDataset,
    index: usize,
    opts: *const SdaTestOptions,
    out: *mut SdaTestResult,
) -> SdaStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null_err("dataset"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let o = opts.as_ref().copied().unwrap_or_else(|| sda_test_options_default());
        if index >= d.data.p() {
            return Err((
                SdaStatus::InvalidArgument,
                format!("index {index} out of range (p = {})", d.data.p()),
            ));
        }
        let kind = match o.statistic {
            0 => StatisticKind::Ks,
            1 => StatisticKind::Cvm,
            s => return Err((SdaStatus::InvalidArgument, format!("unknown statistic {s}"))),
        };
        let cfg = TestConfig {
            h: (o.h > 0).then_some(o.h),
            l_draws: o.l_draws,
            alpha: o.alpha,
            folds: o.folds,
            seed: o.seed,
        };
        let tester = SdaTester::new(&d.data, cfg).map_err(lib_err)?;
        let t = tester.test(index, None).map_err(lib_err)?;
        let r = t.outcome(kind);
        let fit = t.fit.as_ref();
        *out = SdaTestResult {
            index,
            statistic: r.statistic,
            p_value: r.p_value,
            critical_value: r.critical_value,
            rejected: r.rejected as u8,
            h_count: r.h_count,
            degenerate_slices: r.degenerate_slices.len(),
            lambda: fit.map_or(0.0, |f| f.lambda),
            active_size: fit.map_or(0, |f| f.active_set.len()),
        };
        Ok(())
    })
}

/// Benjamini-Hochberg at level `q`. Writes adjusted p-values and 0/1
/// rejection flags, both in input order.
///
/// # Safety
/// `p_values`, `adjusted` and `rejected` must each hold `m` entries.
#[no_mangle]
pub unsafe extern "C" fn sda_bh_adjust(
    p_values: *const f64,
    m: usize,
    q: f64,
    adjusted: *mut f64,
    rejected: *mut u8,
) -> SdaStatus {
    guard(|| {
        let p = slice(p_values, m, "p_values")?;
        if m > 0 && (adjusted.is_null() || rejected.is_null()) {
            return Err(null_err("output buffer"));
        }
        let rep = sda::bh_adjust(p, q).map_err(lib_err)?;
        let adj = std::slice::from_raw_parts_mut(adjusted, m);
        let rej = std::slice::from_raw_parts_mut(rejected, m);
        adj.copy_from_slice(&rep.adjusted);
        rej.fill(0);
        rep.rejected.iter().for_each(|&k| rej[k] = 1);
        Ok(())
    })
}

/// Default slice count `ceil(n^(1/3))`, clamped to `[2, n/2]`.
#[no_mangle]
pub extern "C" fn sda_default_h(n: usize) -> usize {
    sda::default_h(n)
}

/// Message of the last failed call on this thread, or null after a
/// success. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn sda_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
