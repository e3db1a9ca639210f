//! C interface to the `qdca` library.
//!
//! Matrices and generated instances cross the boundary as opaque handles that
//! must be released with the matching `*_free` function. Every fallible call
//! returns a [`QdcaStatus`]; on failure, [`qdca_last_error_message`] describes
//! the most recent error on the calling thread. Indexes are 0-based.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use qdca::pipeline::{DirectionScheme, DirectionSupport, QdcaConfig as CoreConfig, ReadoutMode};
use qdca::postsel::{self, GapFormula};
use qdca::{Error, NonnegMatrix};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdcaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InsufficientVotes = 4,
    Degenerate = 5,
    NoFiniteSampleCount = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque non-negative data matrix.
pub struct QdcaMatrix(NonnegMatrix);

/// Opaque generated instance (matrix plus ground-truth anchors).
pub struct QdcaInstance {
    matrix: QdcaMatrix,
    anchors: Vec<usize>,
}

/// Parameters of the simulated quantum pipeline.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QdcaConfig {
    pub r: usize,
    /// Base projection count; `2 s` directions are used.
    pub s: usize,
    /// Measurement budget per projection.
    pub samples: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub restrict_to_rows: bool,
    /// Take the mode of the exact outcome distribution instead of sampling.
    pub exact: bool,
    /// Draw directions on the whole embedded sphere instead of the column block.
    pub full_support: bool,
    /// Use `s` directions and their negations.
    pub paired: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QdcaGapReport {
    pub p_max: f64,
    pub p_sec_max: f64,
    pub threshold: f64,
    pub satisfied: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> QdcaStatus {
    match err {
        Error::DimensionMismatch { .. } => QdcaStatus::DimensionMismatch,
        Error::InsufficientVotes { .. } => QdcaStatus::InsufficientVotes,
        Error::DegenerateLinearOperation | Error::DegenerateProjection(_) | Error::ZeroVector => QdcaStatus::Degenerate,
        Error::NoFiniteSampleCount => QdcaStatus::NoFiniteSampleCount,
        Error::Io { .. } | Error::Parse { .. } => QdcaStatus::Io,
        _ => QdcaStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F>(f: F) -> QdcaStatus
where
    F: FnOnce() -> Result<(), (QdcaStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QdcaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside qdca");
            QdcaStatus::Panic
        }
    }
}

fn core(err: Error) -> (QdcaStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (QdcaStatus, String) {
    (QdcaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn probabilities<'a>(p: *const f64, k: usize) -> Result<&'a [f64], (QdcaStatus, String)> {
    if p.is_null() {
        return Err(null("p"));
    }
    Ok(slice::from_raw_parts(p, k))
}

/// Message of the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qdca_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copies a row-major `rows x cols` array into a new matrix handle.
#[no_mangle]
pub unsafe extern "C" fn qdca_matrix_new(
    data: *const f64,
    rows: usize,
    cols: usize,
    out: *mut *mut QdcaMatrix,
) -> QdcaStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        if rows == 0 || cols == 0 {
            return Err((QdcaStatus::InvalidArgument, "matrix must be at least 1x1".into()));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or((QdcaStatus::InvalidArgument, "size overflow".to_string()))?;
        let values = slice::from_raw_parts(data, len);
        let rows_vec: Vec<&[f64]> = values.chunks(cols).collect();
        let m = NonnegMatrix::from_rows(&rows_vec).map_err(core)?;
        *out = Box::into_raw(Box::new(QdcaMatrix(m)));
        Ok(())
    })
}

/// Reads a matrix CSV file (one row per line, no header).
#[no_mangle]
pub unsafe extern "C" fn qdca_matrix_read_csv(path: *const c_char, out: *mut *mut QdcaMatrix) -> QdcaStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (QdcaStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let m = qdca::io::read_matrix_csv(Path::new(path)).map_err(core)?;
        *out = Box::into_raw(Box::new(QdcaMatrix(m)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn qdca_matrix_free(m: *mut QdcaMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Row count, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn qdca_matrix_rows(m: *const QdcaMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// Column count, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn qdca_matrix_cols(m: *const QdcaMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

#[no_mangle]
pub unsafe extern "C" fn qdca_matrix_get(m: *const QdcaMatrix, row: usize, col: usize, out: *mut f64) -> QdcaStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("matrix"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if row >= m.0.rows() || col >= m.0.cols() {
            return Err((QdcaStatus::InvalidArgument, format!("({row}, {col}) out of range")));
        }
        *out = m.0.get(row, col);
        Ok(())
    })
}

/// Generates a separable instance; see `generate_separable` in the core crate.
#[no_mangle]
pub unsafe extern "C" fn qdca_instance_generate(
    n: usize,
    m: usize,
    r: usize,
    noise_level: f64,
    seed: u64,
    out: *mut *mut QdcaInstance,
) -> QdcaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inst = qdca::generate_separable(n, m, r, noise_level, seed).map_err(core)?;
        *out = Box::into_raw(Box::new(QdcaInstance {
            matrix: QdcaMatrix(inst.data),
            anchors: inst.true_anchors,
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn qdca_instance_free(inst: *mut QdcaInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Borrowed view of the instance's data matrix; valid while the instance lives.
#[no_mangle]
pub unsafe extern "C" fn qdca_instance_matrix(inst: *const QdcaInstance) -> *const QdcaMatrix {
    inst.as_ref().map_or(ptr::null(), |i| &i.matrix as *const QdcaMatrix)
}

/// Copies the true anchor indexes into `out` (capacity `cap`) and stores
/// their count in `len`.
#[no_mangle]
pub unsafe extern "C" fn qdca_instance_anchors(
    inst: *const QdcaInstance,
    out: *mut usize,
    cap: usize,
    len: *mut usize,
) -> QdcaStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("instance"))?;
        if len.is_null() {
            return Err(null("len"));
        }
        let anchors = &inst.anchors;
        *len = anchors.len();
        if cap < anchors.len() {
            return Err((QdcaStatus::BufferTooSmall, format!("need {} slots", anchors.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(anchors.as_ptr(), out, anchors.len());
        Ok(())
    })
}

/// Classical DCA. Writes `r` ascending anchor indexes to `out`.
#[no_mangle]
pub unsafe extern "C" fn qdca_dca_solve(
    m: *const QdcaMatrix,
    r: usize,
    s: usize,
    seed: u64,
    out: *mut usize,
) -> QdcaStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("matrix"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let set = qdca::dca_solve(&m.0, r, s, seed).map_err(core)?;
        ptr::copy_nonoverlapping(set.indexes().as_ptr(), out, set.len());
        Ok(())
    })
}

/// Default pipeline parameters for an `n x m` input.
#[no_mangle]
pub extern "C" fn qdca_config_default(n: usize, m: usize, r: usize, seed: u64) -> QdcaConfig {
    let c = CoreConfig::for_shape(n, m, r, seed);
    QdcaConfig {
        r: c.r,
        s: c.s,
        samples: c.samples,
        epsilon: c.epsilon,
        delta: c.delta,
        seed: c.seed,
        restrict_to_rows: c.restrict_to_rows,
        exact: false,
        full_support: false,
        paired: false,
    }
}

impl From<&QdcaConfig> for CoreConfig {
    fn from(c: &QdcaConfig) -> Self {
        CoreConfig {
            r: c.r,
            s: c.s,
            samples: c.samples,
            epsilon: c.epsilon,
            delta: c.delta,
            seed: c.seed,
            restrict_to_rows: c.restrict_to_rows,
            readout: if c.exact {
                ReadoutMode::Exact
            } else {
                ReadoutMode::Sampled
            },
            directions: if c.paired {
                DirectionScheme::Paired
            } else {
                DirectionScheme::Fresh
            },
            support: if c.full_support {
                DirectionSupport::Full
            } else {
                DirectionSupport::ColumnBlock
            },
        }
    }
}

/// Simulated quantum anchoring. Writes `cfg->r` ascending indexes to `out`.
#[no_mangle]
pub unsafe extern "C" fn qdca_qdca_solve(m: *const QdcaMatrix, cfg: *const QdcaConfig, out: *mut usize) -> QdcaStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("matrix"))?;
        let cfg = cfg.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (set, _) = qdca::qdca_solve(&m.0, &CoreConfig::from(cfg)).map_err(core)?;
        ptr::copy_nonoverlapping(set.indexes().as_ptr(), out, set.len());
        Ok(())
    })
}

fn formula(literal: bool) -> GapFormula {
    if literal {
        GapFormula::Literal
    } else {
        GapFormula::SupportSize
    }
}

/// Evaluates the recovery gap condition for `samples` draws from `p[0..k]`.
#[no_mangle]
pub unsafe extern "C" fn qdca_gap_condition(
    p: *const f64,
    k: usize,
    samples: u64,
    delta: f64,
    literal: bool,
    out: *mut QdcaGapReport,
) -> QdcaStatus {
    guard(|| {
        let p = probabilities(p, k)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let g = postsel::gap_condition_with(p, samples, delta, formula(literal)).map_err(core)?;
        *out = QdcaGapReport {
            p_max: g.p_max,
            p_sec_max: g.p_sec_max,
            threshold: g.threshold,
            satisfied: g.satisfied,
        };
        Ok(())
    })
}

/// Smallest sample count satisfying the gap condition.
#[no_mangle]
pub unsafe extern "C" fn qdca_required_samples(
    p: *const f64,
    k: usize,
    delta: f64,
    literal: bool,
    out: *mut u64,
) -> QdcaStatus {
    guard(|| {
        let p = probabilities(p, k)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = postsel::required_samples_with(p, delta, formula(literal)).map_err(core)?;
        Ok(())
    })
}

/// Fraction of `trials` in which the most frequent of `samples` draws is the
/// mode of `p`.
#[no_mangle]
pub unsafe extern "C" fn qdca_recovery_rate(
    p: *const f64,
    k: usize,
    samples: u64,
    trials: usize,
    seed: u64,
    out: *mut f64,
) -> QdcaStatus {
    guard(|| {
        let p = probabilities(p, k)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = postsel::empirical_recovery_rate(p, samples, trials, seed).map_err(core)?;
        Ok(())
    })
}
