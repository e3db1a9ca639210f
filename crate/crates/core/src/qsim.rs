//! Classical simulation of the quantum projection step.
//!
//! States are dense complex amplitude vectors. The linear-operation map is
//! realized from its net effect on the eigenbasis of the embedded matrix
//! rather than gate by gate: the input amplitudes are expanded in the
//! eigenvectors `u_j`, each coefficient is multiplied by `lambda_j / (C d)`,
//! and the ancilla post-selection renormalizes the result.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{Spectrum, SymmetricMatrix};

/// Largest register dimension accepted by [`evolve_and_trace`]; the composite
/// system then has dimension 256.
pub const MAX_TRACE_DIM: usize = 16;

const NORM_TOL: f64 = 1e-12;

/// Pure state: unit-norm complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// Normalizes the given amplitudes.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if amplitudes.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Multiplies every amplitude by `phase` (expected unit modulus).
    pub fn with_global_phase(&self, phase: Complex64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
        }
    }
}

pub fn amplitude_encode(v: &[f64]) -> Result<QuantumState> {
    QuantumState::from_amplitudes(v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
}

/// `p_k = |<k|psi>|^2`.
pub fn outcome_distribution(psi: &QuantumState) -> Vec<f64> {
    psi.amplitudes.iter().map(|a| a.norm_sqr()).collect()
}

/// Mixed state over a `dim`-level register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates hermiticity (1e-12), unit trace (1e-10) and positivity
    /// (smallest eigenvalue >= -1e-10).
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        let d = matrix.nrows();
        for i in 0..d {
            for j in i..d {
                if (matrix[(i, j)] - matrix[(j, i)].conj()).norm() > 1e-12 {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        let tr = matrix.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidParameter(format!("density matrix trace is {tr}")));
        }
        let min_eig = SymmetricEigen::new(matrix.clone())
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &l| a.min(l));
        if min_eig < -1e-10 {
            return Err(Error::InvalidParameter(format!(
                "density matrix has negative eigenvalue {min_eig}"
            )));
        }
        Ok(Self { matrix })
    }

    /// `|psi><psi|`.
    pub fn pure(psi: &QuantumState) -> Self {
        let d = psi.dim();
        let a = psi.amplitudes();
        Self {
            matrix: DMatrix::from_fn(d, d, |i, j| a[i] * a[j].conj()),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }
}

/// The one-sparse operator `S_X = sum_{i,j} X_ij |i><j| (x) |j><i|` on the
/// `d^2`-dimensional composite space. Composite index of `|i>|j>` is `i d + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedSwap {
    register_dim: usize,
    /// `(row, col, value)` with `row = i d + j`, `col = j d + i`, sorted by row.
    entries: Vec<(usize, usize, f64)>,
}

impl ModifiedSwap {
    pub fn register_dim(&self) -> usize {
        self.register_dim
    }

    /// `d^2`.
    pub fn dim(&self) -> usize {
        self.register_dim * self.register_dim
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for &(r, c, v) in &self.entries {
            out[(r, c)] = v;
        }
        out
    }

    /// No row or column holds more than one non-zero.
    pub fn is_one_sparse(&self) -> bool {
        let mut rows = vec![0u8; self.dim()];
        let mut cols = vec![0u8; self.dim()];
        for &(r, c, _) in &self.entries {
            rows[r] += 1;
            cols[c] += 1;
        }
        rows.iter().chain(&cols).all(|&k| k <= 1)
    }

    pub fn is_hermitian(&self) -> bool {
        self.entries.iter().all(|&(r, c, v)| {
            self.entries
                .binary_search_by(|e| e.0.cmp(&c))
                .map(|k| self.entries[k].1 == r && self.entries[k].2 == v)
                .unwrap_or(false)
        })
    }
}

pub fn build_modified_swap(x: &SymmetricMatrix) -> ModifiedSwap {
    let d = x.dim();
    let mut entries = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let v = x.get(i, j);
            if v != 0.0 {
                entries.push((i * d + j, j * d + i, v));
            }
        }
    }
    ModifiedSwap {
        register_dim: d,
        entries,
    }
}

/// Row-sparse unitary with at most two non-zeros per row.
struct SparseUnitary {
    rows: Vec<Vec<(usize, Complex64)>>,
}

/// `exp(i S_X t)`. Composite states `|i,j>` and `|j,i>` span invariant
/// subspaces on which `S_X` acts as `X_ij * sigma_x` (or as the scalar `X_ii`
/// when `i == j`), so the exponential is exact per block.
fn swap_exponential(x: &SymmetricMatrix, t: f64) -> SparseUnitary {
    let d = x.dim();
    let mut rows = vec![Vec::new(); d * d];
    for i in 0..d {
        let a = i * d + i;
        rows[a].push((a, Complex64::from_polar(1.0, x.get(i, i) * t)));
        for j in (i + 1)..d {
            let (a, b) = (i * d + j, j * d + i);
            let theta = x.get(i, j) * t;
            let c = Complex64::new(theta.cos(), 0.0);
            let s = Complex64::new(0.0, theta.sin());
            rows[a].push((a, c));
            rows[a].push((b, s));
            rows[b].push((b, c));
            rows[b].push((a, s));
        }
    }
    SparseUnitary { rows }
}

impl SparseUnitary {
    /// `U M U^dagger`.
    fn conjugate(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = m.nrows();
        let mut um = DMatrix::<Complex64>::zeros(n, n);
        for (r, row) in self.rows.iter().enumerate() {
            for &(k, u) in row {
                for c in 0..n {
                    um[(r, c)] += u * m[(k, c)];
                }
            }
        }
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        for (c, row) in self.rows.iter().enumerate() {
            for &(k, u) in row {
                let uc = u.conj();
                for r in 0..n {
                    out[(r, c)] += um[(r, k)] * uc;
                }
            }
        }
        out
    }
}

pub(crate) fn check_trace_dim(d: usize) -> Result<()> {
    if d > MAX_TRACE_DIM {
        return Err(Error::TooLarge {
            dim: d,
            limit: MAX_TRACE_DIM,
        });
    }
    Ok(())
}

/// `tr_1[ e^{i S_X dt} (rho (x) sigma) e^{-i S_X dt} ]` with `rho` the uniform
/// superposition projector on the first register.
pub fn evolve_and_trace(x: &SymmetricMatrix, sigma: &DensityMatrix, dt: f64) -> Result<DensityMatrix> {
    let d = x.dim();
    check_trace_dim(d)?;
    if sigma.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: sigma.dim(),
        });
    }
    if dt == 0.0 {
        return Ok(sigma.clone());
    }
    let s = sigma.as_matrix();
    let inv_d = 1.0 / d as f64;
    // rho (x) sigma: rho_{ik} = 1/d for all i, k.
    let joint = DMatrix::from_fn(d * d, d * d, |r, c| s[(r % d, c % d)] * inv_d);
    let evolved = swap_exponential(x, dt).conjugate(&joint);
    let reduced = DMatrix::from_fn(d, d, |j, l| (0..d).map(|i| evolved[(i * d + j, i * d + l)]).sum());
    Ok(DensityMatrix { matrix: reduced })
}

/// `exp(i X t)` from the eigendecomposition of `X`.
pub fn unitary_evolution(x: &SymmetricMatrix, t: f64) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(x.as_matrix().clone());
    let d = x.dim();
    let mut u = DMatrix::zeros(d, d);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, l * t);
        let v = eig.eigenvectors.column(k);
        for i in 0..d {
            for j in 0..d {
                u[(i, j)] += phase * v[i] * v[j];
            }
        }
    }
    u
}

/// `e^{i X dt / d} sigma e^{-i X dt / d}`, the target of the swap evolution.
pub fn direct_evolution(x: &SymmetricMatrix, sigma: &DensityMatrix, dt: f64) -> Result<DensityMatrix> {
    let d = x.dim();
    if sigma.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: sigma.dim(),
        });
    }
    if dt == 0.0 {
        return Ok(sigma.clone());
    }
    let u = unitary_evolution(x, dt / d as f64);
    Ok(DensityMatrix {
        matrix: &u * sigma.as_matrix() * u.adjoint(),
    })
}

/// Frobenius distance between the swap-evolved and directly evolved states.
pub fn trace_out_error(x: &SymmetricMatrix, sigma: &DensityMatrix, dt: f64) -> Result<f64> {
    let a = evolve_and_trace(x, sigma, dt)?;
    let b = direct_evolution(x, sigma, dt)?;
    Ok((a.as_matrix() - b.as_matrix()).norm())
}

/// Output of the simulated linear operation.
#[derive(Debug, Clone)]
pub struct LinearOpResult {
    pub state: QuantumState,
    /// Probability of the ancilla reading 1.
    pub success_probability: f64,
    pub kept_eigenpairs: usize,
    /// The rescaling constant `C` that was used.
    pub scale: f64,
}

/// Default `C`: `1/|lambda_max|`, raised to `|lambda_max|/d` when needed so
/// that no ancilla amplitude `|lambda_j| / (C d)` exceeds one.
pub fn default_scale(spec: &Spectrum) -> f64 {
    let lmax = spec.max_abs_eigenvalue();
    if lmax == 0.0 {
        return 1.0;
    }
    (1.0 / lmax).max(lmax / spec.dim() as f64)
}

/// Produces the state proportional to `X beta`, restricted to eigenpairs with
/// `|lambda_j| / d >= epsilon`.
pub fn apply_linear_operation(spec: &Spectrum, beta: &QuantumState, epsilon: f64) -> Result<LinearOpResult> {
    apply_linear_operation_scaled(spec, beta, epsilon, default_scale(spec))
}

/// [`apply_linear_operation`] with an explicit rescaling constant `C > 0`.
pub fn apply_linear_operation_scaled(
    spec: &Spectrum,
    beta: &QuantumState,
    epsilon: f64,
    scale: f64,
) -> Result<LinearOpResult> {
    let d = spec.dim();
    if beta.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: beta.dim(),
        });
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be > 0, got {scale}")));
    }
    let denom = scale * d as f64;
    let u = spec.eigenvectors();
    let b = beta.amplitudes();
    let mut out = vec![Complex64::new(0.0, 0.0); d];
    let mut success = 0.0;
    let mut kept = 0;
    let mut mass = 0.0;
    for (j, &lambda) in spec.eigenvalues().iter().enumerate() {
        if lambda.abs() / (d as f64) < epsilon {
            continue;
        }
        kept += 1;
        let col = u.column(j);
        let beta_j: Complex64 = col.iter().zip(b).map(|(&uk, &bk)| bk * uk).sum();
        let coeff = beta_j * (lambda / denom);
        success += coeff.norm_sqr();
        mass += (beta_j * lambda).norm();
        for (o, &uk) in out.iter_mut().zip(col.iter()) {
            *o += coeff * uk;
        }
    }
    if kept == 0 || mass == 0.0 {
        return Err(Error::DegenerateLinearOperation);
    }
    let state = QuantumState::from_amplitudes(out).map_err(|_| Error::DegenerateLinearOperation)?;
    debug_assert!((state.norm() - 1.0).abs() < NORM_TOL);
    Ok(LinearOpResult {
        state,
        success_probability: success,
        kept_eigenpairs: kept,
        scale,
    })
}
