//! Non-negative least squares used to validate separability.
//!
//! Solves `min_{a >= 0} || row - B^T a ||_2` where the rows of `B` are the
//! basis vectors. The solver is projected gradient with step `1/L`
//! (`L = ||B||_2^2`) plus monotone Nesterov momentum with adaptive restart;
//! accepted iterates never increase the objective.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 500;

#[derive(Debug, Clone)]
pub struct NnlsResult {
    pub residual: f64,
    pub weights: Vec<f64>,
    pub iterations: usize,
    /// Residual of the accepted iterate after each step, starting at `a = 0`.
    pub residual_trace: Vec<f64>,
}

pub fn nnls_residual(row: &[f64], basis: &DMatrix<f64>) -> Result<NnlsResult> {
    nnls_with_budget(row, basis, DEFAULT_MAX_ITER)
}

pub fn nnls_with_budget(row: &[f64], basis: &DMatrix<f64>, max_iter: usize) -> Result<NnlsResult> {
    if basis.ncols() != row.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.ncols(),
            actual: row.len(),
        });
    }
    let k = basis.nrows();
    let y = DVector::from_column_slice(row);
    let row_norm = y.norm();
    let gram = basis * basis.transpose();
    let by = basis * &y;
    let lipschitz = if k == 0 {
        0.0
    } else {
        SymmetricEigen::new(gram.clone())
            .eigenvalues
            .iter()
            .fold(0.0_f64, |a, &l| a.max(l))
    };

    let residual_of = |a: &DVector<f64>| -> f64 {
        if k == 0 {
            return row_norm;
        }
        (&y - basis.transpose() * a).norm()
    };

    let mut x = DVector::zeros(k);
    let mut fx = row_norm;
    let mut trace = vec![fx];
    if lipschitz <= 0.0 || fx == 0.0 {
        return Ok(NnlsResult {
            residual: fx,
            weights: x.iter().copied().collect(),
            iterations: 0,
            residual_trace: trace,
        });
    }

    let step = 1.0 / lipschitz;
    let project = |v: DVector<f64>| v.map(|e| e.max(0.0));
    let mut y_acc = x.clone();
    let mut t = 1.0_f64;
    let mut iterations = 0;
    let floor = 1e-15 * row_norm.max(1.0);

    for _ in 0..max_iter {
        iterations += 1;
        let grad = &gram * &y_acc - &by;
        let z = project(&y_acc - step * grad);
        let fz = residual_of(&z);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let x_prev = x.clone();
        if fz <= fx {
            x = z.clone();
            fx = fz;
            y_acc = &x + ((t - 1.0) / t_next) * (&x - &x_prev);
            t = t_next;
        } else {
            // Momentum overshot: restart from the last accepted point.
            t = 1.0;
            let grad = &gram * &x - &by;
            let z = project(&x - step * grad);
            let fz = residual_of(&z);
            if fz <= fx {
                x = z;
                fx = fz;
            }
            y_acc = x.clone();
        }
        trace.push(fx);
        if fx <= floor || (x == x_prev && t == 1.0) {
            break;
        }
    }

    Ok(NnlsResult {
        residual: fx,
        weights: x.iter().copied().collect(),
        iterations,
        residual_trace: trace,
    })
}
