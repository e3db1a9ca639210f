//! Synthetic separable instances.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal};

use crate::error::{Error, Result};
use crate::matrix::NonnegMatrix;
use crate::nnls::nnls_residual;
use crate::seed;

/// Anchors whose NNLS residual against the other anchors is at or below this
/// are considered degenerate.
pub const ANCHOR_RESIDUAL_MIN: f64 = 1e-6;
const MAX_ATTEMPTS: usize = 16;

#[derive(Debug, Clone)]
pub struct SeparableInstance {
    pub data: NonnegMatrix,
    /// Row indexes of the anchors, ascending, 0-based.
    pub true_anchors: Vec<usize>,
    /// `n x r` mixing weights; anchor rows are one-hot, other rows sum to 1.
    pub mixing: DMatrix<f64>,
    pub noise_level: f64,
    pub seed: u64,
}

impl SeparableInstance {
    pub fn rank(&self) -> usize {
        self.true_anchors.len()
    }
}

/// Draws `r` unit-norm anchor rows, mixes the remaining `n - r` rows from the
/// flat simplex, and adds clipped Gaussian noise of standard deviation
/// `noise_level`.
pub fn generate_separable(n: usize, m: usize, r: usize, noise_level: f64, seed: u64) -> Result<SeparableInstance> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("n and m must be >= 1".into()));
    }
    if r == 0 || r > n.min(m) {
        return Err(Error::InvalidParameter(format!(
            "r must satisfy 1 <= r <= min(n, m) = {}, got {r}",
            n.min(m)
        )));
    }
    if !(noise_level.is_finite() && noise_level >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise level must be finite and >= 0, got {noise_level}"
        )));
    }

    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = seed::rng(seed::derive(seed, "generate", attempt as u64));
        let anchors = draw_anchor_rows(&mut rng, r, m);
        if !anchors_are_extreme(&anchors)? {
            continue;
        }
        let mut positions = index::sample(&mut rng, n, r).into_vec();
        positions.sort_unstable();

        let mut mixing = DMatrix::zeros(n, r);
        let mut next_anchor = 0;
        for i in 0..n {
            if next_anchor < r && positions[next_anchor] == i {
                mixing[(i, next_anchor)] = 1.0;
                next_anchor += 1;
            } else {
                let w: Vec<f64> = (0..r).map(|_| Exp1.sample(&mut rng)).collect();
                let total: f64 = w.iter().sum();
                for (k, wk) in w.iter().enumerate() {
                    mixing[(i, k)] = wk / total;
                }
            }
        }

        let mut data = &mixing * &anchors;
        if noise_level > 0.0 {
            let noise = Normal::new(0.0, noise_level).expect("finite standard deviation");
            data.iter_mut()
                .for_each(|v| *v = (*v + noise.sample(&mut rng)).max(0.0));
        }
        return Ok(SeparableInstance {
            data: NonnegMatrix::new(data)?,
            true_anchors: positions,
            mixing,
            noise_level,
            seed,
        });
    }
    Err(Error::GenerationFailed(MAX_ATTEMPTS))
}

fn draw_anchor_rows<R: Rng>(rng: &mut R, r: usize, m: usize) -> DMatrix<f64> {
    let mut a = DMatrix::from_fn(r, m, |_, _| rng.random::<f64>());
    for mut row in a.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    a
}

fn anchors_are_extreme(anchors: &DMatrix<f64>) -> Result<bool> {
    let r = anchors.nrows();
    if anchors.row_iter().any(|row| row.norm() == 0.0) {
        return Ok(false);
    }
    if r == 1 {
        return Ok(true);
    }
    for k in 0..r {
        let others = anchors.clone().remove_row(k);
        let row: Vec<f64> = anchors.row(k).iter().copied().collect();
        if nnls_residual(&row, &others)?.residual <= ANCHOR_RESIDUAL_MIN {
            return Ok(false);
        }
    }
    Ok(true)
}
