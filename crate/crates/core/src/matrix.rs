//! Dense matrix types shared by the solvers: the non-negative data matrix,
//! its symmetric block embedding, spectra, and random unit directions.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seed;

/// Dense `n x m` matrix with every entry non-negative and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegMatrix {
    data: DMatrix<f64>,
}

impl NonnegMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidParameter(format!(
                "matrix must be at least 1x1, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        for j in 0..data.ncols() {
            for i in 0..data.nrows() {
                let v = data[(i, j)];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        Ok(Self { data })
    }

    /// Builds a matrix from row slices, which must all have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        for r in rows {
            if r.as_ref().len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    actual: r.as_ref().len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(n, m, |i, j| rows[i].as_ref()[j]))
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[(row, col)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Copy of the rows listed in `indexes`, in that order.
    pub fn select_rows(&self, indexes: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(indexes.len(), self.cols(), |i, j| self.data[(indexes[i], j)])
    }
}

/// Real symmetric square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    data: DMatrix<f64>,
}

impl SymmetricMatrix {
    /// Accepts only matrices that equal their transpose exactly.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::DimensionMismatch {
                expected: data.nrows(),
                actual: data.ncols(),
            });
        }
        let d = data.nrows();
        for i in 0..d {
            for j in (i + 1)..d {
                if data[(i, j)] != data[(j, i)] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }
}

/// The `(n+m) x (n+m)` block matrix `[[0, X], [X^T, 0]]` built from a data
/// matrix `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEmbedding {
    matrix: SymmetricMatrix,
    source_rows: usize,
    source_cols: usize,
}

impl HermitianEmbedding {
    pub fn source_rows(&self) -> usize {
        self.source_rows
    }

    pub fn source_cols(&self) -> usize {
        self.source_cols
    }

    pub fn symmetric(&self) -> &SymmetricMatrix {
        &self.matrix
    }
}

impl Deref for HermitianEmbedding {
    type Target = SymmetricMatrix;

    fn deref(&self) -> &SymmetricMatrix {
        &self.matrix
    }
}

pub fn embed_hermitian(x: &NonnegMatrix) -> HermitianEmbedding {
    let (n, m) = (x.rows(), x.cols());
    let mut data = DMatrix::zeros(n + m, n + m);
    for i in 0..n {
        for j in 0..m {
            let v = x.get(i, j);
            data[(i, n + j)] = v;
            data[(n + j, i)] = v;
        }
    }
    HermitianEmbedding {
        matrix: SymmetricMatrix { data },
        source_rows: n,
        source_cols: m,
    }
}

/// Eigenpairs of a symmetric matrix, ordered by decreasing `|lambda|`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    /// Column `j` is the unit eigenvector for `eigenvalues[j]`.
    eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, j: usize) -> DVector<f64> {
        self.eigenvectors.column(j).into_owned()
    }

    /// Largest absolute eigenvalue (0 for the zero matrix).
    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().map_or(0.0, |l| l.abs())
    }

    /// `sum_j lambda_j u_j u_j^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let u = self.eigenvectors.column(j);
            out += u * u.transpose() * l;
        }
        out
    }
}

pub fn eigendecompose(h: &SymmetricMatrix) -> Spectrum {
    let eig = SymmetricEigen::new(h.as_matrix().clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    // Stable sort keeps the solver's order among equal magnitudes.
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let d = h.dim();
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// A unit vector in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    components: Vec<f64>,
}

impl Direction {
    /// Normalizes `v`; fails on the zero vector.
    pub fn from_vec(v: Vec<f64>) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if v.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self {
            components: v.into_iter().map(|x| x / norm).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn negated(&self) -> Self {
        Self {
            components: self.components.iter().map(|x| -x).collect(),
        }
    }
}

/// Uniform sample from the unit sphere in `R^dim` (normalized Gaussian).
pub fn sample_unit_direction(dim: usize, seed: u64) -> Result<Direction> {
    if dim == 0 {
        return Err(Error::InvalidParameter("direction dimension must be >= 1".into()));
    }
    let mut rng = seed::rng(seed);
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        if let Ok(d) = Direction::from_vec(v) {
            return Ok(d);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embed_scalar() {
        let x = NonnegMatrix::from_rows(&[[2.0]]).unwrap();
        let e = embed_hermitian(&x);
        assert_eq!(e.as_matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]));
    }

    #[test]
    fn embed_identity() {
        let x = NonnegMatrix::new(DMatrix::identity(2, 2)).unwrap();
        let e = embed_hermitian(&x);
        let mut expected = DMatrix::zeros(4, 4);
        for (i, j) in [(0, 2), (1, 3), (2, 0), (3, 1)] {
            expected[(i, j)] = 1.0;
        }
        assert_eq!(e.as_matrix(), &expected);
        assert_eq!((e.source_rows(), e.source_cols(), e.dim()), (2, 2, 4));
    }

    #[test]
    fn rejects_negative_and_empty() {
        assert!(matches!(
            NonnegMatrix::from_rows(&[[1.0, -0.5]]),
            Err(Error::NegativeEntry { row: 0, col: 1, .. })
        ));
        assert!(NonnegMatrix::new(DMatrix::zeros(0, 3)).is_err());
        assert!(NonnegMatrix::from_rows(&[[f64::NAN]]).is_err());
    }

    #[test]
    fn symmetric_rejects_asymmetry() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0 + 1e-15, 0.0]);
        assert!(matches!(SymmetricMatrix::new(m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn eigen_swap_pair() {
        let h = SymmetricMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let s = eigendecompose(&h);
        let mut ls = s.eigenvalues().to_vec();
        ls.sort_by(f64::total_cmp);
        assert!((ls[0] + 1.0).abs() < 1e-14 && (ls[1] - 1.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for j in 0..2 {
            let u = s.eigenvector(j);
            let expected = if s.eigenvalues()[j] > 0.0 { [r, r] } else { [r, -r] };
            let sign = u[0].signum();
            assert!((u[0] - sign * expected[0]).abs() < 1e-12);
            assert!((u[1] - sign * expected[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_zero_matrix() {
        let h = SymmetricMatrix::new(DMatrix::zeros(3, 3)).unwrap();
        assert!(eigendecompose(&h).eigenvalues().iter().all(|&l| l == 0.0));
    }

    #[test]
    fn eigen_sorted_by_magnitude() {
        let h = SymmetricMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, -3.0, 2.0, 0.0]))).unwrap();
        assert_eq!(eigendecompose(&h).eigenvalues(), &[-3.0, 2.0, 0.5, 0.0]);
    }

    #[test]
    fn direction_unit_and_deterministic() {
        for seed in 0..50 {
            let d = sample_unit_direction(7, seed).unwrap();
            let norm: f64 = d.components().iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            assert_eq!(d, sample_unit_direction(7, seed).unwrap());
        }
        assert!(sample_unit_direction(0, 1).is_err());
    }
}
