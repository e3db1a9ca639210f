//! Classical divide-and-conquer anchoring.
//!
//! Each random direction projects the rows to a line; the rows landing at the
//! two ends of that line are anchor candidates (divide). The `r` indexes that
//! appear most often over all directions are returned (conquer).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{sample_unit_direction, Direction, NonnegMatrix};
use crate::seed;

/// `Y_i = X beta_i` for one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub direction_index: usize,
    pub values: Vec<f64>,
}

impl ProjectionResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extremes {
    pub argmax: usize,
    pub argmin: usize,
}

/// Vote multiset over row indexes `0..row_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorVotes {
    row_count: usize,
    counts: BTreeMap<usize, usize>,
}

impl AnchorVotes {
    pub fn new(row_count: usize) -> Self {
        Self {
            row_count,
            counts: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, index: usize) {
        assert!(
            index < self.row_count,
            "vote {index} out of range 0..{}",
            self.row_count
        );
        *self.counts.entry(index).or_default() += 1;
    }

    /// Multiset union.
    pub fn merge(&mut self, other: &AnchorVotes) {
        self.row_count = self.row_count.max(other.row_count);
        for (&i, &c) in &other.counts {
            *self.counts.entry(i).or_default() += c;
        }
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn count(&self, index: usize) -> usize {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    /// `(index, count)` pairs in ascending index order.
    pub fn counts(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.counts.iter().map(|(&i, &c)| (i, c))
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// Keeps only votes for indexes below `limit`.
    pub fn restricted_to(&self, limit: usize) -> AnchorVotes {
        AnchorVotes {
            row_count: limit.min(self.row_count),
            counts: self.counts.range(..limit).map(|(&i, &c)| (i, c)).collect(),
        }
    }
}

impl FromIterator<usize> for AnchorVotes {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for i in iter {
            *counts.entry(i).or_default() += 1;
        }
        let row_count = counts.keys().next_back().map_or(0, |&i| i + 1);
        Self { row_count, counts }
    }
}

/// Selected anchor indexes, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorSet {
    indexes: Vec<usize>,
}

impl AnchorSet {
    /// Sorts and deduplicates `indexes`.
    pub fn from_indexes(mut indexes: Vec<usize>) -> Self {
        indexes.sort_unstable();
        indexes.dedup();
        Self { indexes }
    }

    pub fn indexes(&self) -> &[usize] {
        &self.indexes
    }

    pub fn len(&self) -> usize {
        self.indexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indexes.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indexes.binary_search(&index).is_ok()
    }

    /// Fraction of `truth` recovered.
    pub fn recall(&self, truth: &[usize]) -> f64 {
        if truth.is_empty() {
            return 1.0;
        }
        truth.iter().filter(|&&t| self.contains(t)).count() as f64 / truth.len() as f64
    }

    /// Fraction of the selected indexes that are in `truth`.
    pub fn precision(&self, truth: &[usize]) -> f64 {
        if self.indexes.is_empty() {
            return 1.0;
        }
        self.indexes.iter().filter(|i| truth.contains(i)).count() as f64 / self.indexes.len() as f64
    }
}

pub fn project(x: &DMatrix<f64>, beta: &Direction, direction_index: usize) -> Result<ProjectionResult> {
    if beta.dim() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            actual: beta.dim(),
        });
    }
    let b = beta.components();
    let values = (0..x.nrows())
        .map(|i| x.row(i).iter().zip(b).map(|(a, c)| a * c).sum())
        .collect();
    Ok(ProjectionResult {
        direction_index,
        values,
    })
}

/// Indexes of the largest and smallest entries; ties go to the lowest index.
pub fn extreme_indexes(y: &ProjectionResult) -> Extremes {
    assert!(!y.is_empty(), "extreme_indexes on an empty projection");
    let (mut argmax, mut argmin) = (0, 0);
    for (i, &v) in y.values.iter().enumerate().skip(1) {
        if v > y.values[argmax] {
            argmax = i;
        }
        if v < y.values[argmin] {
            argmin = i;
        }
    }
    Extremes { argmax, argmin }
}

/// Index of the entry with the largest magnitude; ties go to the lowest index.
pub fn abs_argmax_index(y: &ProjectionResult) -> usize {
    assert!(!y.is_empty(), "abs_argmax_index on an empty projection");
    argmax_by_key(&y.values, |v| v.abs())
}

pub(crate) fn argmax_by_key(values: &[f64], key: impl Fn(f64) -> f64) -> usize {
    let mut best = 0;
    let mut best_key = key(values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        let k = key(v);
        if k > best_key {
            best = i;
            best_key = k;
        }
    }
    best
}

/// The `r` most voted indexes, ties toward the lower index.
pub fn conquer(votes: &AnchorVotes, r: usize) -> Result<AnchorSet> {
    if votes.distinct() < r {
        return Err(Error::InsufficientVotes {
            distinct: votes.distinct(),
            required: r,
        });
    }
    let mut tally: Vec<(usize, usize)> = votes.counts().collect();
    tally.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut indexes: Vec<usize> = tally.into_iter().take(r).map(|(i, _)| i).collect();
    indexes.sort_unstable();
    Ok(AnchorSet { indexes })
}

/// Projection count used when the caller gives none: `2 ceil(r ln r)`, at
/// least 10.
pub fn default_projection_count(r: usize) -> usize {
    let rl = (r as f64) * (r.max(1) as f64).ln();
    (2 * rl.ceil() as usize).max(10)
}

/// Direction `i` of a run seeded with `seed`. The retry stream is used only
/// when the first draw projects to the zero vector.
pub(crate) fn direction_for(seed: u64, label: &str, i: usize, dim: usize) -> Result<Direction> {
    sample_unit_direction(dim, seed::derive(seed, label, i as u64))
}

#[derive(Debug, Clone)]
pub struct DcaRun {
    pub anchors: AnchorSet,
    pub votes: AnchorVotes,
    pub extremes: Vec<Extremes>,
}

pub fn dca_solve(x: &NonnegMatrix, r: usize, s: usize, seed: u64) -> Result<AnchorSet> {
    dca_run(x, r, s, seed).map(|run| run.anchors)
}

/// Like [`dca_solve`] but also returns the votes and per-direction extremes.
pub fn dca_run(x: &NonnegMatrix, r: usize, s: usize, seed: u64) -> Result<DcaRun> {
    if r == 0 || r > x.rows() {
        return Err(Error::InvalidParameter(format!(
            "r must satisfy 1 <= r <= n = {}, got {r}",
            x.rows()
        )));
    }
    if s == 0 {
        return Err(Error::InvalidParameter("s must be >= 1".into()));
    }
    let m = x.as_matrix();
    let extremes = (0..s)
        .into_par_iter()
        .map(|i| {
            let mut y = project(m, &direction_for(seed, "dca/direction", i, x.cols())?, i)?;
            if y.is_zero() {
                y = project(m, &direction_for(seed, "dca/retry", i, x.cols())?, i)?;
                if y.is_zero() {
                    return Err(Error::DegenerateProjection(i));
                }
            }
            Ok(extreme_indexes(&y))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut votes = AnchorVotes::new(x.rows());
    for e in &extremes {
        votes.add(e.argmax);
        votes.add(e.argmin);
    }
    let anchors = conquer(&votes, r)?;
    Ok(DcaRun {
        anchors,
        votes,
        extremes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn py(v: &[f64]) -> ProjectionResult {
        ProjectionResult {
            direction_index: 0,
            values: v.to_vec(),
        }
    }

    #[test]
    fn project_identity_on_axis() {
        let x = DMatrix::identity(3, 3);
        let b = Direction::from_vec(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(project(&x, &b, 0).unwrap().values, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn project_simplex_rows() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.5]);
        let b = Direction::from_vec(vec![1.0, 0.0]).unwrap();
        assert_eq!(project(&x, &b, 0).unwrap().values, vec![1.0, 0.0, 0.5]);
    }

    #[test]
    fn project_rejects_wrong_dimension() {
        let b = Direction::from_vec(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            project(&DMatrix::identity(2, 2), &b, 0),
            Err(Error::DimensionMismatch { expected: 2, actual: 3 })
        ));
    }

    #[test]
    fn extremes_and_ties() {
        assert_eq!(
            extreme_indexes(&py(&[1.0, 0.0, 0.5])),
            Extremes { argmax: 0, argmin: 1 }
        );
        assert_eq!(
            extreme_indexes(&py(&[2.0, 2.0, 2.0])),
            Extremes { argmax: 0, argmin: 0 }
        );
        assert_eq!(abs_argmax_index(&py(&[-3.0, 2.0, 1.0])), 0);
        assert_eq!(abs_argmax_index(&py(&[0.0, 0.0])), 0);
    }

    #[test]
    fn conquer_picks_top_counts() {
        let votes: AnchorVotes = [0, 0, 0, 0, 0, 2, 2, 2, 2, 6, 6, 6, 1].into_iter().collect();
        assert_eq!(conquer(&votes, 2).unwrap().indexes(), &[0, 2]);
        let exact: AnchorVotes = [4, 1, 1, 9].into_iter().collect();
        assert_eq!(conquer(&exact, 3).unwrap().indexes(), &[1, 4, 9]);
    }

    #[test]
    fn conquer_breaks_ties_low() {
        let votes: AnchorVotes = [5, 3, 7, 3, 5, 7].into_iter().collect();
        assert_eq!(conquer(&votes, 2).unwrap().indexes(), &[3, 5]);
    }

    #[test]
    fn conquer_insufficient() {
        let votes: AnchorVotes = [1, 1, 2].into_iter().collect();
        assert!(matches!(
            conquer(&votes, 3),
            Err(Error::InsufficientVotes {
                distinct: 2,
                required: 3
            })
        ));
    }

    #[test]
    fn default_s() {
        assert_eq!(default_projection_count(1), 10);
        assert_eq!(default_projection_count(5), 18);
        assert_eq!(default_projection_count(20), 2 * (20.0 * 20f64.ln()).ceil() as usize);
    }

    #[test]
    fn full_rank_returns_all_rows() {
        let x = NonnegMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        for s in 1..4 {
            assert_eq!(dca_solve(&x, 2, s, 5).unwrap().indexes(), &[0, 1]);
        }
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let x = NonnegMatrix::from_rows(&[[0.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(dca_solve(&x, 1, 3, 0), Err(Error::DegenerateProjection(_))));
    }

    #[test]
    fn recall_and_precision() {
        let votes: AnchorVotes = [1, 2, 3].into_iter().collect();
        let set = conquer(&votes, 3).unwrap();
        assert_eq!(set.recall(&[1, 2, 9, 10]), 0.5);
        assert!((set.precision(&[1, 2, 9, 10]) - 2.0 / 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn extremes_invariant_under_positive_scaling(
            v in prop::collection::vec(-10.0f64..10.0, 1..40),
            c in 1e-3f64..1e3,
        ) {
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            prop_assert_eq!(extreme_indexes(&py(&v)), extreme_indexes(&py(&scaled)));
        }

        #[test]
        fn conquer_is_permutation_equivariant(
            raw in prop::collection::vec(0usize..12, 1..60),
            shift in 0usize..12,
        ) {
            // pi(i) = (i + shift) mod 12 reversed keeps counts but relabels.
            let pi = |i: usize| 11 - (i + shift) % 12;
            let votes: AnchorVotes = raw.iter().copied().collect();
            let permuted: AnchorVotes = raw.iter().map(|&i| pi(i)).collect();
            let r = votes.distinct().min(3);
            // Equivariance holds when no tie straddles the cut.
            let mut counts: Vec<usize> = votes.counts().map(|(_, c)| c).collect();
            counts.sort_unstable_by(|a, b| b.cmp(a));
            prop_assume!(counts.len() == r || counts[r - 1] != counts[r]);
            let a = conquer(&votes, r).unwrap();
            let b = conquer(&permuted, r).unwrap();
            let mut mapped: Vec<usize> = a.indexes().iter().map(|&i| pi(i)).collect();
            mapped.sort_unstable();
            prop_assert_eq!(mapped, b.indexes().to_vec());
        }

        #[test]
        fn merge_is_order_independent(
            a in prop::collection::vec(0usize..20, 0..30),
            b in prop::collection::vec(0usize..20, 0..30),
        ) {
            let mut ab = AnchorVotes::new(20);
            let mut ba = AnchorVotes::new(20);
            let va: AnchorVotes = a.iter().copied().collect();
            let vb: AnchorVotes = b.iter().copied().collect();
            ab.merge(&va); ab.merge(&vb);
            ba.merge(&vb); ba.merge(&va);
            prop_assert_eq!(ab.counts().collect::<Vec<_>>(), ba.counts().collect::<Vec<_>>());
        }
    }
}
