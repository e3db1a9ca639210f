//! End-to-end simulated quantum anchoring.
//!
//! The data matrix is embedded as `[[0, X], [X^T, 0]]`, its spectrum is
//! computed once, and each random direction is pushed through the simulated
//! linear operation. The resulting outcome distribution is sampled `N` times
//! and the most frequent outcome becomes that direction's vote. Only the
//! abs-argmax is observable this way, so twice as many directions are drawn
//! as in the classical solver.

use rayon::prelude::*;

use crate::dca::{abs_argmax_index, conquer, dca_solve, project, AnchorSet, AnchorVotes};
use crate::error::{Error, Result};
use crate::generate::SeparableInstance;
use crate::matrix::{eigendecompose, embed_hermitian, sample_unit_direction, Direction, NonnegMatrix, Spectrum};
use crate::postsel::{distribution_mode, gap_condition, measure_samples, most_frequent_index};
use crate::qsim::{amplitude_encode, apply_linear_operation, outcome_distribution};
use crate::seed;

/// How each projection's winning index is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReadoutMode {
    /// Most frequent of `N` sampled outcomes.
    #[default]
    Sampled,
    /// Mode of the exact outcome distribution (debugging aid).
    Exact,
}

/// Which coordinates of the embedded space a direction occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirectionSupport {
    /// `(0, b)` with `b` uniform on the unit sphere of `R^m`, so that the
    /// embedded product is `(X b, 0)`: a row projection of the data matrix.
    #[default]
    ColumnBlock,
    /// Uniform on the unit sphere of `R^(n+m)`; column indexes then compete
    /// with row indexes for the abs-argmax.
    Full,
}

/// How the `2s` directions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirectionScheme {
    /// `2s` independent directions.
    #[default]
    Fresh,
    /// `s` directions, each followed by its negation.
    Paired,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QdcaConfig {
    pub r: usize,
    /// Base projection count; `2s` directions are used.
    pub s: usize,
    /// Measurement budget `N` per projection.
    pub samples: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub restrict_to_rows: bool,
    pub readout: ReadoutMode,
    pub directions: DirectionScheme,
    pub support: DirectionSupport,
}

impl QdcaConfig {
    /// Defaults for an `n x m` input: `s = 2 ceil(r ln r)` (at least 10) and
    /// `N = ceil(10 log2^2(n + m))`.
    pub fn for_shape(n: usize, m: usize, r: usize, seed: u64) -> Self {
        Self {
            r,
            s: crate::dca::default_projection_count(r),
            samples: default_sample_budget(n + m),
            epsilon: 0.0,
            delta: 0.1,
            seed,
            restrict_to_rows: true,
            readout: ReadoutMode::Sampled,
            directions: DirectionScheme::Fresh,
            support: DirectionSupport::ColumnBlock,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.r == 0 {
            return bad("r must be >= 1".into());
        }
        if self.s == 0 {
            return bad("s must be >= 1".into());
        }
        if self.samples == 0 {
            return bad("sample budget N must be >= 1".into());
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be finite and >= 0, got {}", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        Ok(())
    }
}

/// `ceil(c log2^2(d))` with `c = 10`.
pub fn default_sample_budget(d: usize) -> u64 {
    sample_budget(d, 10.0)
}

pub fn sample_budget(d: usize, c: f64) -> u64 {
    let l = (d.max(2) as f64).log2();
    ((c * l * l).ceil() as u64).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionRecord {
    pub direction_index: usize,
    pub winning_index: usize,
    pub success_probability: f64,
    pub kept_eigenpairs: usize,
    /// Largest and second-largest outcome counts (zero in exact mode).
    pub top_count: u64,
    pub second_count: u64,
    pub distinct_outcomes: usize,
    /// Whether the gap condition holds for this projection at `(N, delta)`.
    pub gap_satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QdcaTrace {
    pub per_projection: Vec<ProjectionRecord>,
    /// Votes over all `n + m` embedded indexes.
    pub votes: AnchorVotes,
    pub result: AnchorSet,
}

/// The `2s` directions in the embedded space of an `n x m` matrix used by a
/// run with `cfg`.
pub fn qdca_directions(cfg: &QdcaConfig, n: usize, m: usize) -> Result<Vec<Direction>> {
    let draw = |i: usize| -> Result<Direction> {
        let seed = seed::derive(cfg.seed, "qdca/direction", i as u64);
        match cfg.support {
            DirectionSupport::Full => sample_unit_direction(n + m, seed),
            DirectionSupport::ColumnBlock => {
                let b = sample_unit_direction(m, seed)?;
                let mut v = vec![0.0; n];
                v.extend_from_slice(b.components());
                Direction::from_vec(v)
            }
        }
    };
    match cfg.directions {
        DirectionScheme::Fresh => (0..2 * cfg.s).map(draw).collect(),
        DirectionScheme::Paired => {
            let mut out = Vec::with_capacity(2 * cfg.s);
            for i in 0..cfg.s {
                let d = draw(i)?;
                let negated = d.negated();
                out.push(d);
                out.push(negated);
            }
            Ok(out)
        }
    }
}

fn run_projection(
    spectrum: &Spectrum,
    direction: &Direction,
    index: usize,
    cfg: &QdcaConfig,
) -> Result<ProjectionRecord> {
    let beta = amplitude_encode(direction.components())?;
    let op = apply_linear_operation(spectrum, &beta, cfg.epsilon)?;
    let p = outcome_distribution(&op.state);
    let gap_satisfied = gap_condition(&p, cfg.samples, cfg.delta)?.satisfied;
    let (winning_index, top_count, second_count, distinct_outcomes) = match cfg.readout {
        ReadoutMode::Exact => (distribution_mode(&p), 0, 0, 0),
        ReadoutMode::Sampled => {
            let rec = measure_samples(&p, cfg.samples, seed::derive(cfg.seed, "qdca/measure", index as u64))?;
            let (a, b) = rec.top_two();
            (most_frequent_index(&rec), a, b, rec.distinct_outcomes())
        }
    };
    Ok(ProjectionRecord {
        direction_index: index,
        winning_index,
        success_probability: op.success_probability,
        kept_eigenpairs: op.kept_eigenpairs,
        top_count,
        second_count,
        distinct_outcomes,
        gap_satisfied,
    })
}

pub fn qdca_solve(x: &NonnegMatrix, cfg: &QdcaConfig) -> Result<(AnchorSet, QdcaTrace)> {
    cfg.validate()?;
    if cfg.r > x.rows() {
        return Err(Error::InvalidParameter(format!(
            "r = {} exceeds the row count {}",
            cfg.r,
            x.rows()
        )));
    }
    let embedding = embed_hermitian(x);
    let spectrum = eigendecompose(&embedding);
    let d = embedding.dim();
    let directions = qdca_directions(cfg, x.rows(), x.cols())?;

    let per_projection = directions
        .par_iter()
        .enumerate()
        .map(|(i, beta)| run_projection(&spectrum, beta, i, cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut votes = AnchorVotes::new(d);
    for rec in &per_projection {
        votes.add(rec.winning_index);
    }
    let result = if cfg.restrict_to_rows {
        conquer(&votes.restricted_to(x.rows()), cfg.r)?
    } else {
        conquer(&votes, cfg.r)?
    };
    Ok((
        result.clone(),
        QdcaTrace {
            per_projection,
            votes,
            result,
        },
    ))
}

/// Votes a classical solver would cast by taking the abs-argmax of the
/// embedded matrix applied to each of the run's directions.
pub fn classical_abs_argmax_votes(x: &NonnegMatrix, cfg: &QdcaConfig) -> Result<AnchorVotes> {
    let embedding = embed_hermitian(x);
    let mut votes = AnchorVotes::new(embedding.dim());
    for (i, beta) in qdca_directions(cfg, x.rows(), x.cols())?.iter().enumerate() {
        votes.add(abs_argmax_index(&project(embedding.as_matrix(), beta, i)?));
    }
    Ok(votes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub dca_anchors: AnchorSet,
    pub qdca_anchors: AnchorSet,
    pub dca_recall: f64,
    pub dca_precision: f64,
    pub qdca_recall: f64,
    pub qdca_precision: f64,
    /// Fraction of projections whose sampled winner equals the classical
    /// abs-argmax for the same direction.
    pub agreement_rate: f64,
    /// Mean exact probability of the abs-argmax outcome over projections.
    pub mean_p_max: f64,
}

pub fn compare_dca_qdca(instance: &SeparableInstance, cfg: &QdcaConfig) -> Result<ComparisonReport> {
    let x = &instance.data;
    let truth = &instance.true_anchors;
    let dca_anchors = dca_solve(x, cfg.r, cfg.s, cfg.seed)?;
    let (qdca_anchors, trace) = qdca_solve(x, cfg)?;

    let embedding = embed_hermitian(x);
    let directions = qdca_directions(cfg, x.rows(), x.cols())?;
    let mut agree = 0usize;
    let mut p_max_total = 0.0;
    for (rec, beta) in trace.per_projection.iter().zip(&directions) {
        let y = project(embedding.as_matrix(), beta, rec.direction_index)?;
        if abs_argmax_index(&y) == rec.winning_index {
            agree += 1;
        }
        let norm2: f64 = y.values.iter().map(|v| v * v).sum();
        let top = y.values.iter().fold(0.0_f64, |a, v| a.max(v * v));
        p_max_total += top / norm2;
    }
    let count = trace.per_projection.len() as f64;
    Ok(ComparisonReport {
        dca_recall: dca_anchors.recall(truth),
        dca_precision: dca_anchors.precision(truth),
        qdca_recall: qdca_anchors.recall(truth),
        qdca_precision: qdca_anchors.precision(truth),
        dca_anchors,
        qdca_anchors,
        agreement_rate: agree as f64 / count,
        mean_p_max: p_max_total / count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::generate_separable;

    #[test]
    fn default_budget() {
        assert_eq!(default_sample_budget(130), (10.0 * 130f64.log2().powi(2)).ceil() as u64);
        assert_eq!(default_sample_budget(2), 10);
    }

    #[test]
    fn config_validation() {
        let mut cfg = QdcaConfig::for_shape(10, 5, 2, 0);
        assert!(cfg.validate().is_ok());
        cfg.delta = 1.0;
        assert!(cfg.validate().is_err());
        cfg.delta = 0.1;
        cfg.samples = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn paired_directions_are_negations() {
        let mut cfg = QdcaConfig::for_shape(4, 3, 2, 5);
        cfg.s = 3;
        cfg.directions = DirectionScheme::Paired;
        let dirs = qdca_directions(&cfg, 4, 3).unwrap();
        assert_eq!(dirs.len(), 6);
        for pair in dirs.chunks(2) {
            assert_eq!(pair[1], pair[0].negated());
        }
    }

    #[test]
    fn dominating_row_wins_for_any_s() {
        let mut rows = vec![vec![0.9, 0.8, 0.7]];
        for k in 1..6 {
            rows.push(vec![0.9e-3 * k as f64, 0.8e-3 * k as f64, 0.7e-3 * k as f64]);
        }
        let x = NonnegMatrix::from_rows(&rows).unwrap();
        for s in [1, 3, 8] {
            let mut cfg = QdcaConfig::for_shape(6, 3, 1, 11);
            cfg.s = s;
            cfg.samples = 200;
            let (set, _) = qdca_solve(&x, &cfg).unwrap();
            assert_eq!(set.indexes(), &[0]);
        }
    }

    #[test]
    fn trace_is_deterministic_and_has_2s_records() {
        let inst = generate_separable(30, 10, 3, 0.0, 2).unwrap();
        let mut cfg = QdcaConfig::for_shape(30, 10, 3, 21);
        cfg.s = 7;
        let a = qdca_solve(&inst.data, &cfg).unwrap();
        let b = qdca_solve(&inst.data, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1.per_projection.len(), 14);
    }

    #[test]
    fn winners_have_nonzero_amplitude() {
        let inst = generate_separable(25, 8, 3, 0.0, 6).unwrap();
        let mut cfg = QdcaConfig::for_shape(25, 8, 3, 1);
        cfg.samples = 3;
        let (_, trace) = qdca_solve(&inst.data, &cfg).unwrap();
        let emb = embed_hermitian(&inst.data);
        let dirs = qdca_directions(&cfg, 25, 8).unwrap();
        for (rec, beta) in trace.per_projection.iter().zip(&dirs) {
            let y = project(emb.as_matrix(), beta, 0).unwrap();
            assert!(y.values[rec.winning_index] != 0.0);
        }
    }

    #[test]
    fn incremental_and_batch_conquer_agree() {
        let inst = generate_separable(40, 12, 4, 0.0, 8).unwrap();
        let cfg = QdcaConfig::for_shape(40, 12, 4, 3);
        let (set, trace) = qdca_solve(&inst.data, &cfg).unwrap();
        let mut incremental = AnchorVotes::new(52);
        for chunk in trace.per_projection.chunks(5) {
            let part: AnchorVotes = chunk.iter().map(|r| r.winning_index).collect();
            incremental.merge(&part);
        }
        assert_eq!(conquer(&incremental.restricted_to(40), 4).unwrap(), set);
    }
}
