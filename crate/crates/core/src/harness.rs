//! Batch experiments behind the `qdca` command line.
//!
//! Each command is a plain function returning a [`Report`], so the same code
//! path serves the binary, the integration tests, and the C interface. Reports
//! are pure functions of their arguments: no wall-clock values are written
//! unless timings are explicitly requested, and parallel work is collected in
//! index order before formatting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::dca::{dca_run, default_projection_count, AnchorSet};
use crate::error::{Error, Result};
use crate::generate::generate_separable;
use crate::io::{read_instance, write_instance, InstanceMeta};
use crate::matrix::{eigendecompose, embed_hermitian, NonnegMatrix};
use crate::pipeline::{
    default_sample_budget, qdca_directions, qdca_solve, DirectionScheme, DirectionSupport, QdcaConfig, ReadoutMode,
};
use crate::postsel::{empirical_recovery_rate, gap_condition_with, required_samples_with, GapFormula};
use crate::qsim::{
    amplitude_encode, apply_linear_operation, outcome_distribution, trace_out_error, DensityMatrix, QuantumState,
};
use crate::seed;

pub const REPORT_SCHEMA: &str = "qdca-report/1";
/// Upper bound on the number of cells in a sweep grid.
pub const MAX_SWEEP_CELLS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Tabular report with a JSON rendering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub kind: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
}

impl Report {
    fn new(kind: &'static str, columns: &[&str]) -> Self {
        Self {
            schema: REPORT_SCHEMA,
            kind,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: None,
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Index of a column by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Cell value by row index and column name.
    pub fn get(&self, row: usize, column: &str) -> Option<&str> {
        Some(self.rows.get(row)?.get(self.column(column)?)?.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# {} {}\n", self.schema, self.kind);
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable report");
        s.push('\n');
        s
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }

    /// Writes the rendered report to `path`.
    pub fn write(&self, path: &Path, format: OutputFormat) -> Result<()> {
        std::fs::write(path, self.render(format)).map_err(|e| Error::io(path, e))
    }
}

fn f(v: f64) -> String {
    format!("{v}")
}

fn join_indexes(ix: &[usize]) -> String {
    ix.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

fn elapsed_ms(start: Instant) -> String {
    f(start.elapsed().as_secs_f64() * 1e3)
}

// ---------------------------------------------------------------------------
// gen

#[derive(Debug, Clone)]
pub struct GenArgs {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub noise_level: f64,
    pub seed: u64,
    pub out: PathBuf,
}

/// Generates an instance and writes `<out>.csv` and `<out>.json`.
pub fn cmd_gen(args: &GenArgs) -> Result<Report> {
    let inst = generate_separable(args.n, args.m, args.r, args.noise_level, args.seed)?;
    let (csv, json) = write_instance(&args.out, &inst)?;
    let mut report = Report::new(
        "gen",
        &[
            "n",
            "m",
            "r",
            "noise_level",
            "seed",
            "true_anchors",
            "matrix",
            "sidecar",
        ],
    );
    report.push(vec![
        args.n.to_string(),
        args.m.to_string(),
        args.r.to_string(),
        f(args.noise_level),
        args.seed.to_string(),
        join_indexes(&inst.true_anchors),
        csv.display().to_string(),
        json.display().to_string(),
    ]);
    Ok(report)
}

// ---------------------------------------------------------------------------
// dca / qdca

#[derive(Debug, Clone)]
pub struct DcaArgs {
    pub input: PathBuf,
    pub r: Option<usize>,
    pub s: Option<usize>,
    pub seed: u64,
    pub timings: bool,
}

fn load(input: &Path, r: Option<usize>) -> Result<(NonnegMatrix, Option<InstanceMeta>, usize)> {
    let (x, meta) = read_instance(input)?;
    let r = match (r, &meta) {
        (Some(r), _) => r,
        (None, Some(meta)) => meta.r,
        (None, None) => {
            return Err(Error::InvalidParameter(
                "--r is required when the input has no sidecar".into(),
            ))
        }
    };
    Ok((x, meta, r))
}

fn score(meta: &Option<InstanceMeta>, anchors: &[usize]) -> (String, String) {
    match meta {
        Some(meta) => {
            let set = AnchorSet::from_indexes(anchors.to_vec());
            (f(set.recall(&meta.true_anchors)), f(set.precision(&meta.true_anchors)))
        }
        None => (String::new(), String::new()),
    }
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    solver: &'a str,
    n: usize,
    m: usize,
    r: usize,
    seed: u64,
    anchors: &'a [usize],
    #[serde(skip_serializing_if = "Option::is_none")]
    true_anchors: Option<&'a [usize]>,
    votes: Vec<(usize, usize)>,
}

pub fn cmd_dca(args: &DcaArgs) -> Result<Report> {
    let start = Instant::now();
    let (x, meta, r) = load(&args.input, args.r)?;
    let s = args.s.unwrap_or_else(|| default_projection_count(r));
    let run = dca_run(&x, r, s, args.seed)?;
    let (recall, precision) = score(&meta, run.anchors.indexes());

    let mut columns = vec![
        "experiment",
        "solver",
        "n",
        "m",
        "r",
        "s",
        "seed",
        "anchors",
        "recall",
        "precision",
    ];
    if args.timings {
        columns.push("time_ms");
    }
    let mut report = Report::new("dca", &columns);
    let mut row = vec![
        args.input.display().to_string(),
        "dca".into(),
        x.rows().to_string(),
        x.cols().to_string(),
        r.to_string(),
        s.to_string(),
        args.seed.to_string(),
        join_indexes(run.anchors.indexes()),
        recall,
        precision,
    ];
    if args.timings {
        row.push(elapsed_ms(start));
    }
    report.push(row);
    report.summary = Some(
        serde_json::to_value(RunSummary {
            solver: "dca",
            n: x.rows(),
            m: x.cols(),
            r,
            seed: args.seed,
            anchors: run.anchors.indexes(),
            true_anchors: meta.as_ref().map(|m| m.true_anchors.as_slice()),
            votes: run.votes.counts().collect(),
        })
        .expect("serializable"),
    );
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct QdcaArgs {
    pub input: PathBuf,
    pub r: Option<usize>,
    pub s: Option<usize>,
    pub samples: Option<u64>,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub exact: bool,
    pub include_columns: bool,
    pub support: DirectionSupport,
    pub directions: DirectionScheme,
    pub timings: bool,
}

impl QdcaArgs {
    pub fn new(input: impl Into<PathBuf>, seed: u64) -> Self {
        Self {
            input: input.into(),
            r: None,
            s: None,
            samples: None,
            epsilon: 0.0,
            delta: 0.1,
            seed,
            exact: false,
            include_columns: false,
            support: DirectionSupport::ColumnBlock,
            directions: DirectionScheme::Fresh,
            timings: false,
        }
    }
}

pub fn cmd_qdca(args: &QdcaArgs) -> Result<Report> {
    let start = Instant::now();
    let (x, meta, r) = load(&args.input, args.r)?;
    let cfg = QdcaConfig {
        r,
        s: args.s.unwrap_or_else(|| default_projection_count(r)),
        samples: args
            .samples
            .unwrap_or_else(|| default_sample_budget(x.rows() + x.cols())),
        epsilon: args.epsilon,
        delta: args.delta,
        seed: args.seed,
        restrict_to_rows: !args.include_columns,
        readout: if args.exact {
            ReadoutMode::Exact
        } else {
            ReadoutMode::Sampled
        },
        directions: args.directions,
        support: args.support,
    };
    let (anchors, trace) = qdca_solve(&x, &cfg)?;
    let (recall, precision) = score(&meta, anchors.indexes());
    let projections = trace.per_projection.len() as f64;
    let mean_success = trace.per_projection.iter().map(|p| p.success_probability).sum::<f64>() / projections;
    let gap_rate = trace.per_projection.iter().filter(|p| p.gap_satisfied).count() as f64 / projections;

    let mut columns = vec![
        "experiment",
        "solver",
        "n",
        "m",
        "r",
        "s",
        "samples",
        "epsilon",
        "delta",
        "seed",
        "readout",
        "anchors",
        "recall",
        "precision",
        "mean_success_probability",
        "gap_satisfied_rate",
    ];
    if args.timings {
        columns.push("time_ms");
    }
    let mut report = Report::new("qdca", &columns);
    let mut row = vec![
        args.input.display().to_string(),
        "qdca".into(),
        x.rows().to_string(),
        x.cols().to_string(),
        r.to_string(),
        cfg.s.to_string(),
        cfg.samples.to_string(),
        f(cfg.epsilon),
        f(cfg.delta),
        cfg.seed.to_string(),
        if args.exact { "exact" } else { "sampled" }.into(),
        join_indexes(anchors.indexes()),
        recall,
        precision,
        f(mean_success),
        f(gap_rate),
    ];
    if args.timings {
        row.push(elapsed_ms(start));
    }
    report.push(row);
    report.summary = Some(
        serde_json::to_value(RunSummary {
            solver: "qdca",
            n: x.rows(),
            m: x.cols(),
            r,
            seed: args.seed,
            anchors: anchors.indexes(),
            true_anchors: meta.as_ref().map(|m| m.true_anchors.as_slice()),
            votes: trace.votes.counts().collect(),
        })
        .expect("serializable"),
    );
    Ok(report)
}

// ---------------------------------------------------------------------------
// theorem1

#[derive(Debug, Clone)]
pub enum DistributionSource {
    Inline(Vec<f64>),
    /// First projection of the instance at this path.
    Instance(PathBuf),
}

#[derive(Debug, Clone)]
pub struct Theorem1Args {
    pub source: DistributionSource,
    pub grid: Vec<u64>,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub formula: GapFormula,
}

/// Outcome distribution of the first projection the pipeline would run on `x`.
pub fn first_projection_distribution(x: &NonnegMatrix, seed: u64) -> Result<Vec<f64>> {
    let cfg = QdcaConfig::for_shape(x.rows(), x.cols(), 1, seed);
    let spectrum = eigendecompose(&embed_hermitian(x));
    let beta = &qdca_directions(&cfg, x.rows(), x.cols())?[0];
    let op = apply_linear_operation(&spectrum, &amplitude_encode(beta.components())?, 0.0)?;
    Ok(outcome_distribution(&op.state))
}

pub fn cmd_theorem1(args: &Theorem1Args) -> Result<Report> {
    if args.grid.is_empty() {
        return Err(Error::InvalidParameter("sample grid is empty".into()));
    }
    let p = match &args.source {
        DistributionSource::Inline(p) => p.clone(),
        DistributionSource::Instance(path) => first_projection_distribution(&read_instance(path)?.0, args.seed)?,
    };
    let required = match required_samples_with(&p, args.delta, args.formula) {
        Ok(n) => n.to_string(),
        Err(Error::NoFiniteSampleCount) => "no finite N".into(),
        Err(e) => return Err(e),
    };
    let mut report = Report::new(
        "theorem1",
        &[
            "samples",
            "categories",
            "delta",
            "threshold",
            "gap",
            "satisfied",
            "required_samples",
            "trials",
            "seed",
            "recovery_rate",
        ],
    );
    for (i, &n) in args.grid.iter().enumerate() {
        let gap = gap_condition_with(&p, n, args.delta, args.formula)?;
        let row_seed = seed::derive(args.seed, "theorem1/row", i as u64);
        let rate = empirical_recovery_rate(&p, n, args.trials, row_seed)?;
        report.push(vec![
            n.to_string(),
            p.len().to_string(),
            f(args.delta),
            f(gap.threshold),
            f(gap.gap()),
            gap.satisfied.to_string(),
            required.clone(),
            args.trials.to_string(),
            row_seed.to_string(),
            f(rate),
        ]);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// traceout-check

#[derive(Debug, Clone)]
pub struct TraceoutArgs {
    pub dim: usize,
    pub dt: f64,
    pub cases: usize,
    pub seed: u64,
}

/// Random embedded matrix of total dimension `dim` and a random pure state.
pub fn traceout_case(dim: usize, seed: u64) -> Result<(crate::matrix::HermitianEmbedding, DensityMatrix)> {
    if dim < 2 {
        return Err(Error::InvalidParameter("traceout dimension must be >= 2".into()));
    }
    let n = dim / 2;
    let m = dim - n;
    let mut rng = seed::rng(seed);
    let x = NonnegMatrix::new(DMatrix::from_fn(n, m, |_, _| rng.random::<f64>()))?;
    let amps: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let psi = QuantumState::from_amplitudes(amps)?;
    Ok((embed_hermitian(&x), DensityMatrix::pure(&psi)))
}

/// `e(dt) / e(dt/2)` for one case, with the three errors.
pub fn traceout_ratio(dim: usize, dt: f64, seed: u64) -> Result<[f64; 4]> {
    let (x, sigma) = traceout_case(dim, seed)?;
    let e0 = trace_out_error(&x, &sigma, 0.0)?;
    let e1 = trace_out_error(&x, &sigma, dt)?;
    let e2 = trace_out_error(&x, &sigma, dt / 2.0)?;
    Ok([e0, e1, e2, e1 / e2])
}

pub fn cmd_traceout_check(args: &TraceoutArgs) -> Result<Report> {
    if !(args.dt > 0.0 && args.dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", args.dt)));
    }
    crate::qsim::check_trace_dim(args.dim)?;
    let results = (0..args.cases)
        .into_par_iter()
        .map(|c| {
            let case_seed = seed::derive(args.seed, "traceout/case", c as u64);
            traceout_ratio(args.dim, args.dt, case_seed).map(|r| (case_seed, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = Report::new(
        "traceout-check",
        &[
            "case",
            "dim",
            "seed",
            "dt",
            "error_zero",
            "error_dt",
            "error_half_dt",
            "ratio",
            "in_band",
        ],
    );
    for (c, (case_seed, [e0, e1, e2, ratio])) in results.into_iter().enumerate() {
        report.push(vec![
            c.to_string(),
            args.dim.to_string(),
            case_seed.to_string(),
            f(args.dt),
            f(e0),
            f(e1),
            f(e2),
            f(ratio),
            (3.5..=4.5).contains(&ratio).to_string(),
        ]);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Debug, Clone)]
pub struct SweepArgs {
    /// `(n, m)` shapes.
    pub shapes: Vec<(usize, usize)>,
    pub r: usize,
    pub noise_levels: Vec<f64>,
    /// Sample budgets; empty means the default budget for each shape.
    pub samples: Vec<u64>,
    /// Base projection counts; empty means the default for `r`.
    pub projections: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub timings: bool,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    index: usize,
    rep: usize,
    n: usize,
    m: usize,
    noise: f64,
    samples: Option<u64>,
    s: Option<usize>,
}

/// Seeds used for replicate `rep` of grid cell `cell`: `(instance, solver)`.
pub fn sweep_seeds(master: u64, cell: usize, reps: usize, rep: usize) -> (u64, u64) {
    let k = (cell * reps + rep) as u64;
    (
        seed::derive(master, "sweep/instance", k),
        seed::derive(master, "sweep/solver", k),
    )
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Report> {
    if args.shapes.is_empty() || args.noise_levels.is_empty() || args.reps == 0 {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    let samples: Vec<Option<u64>> = if args.samples.is_empty() {
        vec![None]
    } else {
        args.samples.iter().map(|&n| Some(n)).collect()
    };
    let projections: Vec<Option<usize>> = if args.projections.is_empty() {
        vec![None]
    } else {
        args.projections.iter().map(|&s| Some(s)).collect()
    };
    let cell_count = args.shapes.len() * args.noise_levels.len() * samples.len() * projections.len();
    if cell_count > MAX_SWEEP_CELLS {
        return Err(Error::InvalidParameter(format!(
            "sweep grid has {cell_count} cells, limit is {MAX_SWEEP_CELLS}"
        )));
    }
    let mut cells = Vec::with_capacity(cell_count * args.reps);
    let mut index = 0;
    for &(n, m) in &args.shapes {
        for &noise in &args.noise_levels {
            for &ns in &samples {
                for &s in &projections {
                    for rep in 0..args.reps {
                        cells.push(Cell {
                            index,
                            rep,
                            n,
                            m,
                            noise,
                            samples: ns,
                            s,
                        });
                    }
                    index += 1;
                }
            }
        }
    }

    let rows = cells
        .par_iter()
        .map(|c| sweep_cell(args, c))
        .collect::<Result<Vec<_>>>()?;

    let mut columns = vec![
        "cell",
        "rep",
        "n",
        "m",
        "r",
        "noise_level",
        "samples",
        "s",
        "instance_seed",
        "solver_seed",
        "dca_recall",
        "dca_precision",
        "qdca_recall",
        "qdca_precision",
    ];
    if args.timings {
        columns.push("time_ms");
    }
    let mut report = Report::new("sweep", &columns);
    for row in rows {
        report.push(row);
    }
    Ok(report)
}

fn sweep_cell(args: &SweepArgs, c: &Cell) -> Result<Vec<String>> {
    let start = Instant::now();
    let (instance_seed, solver_seed) = sweep_seeds(args.seed, c.index, args.reps, c.rep);
    let inst = generate_separable(c.n, c.m, args.r, c.noise, instance_seed)?;
    let mut cfg = QdcaConfig::for_shape(c.n, c.m, args.r, solver_seed);
    if let Some(n) = c.samples {
        cfg.samples = n;
    }
    if let Some(s) = c.s {
        cfg.s = s;
    }
    let truth = &inst.true_anchors;
    let (dr, dp) = match dca_run(&inst.data, cfg.r, cfg.s, solver_seed) {
        Ok(run) => (run.anchors.recall(truth), run.anchors.precision(truth)),
        Err(Error::InsufficientVotes { .. }) => (0.0, 0.0),
        Err(e) => return Err(e),
    };
    let (qr, qp) = match qdca_solve(&inst.data, &cfg) {
        Ok((set, _)) => (set.recall(truth), set.precision(truth)),
        Err(Error::InsufficientVotes { .. }) => (0.0, 0.0),
        Err(e) => return Err(e),
    };
    let mut row = vec![
        c.index.to_string(),
        c.rep.to_string(),
        c.n.to_string(),
        c.m.to_string(),
        args.r.to_string(),
        f(c.noise),
        cfg.samples.to_string(),
        cfg.s.to_string(),
        instance_seed.to_string(),
        solver_seed.to_string(),
        f(dr),
        f(dp),
        f(qr),
        f(qp),
    ];
    if args.timings {
        row.push(elapsed_ms(start));
    }
    Ok(row)
}

/// Short human-readable description of a report, printed by the CLI.
pub fn describe(report: &Report) -> String {
    let mut s = String::new();
    let _ = write!(s, "{} ({} rows)", report.kind, report.rows.len());
    if report.rows.len() == 1 {
        for (c, v) in report.columns.iter().zip(&report.rows[0]) {
            let _ = write!(s, "\n  {c}: {v}");
        }
    }
    s
}
