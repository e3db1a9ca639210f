use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qdca::harness::{
    self, DcaArgs, DistributionSource, GenArgs, OutputFormat, QdcaArgs, Report, SweepArgs, Theorem1Args, TraceoutArgs,
};
use qdca::pipeline::{DirectionScheme, DirectionSupport};
use qdca::postsel::GapFormula;
use qdca::Error;

#[derive(Parser, Debug)]
#[command(name = "qdca", version, about = "Divide-and-conquer anchoring experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Master seed; all randomness is derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads (0 = one per core). Output does not depend on it.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Append wall-clock timings; the report is then no longer reproducible.
    #[arg(long)]
    timings: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Support {
    Columns,
    Full,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a separable instance (<out>.csv + <out>.json).
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output prefix.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run classical DCA on an instance.
    Dca {
        /// Instance prefix or matrix CSV path.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the simulated quantum pipeline on an instance.
    Qdca {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        r: Option<usize>,
        /// Base projection count (2s directions are used).
        #[arg(long)]
        s: Option<usize>,
        /// Measurement budget N per projection.
        #[arg(long = "samples")]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// Take the mode of the exact outcome distribution instead of sampling.
        #[arg(long)]
        exact: bool,
        /// Let column indexes of the embedding compete in the conquer step.
        #[arg(long)]
        include_columns: bool,
        #[arg(long, value_enum, default_value_t = Support::Columns)]
        support: Support,
        /// Use s directions and their negations instead of 2s fresh ones.
        #[arg(long)]
        paired: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the sample budget for a distribution and check recovery.
    Theorem1 {
        /// Comma-separated probabilities.
        #[arg(long, value_delimiter = ',', conflicts_with = "input")]
        p: Option<Vec<f64>>,
        /// Instance whose first projection supplies the distribution.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        grid: Vec<u64>,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Use the sample count inside the logarithm of the threshold.
        #[arg(long)]
        literal: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Check the second-order remainder of the swap-evolution identity.
    TraceoutCheck {
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        #[arg(long, default_value_t = 1)]
        cases: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Cartesian sweep over shapes, noise, sample budgets and projection counts.
    Sweep {
        /// Shapes as NxM, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "100x30")]
        shapes: Vec<String>,
        #[arg(long, default_value_t = 5)]
        r: usize,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        noise: Vec<f64>,
        /// Sample budgets; default ceil(10 log2^2(n+m)).
        #[arg(long = "samples", value_delimiter = ',')]
        samples: Vec<u64>,
        /// Base projection counts; default 2 ceil(r ln r), at least 10.
        #[arg(long, value_delimiter = ',')]
        projections: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_shape(s: &str) -> Result<(usize, usize), Error> {
    let bad = || Error::InvalidParameter(format!("shape must look like 100x30, got {s:?}"));
    let (n, m) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((
        n.trim().parse().map_err(|_| bad())?,
        m.trim().parse().map_err(|_| bad())?,
    ))
}

fn emit(report: &Report, common: &Common) -> Result<(), Error> {
    let format = match common.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    match &common.out {
        Some(path) => {
            report.write(path, format)?;
            eprintln!("{}", harness::describe(report));
            eprintln!("wrote {}", path.display());
        }
        None => print!("{}", report.render(format)),
    }
    Ok(())
}

fn init_threads(threads: usize) {
    if threads > 0 {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Gen {
            n,
            m,
            r,
            noise,
            seed,
            out,
        } => {
            let report = harness::cmd_gen(&GenArgs {
                n,
                m,
                r,
                noise_level: noise,
                seed,
                out,
            })?;
            println!("{}", harness::describe(&report));
        }
        Command::Dca { input, r, s, common } => {
            init_threads(common.threads);
            let report = harness::cmd_dca(&DcaArgs {
                input,
                r,
                s,
                seed: common.seed,
                timings: common.timings,
            })?;
            emit(&report, &common)?;
        }
        Command::Qdca {
            input,
            r,
            s,
            samples,
            epsilon,
            delta,
            exact,
            include_columns,
            support,
            paired,
            common,
        } => {
            init_threads(common.threads);
            let mut args = QdcaArgs::new(input, common.seed);
            args.r = r;
            args.s = s;
            args.samples = samples;
            args.epsilon = epsilon;
            args.delta = delta;
            args.exact = exact;
            args.include_columns = include_columns;
            args.support = match support {
                Support::Columns => DirectionSupport::ColumnBlock,
                Support::Full => DirectionSupport::Full,
            };
            args.directions = if paired {
                DirectionScheme::Paired
            } else {
                DirectionScheme::Fresh
            };
            args.timings = common.timings;
            emit(&harness::cmd_qdca(&args)?, &common)?;
        }
        Command::Theorem1 {
            p,
            input,
            grid,
            delta,
            trials,
            literal,
            common,
        } => {
            init_threads(common.threads);
            let source = match (p, input) {
                (Some(p), None) => DistributionSource::Inline(p),
                (None, Some(path)) => DistributionSource::Instance(path),
                _ => return Err(Error::InvalidParameter("give exactly one of --p or --input".into())),
            };
            let report = harness::cmd_theorem1(&Theorem1Args {
                source,
                grid,
                delta,
                trials,
                seed: common.seed,
                formula: if literal {
                    GapFormula::Literal
                } else {
                    GapFormula::SupportSize
                },
            })?;
            emit(&report, &common)?;
        }
        Command::TraceoutCheck { dim, dt, cases, common } => {
            init_threads(common.threads);
            let report = harness::cmd_traceout_check(&TraceoutArgs {
                dim,
                dt,
                cases,
                seed: common.seed,
            })?;
            emit(&report, &common)?;
        }
        Command::Sweep {
            shapes,
            r,
            noise,
            samples,
            projections,
            reps,
            common,
        } => {
            init_threads(common.threads);
            let shapes = shapes.iter().map(|s| parse_shape(s)).collect::<Result<Vec<_>, _>>()?;
            let report = harness::cmd_sweep(&SweepArgs {
                shapes,
                r,
                noise_levels: noise,
                samples,
                projections,
                reps,
                seed: common.seed,
                timings: common.timings,
            })?;
            emit(&report, &common)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
