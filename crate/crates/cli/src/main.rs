//! Command-line front end: instance generation, solving and benchmarking.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use robustmax::bench::{run_benchmark, solve_instance, write_reports, Algorithm, RunConfig, RunReport};
use robustmax::geometry::AxisBox;
use robustmax::instances::{
    generate_instance, generate_maximin_instance, load_bench_spec, load_instance, parse_points, save_instance,
    table1_spec, Norm,
};
use robustmax::oracles::OracleKind;
use robustmax::tree::SolveStatus;
use robustmax::warmstart::WalkBudget;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Gb2,
    G2b2,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Gb2 => Algorithm::Gb2,
            AlgorithmArg::G2b2 => Algorithm::G2b2,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OracleArg {
    Box,
    Lc1,
    Lc2,
    Exact,
}

impl From<OracleArg> for OracleKind {
    fn from(o: OracleArg) -> Self {
        match o {
            OracleArg::Box => OracleKind::Box,
            OracleArg::Lc1 => OracleKind::Lc1,
            OracleArg::Lc2 => OracleKind::Lc2,
            OracleArg::Exact => OracleKind::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormArg {
    #[value(name = "1")]
    L1,
    Inf,
}

/// Options shared by `solve` and `bench`.
#[derive(Debug, clap::Args)]
struct SolveArgs {
    /// Defaults to gb2 for piecewise-linear instances, g2b2 otherwise
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
    #[arg(long, value_enum, default_value = "box")]
    oracle: OracleArg,
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    /// Seconds, warm start included (14400 for a 4-hour run)
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    /// Random-walk proposals (default 10000 per dimension)
    #[arg(long, conflicts_with = "warmstart_time")]
    warmstart_proposals: Option<u64>,
    /// Random-walk seconds instead of a proposal count
    #[arg(long)]
    warmstart_time: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolveArgs {
    fn config(&self, algorithm: Algorithm) -> Result<RunConfig> {
        if self.time_limit.is_nan() || self.time_limit <= 0.0 {
            bail!("--time-limit must be positive");
        }
        let warmstart = match (self.warmstart_proposals, self.warmstart_time) {
            (Some(n), _) => Some(WalkBudget::Proposals(n)),
            (None, Some(t)) if t >= 0.0 => Some(WalkBudget::Time(Duration::from_secs_f64(t))),
            (None, Some(_)) => bail!("--warmstart-time must be non-negative"),
            (None, None) => None,
        };
        Ok(RunConfig {
            algorithm,
            oracle: self.oracle.into(),
            epsilon: self.epsilon,
            time_limit: Some(Duration::from_secs_f64(self.time_limit)),
            warmstart,
            seed: self.seed,
            use_initial_planes: true,
        })
    }
}

#[derive(Parser)]
#[command(name = "robustmax", version, about = "Maximize the minimum of convex functions over a polytope")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random quadratic instance
    Generate {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance file
    Solve {
        file: PathBuf,
        #[command(flatten)]
        args: SolveArgs,
        #[arg(long, value_enum, default_value = "text")]
        report: ReportFormat,
    },
    /// Run a benchmark grid and write one CSV row per instance
    Bench {
        /// "table1" or a CSV file with columns id,dim,k,seed
        #[arg(long, default_value = "table1")]
        spec: String,
        /// Skip entries above this dimension
        #[arg(long)]
        max_dim: Option<usize>,
        #[command(flatten)]
        args: SolveArgs,
        /// Defaults to standard output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a maximin-distance instance for a point set
    Maximin {
        /// One point per line, coordinates separated by commas or spaces
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_enum)]
        p: NormArg,
        /// `lo,hi` for every coordinate, or a single pair used for all
        #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true, required = true)]
        bounds: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_box(values: &[f64], dim: usize) -> Result<AxisBox> {
    let pairs: Vec<(f64, f64)> = match values.len() {
        2 => vec![(values[0], values[1]); dim],
        n if n == 2 * dim => values.chunks(2).map(|c| (c[0], c[1])).collect(),
        n => bail!("--box needs 2 or {} numbers, got {n}", 2 * dim),
    };
    Ok(AxisBox::from_pairs(&pairs)?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate { dim, k, seed, out } => {
            let inst = generate_instance(dim, k, seed)?;
            save_instance(&inst, &out).with_context(|| format!("writing {}", out.display()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve { file, args, report } => {
            let inst = load_instance(&file).with_context(|| format!("loading {}", file.display()))?;
            let algorithm = args.algorithm.map(Algorithm::from).unwrap_or(if inst.all_piecewise_linear() {
                Algorithm::Gb2
            } else {
                Algorithm::G2b2
            });
            let out = solve_instance(&inst, &args.config(algorithm)?)?;
            let stdout = io::stdout();
            match report {
                ReportFormat::Csv => {
                    let row = RunReport::from_outcome(&inst.id, inst.dim(), inst.len(), &out);
                    write_reports(stdout.lock(), &[row])?;
                }
                ReportFormat::Text => {
                    let mut w = stdout.lock();
                    writeln!(w, "instance   {}", inst.id)?;
                    writeln!(w, "algorithm  {algorithm}")?;
                    writeln!(w, "status     {:?}", out.status)?;
                    writeln!(w, "objective  {}", out.value)?;
                    writeln!(w, "point      {:?}", out.point)?;
                    if out.certified {
                        writeln!(w, "upper      {}", out.upper)?;
                        writeln!(w, "gap %      {}", out.gap_pct().unwrap_or(f64::NAN))?;
                    } else {
                        writeln!(w, "upper      NA (heuristic oracle)")?;
                    }
                    writeln!(w, "warm start {}", out.warm_value)?;
                    writeln!(w, "nodes      {}", out.stats.nodes_created)?;
                    writeln!(w, "time s     {:.3}", out.total_time.as_secs_f64())?;
                }
            }
            Ok(match out.status {
                SolveStatus::Converged => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            })
        }
        Command::Bench {
            spec,
            max_dim,
            args,
            out,
        } => {
            let mut entries = if spec == "table1" {
                table1_spec()
            } else {
                load_bench_spec(&spec).with_context(|| format!("loading spec {spec}"))?
            };
            if let Some(d) = max_dim {
                entries.retain(|e| e.dim <= d);
            }
            let algorithm = args.algorithm.map(Algorithm::from).unwrap_or(Algorithm::G2b2);
            let cfg = args.config(algorithm)?;
            let rows = run_benchmark(&entries, &cfg, |row, err| match err {
                Some(e) => eprintln!("instance {}: failed: {e}", row.id),
                None => eprintln!("instance {}: done", row.id),
            });
            match out {
                Some(path) => {
                    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    write_reports(f, &rows)?;
                }
                None => write_reports(io::stdout().lock(), &rows)?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Maximin { points, p, bounds, out } => {
            let text = std::fs::read_to_string(&points).with_context(|| format!("reading {}", points.display()))?;
            let pts = parse_points(&text, &points.display().to_string())?;
            let Some(dim) = pts.first().map(Vec::len) else {
                bail!("{} contains no points", points.display());
            };
            let norm = match p {
                NormArg::L1 => Norm::L1,
                NormArg::Inf => Norm::LInf,
            };
            let inst = generate_maximin_instance(&pts, norm, parse_box(&bounds, dim)?)?;
            save_instance(&inst, &out).with_context(|| format!("writing {}", out.display()))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
