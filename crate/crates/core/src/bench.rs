//! Running instances end to end (warm start, then a solver) and reporting
//! the results as CSV rows.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::g2b2::{solve_g2b2, G2b2Options, DEFAULT_EPSILON};
use crate::gb2::{solve_gb2, Gb2Options};
use crate::instances::{generate_instance, BenchEntry, Instance};
use crate::oracles::{OracleKind, SeparationOracle};
use crate::tree::{SolveStats, SolveStatus};
use crate::warmstart::{random_walk, WalkBudget, WalkConfig, DEFAULT_PROPOSALS_PER_DIM};

pub const CSV_HEADER: [&str; 10] = [
    "id", "dim", "k", "rw_time_s", "rw_lb", "obj", "gap_pct", "cpu_s", "sep_time_pct", "nodes",
];
pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(60);
const NA: &str = "NA";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Gb2,
    G2b2,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Gb2 => "gb2",
            Algorithm::G2b2 => "g2b2",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gb2" => Ok(Algorithm::Gb2),
            "g2b2" => Ok(Algorithm::G2b2),
            _ => Err(Error::InvalidInput(format!("unknown algorithm {s:?}; expected gb2 or g2b2"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub oracle: OracleKind,
    pub epsilon: f64,
    /// Covers warm start and solver together.
    pub time_limit: Option<Duration>,
    /// `None`: `10⁴·n` proposals.
    pub warmstart: Option<WalkBudget>,
    pub seed: u64,
    /// Use the instance's initial planes, if any, for g2b2.
    pub use_initial_planes: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::G2b2,
            oracle: OracleKind::Box,
            epsilon: DEFAULT_EPSILON,
            time_limit: Some(DEFAULT_TIME_LIMIT),
            warmstart: None,
            seed: 0,
            use_initial_planes: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub value: f64,
    pub point: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub certified: bool,
    pub status: SolveStatus,
    pub stats: SolveStats,
    pub warm_value: f64,
    pub warm_time: Duration,
    pub total_time: Duration,
}

impl RunOutcome {
    /// Relative gap in percent, if the upper bound is certified.
    pub fn gap_pct(&self) -> Option<f64> {
        self.certified
            .then(|| (self.upper - self.lower) / self.upper.abs().max(1.0) * 100.0)
    }
}

/// Warm start followed by the configured solver.
pub fn solve_instance(instance: &Instance, cfg: &RunConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let objective = instance.objective()?;
    let domain = instance.domain();
    let budget = cfg
        .warmstart
        .unwrap_or(WalkBudget::Proposals(DEFAULT_PROPOSALS_PER_DIM * instance.dim() as u64));
    let walk = random_walk(
        &objective,
        &domain,
        &WalkConfig {
            budget,
            seed: cfg.seed,
            ..WalkConfig::default()
        },
    )?;
    let remaining = cfg.time_limit.map(|t| t.saturating_sub(start.elapsed()));
    let initial_lower = Some((walk.value, walk.point.clone()));
    let (value, point, lower, upper, certified, status, stats) = match cfg.algorithm {
        Algorithm::Gb2 => {
            let s = solve_gb2(
                &objective,
                &domain,
                &Gb2Options {
                    time_limit: remaining,
                    initial_lower,
                    ..Gb2Options::default()
                },
            )?;
            (s.value, s.point, s.lower, s.upper, true, s.status, s.stats)
        }
        Algorithm::G2b2 => {
            let s = solve_g2b2(
                &objective,
                &domain,
                &G2b2Options {
                    epsilon: cfg.epsilon,
                    oracle: SeparationOracle::new(cfg.oracle).with_seed(cfg.seed),
                    time_limit: remaining,
                    initial_planes: if cfg.use_initial_planes {
                        instance.initial_planes.clone()
                    } else {
                        None
                    },
                    initial_lower,
                    ..G2b2Options::default()
                },
            )?;
            (s.value, s.point, s.lower, s.upper, s.certified, s.status, s.stats)
        }
    };
    Ok(RunOutcome {
        value,
        point,
        lower,
        upper,
        certified,
        status,
        stats,
        warm_value: walk.value,
        warm_time: walk.elapsed,
        total_time: start.elapsed(),
    })
}

/// One CSV row. `None` fields are written as `NA`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub id: String,
    pub dim: usize,
    pub k: usize,
    pub rw_time_s: Option<f64>,
    pub rw_lb: Option<f64>,
    pub obj: Option<f64>,
    pub gap_pct: Option<f64>,
    pub cpu_s: Option<f64>,
    pub sep_time_pct: Option<f64>,
    pub nodes: Option<usize>,
}

impl RunReport {
    pub fn from_outcome(id: &str, dim: usize, k: usize, out: &RunOutcome) -> Self {
        let total = out.total_time.as_secs_f64();
        Self {
            id: id.to_string(),
            dim,
            k,
            rw_time_s: Some(out.warm_time.as_secs_f64()),
            rw_lb: Some(out.warm_value),
            obj: Some(out.value),
            gap_pct: out.gap_pct(),
            cpu_s: Some(total),
            sep_time_pct: Some(if total > 0.0 {
                out.stats.separation_time.as_secs_f64() / total * 100.0
            } else {
                0.0
            }),
            nodes: Some(out.stats.nodes_created),
        }
    }

    /// Row for an instance whose run failed.
    pub fn failed(id: &str, dim: usize, k: usize) -> Self {
        Self {
            id: id.to_string(),
            dim,
            k,
            rw_time_s: None,
            rw_lb: None,
            obj: None,
            gap_pct: None,
            cpu_s: None,
            sep_time_pct: None,
            nodes: None,
        }
    }

    fn record(&self) -> Vec<String> {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(|| NA.to_string(), T::to_string)
        }
        vec![
            self.id.clone(),
            self.dim.to_string(),
            self.k.to_string(),
            opt(&self.rw_time_s),
            opt(&self.rw_lb),
            opt(&self.obj),
            opt(&self.gap_pct),
            opt(&self.cpu_s),
            opt(&self.sep_time_pct),
            opt(&self.nodes),
        ]
    }

    fn from_record(rec: &csv::StringRecord, line: u64) -> Result<Self> {
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let err = |i: usize, msg: String| Error::Parse {
            context: format!("report line {line}, column {}", CSV_HEADER[i]),
            message: msg,
        };
        fn parse<T: FromStr>(s: &str) -> Option<T> {
            s.parse().ok()
        }
        let req = |i: usize| -> Result<usize> { parse(field(i)).ok_or_else(|| err(i, format!("bad integer {:?}", field(i)))) };
        let opt_f = |i: usize| -> Result<Option<f64>> {
            match field(i) {
                NA => Ok(None),
                s => parse(s).map(Some).ok_or_else(|| err(i, format!("bad number {s:?}"))),
            }
        };
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Parse {
                context: format!("report line {line}"),
                message: format!("expected {} columns, got {}", CSV_HEADER.len(), rec.len()),
            });
        }
        Ok(Self {
            id: field(0).to_string(),
            dim: req(1)?,
            k: req(2)?,
            rw_time_s: opt_f(3)?,
            rw_lb: opt_f(4)?,
            obj: opt_f(5)?,
            gap_pct: opt_f(6)?,
            cpu_s: opt_f(7)?,
            sep_time_pct: opt_f(8)?,
            nodes: match field(9) {
                NA => None,
                _ => Some(req(9)?),
            },
        })
    }
}

pub fn write_reports<W: Write>(out: W, reports: &[RunReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_reports<R: Read>(input: R) -> Result<Vec<RunReport>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            context: "report header".into(),
            message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    rdr.records()
        .enumerate()
        .map(|(i, rec)| RunReport::from_record(&rec?, i as u64 + 2))
        .collect()
}

/// Generates and solves each entry in order. A failing entry yields an
/// all-`NA` row and the run continues; `on_row` sees each row as it lands.
pub fn run_benchmark(
    spec: &[BenchEntry],
    cfg: &RunConfig,
    mut on_row: impl FnMut(&RunReport, Option<&Error>),
) -> Vec<RunReport> {
    spec.iter()
        .map(|e| {
            let result = generate_instance(e.dim, e.k, e.seed).and_then(|inst| solve_instance(&inst, cfg));
            let (row, err) = match result {
                Ok(out) => (RunReport::from_outcome(&e.id, e.dim, e.k, &out), None),
                Err(err) => (RunReport::failed(&e.id, e.dim, e.k), Some(err)),
            };
            on_row(&row, err.as_ref());
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_spec_writes_header_only() {
        let mut buf = Vec::new();
        write_reports(&mut buf, &run_benchmark(&[], &RunConfig::default(), |_, _| {})).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", CSV_HEADER.join(",")));
    }

    #[test]
    fn csv_round_trip_with_na() {
        let rows = vec![
            RunReport {
                id: "a".into(),
                dim: 2,
                k: 5,
                rw_time_s: Some(0.1 + 0.2),
                rw_lb: Some(-1.0 / 3.0),
                obj: Some(815.13),
                gap_pct: None,
                cpu_s: Some(1e-7),
                sep_time_pct: Some(94.6),
                nodes: Some(51182),
            },
            RunReport::failed("b,quoted", 3, 10),
        ];
        let mut buf = Vec::new();
        write_reports(&mut buf, &rows).unwrap();
        assert_eq!(read_reports(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn bad_header_rejected() {
        assert!(read_reports("x,y\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn small_instance_runs_both_modes() {
        let spec = [BenchEntry {
            id: "1".into(),
            dim: 2,
            k: 2,
            seed: 3,
        }];
        let certified = run_benchmark(&spec, &RunConfig::default(), |_, _| {});
        assert!(certified[0].gap_pct.unwrap() <= 1e-2);
        let lc = RunConfig {
            oracle: OracleKind::Lc1,
            ..RunConfig::default()
        };
        let heuristic = run_benchmark(&spec, &lc, |_, _| {});
        assert_eq!(heuristic[0].gap_pct, None);
        assert!(heuristic[0].obj.is_some());
    }
}
