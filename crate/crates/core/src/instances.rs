//! Problem instances: random generation, maximin-distance instances, and a
//! JSON file format.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{AffinePiece, CandidateFunction, ConvexQuadratic, PiecewiseLinear, RobustObjective};
use crate::geometry::{AxisBox, Polytope};
use crate::rng::{stream_indexed, Stream};

pub const SCHEMA_VERSION: u32 = 1;
/// Largest dimension for which the 1-norm is expanded into `2^n` pieces.
pub const L1_DIM_CAP: usize = 10;

const COEFF_Q: (f64, f64) = (-3.0, 3.0);
const COEFF_LINEAR: (f64, f64) = (0.0, 20.0);
const GENERATED_BOX: (f64, f64) = (-10.0, 10.0);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub family: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub bounds: AxisBox,
    pub candidates: Vec<CandidateFunction>,
    /// One plane per candidate, used as the initial approximation.
    pub initial_planes: Option<Vec<AffinePiece>>,
    pub metadata: Metadata,
}

impl Instance {
    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn objective(&self) -> Result<RobustObjective> {
        RobustObjective::new(self.candidates.clone())
    }

    pub fn domain(&self) -> Polytope {
        Polytope::from_box(self.bounds.clone())
    }

    pub fn all_piecewise_linear(&self) -> bool {
        self.candidates
            .iter()
            .all(|c| matches!(c, CandidateFunction::PiecewiseLinear(_)))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&RawInstance::from(self)).map_err(|e| Error::Parse {
            context: "instance".into(),
            message: e.to_string(),
        })
    }

    /// Parses an instance; `source` names the input in error messages.
    pub fn from_json(text: &str, source: &str) -> Result<Self> {
        let raw: RawInstance = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("{source}, line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        raw.validate(source)
    }
}

pub fn save_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<()> {
    let mut text = instance.to_json()?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    Instance::from_json(&text, &path.display().to_string())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    schema_version: u32,
    id: String,
    dim: usize,
    #[serde(rename = "box")]
    bounds: Vec<[f64; 2]>,
    candidates: Vec<RawCandidate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial_planes: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    metadata: Metadata,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
enum RawCandidate {
    #[serde(rename = "quadratic")]
    Quadratic {
        #[serde(rename = "M")]
        m: Vec<f64>,
        b: Vec<f64>,
        c: f64,
    },
    /// Each piece is `[a_1, ..., a_n, b]`.
    #[serde(rename = "pl")]
    Pl { pieces: Vec<Vec<f64>> },
}

fn piece_row(p: &AffinePiece) -> Vec<f64> {
    let mut row = p.slope.clone();
    row.push(p.intercept);
    row
}

fn row_piece(row: &[f64], dim: usize, field: &str, source: &str) -> Result<AffinePiece> {
    if row.len() != dim + 1 {
        return Err(field_error(
            source,
            field,
            format!("expected {} numbers (slope then intercept), got {}", dim + 1, row.len()),
        ));
    }
    Ok(AffinePiece::new(row[..dim].to_vec(), row[dim]))
}

fn field_error(source: &str, field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        context: format!("{source}, field {field}"),
        message: message.into(),
    }
}

impl From<&Instance> for RawInstance {
    fn from(inst: &Instance) -> Self {
        let candidates = inst
            .candidates
            .iter()
            .map(|c| match c {
                CandidateFunction::Quadratic(q) => RawCandidate::Quadratic {
                    m: q.matrix().to_vec(),
                    b: q.linear().to_vec(),
                    c: q.constant(),
                },
                CandidateFunction::PiecewiseLinear(f) => RawCandidate::Pl {
                    pieces: f.pieces().iter().map(piece_row).collect(),
                },
            })
            .collect();
        RawInstance {
            schema_version: SCHEMA_VERSION,
            id: inst.id.clone(),
            dim: inst.dim(),
            bounds: inst.bounds.pairs().into_iter().map(|(l, h)| [l, h]).collect(),
            candidates,
            initial_planes: inst
                .initial_planes
                .as_ref()
                .map(|ps| ps.iter().map(piece_row).collect()),
            metadata: inst.metadata.clone(),
        }
    }
}

impl RawInstance {
    fn validate(self, source: &str) -> Result<Instance> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field_error(
                source,
                "schema_version",
                format!("unsupported version {}", self.schema_version),
            ));
        }
        let n = self.dim;
        if n == 0 {
            return Err(field_error(source, "dim", "must be at least 1"));
        }
        if self.bounds.len() != n {
            return Err(field_error(source, "box", format!("expected {n} pairs, got {}", self.bounds.len())));
        }
        let pairs: Vec<(f64, f64)> = self.bounds.iter().map(|p| (p[0], p[1])).collect();
        let bounds = AxisBox::from_pairs(&pairs).map_err(|e| field_error(source, "box", e.to_string()))?;
        if self.candidates.is_empty() {
            return Err(field_error(source, "candidates", "at least one candidate is required"));
        }
        let mut candidates = Vec::with_capacity(self.candidates.len());
        for (k, raw) in self.candidates.into_iter().enumerate() {
            let c: CandidateFunction = match raw {
                RawCandidate::Quadratic { m, b, c } => {
                    if b.len() != n {
                        return Err(field_error(source, &format!("candidates[{k}].b"), format!("expected {n} entries, got {}", b.len())));
                    }
                    if m.len() != n * n {
                        return Err(field_error(source, &format!("candidates[{k}].M"), format!("expected {} entries, got {}", n * n, m.len())));
                    }
                    ConvexQuadratic::new(m, b, c)
                        .map_err(|e| field_error(source, &format!("candidates[{k}]"), e.to_string()))?
                        .into()
                }
                RawCandidate::Pl { pieces } => {
                    let pieces = pieces
                        .iter()
                        .enumerate()
                        .map(|(i, row)| row_piece(row, n, &format!("candidates[{k}].pieces[{i}]"), source))
                        .collect::<Result<Vec<_>>>()?;
                    PiecewiseLinear::new(pieces)
                        .map_err(|e| field_error(source, &format!("candidates[{k}].pieces"), e.to_string()))?
                        .into()
                }
            };
            candidates.push(c);
        }
        let initial_planes = match self.initial_planes {
            None => None,
            Some(rows) => {
                if rows.len() != candidates.len() {
                    return Err(field_error(
                        source,
                        "initial_planes",
                        format!("expected one plane per candidate ({}), got {}", candidates.len(), rows.len()),
                    ));
                }
                Some(
                    rows.iter()
                        .enumerate()
                        .map(|(k, row)| row_piece(row, n, &format!("initial_planes[{k}]"), source))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
        };
        Ok(Instance {
            id: self.id,
            bounds,
            candidates,
            initial_planes,
            metadata: self.metadata,
        })
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    rng.gen_range(lo..=hi)
}

/// `K` quadratics `x'QᵀQx + b·x + c` on `[-10,10]^n` with `Q` entries from
/// `U[-3,3]` and `b`, `c` entries from `U[0,20]`. Candidate `k` draws from
/// its own stream, so instances with more candidates extend smaller ones.
pub fn generate_instance(n: usize, k: usize, seed: u64) -> Result<Instance> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidInput("dimension and candidate count must be positive".into()));
    }
    let candidates = (0..k)
        .map(|j| {
            let mut rng = stream_indexed(seed, Stream::InstanceGeneration, j as u64);
            let q: Vec<f64> = (0..n * n).map(|_| uniform(&mut rng, COEFF_Q)).collect();
            let b: Vec<f64> = (0..n).map(|_| uniform(&mut rng, COEFF_LINEAR)).collect();
            let c = uniform(&mut rng, COEFF_LINEAR);
            ConvexQuadratic::from_factor(&q, n, b, c).map(CandidateFunction::from)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance {
        id: format!("rand-n{n}-k{k}-s{seed}"),
        bounds: AxisBox::cube(n, GENERATED_BOX.0, GENERATED_BOX.1)?,
        candidates,
        initial_planes: None,
        metadata: Metadata {
            seed: Some(seed),
            family: "random-quadratic".into(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    LInf,
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(Norm::L1),
            "inf" | "∞" => Ok(Norm::LInf),
            _ => Err(Error::InvalidInput(format!("unknown norm {s:?}; expected 1 or inf"))),
        }
    }
}

/// `‖x − d‖` as a max of affine pieces.
pub fn norm_distance(d: &[f64], norm: Norm) -> Result<PiecewiseLinear> {
    let n = d.len();
    let piece = |signs: &[f64]| {
        let intercept = -signs.iter().zip(d).map(|(s, di)| s * di).sum::<f64>();
        AffinePiece::new(signs.to_vec(), intercept)
    };
    let pieces = match norm {
        Norm::LInf => (0..n)
            .flat_map(|i| {
                [1.0, -1.0].map(|s| {
                    let mut e = vec![0.0; n];
                    e[i] = s;
                    piece(&e)
                })
            })
            .collect(),
        Norm::L1 => {
            if n > L1_DIM_CAP {
                return Err(Error::Capability {
                    what: "1-norm expansion",
                    dim: n,
                    cap: L1_DIM_CAP,
                });
            }
            (0..1usize << n)
                .map(|mask| {
                    let signs: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
                    piece(&signs)
                })
                .collect()
        }
    };
    PiecewiseLinear::new(pieces)
}

/// The point of `x` farthest, in the minimum-distance sense, from `points`.
pub fn generate_maximin_instance(points: &[Vec<f64>], norm: Norm, x: AxisBox) -> Result<Instance> {
    if points.is_empty() {
        return Err(Error::InvalidInput("at least one point is required".into()));
    }
    let n = x.dim();
    let mut candidates = Vec::with_capacity(points.len());
    for p in points {
        if p.len() != n {
            return Err(Error::Dimension { expected: n, got: p.len() });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite point coordinate".into()));
        }
        candidates.push(norm_distance(p, norm)?.into());
    }
    Ok(Instance {
        id: format!("maximin-{}-{}", if norm == Norm::L1 { "l1" } else { "linf" }, points.len()),
        bounds: x,
        candidates,
        initial_planes: None,
        metadata: Metadata {
            seed: None,
            family: "maximin".into(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchEntry {
    pub id: String,
    pub dim: usize,
    pub k: usize,
    pub seed: u64,
}

/// Sizes of the 29-instance random grid, seeded by row number.
pub fn table1_spec() -> Vec<BenchEntry> {
    const SIZES: [(usize, &[usize]); 5] = [
        (2, &[5, 10, 15, 20, 25, 30, 35, 40, 45, 50]),
        (3, &[5, 10, 15, 20, 25, 30, 35, 40, 45, 50]),
        (5, &[50, 100, 200]),
        (10, &[50, 100, 200]),
        (20, &[50, 100, 200]),
    ];
    SIZES
        .iter()
        .flat_map(|(n, ks)| ks.iter().map(move |k| (*n, *k)))
        .enumerate()
        .map(|(i, (dim, k))| BenchEntry {
            id: (i + 1).to_string(),
            dim,
            k,
            seed: (i + 1) as u64,
        })
        .collect()
}

/// Reads a bench spec: CSV with header `id,dim,k,seed`.
pub fn load_bench_spec(path: impl AsRef<Path>) -> Result<Vec<BenchEntry>> {
    #[derive(Deserialize)]
    struct Row {
        id: String,
        dim: usize,
        k: usize,
        seed: u64,
    }
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize::<Row>()
        .map(|r| {
            let r = r?;
            Ok(BenchEntry {
                id: r.id,
                dim: r.dim,
                k: r.k,
                seed: r.seed,
            })
        })
        .collect()
}

/// Reads points, one per line, coordinates separated by commas or spaces.
pub fn parse_points(text: &str, source: &str) -> Result<Vec<Vec<f64>>> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let p = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>().map_err(|e| Error::Parse {
                    context: format!("{source}, line {}", i + 1),
                    message: format!("{t:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        points.push(p);
    }
    Ok(points)
}
