//! Batch verification: point sampling, parallel evaluation and the
//! deterministic JSON/CSV report.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::checks::{check_point, DEFAULT_ORDER};
use crate::cosmology::AlmostFlrwSpec;
use crate::metric::MetricSpec;
use crate::residual::ResidualBlock;

pub const REPORT_VERSION: &str = "threadsplit-report/1";
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DISCREPANCY_FLAG: &str = "PAPER-DISCREPANCY";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InputError {
    #[error("bad grid term '{0}': expected x<k>=value or x<k>=start:stop:count")]
    Grid(String),
    #[error("bad box term '{0}': expected x<k>=lo:hi")]
    Box(String),
    #[error("points file line {line}: {msg}")]
    Points { line: usize, msg: String },
    #[error("thread pool: {0}")]
    Threads(String),
}

/// Coordinate ranges for random sampling; unspecified coordinates are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBox(pub [(f64, f64); 4]);

impl Default for SampleBox {
    fn default() -> Self {
        SampleBox([(1.0, 3.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointSource {
    List(Vec<[f64; 4]>),
    Grid([Vec<f64>; 4]),
    Random {
        n: usize,
        seed: u64,
        bounds: SampleBox,
    },
}

fn coord_index(key: &str) -> Option<usize> {
    match key.trim() {
        "x0" => Some(0),
        "x1" => Some(1),
        "x2" => Some(2),
        "x3" => Some(3),
        _ => None,
    }
}

fn parse_num(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// `x0=1:3:5,x1=0`: inclusive `start:stop:count` or a single value per coordinate.
pub fn parse_grid(text: &str) -> Result<[Vec<f64>; 4], InputError> {
    let mut axes: [Option<Vec<f64>>; 4] = Default::default();
    for term in text.split(',').filter(|t| !t.trim().is_empty()) {
        let bad = || InputError::Grid(term.trim().to_string());
        let (k, v) = term.split_once('=').ok_or_else(bad)?;
        let idx = coord_index(k).ok_or_else(bad)?;
        if axes[idx].is_some() {
            return Err(bad());
        }
        let parts: Vec<&str> = v.split(':').collect();
        let values = match parts.as_slice() {
            [x] => vec![parse_num(x).ok_or_else(bad)?],
            [a, b, n] => {
                let (a, b) = (parse_num(a).ok_or_else(bad)?, parse_num(b).ok_or_else(bad)?);
                let n: usize = n.trim().parse().ok().filter(|&n| n >= 1).ok_or_else(bad)?;
                if n == 1 {
                    vec![a]
                } else {
                    (0..n)
                        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
                        .collect()
                }
            }
            _ => return Err(bad()),
        };
        axes[idx] = Some(values);
    }
    Ok(axes.map(|a| a.unwrap_or_else(|| vec![0.0])))
}

/// `x0=1:3,x1=-1:1`; unspecified coordinates are fixed at 0.
pub fn parse_box(text: &str) -> Result<SampleBox, InputError> {
    let mut b = [(0.0, 0.0); 4];
    for term in text.split(',').filter(|t| !t.trim().is_empty()) {
        let bad = || InputError::Box(term.trim().to_string());
        let (k, v) = term.split_once('=').ok_or_else(bad)?;
        let idx = coord_index(k).ok_or_else(bad)?;
        let (lo, hi) = v.split_once(':').ok_or_else(bad)?;
        let (lo, hi) = (
            parse_num(lo).ok_or_else(bad)?,
            parse_num(hi).ok_or_else(bad)?,
        );
        if lo > hi {
            return Err(bad());
        }
        b[idx] = (lo, hi);
    }
    Ok(SampleBox(b))
}

/// One point per line, four reals separated by whitespace or commas; `#` starts a comment.
pub fn parse_points(text: &str) -> Result<Vec<[f64; 4]>, InputError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                parse_num(s).ok_or_else(|| InputError::Points {
                    line: n + 1,
                    msg: format!("'{s}' is not a finite real"),
                })
            })
            .collect::<Result<_, _>>()?;
        let p: [f64; 4] = vals.try_into().map_err(|v: Vec<f64>| InputError::Points {
            line: n + 1,
            msg: format!("expected 4 coordinates, found {}", v.len()),
        })?;
        out.push(p);
    }
    Ok(out)
}

/// SplitMix64: `state += 0x9E3779B97F4A7C15`, then the two xor-shift-multiply
/// rounds and a final xor-shift.
#[derive(Debug, Clone)]
pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Points in x0-major order for grids; coordinates x0..x3 drawn in turn for random points.
pub fn expand_points(src: &PointSource) -> Vec<[f64; 4]> {
    match src {
        PointSource::List(v) => v.clone(),
        PointSource::Grid(axes) => {
            let mut out = Vec::new();
            for &a in &axes[0] {
                for &b in &axes[1] {
                    for &c in &axes[2] {
                        for &d in &axes[3] {
                            out.push([a, b, c, d]);
                        }
                    }
                }
            }
            out
        }
        PointSource::Random { n, seed, bounds } => {
            let mut rng = SplitMix64(*seed);
            (0..*n)
                .map(|_| {
                    std::array::from_fn(|k| {
                        let (lo, hi) = bounds.0[k];
                        lo + (hi - lo) * rng.next_f64()
                    })
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: MetricSpec,
    /// Bytes hashed into the report digest.
    pub spec_text: String,
    pub points: PointSource,
    pub tol: f64,
    pub order: usize,
    /// Check-name prefixes to keep; empty keeps everything.
    pub checks: Vec<String>,
    pub cosmo: Option<AlmostFlrwSpec>,
    /// Worker pool width; `None` lets rayon decide.
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn new(spec: MetricSpec, spec_text: String, points: PointSource) -> RunConfig {
        RunConfig {
            spec,
            spec_text,
            points,
            tol: DEFAULT_TOL,
            order: DEFAULT_ORDER,
            checks: Vec::new(),
            cosmo: None,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Violation,
    InputError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointReport {
    pub x: [f64; 4],
    pub status: Status,
    pub residuals: BTreeMap<String, f64>,
    /// Residuals of the as-printed variants, where they differ from the forms used.
    pub printed: BTreeMap<String, f64>,
    pub flags: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub version: String,
    pub spec_sha256: String,
    pub tol: f64,
    pub summary: BTreeMap<String, f64>,
    pub points: Vec<PointReport>,
}

impl Report {
    /// 0 when every point is within tolerance, 2 on any input error, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.points.iter().any(|p| p.status == Status::InputError) {
            2
        } else if self.points.iter().any(|p| p.status == Status::Violation) {
            1
        } else {
            0
        }
    }

    pub fn flags(&self) -> Vec<String> {
        let mut f: Vec<String> = self
            .points
            .iter()
            .flat_map(|p| p.flags.iter().cloned())
            .collect();
        f.sort();
        f.dedup();
        f
    }
}

fn point_report(
    x: [f64; 4],
    result: Result<ResidualBlock, String>,
    tol: f64,
    checks: &[String],
) -> PointReport {
    match result {
        Err(e) => PointReport {
            x,
            status: Status::InputError,
            residuals: BTreeMap::new(),
            printed: BTreeMap::new(),
            flags: Vec::new(),
            error: Some(e),
        },
        Ok(mut block) => {
            if !checks.is_empty() {
                block.retain_prefixes(checks);
            }
            let bad = block.entries().values().any(|v| !(*v <= tol));
            let flags = block
                .discrepancies(tol)
                .into_iter()
                .map(|n| format!("{DISCREPANCY_FLAG}:{n}"))
                .collect();
            PointReport {
                x,
                status: if bad { Status::Violation } else { Status::Ok },
                residuals: block.entries().clone(),
                printed: block.printed_entries().clone(),
                flags,
                error: None,
            }
        }
    }
}

pub fn spec_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Evaluates every selected check at every point. Output order follows the
/// point order regardless of the pool width.
pub fn run_verification(config: &RunConfig) -> Result<Report, InputError> {
    let points = expand_points(&config.points);
    let eval = |x: &[f64; 4]| {
        let r = check_point(&config.spec, *x, config.order, config.cosmo.as_ref())
            .map_err(|e| e.to_string());
        point_report(*x, r, config.tol, &config.checks)
    };
    let reports: Vec<PointReport> = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| InputError::Threads(e.to_string()))?
            .install(|| points.par_iter().map(eval).collect()),
        None => points.par_iter().map(eval).collect(),
    };
    let mut summary: BTreeMap<String, f64> = BTreeMap::new();
    for p in &reports {
        for (k, &v) in &p.residuals {
            let e = summary.entry(k.clone()).or_insert(0.0);
            *e = if e.is_nan() || v.is_nan() {
                f64::NAN
            } else {
                e.max(v)
            };
        }
    }
    Ok(Report {
        version: REPORT_VERSION.to_string(),
        spec_sha256: spec_digest(&config.spec_text),
        tol: config.tol,
        summary,
        points: reports,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// JSON with sorted keys (non-finite numbers become `null`), or CSV summary rows.
pub fn emit_report(r: &Report, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(r).expect("report serialization is infallible");
            out.push(b'\n');
            out
        }
        Format::Csv => {
            let mut s = String::from("check,max_residual\n");
            for (k, v) in &r.summary {
                s.push_str(&format!("{k},{v:e}\n"));
            }
            s.into_bytes()
        }
    }
}
