//! Command-line entry point: one subcommand per experiment, each writing a
//! machine-readable report and exiting nonzero when its check fails.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::boundary::{piece_count_report, shallow_bound_report, BoundaryFunction};
use crate::error::{Error, Result};
use crate::folding::{fold_check, FoldedBoundary};
use crate::geometry::dist2;
use crate::lattice::Lattice;
use crate::oracle::{default_margin, verify_vr_with_margin, BruteForce};
use crate::relunet::{build_full_decoder, scaling_table};
use crate::REPORT_VERSION;

#[derive(Parser, Debug)]
#[command(name = "anfold", version, about = "Exact CVP decision boundaries, folding and ReLU decoders for A_n")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone, Debug)]
pub struct RunConfig {
    /// Lattice dimension.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Sample count (default depends on the command).
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Brute-force search margin (default 2 for n ≤ 6, 1 above).
    #[arg(long)]
    pub margin: Option<i64>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    fn samples_or(&self, default: u64) -> u64 {
        self.samples.unwrap_or(default)
    }

    fn margin(&self) -> i64 {
        self.margin.unwrap_or_else(|| default_margin(self.n))
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Piece count: formula, simplex census and empirical count.
    Pieces(RunConfig),
    /// Check that every sample of P(B) decodes to a corner.
    VerifyVr(RunConfig),
    /// Fold invariance and the folded piece count.
    FoldCheck(RunConfig),
    /// Decode the points of a file with the ReLU decoder.
    Decode {
        #[command(flatten)]
        cfg: RunConfig,
        /// One point per line, n whitespace-separated reals.
        #[arg(long)]
        points: PathBuf,
        /// Also compare every point with the brute-force oracle.
        #[arg(long)]
        verify: bool,
    },
    /// Depth, width and parameter count of the full decoder.
    NetworkStats {
        #[command(flatten)]
        cfg: RunConfig,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        n_list: Vec<usize>,
    },
    /// Distinct creases of the boundary against the one-hidden-layer bound.
    ShallowBound(RunConfig),
    /// Grid evaluation of f and the folded f for n = 2 or 3.
    BoundaryExport {
        #[command(flatten)]
        cfg: RunConfig,
        /// Grid points per axis.
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
}

/// A rendered report and whether the command's check held.
pub struct Outcome {
    pub text: String,
    pub passed: bool,
}

/// JSON of the whole report, or CSV of `header` and `rows`.
fn render<T: Serialize>(report: &T, format: Format, header: &[String], rows: &[Vec<String>]) -> Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(report)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Io(e.into());
            w.write_record(header).map_err(io)?;
            for r in rows {
                w.write_record(r).map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            String::from_utf8(bytes).expect("csv output is utf-8")
        }
    })
}

fn cols(names: &str) -> Vec<String> {
    names.split(',').map(str::to_string).collect()
}

macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($x.to_string()),*] };
}

/// Whitespace-separated points, one per line. Blank lines and lines starting
/// with `#` are skipped; returns `(line number, point)`.
pub fn parse_points(text: &str, n: usize) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let p = t
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::Parse { line: line_no, msg: format!("not a finite number: {tok:?}") })
            })
            .collect::<Result<Vec<f64>>>()?;
        if p.len() != n {
            return Err(Error::Parse { line: line_no, msg: format!("expected {n} coordinates, found {}", p.len()) });
        }
        out.push((line_no, p));
    }
    Ok(out)
}

pub fn cmd_pieces(cfg: &RunConfig) -> Result<Outcome> {
    let samples = cfg.samples_or(if cfg.n >= 6 { 1_000_000 } else { 100_000 });
    let r = piece_count_report(cfg.n, samples, cfg.seed)?;
    let row = row![r.n, r.formula_count, r.empirical_count, r.census_total];
    Ok(Outcome { passed: r.consistent(), text: render(&r, cfg.format, &cols("n,formula,empirical,census"), &[row])? })
}

pub fn cmd_verify_vr(cfg: &RunConfig) -> Result<Outcome> {
    let l = Lattice::an(cfg.n)?;
    let r = verify_vr_with_margin(&l, cfg.samples_or(100_000), cfg.seed, cfg.margin())?;
    let row = row![r.n, r.samples, r.violations, r.ties, r.defect, r.ci95, r.seed];
    let passed = r.violations == 0 && r.margin_check_mismatches == 0;
    Ok(Outcome { passed, text: render(&r, cfg.format, &cols("n,samples,violations,ties,defect,ci95,seed"), &[row])? })
}

pub fn cmd_fold_check(cfg: &RunConfig) -> Result<Outcome> {
    let r = fold_check(cfg.n, cfg.samples_or(100_000), cfg.seed)?;
    let row = row![r.n, r.samples, r.max_deviation, r.folded_pieces, r.unfolded_pieces, r.folded_count_matches, r.domain_violations];
    let header = cols("n,samples,max_deviation,folded_pieces,unfolded_pieces,matches,domain_violations");
    Ok(Outcome { passed: r.passed(cfg.tol), text: render(&r, cfg.format, &header, &[row])? })
}

#[derive(Serialize)]
struct DecodedPoint {
    line: usize,
    z: Vec<i64>,
    distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_agrees: Option<bool>,
}

#[derive(Serialize)]
struct DecodeReport {
    version: u32,
    n: usize,
    points: Vec<DecodedPoint>,
    disagreements: usize,
}

pub fn cmd_decode(cfg: &RunConfig, points: &PathBuf, verify: bool) -> Result<Outcome> {
    let text = fs::read_to_string(points)?;
    let pts = parse_points(&text, cfg.n)?;
    let l = Lattice::an(cfg.n)?;
    let decoder = build_full_decoder(&l)?;
    let oracle = if verify { Some(BruteForce::new(&l, cfg.margin())?) } else { None };
    let mut decoded = Vec::with_capacity(pts.len());
    for (line, y) in pts {
        let z = decoder.decode(&l, &y)?;
        let distance = dist2(&y, &l.point(&z)).sqrt();
        let oracle_agrees = match &oracle {
            Some(o) => {
                let (reduced, k) = l.reduce_to_parallelotope(&y)?;
                let r = o.closest(&reduced)?;
                let want: Vec<i64> = r.z.iter().zip(&k).map(|(a, b)| a + b).collect();
                Some(r.tie || want == z)
            }
            None => None,
        };
        decoded.push(DecodedPoint { line, z, distance, oracle_agrees });
    }
    let disagreements = decoded.iter().filter(|p| p.oracle_agrees == Some(false)).count();
    let rows: Vec<Vec<String>> = decoded
        .iter()
        .map(|p| p.z.iter().map(i64::to_string).chain([p.distance.to_string()]).collect())
        .collect();
    let header: Vec<String> = (1..=cfg.n).map(|i| format!("z{i}")).chain(["distance".into()]).collect();
    let report = DecodeReport { version: REPORT_VERSION, n: cfg.n, points: decoded, disagreements };
    Ok(Outcome { passed: disagreements == 0, text: render(&report, cfg.format, &header, &rows)? })
}

pub fn cmd_network_stats(cfg: &RunConfig, ns: &[usize]) -> Result<Outcome> {
    let table = scaling_table(ns)?;
    let depth_ok = table.iter().all(|r| r.depth >= r.reflections_per_bit);
    let trend_ok = table.windows(2).all(|w| w[1].params_over_n4 <= w[0].params_over_n4);
    let time_ok = table.iter().all(|r| r.build_seconds < 60.0);
    let rows: Vec<Vec<String>> =
        table.iter().map(|r| row![r.n, r.depth, r.width, r.params, r.params_over_n4]).collect();
    #[derive(Serialize)]
    struct Report<'a> {
        version: u32,
        rows: &'a [crate::relunet::ScalingRow],
    }
    let text = render(&Report { version: REPORT_VERSION, rows: &table }, cfg.format, &cols("n,depth,width,params,params_over_n4"), &rows)?;
    Ok(Outcome { passed: depth_ok && trend_ok && time_ok, text })
}

pub fn cmd_shallow_bound(cfg: &RunConfig) -> Result<Outcome> {
    let r = shallow_bound_report(cfg.n, cfg.samples_or(20_000), cfg.seed)?;
    let row = row![r.n, r.bound, r.distinct_creases, r.pairs_realized, r.pairs_examined];
    let passed = r.distinct_creases as u128 >= r.bound;
    let header = cols("n,bound,distinct_creases,pairs_realized,pairs_examined");
    Ok(Outcome { passed, text: render(&r, cfg.format, &header, &[row])? })
}

#[derive(Serialize)]
struct GridPoint {
    y: Vec<f64>,
    f: f64,
    folded_f: f64,
}

#[derive(Serialize)]
struct ExportReport {
    version: u32,
    n: usize,
    grid: usize,
    points: Vec<GridPoint>,
}

/// Heightfield of `f` and `f_{D′}∘F` on a grid over the bounding box of `D`,
/// keeping grid points inside `D`.
pub fn cmd_boundary_export(cfg: &RunConfig, grid: usize) -> Result<Outcome> {
    if !(2..=3).contains(&cfg.n) {
        return Err(Error::InvalidDimension { n: cfg.n, reason: "boundary export supports n = 2 or 3" });
    }
    if grid < 2 {
        return Err(Error::InvalidDimension { n: grid, reason: "grid needs at least 2 points per axis" });
    }
    let l = Lattice::an(cfg.n)?;
    let f = BoundaryFunction::build(&l, 0)?;
    let folded = FoldedBoundary::build(&l)?;
    let d = cfg.n - 1;
    let corners = l.corners()?;
    let lo: Vec<f64> = (0..d).map(|k| corners.iter().map(|c| c.point[k + 1]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..d).map(|k| corners.iter().map(|c| c.point[k + 1]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let step = |k: usize, i: usize| lo[k] + (hi[k] - lo[k]) * i as f64 / (grid - 1) as f64;

    let mut points = Vec::new();
    let total = grid.pow(d as u32);
    for idx in 0..total {
        let yt: Vec<f64> = (0..d).map(|k| step(k, (idx / grid.pow(k as u32)) % grid)).collect();
        if !l.in_projected_parallelotope(&yt, 1e-12) {
            continue;
        }
        points.push(GridPoint { f: f.evaluate(&yt), folded_f: folded.evaluate(&yt), y: yt });
    }
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| p.y.iter().chain([&p.f, &p.folded_f]).map(f64::to_string).collect())
        .collect();
    let header: Vec<String> = (2..=cfg.n).map(|i| format!("y{i}")).chain(cols("f,folded_f")).collect();
    let passed = points.iter().all(|p| (p.f - p.folded_f).abs() < cfg.tol);
    let report = ExportReport { version: REPORT_VERSION, n: cfg.n, grid, points };
    Ok(Outcome { passed, text: render(&report, cfg.format, &header, &rows)? })
}

impl Command {
    fn config(&self) -> &RunConfig {
        match self {
            Command::Pieces(c) | Command::VerifyVr(c) | Command::FoldCheck(c) | Command::ShallowBound(c) => c,
            Command::Decode { cfg, .. } | Command::NetworkStats { cfg, .. } | Command::BoundaryExport { cfg, .. } => cfg,
        }
    }
}

/// Runs the command and writes its report; `Ok(false)` when the check fails.
pub fn run(cli: &Cli) -> Result<bool> {
    let start = Instant::now();
    let cfg = cli.command.config();
    if cfg.n < 2 {
        return Err(Error::InvalidDimension { n: cfg.n, reason: "n must be at least 2" });
    }
    let outcome = match &cli.command {
        Command::Pieces(c) => cmd_pieces(c)?,
        Command::VerifyVr(c) => cmd_verify_vr(c)?,
        Command::FoldCheck(c) => cmd_fold_check(c)?,
        Command::Decode { cfg, points, verify } => cmd_decode(cfg, points, *verify)?,
        Command::NetworkStats { cfg, n_list } => cmd_network_stats(cfg, n_list)?,
        Command::ShallowBound(c) => cmd_shallow_bound(c)?,
        Command::BoundaryExport { cfg, grid } => cmd_boundary_export(cfg, *grid)?,
    };
    match &cfg.out {
        Some(path) => fs::write(path, &outcome.text)?,
        None => print!("{}", outcome.text),
    }
    eprintln!("{} in {:.2?}", if outcome.passed { "ok" } else { "FAILED" }, start.elapsed());
    Ok(outcome.passed)
}
