//! `carnot`: fibers, bound checks, counting scans, family quotients and nilpotent
//! approximation from the command line.
//!
//! Exit codes: 0 on success, 2 on input errors, 3 when a verification fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use carnot_geodesics::bounds::{check_bounds_with, constants, BoundsReport};
use carnot_geodesics::expmap::exp_map;
use carnot_geodesics::fiber::{fiber_with, FiberOptions, FiberResult, DEFAULT_ZERO_TOL};
use carnot_geodesics::isometry::quotient_families_with;
use carnot_geodesics::nilpotent::{default_step, nilpotentize, PolynomialFrame, DEFAULT_CLUSTER_TOL};
use carnot_geodesics::oracle::{self, grid_count};
use carnot_geodesics::{GroupSpec, Point};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Tolerance on `‖exp_map(cov) − p‖ / max(1, ‖p‖)` used by `--verify`.
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "carnot", version, about = "Geodesics of contact Carnot groups")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Relative tolerance below which a block of x counts as zero.
    #[arg(long, global = true, default_value_t = DEFAULT_ZERO_TOL)]
    tol: f64,
    /// Truncation of the family lattice when x = 0 (default 100π/α₁).
    #[arg(long, global = true)]
    lambda_max: Option<f64>,
    /// Re-check results against the brute-force oracles.
    #[arg(long, global = true)]
    verify: bool,
    /// Emit CSV.
    #[arg(long, global = true, conflicts_with = "json")]
    csv: bool,
    /// Emit JSON.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// All geodesics from the origin to a point.
    Fiber { group: PathBuf, point: PathBuf },
    /// Counting functions along z = r with ‖x‖ = 1 split evenly across blocks.
    Scan {
        group: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        ratio_min: f64,
        #[arg(long)]
        ratio_max: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
    },
    /// Linear bounds on the counting functions at a point.
    Bounds { group: PathBuf, point: PathBuf },
    /// Families of geodesics to a point, modulo isometries.
    Families { group: PathBuf, point: PathBuf },
    /// Nilpotent approximation of a polynomial frame.
    Nilpotentize {
        frame: PathBuf,
        /// Finite-difference step (default 1e−5·(1 + ‖p₀‖)).
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_CLUSTER_TOL)]
        cluster_tol: f64,
    },
}

enum Failure {
    Input(String),
    Verify(String),
}

impl From<carnot_geodesics::Error> for Failure {
    fn from(e: carnot_geodesics::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<String, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load(group: &Path, point: &Path) -> Result<(GroupSpec, Point), Failure> {
    let spec: GroupSpec = parse(group)?;
    let p: Point = parse(point)?;
    p.x.check_layout(&spec)?;
    Ok((spec, p))
}

fn to_json<T: Serialize>(v: &T) -> Outcome {
    let mut s = serde_json::to_string(v).map_err(|e| Failure::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

impl Global {
    fn options(&self) -> Result<FiberOptions, Failure> {
        if !(self.tol >= 0.0) {
            return Err(Failure::Input(format!("--tol must be non-negative, got {}", self.tol)));
        }
        if let Some(l) = self.lambda_max {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Failure::Input(format!("--lambda-max must be positive, got {l}")));
            }
        }
        Ok(FiberOptions { zero_tol: self.tol, lambda_max: self.lambda_max })
    }
}

fn verify_fiber(spec: &GroupSpec, p: &Point, res: &FiberResult) -> Result<(), Failure> {
    let scale = p.norm().max(1.0);
    for g in &res.isolated {
        let d = exp_map(spec, &g.covector)?.distance(p);
        if d > RESIDUAL_TOL * scale {
            return Err(Failure::Verify(format!("geodesic at lambda = {} misses p by {d:e}", g.lambda)));
        }
    }
    if p.x.is_zero() {
        return Ok(());
    }
    let grid = grid_count(spec, p, oracle::default_step(spec, p)?)?;
    if grid.count != res.isolated.len() {
        return Err(Failure::Verify(format!(
            "solver found {} isolated geodesics, grid oracle found {}",
            res.isolated.len(),
            grid.count
        )));
    }
    Ok(())
}

fn fiber_csv(res: &FiberResult) -> String {
    let mut out = String::from("kind,lambda,energy,sphere_dim\n");
    for g in &res.isolated {
        let _ = writeln!(out, "isolated,{},{},0", g.lambda, g.energy);
    }
    for f in &res.families {
        let _ = writeln!(out, "family,{},{},{}", f.lambda, f.energy, f.sphere_dim);
    }
    out
}

fn cmd_fiber(g: &Global, group: &Path, point: &Path) -> Outcome {
    let (spec, p) = load(group, point)?;
    let res = fiber_with(&spec, &p, &g.options()?)?;
    if g.verify {
        verify_fiber(&spec, &p, &res)?;
    }
    if g.csv {
        Ok(fiber_csv(&res))
    } else {
        to_json(&res)
    }
}

#[derive(Serialize)]
struct ScanRow {
    ratio: f64,
    nu_hat: carnot_geodesics::fiber::Count,
    beta_hat: carnot_geodesics::fiber::Count,
    lower: f64,
    upper: f64,
}

/// Unit `x` with equal norm in every block.
fn scan_x(spec: &GroupSpec) -> Vec<Vec<f64>> {
    let w = 1.0 / (spec.k() as f64).sqrt();
    spec.mults()
        .iter()
        .map(|&m| {
            let mut v = vec![0.0; 2 * m];
            v[0] = w;
            v
        })
        .collect()
}

fn cmd_scan(g: &Global, group: &Path, min: f64, max: f64, steps: usize) -> Outcome {
    if !(0.0 <= min && min < max && max.is_finite()) {
        return Err(Failure::Input(format!("need 0 <= ratio-min < ratio-max, got {min}, {max}")));
    }
    if steps < 2 {
        return Err(Failure::Input(format!("need at least 2 steps, got {steps}")));
    }
    let spec: GroupSpec = parse(group)?;
    let opts = g.options()?;
    let c = constants(&spec);
    let x = scan_x(&spec);
    let mut rows = Vec::with_capacity(steps);
    for i in 0..steps {
        let ratio = min + (max - min) * i as f64 / (steps - 1) as f64;
        let p = Point::new(&spec, &x, ratio)?;
        let res = fiber_with(&spec, &p, &opts)?;
        if g.verify {
            verify_fiber(&spec, &p, &res)?;
        }
        rows.push(ScanRow {
            ratio,
            nu_hat: res.nu_hat,
            beta_hat: res.beta_hat,
            lower: (c.c1 * ratio + c.r1).max(0.0),
            upper: c.c2 * ratio + c.r2,
        });
    }
    if g.json {
        return to_json(&rows);
    }
    let mut out = String::from("ratio,nu_hat,beta_hat,lower,upper\n");
    for r in &rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.ratio, r.nu_hat, r.beta_hat, r.lower, r.upper);
    }
    Ok(out)
}

fn cmd_bounds(g: &Global, group: &Path, point: &Path) -> Outcome {
    if g.csv {
        return Err(Failure::Input("bounds has no CSV form".into()));
    }
    let (spec, p) = load(group, point)?;
    let opts = g.options()?;
    let report: BoundsReport = check_bounds_with(&spec, &p, &opts)?;
    if g.verify {
        verify_fiber(&spec, &p, &fiber_with(&spec, &p, &opts)?)?;
    }
    let out = to_json(&report)?;
    if !report.all_hold() {
        print!("{out}");
        return Err(Failure::Verify("a bound is violated".into()));
    }
    Ok(out)
}

fn cmd_families(g: &Global, group: &Path, point: &Path) -> Outcome {
    let (spec, p) = load(group, point)?;
    let fams = quotient_families_with(&spec, &p, &g.options()?)?;
    if g.csv {
        let mut out = String::from("lambda,ell,cell\n");
        for f in &fams {
            let _ = writeln!(out, "{},{},{}", f.lambda, f.ell, f.cell);
        }
        return Ok(out);
    }
    to_json(&fams)
}

fn cmd_nilpotentize(g: &Global, frame: &Path, h: Option<f64>, cluster_tol: f64) -> Outcome {
    if g.csv {
        return Err(Failure::Input("nilpotentize has no CSV form".into()));
    }
    let frame = PolynomialFrame::from_json(&read(frame)?)?;
    let h = h.unwrap_or_else(|| default_step(&frame));
    if !(cluster_tol > 0.0) {
        return Err(Failure::Input(format!("--cluster-tol must be positive, got {cluster_tol}")));
    }
    to_json(&nilpotentize(&frame, h, cluster_tol)?)
}

fn run(cli: &Cli) -> Outcome {
    let g = &cli.global;
    match &cli.command {
        Command::Fiber { group, point } => cmd_fiber(g, group, point),
        Command::Scan { group, ratio_min, ratio_max, steps } => {
            cmd_scan(g, group, *ratio_min, *ratio_max, *steps)
        }
        Command::Bounds { group, point } => cmd_bounds(g, group, point),
        Command::Families { group, point } => cmd_families(g, group, point),
        Command::Nilpotentize { frame, h, cluster_tol } => cmd_nilpotentize(g, frame, *h, *cluster_tol),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verify(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(3)
        }
    }
}
