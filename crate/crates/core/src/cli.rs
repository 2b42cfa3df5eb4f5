//! Command-line entry point. JSON in, CSV and JSON out.
//!
//! Exit codes: 0 on success, 1 on invalid input or a failed check, 2 when a
//! quadrature or the collocation solver did not converge.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use crate::arcsets::ArcSetJson;
use crate::equilibrium::DensityModel;
use crate::error::Error;
use crate::functionals::QuadSpec;
use crate::harness::{self, ExperimentConfig, LemmaConfig, SeededMargin, SetSpec, SweepRow};
use crate::trigpoly::TrigPolyJson;
use crate::tset::TSet;

#[derive(Debug, Parser)]
#[command(name = "arcbern", version, about = "Equilibrium densities and L^p Bernstein checks on circular arcs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium density on a grid of the set, as `t,omega` CSV.
    Density(DensityArgs),
    /// Build and validate a T-set from polynomial coefficients.
    Tset(TsetArgs),
    /// Ratio sweep over seeded random polynomials.
    Verify(SweepArgs),
    /// Ratio sweep over `T_k(U)`; the config's `n` is the `k` ladder.
    Sharpness(SweepArgs),
    /// Lemma margin batteries.
    Lemmas(LemmaArgs),
    /// Merge sweep summaries into one CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// T-set polynomial `{"N", "cos", "sin"}`, or any file with a `set` entry.
    #[arg(long, conflicts_with = "arcs", required_unless_present = "arcs")]
    pub tset: Option<PathBuf>,
    /// Arc list `{"arcs": [[lo, hi], ...]}`; density from the collocation solver.
    #[arg(long)]
    pub arcs: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TsetArgs {
    #[arg(long)]
    pub coeffs: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct QuadArgs {
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub max_subdivisions: Option<usize>,
}

impl QuadArgs {
    fn apply(&self, q: &mut QuadSpec) {
        if let Some(v) = self.rel_tol {
            q.rel_tol = v;
        }
        if let Some(v) = self.abs_tol {
            q.abs_tol = v;
        }
        if let Some(v) = self.max_subdivisions {
            q.max_subdivisions = v;
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub seeds: Option<u64>,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Directory for `<name>.csv` and `<name>.json` unless the config names
    /// its outputs.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Record per-row wall time.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub seeds: Option<u64>,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Slack below `−max(quad_error, floor)` counts as a failure.
    #[arg(long, default_value_t = 1e-6)]
    pub floor: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Summary JSON files written by `verify` or `sharpness`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

enum Failure {
    Invalid(anyhow::Error),
    Numeric(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let numeric = e.chain().any(|c| matches!(c.downcast_ref::<Error>(), Some(Error::SolverFailed { .. })));
        if numeric {
            Failure::Numeric(e)
        } else {
            Failure::Invalid(e)
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let res = match cli.command {
        Command::Density(a) => density(a),
        Command::Tset(a) => tset(a),
        Command::Verify(a) => sweep(a, false),
        Command::Sharpness(a) => sweep(a, true),
        Command::Lemmas(a) => lemmas(a),
        Command::Report(a) => report(a),
    };
    match res {
        Ok(()) => 0,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            1
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("numeric failure: {e:#}");
            2
        }
    }
}

fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Accepts a bare polynomial, a bare arc list, a set specification, or any
/// object with a `set` entry.
fn load_set(path: &Path) -> anyhow::Result<SetSpec> {
    let v = read_json(path)?;
    if let Some(inner) = v.get("set") {
        return serde_json::from_value(inner.clone()).with_context(|| format!("`set` entry of {}", path.display()));
    }
    if v.get("N").is_some() {
        return Ok(SetSpec::Tset(serde_json::from_value::<TrigPolyJson>(v)?));
    }
    if v.get("arcs").is_some() {
        return Ok(SetSpec::Arcs(serde_json::from_value::<ArcSetJson>(v)?));
    }
    serde_json::from_value(v).with_context(|| format!("{} is not a set description", path.display()))
}

fn write_out(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

/// `count` angles spread over the arcs in proportion to length, at cell
/// midpoints so no angle sits on a component end.
fn grid(dens: &DensityModel, count: usize) -> Vec<(usize, f64, f64, f64)> {
    let e = dens.set();
    let total = e.total_length();
    let mut out = Vec::with_capacity(count);
    let mut used = 0;
    let mut acc = 0.0;
    for (l, arc) in e.arcs().iter().enumerate() {
        acc += arc.len();
        let upto = if l + 1 == e.len() { count } else { ((acc / total) * count as f64).round() as usize };
        let k = upto.saturating_sub(used);
        for i in 0..k {
            let s = if e.is_full() {
                arc.lo + TAU * i as f64 / k as f64
            } else {
                arc.lo + arc.len() * (i as f64 + 0.5) / k as f64
            };
            out.push((l, s, s - arc.lo, arc.hi - s));
        }
        used += k;
    }
    out
}

fn density(a: DensityArgs) -> Outcome {
    if a.grid == 0 {
        return Err(Failure::Invalid(anyhow!("--grid must be positive")));
    }
    let spec = match (&a.tset, &a.arcs) {
        (Some(p), _) => load_set(p)?,
        (None, Some(p)) => SetSpec::Arcs(serde_json::from_value(read_json(p)?).context("arc list")?),
        (None, None) => unreachable!("clap requires one of the inputs"),
    };
    let dens = spec.density()?;
    let mut text = String::from("t,omega\n");
    for (l, t, d_lo, d_hi) in grid(&dens, a.grid) {
        text.push_str(&format!("{t:.17e},{:.17e}\n", dens.density_in_arc(l, t, d_lo, d_hi)));
    }
    write_out(a.out.as_deref(), &text)?;
    Ok(())
}

fn tset(a: TsetArgs) -> Outcome {
    let j: TrigPolyJson = serde_json::from_value(read_json(&a.coeffs)?).context("polynomial coefficients")?;
    let t = TSet::from_json(&j)?;
    let report = serde_json::json!({
        "N": t.order(),
        "full_circle": t.set().is_full(),
        "arcs": t.set().to_json().arcs,
        "branches": t.branches(),
        "inner_extremals": t.inner_extremals(),
    });
    write_out(a.out.as_deref(), &(serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)? + "\n"))?;
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned())
}

fn sweep(a: SweepArgs, sharp: bool) -> Outcome {
    let mut cfg: ExperimentConfig =
        serde_json::from_value(read_json(&a.config)?).with_context(|| format!("config {}", a.config.display()))?;
    if let Some(p) = a.p.clone() {
        cfg.p = p;
    }
    if let Some(n) = a.n.clone() {
        cfg.n = n;
    }
    if let Some(s) = a.seeds {
        cfg.seeds = s;
    }
    if sharp {
        cfg.family = harness::Family::ChebyshevComposed;
    }
    a.quad.apply(&mut cfg.quad);
    cfg.validate()?;
    let dens = cfg.set.density()?;
    let table = harness::bernstein_sweep(&cfg, &dens, a.timings)?;

    let name = stem(&a.config);
    let csv_path = cfg.output.csv.clone().unwrap_or_else(|| a.out_dir.join(format!("{name}.csv")));
    let json_path = cfg.output.summary.clone().unwrap_or_else(|| a.out_dir.join(format!("{name}.json")));
    write_out(Some(&csv_path), &to_csv::<SweepRow>(&table.rows)?)?;
    let summary = serde_json::to_string_pretty(&table.summary).map_err(anyhow::Error::from)? + "\n";
    write_out(Some(&json_path), &summary)?;
    for w in &table.summary.warnings {
        eprintln!("warning: {w}");
    }
    println!("{} rows -> {}, summary -> {}", table.rows.len(), csv_path.display(), json_path.display());
    if !table.summary.warnings.is_empty() {
        return Err(Failure::Numeric(anyhow!("{} rows flagged", table.summary.warnings.len())));
    }
    if !sharp && !table.summary.pass {
        return Err(Failure::Invalid(anyhow!("trend checks failed, see {}", json_path.display())));
    }
    Ok(())
}

fn lemmas(a: LemmaArgs) -> Outcome {
    let mut cfg: LemmaConfig =
        serde_json::from_value(read_json(&a.config)?).with_context(|| format!("config {}", a.config.display()))?;
    if let Some(n) = a.n.clone() {
        cfg.n = n;
    }
    if let Some(s) = a.seeds {
        cfg.seeds = s;
    }
    a.quad.apply(&mut cfg.quad);
    let recs: Vec<SeededMargin> = harness::lemma_battery(&cfg)?;
    let name = stem(&a.config);
    let csv_path = a.out_dir.join(format!("{name}.csv"));
    let json_path = a.out_dir.join(format!("{name}.json"));
    let flat: Vec<_> = recs
        .iter()
        .map(|r| {
            let m = &r.record;
            (r.seed, &m.lemma, m.n, m.p, m.lhs, m.rhs, m.slack, m.quad_error)
        })
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["seed", "lemma", "n", "p", "lhs", "rhs", "slack", "quad_error"]).map_err(anyhow::Error::from)?;
    for r in &flat {
        w.serialize(r).map_err(anyhow::Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    write_out(Some(&csv_path), &String::from_utf8(bytes).map_err(anyhow::Error::from)?)?;
    write_out(Some(&json_path), &(serde_json::to_string_pretty(&recs).map_err(anyhow::Error::from)? + "\n"))?;
    let bad = recs.iter().filter(|r| !r.record.holds(a.floor)).count();
    let min = recs.iter().map(|r| r.record.slack).fold(f64::INFINITY, f64::min);
    println!("{} margins, minimum slack {min:.6e} -> {}", recs.len(), csv_path.display());
    if bad > 0 {
        return Err(Failure::Invalid(anyhow!("{bad} margins below the noise floor")));
    }
    Ok(())
}

fn report(a: ReportArgs) -> Outcome {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["source", "set", "family", "p", "n", "m_n", "pass"]).map_err(anyhow::Error::from)?;
    for path in &a.inputs {
        let v = read_json(path)?;
        let set = v["set"].as_str().ok_or_else(|| anyhow!("{}: missing `set`", path.display()))?;
        let family = v["family"].as_str().unwrap_or("");
        let pass = v["pass"].as_bool().unwrap_or(false);
        let trends = v["trends"].as_array().ok_or_else(|| anyhow!("{}: missing `trends`", path.display()))?;
        for t in trends {
            let p = t["p"].as_f64().unwrap_or(f64::NAN);
            let ns = t["n"].as_array().cloned().unwrap_or_default();
            let ms = t["m_n"].as_array().cloned().unwrap_or_default();
            if ns.len() != ms.len() {
                return Err(Failure::Invalid(anyhow!("{}: n and m_n lengths differ", path.display())));
            }
            for (n, m) in ns.iter().zip(&ms) {
                w.write_record([
                    path.display().to_string(),
                    set.to_string(),
                    family.to_string(),
                    p.to_string(),
                    n.to_string(),
                    m.to_string(),
                    pass.to_string(),
                ])
                .map_err(anyhow::Error::from)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    write_out(Some(&a.out), &String::from_utf8(bytes).map_err(anyhow::Error::from)?)?;
    Ok(())
}
