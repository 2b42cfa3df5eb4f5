//! Seeded sweeps of the ratio `A/B` over polynomial families, and batteries of
//! lemma margin checks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::time::Instant;

use crate::arcsets::{partition_small, ArcSet, ArcSetJson, ParamSet};
use crate::equilibrium::DensityModel;
use crate::error::{Error, Result};
use crate::functionals::{integrals, QuadSpec};
use crate::lemmas::{fast_decreasing_q, verify_localization, verify_symmetrization_lemmas, MarginRecord};
use crate::trigpoly::{ChebComposed, TrigFunction, TrigPoly, TrigPolyJson};
use crate::tset::TSet;

/// Standard normal coefficients from ChaCha8 seeded with `seed`, drawn in the
/// order `a_0, a_1, b_1, a_2, b_2, …, a_n, b_n`.
pub fn random_trigpoly(n: usize, seed: u64) -> TrigPoly {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut cos = vec![draw()];
    let mut sin = Vec::with_capacity(n);
    for _ in 0..n {
        cos.push(draw());
        sin.push(draw());
    }
    TrigPoly::new(cos, sin).expect("finite coefficients")
}

/// Where the experiment lives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetSpec {
    /// T-set of the given polynomial.
    Tset(TrigPolyJson),
    /// `U = (2cos t − 1 − cos β)/(1 − cos β)`, the arc `[−β, β]`.
    SingleArc(f64),
    /// Arbitrary arcs, density from the collocation solver.
    Arcs(ArcSetJson),
}

impl SetSpec {
    pub fn tset(&self) -> Result<Option<TSet>> {
        match self {
            Self::Tset(j) => TSet::from_json(j).map(Some),
            Self::SingleArc(beta) => TSet::single_arc(*beta).map(Some),
            Self::Arcs(_) => Ok(None),
        }
    }

    pub fn density(&self) -> Result<DensityModel> {
        match self {
            Self::Arcs(j) => DensityModel::general(&ArcSet::from_json(j)?),
            _ => Ok(DensityModel::from_tset(self.tset()?.expect("T-set variants"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Tset(j) => format!("tset(N={})", j.degree),
            Self::SingleArc(beta) => format!("single_arc({beta})"),
            Self::Arcs(j) => format!("arcs({})", j.arcs.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[default]
    Random,
    ChebyshevComposed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

/// One sweep. For the Chebyshev family `n` is the ladder of `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub set: SetSpec,
    pub p: Vec<f64>,
    pub n: Vec<usize>,
    #[serde(default)]
    pub seeds: u64,
    #[serde(default)]
    pub family: Family,
    #[serde(default)]
    pub quad: QuadSpec,
    /// Accept `p ≥ 1` as a regression run.
    #[serde(default)]
    pub regression: bool,
    #[serde(default)]
    pub output: Outputs,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty() || self.n.is_empty() {
            return Err(Error::InvalidInput("p and n must be nonempty".into()));
        }
        for &p in &self.p {
            let ok = p > 0.0 && p.is_finite() && (self.regression || p < 1.0);
            if !ok {
                return Err(Error::InvalidInput(format!("p = {p} must lie in (0, 1)")));
            }
        }
        if self.n[0] == 0 || self.n.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("n ladder must be positive and strictly increasing".into()));
        }
        if self.family == Family::Random && self.seeds == 0 {
            return Err(Error::InvalidInput("a random sweep needs at least one seed".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub p: f64,
    pub seed: Option<u64>,
    pub k: Option<usize>,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub ratio: f64,
    pub quad_error: f64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time: Option<f64>,
}

fn row(
    tn: &dyn TrigFunction,
    n: usize,
    p: f64,
    seed: Option<u64>,
    k: Option<usize>,
    dens: &DensityModel,
    spec: &QuadSpec,
    timed: bool,
) -> Result<SweepRow> {
    let start = Instant::now();
    let r = integrals(tn, n, dens.set(), dens, p, spec)?;
    let ratio = if r.b > 0.0 { r.a / r.b } else { f64::NAN };
    Ok(SweepRow {
        n,
        p,
        seed,
        k,
        a: r.a,
        b: r.b,
        ratio,
        quad_error: r.quad_error(),
        converged: r.converged,
        wall_time: timed.then(|| start.elapsed().as_secs_f64()),
    })
}

/// Per-`p` aggregation of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendSummary {
    pub p: f64,
    pub n: Vec<usize>,
    /// Maximum ratio per `n` over converged rows.
    pub m_n: Vec<f64>,
    pub battery: usize,
    pub flagged: usize,
    /// `m_last ≤ max(1.05, m_first)`.
    pub final_bounded: bool,
    /// `m_{i+1} − 1 ≤ (m_i − 1) + 0.1·|m_i − 1|` for consecutive `n`.
    pub trend_ok: bool,
    /// No converged row with `n ≥ 32` has ratio above 1.2.
    pub envelope_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub set: String,
    pub family: Family,
    pub trends: Vec<TrendSummary>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

/// Gap sequence `g_i = m_i − 1` is non-increasing up to 10% of the previous
/// gap.
pub fn trend_within_slack(m: &[f64]) -> bool {
    m.windows(2).all(|w| {
        let (g0, g1) = (w[0] - 1.0, w[1] - 1.0);
        g1 <= g0 + 0.1 * g0.abs()
    })
}

fn summarize(set: String, family: Family, ps: &[f64], ns: &[usize], rows: &[SweepRow]) -> SweepSummary {
    let mut warnings = Vec::new();
    let mut trends = Vec::new();
    for &p in ps {
        let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.p == p).collect();
        let flagged: Vec<&&SweepRow> = mine.iter().filter(|r| !r.converged || !r.ratio.is_finite()).collect();
        for r in &flagged {
            warnings.push(format!(
                "p = {p}, n = {}, seed = {:?}, k = {:?}: quadrature not converged, excluded from maxima",
                r.n, r.seed, r.k
            ));
        }
        let m_n: Vec<f64> = ns
            .iter()
            .map(|&n| {
                mine.iter()
                    .filter(|r| r.n == n && r.converged && r.ratio.is_finite())
                    .map(|r| r.ratio)
                    .fold(f64::NAN, f64::max)
            })
            .collect();
        let envelope_ok = !mine.iter().any(|r| r.n >= 32 && r.converged && r.ratio > 1.2);
        let final_bounded = match (m_n.first(), m_n.last()) {
            (Some(&a), Some(&b)) => b <= a.max(1.05),
            _ => false,
        };
        let battery = mine.len() / ns.len().max(1);
        trends.push(TrendSummary {
            p,
            n: ns.to_vec(),
            trend_ok: trend_within_slack(&m_n),
            m_n,
            battery,
            flagged: flagged.len(),
            final_bounded,
            envelope_ok,
        });
    }
    let pass = trends.iter().all(|t| t.final_bounded && t.trend_ok && t.envelope_ok);
    SweepSummary { set, family, trends, warnings, pass }
}

/// `A/B` with effective degree `n` for every `(p, n, seed)`; rows come out
/// sorted by `p`, then `n`, then seed.
pub fn bernstein_sweep(cfg: &ExperimentConfig, dens: &DensityModel, timed: bool) -> Result<SweepTable> {
    cfg.validate()?;
    if cfg.family == Family::ChebyshevComposed {
        let t = cfg.set.tset()?.ok_or_else(|| Error::InvalidInput("the Chebyshev family needs a T-set".into()))?;
        let mut rows = Vec::new();
        for &p in &cfg.p {
            rows.extend(sharpness_sweep(&t, dens, p, &cfg.n, &cfg.quad, timed)?);
        }
        let ns: Vec<usize> = cfg.n.iter().map(|k| k * t.order()).collect();
        let summary = summarize(cfg.set.label(), cfg.family, &cfg.p, &ns, &rows);
        return Ok(SweepTable { rows, summary });
    }
    let jobs: Vec<(f64, usize, u64)> = cfg
        .p
        .iter()
        .flat_map(|&p| cfg.n.iter().flat_map(move |&n| (0..cfg.seeds).map(move |s| (p, n, s))))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(p, n, seed)| row(&random_trigpoly(n, seed), n, p, Some(seed), None, dens, &cfg.quad, timed))
        .collect::<Result<Vec<SweepRow>>>()?;
    let summary = summarize(cfg.set.label(), cfg.family, &cfg.p, &cfg.n, &rows);
    Ok(SweepTable { rows, summary })
}

/// `A/B` for `T_k(U)` with effective degree `kN`.
pub fn sharpness_sweep(
    t: &TSet,
    dens: &DensityModel,
    p: f64,
    ks: &[usize],
    spec: &QuadSpec,
    timed: bool,
) -> Result<Vec<SweepRow>> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidInput(format!("p = {p} must be positive")));
    }
    if ks.contains(&0) {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    ks.par_iter()
        .map(|&k| {
            let tk = ChebComposed::new(k, t.u().clone());
            row(&tk, k * t.order(), p, None, Some(k), dens, spec, timed)
        })
        .collect()
}

/// Margin battery over seeds and degrees: for each `n` a block is cut from
/// the small-interval partition and a `q` built for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    pub set: SetSpec,
    pub params: ParamSet,
    pub n: Vec<usize>,
    pub seeds: u64,
    /// First and last cell of `H`.
    #[serde(default)]
    pub cells: (usize, usize),
    #[serde(default = "yes")]
    pub symmetrization: bool,
    #[serde(default = "yes")]
    pub localization: bool,
    #[serde(default)]
    pub quad: QuadSpec,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeededMargin {
    pub seed: u64,
    #[serde(flatten)]
    pub record: MarginRecord,
}

pub fn lemma_battery(cfg: &LemmaConfig) -> Result<Vec<SeededMargin>> {
    cfg.params.validate()?;
    let t = cfg.set.tset()?;
    let dens = cfg.set.density()?;
    let e = dens.set().clone();
    let mut out = Vec::new();
    for &n in &cfg.n {
        let part = partition_small(&e, n, &cfg.params)?;
        let blk = part.block(cfg.cells.0, cfg.cells.1)?;
        let qp = fast_decreasing_q(&blk, n, &cfg.params, &e)?;
        let recs = (0..cfg.seeds)
            .into_par_iter()
            .map(|seed| -> Result<Vec<SeededMargin>> {
                let tn = random_trigpoly(n, seed);
                let mut v = Vec::new();
                if cfg.symmetrization {
                    let t = t
                        .as_ref()
                        .ok_or_else(|| Error::InvalidInput("symmetrization needs a T-set".into()))?;
                    let r = verify_symmetrization_lemmas(t, &tn, n, &blk, &qp, &cfg.params, &dens, &cfg.quad)?;
                    v.extend(r.into_iter().map(|record| SeededMargin { seed, record }));
                }
                if cfg.localization {
                    let r = verify_localization(&tn, n, &blk, &qp, &e, &cfg.params, &dens, &cfg.quad)?;
                    v.extend(r.into_iter().map(|record| SeededMargin { seed, record }));
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        out.extend(recs.into_iter().flatten());
    }
    Ok(out)
}
