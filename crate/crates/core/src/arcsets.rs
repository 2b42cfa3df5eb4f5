//! Finite unions of closed arcs, their small-interval partitions and the
//! block structure `H`, `H_b` used by the localization lemmas.
//!
//! Angles are kept in a canonical window: arcs are sorted, never wrap, and all
//! lie in `[lo_0, lo_0 + 2π]` where `lo_0 ∈ (−π, π]` is the first lower end.
//! Queries accept any real angle and reduce it modulo `2π`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::equilibrium::DensityModel;
use crate::error::{Error, Result};
use crate::functionals::{self, QuadSpec};
use crate::trigpoly::TrigFunction;
use crate::tset::TSet;

const MERGE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub lo: f64,
    pub hi: f64,
}

impl Arc {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, t: f64, tol: f64) -> bool {
        t >= self.lo - tol && t <= self.hi + tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArcSet {
    arcs: Vec<Arc>,
    full: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSetJson {
    pub arcs: Vec<[f64; 2]>,
}

impl ArcSet {
    pub fn empty() -> Self {
        Self { arcs: Vec::new(), full: false }
    }

    /// The whole circle, stored as `[lo, lo + 2π]`.
    pub fn full_circle(lo: f64) -> Self {
        Self { arcs: vec![Arc::new(lo, lo + TAU)], full: true }
    }

    /// Builds the canonical form of a union of arcs `[lo, hi]`. Overlapping or
    /// touching arcs are merged; an arc of length `>= 2π` (or a union covering
    /// the circle) gives the full circle.
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        let mut pieces: Vec<(f64, f64)> = Vec::new();
        for (i, &(lo, hi)) in intervals.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidInput(format!("arc {i} has a non-finite endpoint")));
            }
            if hi <= lo {
                return Err(Error::InvalidInput(format!("arc {i} = [{lo}, {hi}] has nonpositive length")));
            }
            if hi - lo >= TAU - MERGE_TOL {
                return Ok(Self::full_circle(lo.rem_euclid(TAU)));
            }
            let a = lo.rem_euclid(TAU);
            let b = a + (hi - lo);
            if b > TAU {
                pieces.push((a, TAU));
                pieces.push((0.0, b - TAU));
            } else {
                pieces.push((a, b));
            }
        }
        if pieces.is_empty() {
            return Ok(Self::empty());
        }
        pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in pieces {
            match merged.last_mut() {
                Some(last) if lo <= last.1 + MERGE_TOL => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        // join across angle 0
        if merged.len() > 1 && merged[0].0 <= MERGE_TOL && merged.last().unwrap().1 >= TAU - MERGE_TOL {
            let last = merged.pop().unwrap();
            merged[0].0 = last.0 - TAU;
        }
        if merged.len() == 1 && merged[0].1 - merged[0].0 >= TAU - MERGE_TOL {
            return Ok(Self::full_circle(merged[0].0));
        }
        let mut arcs: Vec<Arc> = merged
            .into_iter()
            .map(|(lo, hi)| {
                let shift = if lo > PI { TAU } else { 0.0 };
                Arc::new(lo - shift, hi - shift)
            })
            .collect();
        arcs.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        Ok(Self { arcs, full: false })
    }

    pub fn from_json(j: &ArcSetJson) -> Result<Self> {
        let set = Self::new(j.arcs.iter().map(|a| (a[0], a[1])).collect())?;
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(set)
    }

    pub fn to_json(&self) -> ArcSetJson {
        ArcSetJson { arcs: self.arcs.iter().map(|a| [a.lo, a.hi]).collect() }
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn total_length(&self) -> f64 {
        self.arcs.iter().map(Arc::len).sum()
    }

    /// Start of the canonical window.
    pub fn window_start(&self) -> f64 {
        self.arcs.first().map_or(0.0, |a| a.lo)
    }

    /// Index of the arc containing `t` (mod 2π) and the representative of `t`
    /// inside that arc.
    pub fn locate(&self, t: f64, tol: f64) -> Option<(usize, f64)> {
        if self.arcs.is_empty() {
            return None;
        }
        let w = self.window_start();
        let base = w + (t - w).rem_euclid(TAU);
        for cand in [base, base - TAU, base + TAU] {
            for (i, a) in self.arcs.iter().enumerate() {
                if a.contains(cand, tol) {
                    return Some((i, cand.clamp(a.lo, a.hi)));
                }
            }
        }
        None
    }

    pub fn contains(&self, t: f64) -> bool {
        self.locate(t, 1e-12).is_some()
    }

    /// Arcs expressed in the window `[w, w + 2π]`, split where they cross it.
    pub fn to_window(&self, w: f64) -> Vec<(f64, f64)> {
        if self.full {
            return vec![(w, w + TAU)];
        }
        let mut out = Vec::new();
        for a in &self.arcs {
            let lo = w + (a.lo - w).rem_euclid(TAU);
            let hi = lo + a.len();
            if hi > w + TAU {
                out.push((lo, w + TAU));
                out.push((w, hi - TAU));
            } else {
                out.push((lo, hi));
            }
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        out
    }

    /// `self \ other`; pieces shorter than `1e-13` are dropped.
    pub fn difference(&self, other: &ArcSet) -> ArcSet {
        if self.is_empty() {
            return Self::empty();
        }
        let w = self.window_start();
        let cut = other.to_window(w);
        let mut out = Vec::new();
        for a in self.to_window(w) {
            let mut pieces = vec![a];
            for &(clo, chi) in &cut {
                let mut next = Vec::new();
                for (lo, hi) in pieces {
                    if chi <= lo || clo >= hi {
                        next.push((lo, hi));
                        continue;
                    }
                    if clo > lo {
                        next.push((lo, clo));
                    }
                    if chi < hi {
                        next.push((chi, hi));
                    }
                }
                pieces = next;
            }
            out.extend(pieces.into_iter().filter(|(lo, hi)| hi - lo > MERGE_TOL));
        }
        Self::new(out).expect("pieces have positive length")
    }

    pub fn union(&self, other: &ArcSet) -> ArcSet {
        let mut all = self.to_window(self.window_start());
        all.extend(other.to_window(self.window_start()));
        Self::new(all).expect("arcs have positive length")
    }

    /// `self ⊆ other` up to `tol` at the endpoints.
    pub fn is_subset(&self, other: &ArcSet, tol: f64) -> bool {
        self.arcs.iter().all(|a| {
            let Some((i, lo)) = other.locate(a.lo, tol) else { return false };
            let b = other.arcs[i];
            lo + a.len() <= b.hi + tol
        })
    }
}

/// The parameters `θ, κ, γ` of the localization argument, with the exponent
/// `p` they are tied to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub p: f64,
    pub theta: f64,
    pub kappa: f64,
    pub gamma: f64,
}

impl ParamSet {
    /// `θ = 1/4`, `κ = 1/32`, `γ = min(1/65, p/2)`.
    pub fn default_for(p: f64) -> Result<Self> {
        let ps = Self { p, theta: 0.25, kappa: 1.0 / 32.0, gamma: (1.0 / 65.0f64).min(p / 2.0) };
        ps.validate()?;
        Ok(ps)
    }

    pub fn new(p: f64, theta: f64, kappa: f64, gamma: f64) -> Result<Self> {
        let ps = Self { p, theta, kappa, gamma };
        ps.validate()?;
        Ok(ps)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { p, theta, kappa, gamma } = *self;
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("p = {p} must be positive")));
        }
        if !(0.5 > theta && theta > 4.0 * kappa && kappa > 0.0) {
            return Err(Error::InvalidInput(format!(
                "need 1/2 > theta > 4 kappa > 0, got theta = {theta}, kappa = {kappa}"
            )));
        }
        if !(0.0 < gamma && gamma < kappa / 2.0) {
            return Err(Error::InvalidInput(format!("need 0 < gamma < kappa/2, got gamma = {gamma}")));
        }
        if p <= 1.0 && (1.0 - 2.0 * theta) * p < gamma {
            return Err(Error::InvalidInput(format!(
                "need (1 - 2 theta) p >= gamma, got {} < {gamma}",
                (1.0 - 2.0 * theta) * p
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    pub component: usize,
}

impl Cell {
    pub fn arc(&self) -> Arc {
        Arc::new(self.lo, self.hi)
    }
}

#[derive(Debug, Clone)]
pub struct SmallPartition {
    pub n: usize,
    pub params: ParamSet,
    pub set: ArcSet,
    pub cells: Vec<Cell>,
}

/// Splits each component of length `L` into `⌈L·n^κ⌉` equal cells.
pub fn partition_small(e: &ArcSet, n: usize, params: &ParamSet) -> Result<SmallPartition> {
    if e.is_empty() {
        return Err(Error::EmptySet);
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    params.validate()?;
    let nk = (n as f64).powf(params.kappa);
    let (min_len, max_len) = (0.5 / nk, 1.0 / nk);
    let mut cells = Vec::new();
    for (index, arc) in e.arcs().iter().enumerate() {
        let len = arc.len();
        if len < max_len * (1.0 - 1e-12) {
            return Err(Error::ComponentTooShort { index, lo: arc.lo, hi: arc.hi, min_len: max_len });
        }
        let k = ((len * nk) - 1e-9).ceil().max(1.0) as usize;
        let h = len / k as f64;
        if h < min_len * (1.0 - 1e-12) || h > max_len * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!("cell length {h} outside [{min_len}, {max_len}]")));
        }
        for j in 0..k {
            let lo = arc.lo + h * j as f64;
            let hi = if j + 1 == k { arc.hi } else { arc.lo + h * (j + 1) as f64 };
            cells.push(Cell { lo, hi, component: index });
        }
    }
    Ok(SmallPartition { n, params: *params, set: e.clone(), cells })
}

/// A run of consecutive cells inside one component together with its
/// bordering cells.
#[derive(Debug, Clone)]
pub struct Block {
    pub cells: std::ops::RangeInclusive<usize>,
    pub component: usize,
    pub h: Arc,
    pub border: Vec<Cell>,
    /// Set on sides of `H` that end at a gap of `E` rather than a cell.
    pub open_lo: bool,
    pub open_hi: bool,
}

impl Block {
    pub fn h_set(&self) -> ArcSet {
        ArcSet::new(vec![(self.h.lo, self.h.hi)]).expect("H has positive length")
    }

    /// `H_b` as an arc set (possibly empty).
    pub fn border_set(&self) -> ArcSet {
        ArcSet::new(self.border.iter().map(|c| (c.lo, c.hi)).collect()).expect("cells have positive length")
    }

    pub fn h_with_border(&self) -> ArcSet {
        self.h_set().union(&self.border_set())
    }
}

impl SmallPartition {
    /// Block made of cells `first..=last`, bordered by one cell on each side
    /// when that neighbour exists in the same component. On the full circle the
    /// neighbours wrap around.
    pub fn block(&self, first: usize, last: usize) -> Result<Block> {
        if first > last || last >= self.cells.len() {
            return Err(Error::InvalidInput(format!("cell range {first}..={last} out of bounds")));
        }
        let component = self.cells[first].component;
        if self.cells[last].component != component {
            return Err(Error::InvalidInput("a block must lie in one component".into()));
        }
        let comp: Vec<usize> = (0..self.cells.len()).filter(|&i| self.cells[i].component == component).collect();
        let (c0, c1) = (comp[0], *comp.last().unwrap());
        let count = comp.len();
        let h = Arc::new(self.cells[first].lo, self.cells[last].hi);
        let covered = last - first + 1;
        let mut border = Vec::new();
        let (mut open_lo, mut open_hi) = (false, false);
        let cyclic = self.set.is_full();
        if covered < count {
            let below = if first > c0 { Some(first - 1) } else if cyclic { Some(c1) } else { None };
            let above = if last < c1 { Some(last + 1) } else if cyclic { Some(c0) } else { None };
            match below {
                Some(i) => border.push(self.cells[i]),
                None => open_lo = true,
            }
            match above {
                Some(i) if Some(i) != below => border.push(self.cells[i]),
                Some(_) => {}
                None => open_hi = true,
            }
        } else {
            open_lo = !cyclic;
            open_hi = !cyclic;
        }
        Ok(Block { cells: first..=last, component, h, border, open_lo, open_hi })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockProperties {
    /// `(H ∪ H_b) ∩ E` lies in a single branch.
    pub i: bool,
    pub iia: bool,
    pub iib: bool,
    pub iii: bool,
    pub a_border: Option<f64>,
    pub b_border: Option<f64>,
    pub threshold: f64,
}

/// Index of the branch of `t` containing all of `cells`, if any.
pub fn containing_branch(t: &TSet, cells: &[Arc]) -> Option<usize> {
    let first = cells.first()?;
    let tol = 1e-10;
    (0..t.branches().len()).find(|&h| {
        let b = t.branches()[h];
        cells.iter().all(|c| {
            let w = b.lo;
            let lo = w + (c.lo - w + tol).rem_euclid(TAU) - tol;
            lo + c.len() <= b.hi + tol
        }) && first.len() > 0.0
    })
}

/// Evaluates properties (I), (II-a), (II-b) and (III) for `blk`.
pub fn block_properties(
    t: &TSet,
    tn: &dyn TrigFunction,
    n: usize,
    blk: &Block,
    params: &ParamSet,
    dens: &DensityModel,
    spec: &QuadSpec,
) -> Result<BlockProperties> {
    let mut pieces = vec![blk.h];
    pieces.extend(blk.border.iter().map(Cell::arc));
    let i = containing_branch(t, &pieces).is_some();
    let threshold = (n as f64).powf(-params.gamma);
    let (a_border, b_border) = if blk.border.is_empty() {
        (Some(0.0), Some(0.0))
    } else {
        let fv = functionals::functionals(tn, n, &blk.border_set(), dens, params.p, spec)?;
        (fv.a, fv.b)
    };
    let iii = blk.h.len() <= 4.0 * (n as f64).powf(params.gamma - params.kappa) + 1e-12;
    Ok(BlockProperties {
        i,
        iia: a_border.is_some_and(|a| a <= threshold),
        iib: b_border.is_some_and(|b| b <= threshold),
        iii,
        a_border,
        b_border,
        threshold,
    })
}
