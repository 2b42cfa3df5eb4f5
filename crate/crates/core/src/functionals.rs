//! The weighted `L^p` functionals
//!
//! `A(T, X) = ∫_X |T'/(n·2π·ω)|^p ω dt`, `B(T, X) = ∫_X |T|^p ω dt`,
//! `a = A(X)/A(E)`, `b = B(X)/B(E)`.
//!
//! Integrals are split at the zeros of `T'` (for `A`) and of `T` (for `B`),
//! where `p < 1` produces cusps, and use the square-root substitution there and
//! at the ends of `E`.

use serde::Serialize;
use std::f64::consts::{PI, TAU};

pub use crate::quad::QuadSpec;

use crate::arcsets::ArcSet;
use crate::equilibrium::DensityModel;
use crate::error::{Error, Result};
use crate::quad::{integrate_segments, QuadNode, Segment};
use crate::roots;
use crate::trigpoly::TrigFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integrals {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub err_a: f64,
    pub err_b: f64,
    pub converged: bool,
}

impl Integrals {
    pub fn quad_error(&self) -> f64 {
        self.err_a + self.err_b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalValues {
    #[serde(rename = "A")]
    pub big_a: f64,
    #[serde(rename = "B")]
    pub big_b: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// `A(T, E)` and `B(T, E)`.
    pub a_total: f64,
    pub b_total: f64,
    pub quad_error: f64,
    pub converged: bool,
}

// piece of X inside component `arc` of E, in E's coordinates
#[derive(Debug, Clone, Copy)]
struct Piece {
    arc: usize,
    lo: f64,
    hi: f64,
}

fn pieces(x: &ArcSet, e: &ArcSet) -> Result<Vec<Piece>> {
    let mut out = Vec::new();
    for a in x.arcs() {
        let (l, mid) = e
            .locate(a.mid(), 1e-10)
            .ok_or_else(|| Error::InvalidInput(format!("X arc [{}, {}] is not inside E", a.lo, a.hi)))?;
        let comp = e.arcs()[l];
        let half = 0.5 * a.len();
        let (mut lo, mut hi) = (mid - half, mid + half);
        let tol = 1e-10;
        if lo < comp.lo - tol || hi > comp.hi + tol {
            return Err(Error::InvalidInput(format!("X arc [{}, {}] is not inside E", a.lo, a.hi)));
        }
        if (lo - comp.lo).abs() <= tol {
            lo = comp.lo;
        }
        if (hi - comp.hi).abs() <= tol {
            hi = comp.hi;
        }
        out.push(Piece { arc: l, lo, hi });
    }
    Ok(out)
}

/// Zeros of `f` strictly inside `(lo, hi)`, away from the ends.
fn breakpoints(f: impl Fn(f64) -> f64, lo: f64, hi: f64, degree: usize) -> Vec<f64> {
    let per = 8 * degree + 16;
    let samples = (per as f64 * ((hi - lo) / PI).max(1.0 / 16.0)).ceil() as usize;
    let gap = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    let mut out: Vec<f64> = Vec::new();
    for r in roots::sign_change_roots(f, lo, hi, samples.max(16), 1e-14) {
        if r - lo > gap && hi - r > gap && out.last().is_none_or(|&p| r - p > gap) {
            out.push(r);
        }
    }
    out
}

fn segments(pieces: &[Piece], e: &ArcSet, zeros: impl Fn(f64, f64) -> Vec<f64>) -> (Vec<Segment>, Vec<(usize, f64, f64)>) {
    let mut segs = Vec::new();
    let mut owner = Vec::new();
    for p in pieces {
        let comp = e.arcs()[p.arc];
        let full = e.is_full();
        let mut cuts = vec![p.lo];
        cuts.extend(zeros(p.lo, p.hi));
        cuts.push(p.hi);
        for w in cuts.windows(2) {
            let sing_lo = (w[0] == comp.lo && !full) || w[0] != p.lo;
            let sing_hi = (w[1] == comp.hi && !full) || w[1] != p.hi;
            segs.push(Segment::new(w[0], w[1], sing_lo, sing_hi));
            owner.push((p.arc, w[0] - comp.lo, comp.hi - w[1]));
        }
    }
    (segs, owner)
}

/// `A(T, X)` and `B(T, X)` with effective degree `n`.
pub fn integrals(
    tn: &dyn TrigFunction,
    n: usize,
    x: &ArcSet,
    dens: &DensityModel,
    p: f64,
    spec: &QuadSpec,
) -> Result<Integrals> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidInput(format!("p = {p} must be positive")));
    }
    if n == 0 && tn.nominal_degree() > 0 {
        return Err(Error::InvalidInput("effective degree must be positive for a nonconstant T".into()));
    }
    let e = dens.set();
    let ps = pieces(x, e)?;
    let deg = tn.nominal_degree().max(1);

    let scale = if n == 0 { 0.0 } else { 1.0 / (n as f64 * TAU) };
    let eval = |owner: &[(usize, f64, f64)], node: QuadNode, which: bool| {
        let (l, off_lo, off_hi) = owner[node.seg];
        let w = dens.density_in_arc(l, node.t, off_lo + node.d_lo, off_hi + node.d_hi);
        if which {
            let d = tn.derivative(node.t);
            if d == 0.0 {
                return 0.0;
            }
            (d * scale).abs().powf(p) * w.powf(1.0 - p)
        } else {
            tn.value(node.t).abs().powf(p) * w
        }
    };

    let (segs_a, own_a) = segments(&ps, e, |lo, hi| breakpoints(|t| tn.derivative(t), lo, hi, deg));
    let ra = if n == 0 {
        None
    } else {
        Some(integrate_segments(|node| eval(&own_a, node, true), &segs_a, spec))
    };
    let (segs_b, own_b) = segments(&ps, e, |lo, hi| breakpoints(|t| tn.value(t), lo, hi, deg));
    let rb = integrate_segments(|node| eval(&own_b, node, false), &segs_b, spec);

    let (a, err_a, conv_a) = ra.map_or((0.0, 0.0, true), |r| (r.value, r.error, r.converged));
    Ok(Integrals { a, b: rb.value, err_a, err_b: rb.error, converged: conv_a && rb.converged })
}

/// All four functionals of `tn` on `x ⊆ E`.
pub fn functionals(
    tn: &dyn TrigFunction,
    n: usize,
    x: &ArcSet,
    dens: &DensityModel,
    p: f64,
    spec: &QuadSpec,
) -> Result<FunctionalValues> {
    let on_x = integrals(tn, n, x, dens, p, spec)?;
    let same = x == dens.set() || (x.is_full() && dens.set().is_full());
    let on_e = if same { on_x } else { integrals(tn, n, dens.set(), dens, p, spec)? };
    Ok(combine(&on_x, &on_e))
}

/// Ratios from precomputed integrals on `X` and on `E`.
pub fn combine(on_x: &Integrals, on_e: &Integrals) -> FunctionalValues {
    let ratio = |num: f64, den: f64| if den > 0.0 { Some(num / den) } else { None };
    let exact = std::ptr::eq(on_x, on_e) || on_x == on_e;
    FunctionalValues {
        big_a: on_x.a,
        big_b: on_x.b,
        a: if exact && on_e.a > 0.0 { Some(1.0) } else { ratio(on_x.a, on_e.a) },
        b: if exact && on_e.b > 0.0 { Some(1.0) } else { ratio(on_x.b, on_e.b) },
        a_total: on_e.a,
        b_total: on_e.b,
        quad_error: on_x.quad_error() + if exact { 0.0 } else { on_e.quad_error() },
        converged: on_x.converged && on_e.converged,
    }
}
