//! Equilibrium densities of arc systems.
//!
//! General sets are handled by collocation. On arc `l` write
//! `t = c_l + r_l cos φ` and `dμ = g_l(φ)/π dφ` with `g_l = Σ_k a_{l,k} cos kφ`,
//! so the density `g_l / (π r_l sin φ)` carries the inverse square root at both
//! ends. The coefficients are fitted so the logarithmic potential is constant
//! at Chebyshev points of every arc, then rescaled to unit mass.

use std::f64::consts::{LN_2, PI, TAU};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::arcsets::{Arc, ArcSet};
use crate::error::{Error, Result};
use crate::tset::TSet;

pub const RESIDUAL_TOL: f64 = 1e-7;
const ESCALATION: [usize; 3] = [16, 32, 64];

#[derive(Debug, Clone, Serialize)]
pub struct CollocationSolution {
    pub arcs: Vec<Arc>,
    /// Per-arc cosine coefficients of `g_l`, normalized to total mass 1.
    pub coeffs: Vec<Vec<f64>>,
    pub robin_constant: f64,
    pub residual: f64,
    pub degree: usize,
    full: bool,
}

/// `log(2 sin(x/2) / x)`, smooth on `|x| < 2π`.
fn log_sinc_remainder(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        // log(sin(y)/y) with y = x/2
        let y2 = 0.25 * x * x;
        return -y2 / 6.0 - y2 * y2 / 180.0;
    }
    (2.0 * (0.5 * ax).sin() / ax).ln()
}

fn log_chord(x: f64) -> f64 {
    (2.0 * (0.5 * x).sin().abs()).ln()
}

struct Geometry {
    c: Vec<f64>,
    r: Vec<f64>,
    // trapezoid nodes in φ on [0, π] and weights / π
    phi: Vec<f64>,
    w: Vec<f64>,
    // cos(kφ_q), row q, column k
    cos_table: Vec<Vec<f64>>,
}

impl Geometry {
    fn new(arcs: &[Arc], m: usize) -> Self {
        let q = 256.max(4 * m);
        let phi: Vec<f64> = (0..=q).map(|i| PI * i as f64 / q as f64).collect();
        let w: Vec<f64> = (0..=q).map(|i| if i == 0 || i == q { 0.5 / q as f64 } else { 1.0 / q as f64 }).collect();
        let cos_table = phi.iter().map(|&p| (0..=m).map(|k| (k as f64 * p).cos()).collect()).collect();
        Self {
            c: arcs.iter().map(Arc::mid).collect(),
            r: arcs.iter().map(|a| 0.5 * a.len()).collect(),
            phi,
            w,
            cos_table,
        }
    }

    /// Potentials `−(1/π)∫ log|2 sin((t − s)/2)| cos kφ dφ` of the basis on arc
    /// `l`, evaluated at `t` given as `c_j + r_j cos ψ` on arc `j`.
    fn basis_potentials(&self, l: usize, j: usize, psi: f64, m: usize, out: &mut [f64]) {
        let t = self.c[j] + self.r[j] * psi.cos();
        out.iter_mut().for_each(|x| *x = 0.0);
        if l == j {
            let r = self.r[l];
            // log|t − s| = log r + log|cos ψ − cos φ|, done in closed form
            out[0] = -(r.ln() - LN_2);
            for (k, o) in out.iter_mut().enumerate().skip(1) {
                *o = (k as f64 * psi).cos() / k as f64;
            }
            for (q, &p) in self.phi.iter().enumerate() {
                let x = r * (psi.cos() - p.cos());
                let f = self.w[q] * log_sinc_remainder(x);
                for k in 0..=m {
                    out[k] -= f * self.cos_table[q][k];
                }
            }
        } else {
            for (q, &p) in self.phi.iter().enumerate() {
                let s = self.c[l] + self.r[l] * p.cos();
                let f = self.w[q] * log_chord(t - s);
                for k in 0..=m {
                    out[k] -= f * self.cos_table[q][k];
                }
            }
        }
    }
}

fn potential_rows(geo: &Geometry, arcs: usize, m: usize, points: &[(usize, f64)]) -> DMatrix<f64> {
    let cols = arcs * (m + 1);
    let mut mat = DMatrix::zeros(points.len(), cols);
    let mut buf = vec![0.0; m + 1];
    for (row, &(j, psi)) in points.iter().enumerate() {
        for l in 0..arcs {
            geo.basis_potentials(l, j, psi, m, &mut buf);
            for k in 0..=m {
                mat[(row, l * (m + 1) + k)] = buf[k];
            }
        }
    }
    mat
}

fn solve_at(arcs: &[Arc], m: usize) -> Result<CollocationSolution> {
    let n_arcs = arcs.len();
    let geo = Geometry::new(arcs, m);
    let per = m + 2;
    let colloc: Vec<(usize, f64)> = (0..n_arcs)
        .flat_map(|j| (0..per).map(move |i| (j, PI * (i as f64 + 0.5) / per as f64)))
        .collect();
    let mat = potential_rows(&geo, n_arcs, m, &colloc);
    let rhs = DVector::from_element(colloc.len(), 1.0);
    let svd = mat.svd(true, true);
    let a = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::SolverFailed { residual: f64::INFINITY, degree: m, detail: e.to_string() })?;

    let mass: f64 = (0..n_arcs).map(|l| a[l * (m + 1)]).sum();
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::SolverFailed { residual: f64::INFINITY, degree: m, detail: format!("nonpositive total mass {mass}") });
    }

    // validation on a grid disjoint from the collocation points
    let check_per = 4 * (m + 1);
    let check: Vec<(usize, f64)> = (0..n_arcs)
        .flat_map(|j| (0..check_per).map(move |i| (j, PI * (i as f64 + 0.25) / check_per as f64)))
        .collect();
    let pot = potential_rows(&geo, n_arcs, m, &check) * &a;
    let residual = pot.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max) / mass;

    let coeffs: Vec<Vec<f64>> = (0..n_arcs)
        .map(|l| (0..=m).map(|k| a[l * (m + 1) + k] / mass).collect())
        .collect();
    let sol = CollocationSolution { arcs: arcs.to_vec(), coeffs, robin_constant: 1.0 / mass, residual, degree: m, full: false };

    for l in 0..n_arcs {
        for i in 0..=check_per {
            let phi = PI * i as f64 / check_per as f64;
            if sol.g(l, phi) < 0.0 {
                return Err(Error::SolverFailed {
                    residual,
                    degree: m,
                    detail: format!("negative density on arc {l} at φ = {phi:.4}"),
                });
            }
        }
    }
    Ok(sol)
}

/// Solves for the equilibrium measure of `e`. `degree` fixes the starting
/// basis size; on a residual above `1e−7` the size is raised along 16, 32, 64.
pub fn solve_general(e: &ArcSet, degree: Option<usize>) -> Result<CollocationSolution> {
    if e.is_empty() {
        return Err(Error::EmptySet);
    }
    if e.is_full() {
        return Ok(CollocationSolution {
            arcs: e.arcs().to_vec(),
            coeffs: vec![vec![1.0]],
            robin_constant: 0.0,
            residual: 0.0,
            degree: 0,
            full: true,
        });
    }
    let start = degree.unwrap_or(ESCALATION[0]);
    let mut schedule: Vec<usize> = std::iter::once(start).chain(ESCALATION.iter().copied().filter(|&m| m > start)).collect();
    schedule.dedup();
    let mut last = None;
    for m in schedule {
        match solve_at(e.arcs(), m) {
            Ok(sol) if sol.residual <= RESIDUAL_TOL => return Ok(sol),
            Ok(sol) => {
                last = Some(Error::SolverFailed {
                    residual: sol.residual,
                    degree: m,
                    detail: "potential not constant to tolerance".into(),
                })
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("schedule is nonempty"))
}

impl CollocationSolution {
    pub fn is_full(&self) -> bool {
        self.full
    }

    fn g(&self, l: usize, phi: f64) -> f64 {
        self.coeffs[l].iter().enumerate().map(|(k, a)| a * (k as f64 * phi).cos()).sum()
    }

    /// Density at the point of arc `l` at distances `d_lo`, `d_hi` from its
    /// ends.
    pub fn density_in_arc(&self, l: usize, d_lo: f64, d_hi: f64) -> f64 {
        if self.full {
            return 1.0 / TAU;
        }
        let r = 0.5 * self.arcs[l].len();
        let d = d_lo.min(d_hi);
        // φ measured from the nearer end: cos φ' = 1 − d/r
        let s = (d / (2.0 * r)).min(1.0).sqrt();
        let half = s.asin();
        let sin_phi = 2.0 * s * (1.0 - s * s).max(0.0).sqrt();
        let phi = if d_hi <= d_lo { 2.0 * half } else { PI - 2.0 * half };
        self.g(l, phi) / (PI * r * sin_phi)
    }

    /// Logarithmic potential of the solved measure at `t`.
    pub fn potential(&self, t: f64) -> f64 {
        if self.full {
            return 0.0;
        }
        let m = self.degree;
        let geo = Geometry::new(&self.arcs, m);
        let mut total = 0.0;
        let mut buf = vec![0.0; m + 1];
        for (l, coeffs) in self.coeffs.iter().enumerate() {
            let a = self.arcs[l];
            if t >= a.lo && t <= a.hi {
                let psi = ((t - geo.c[l]) / geo.r[l]).clamp(-1.0, 1.0).acos();
                geo.basis_potentials(l, l, psi, m, &mut buf);
                total += coeffs.iter().zip(&buf).map(|(c, b)| c * b).sum::<f64>();
                continue;
            }
            for (q, &p) in geo.phi.iter().enumerate() {
                let s = geo.c[l] + geo.r[l] * p.cos();
                let gq: f64 = (0..=m).map(|k| coeffs[k] * geo.cos_table[q][k]).sum();
                total -= geo.w[q] * gq * log_chord(t - s);
            }
        }
        total
    }
}

#[derive(Debug, Clone)]
pub enum Backend {
    TSet(Box<TSet>),
    Collocation(CollocationSolution),
}

/// Evaluable equilibrium density on a set `E`.
#[derive(Debug, Clone)]
pub struct DensityModel {
    backend: Backend,
    set: ArcSet,
}

impl DensityModel {
    pub fn from_tset(t: TSet) -> Self {
        let set = t.set().clone();
        Self { backend: Backend::TSet(Box::new(t)), set }
    }

    pub fn from_collocation(sol: CollocationSolution) -> Result<Self> {
        let set = if sol.full {
            ArcSet::full_circle(sol.arcs[0].lo)
        } else {
            ArcSet::new(sol.arcs.iter().map(|a| (a.lo, a.hi)).collect())?
        };
        Ok(Self { backend: Backend::Collocation(sol), set })
    }

    /// Collocation model for an arbitrary set.
    pub fn general(e: &ArcSet) -> Result<Self> {
        let sol = solve_general(e, None)?;
        // keep the caller's window so arc indices line up
        Ok(Self { backend: Backend::Collocation(sol), set: e.clone() })
    }

    pub fn set(&self) -> &ArcSet {
        &self.set
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn tset(&self) -> Option<&TSet> {
        match &self.backend {
            Backend::TSet(t) => Some(t),
            Backend::Collocation(_) => None,
        }
    }

    /// `ω(t)` for `t` in `E` away from the component ends.
    pub fn density(&self, t: f64) -> Result<f64> {
        let (l, rep) = self.set.locate(t, 0.0).ok_or(Error::OutsideSet(t))?;
        let arc = self.set.arcs()[l];
        let (d_lo, d_hi) = (rep - arc.lo, arc.hi - rep);
        if !self.set.is_full() && d_lo.min(d_hi) <= 1e-14 * (1.0 + rep.abs()) {
            return Err(Error::EndpointSingularity(t));
        }
        Ok(self.density_in_arc(l, rep, d_lo, d_hi))
    }

    /// Density at `t` on component `l` with distances `d_lo`, `d_hi` to the
    /// component ends; the distances are trusted to full relative precision.
    pub fn density_in_arc(&self, l: usize, t: f64, d_lo: f64, d_hi: f64) -> f64 {
        match &self.backend {
            Backend::Collocation(sol) => sol.density_in_arc(l, d_lo, d_hi),
            Backend::TSet(ts) => {
                if self.set.is_full() || d_lo.min(d_hi) > 1e-4 {
                    return ts.density_stable(t).unwrap_or(f64::NAN);
                }
                let arc = self.set.arcs()[l];
                if d_lo <= d_hi {
                    ts.density_from_anchor(arc.lo, d_lo)
                } else {
                    ts.density_from_anchor(arc.hi, -d_hi)
                }
            }
        }
    }
}
