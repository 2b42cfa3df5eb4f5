//! Constructive pieces of the localization argument and numeric checks of the
//! inequalities they satisfy: the fast decreasing polynomial `q`, the
//! symmetrization `T*`, the weighted Bernstein (Lukashov) bound, the Nikolskii
//! lower bound, and margin reports for the symmetrization and localization
//! lemmas.

use serde::Serialize;
use std::f64::consts::{PI, TAU};

use crate::arcsets::{containing_branch, Arc, ArcSet, Block, Cell, ParamSet};
use crate::equilibrium::DensityModel;
use crate::error::{Error, Result};
use crate::functionals::{integrals, Integrals, QuadSpec};
use crate::trigpoly::{sup_norm, sup_on_interval, TrigFunction, TrigPoly};
use crate::tset::TSet;

/// The fast decreasing polynomial for one block together with its measured
/// approximation quality.
#[derive(Debug, Clone, Serialize)]
pub struct QProfile {
    pub h: Arc,
    pub n: usize,
    pub q: TrigPoly,
    /// `⌊3n^{2θ}⌋`; zero for the trivial profile `q ≡ 1`.
    pub deg_bound: usize,
    /// Kernel power `r` and Fejér order `M`.
    pub r: usize,
    pub m: usize,
    /// `max(sup_H |q − 1|, sup |q|)` with the second sup over the domain
    /// minus `H ∪ H_b`.
    pub f_hat: f64,
    /// `sup |q'|` over the domain minus `H_b`.
    pub dq_hat: f64,
}

/// Constants fitted over an `n`-ladder of profiles:
/// `log F ≈ log C2 − C1·n^θ` and `C3 = max F^p·n^γ`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QConstants {
    pub c1_hat: f64,
    pub c2_hat: f64,
    pub c3_hat: f64,
}

/// Coefficients `κ_0..κ_D` of `(sin(Ms/2)/sin(s/2))^{2r} = Σ_{|j|≤D} κ_j e^{ijs}`,
/// scaled so that the largest is 1.
fn fejer_power(m: usize, r: usize) -> Vec<f64> {
    // two-sided sequences indexed from -deg..=deg
    let base: Vec<f64> = (0..2 * m - 1)
        .map(|i| (m - (i as isize - (m as isize - 1)).unsigned_abs()) as f64)
        .collect();
    let mut acc = vec![1.0];
    for _ in 0..r {
        let mut next = vec![0.0; acc.len() + base.len() - 1];
        for (i, a) in acc.iter().enumerate() {
            for (j, b) in base.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        let top = next.iter().fold(0.0f64, |x, &y| x.max(y));
        acc = next.into_iter().map(|v| v / top).collect();
    }
    let mid = acc.len() / 2;
    acc[mid..].to_vec()
}

/// `∫_{[a,b]} K(t − s) ds / ∫ K` for the kernel with one-sided coefficients
/// `kappa`.
fn smoothed_indicator(kappa: &[f64], a: f64, b: f64) -> TrigPoly {
    if b - a >= TAU {
        return TrigPoly::constant(1.0);
    }
    let d = kappa.len() - 1;
    let mut cos = vec![0.0; d + 1];
    let mut sin = vec![0.0; d + 1];
    cos[0] = (b - a) / TAU;
    for j in 1..=d {
        // sin(j(t−a)) − sin(j(t−b)) expanded in cos jt, sin jt
        let w = kappa[j] / kappa[0] / (PI * j as f64);
        let (sa, ca) = (j as f64 * a).sin_cos();
        let (sb, cb) = (j as f64 * b).sin_cos();
        cos[j] = w * (-sa + sb);
        sin[j] = w * (ca - cb);
    }
    TrigPoly::new(cos, sin[1..].to_vec()).expect("finite coefficients")
}

fn sup_over(p: &TrigPoly, x: &ArcSet) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        sup_norm(p, x).expect("nonempty set")
    }
}

impl QProfile {
    /// `q ≡ 1`, with `F_hat` and `q'` measured like any other profile.
    pub fn unit(blk: &Block, n: usize, domain: &ArcSet) -> Self {
        Self::measured(blk, n, TrigPoly::constant(1.0), 0, 0, 0, domain)
    }

    fn measured(blk: &Block, n: usize, q: TrigPoly, deg_bound: usize, r: usize, m: usize, domain: &ArcSet) -> Self {
        let on_h = sup_on_interval(&q.shift(-1.0), blk.h.lo, blk.h.hi).0;
        let off = sup_over(&q, &domain.difference(&blk.h_with_border()));
        let dq_hat = sup_over(&q.derivative(), &domain.difference(&blk.border_set()));
        Self { h: blk.h, n, q, deg_bound, r, m, f_hat: on_h.max(off), dq_hat }
    }
}

/// Builds `q(t) = ∫_{H'} K(t − s) ds / ∫ K` with `K = F_M^r`, `F_M` the Fejér
/// kernel, `r = ⌈n^θ⌉` and `M − 1 = ⌊⌊3n^{2θ}⌋/r⌋`. `H'` is `H` widened by half
/// a cell on each side so that the transition happens inside `H_b`.
/// `F_hat` and `sup|q'|` are measured on `domain` (normally `E`).
pub fn fast_decreasing_q(blk: &Block, n: usize, params: &ParamSet, domain: &ArcSet) -> Result<QProfile> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let nf = n as f64;
    let min_len = 0.5 / nf.powf(params.kappa);
    if blk.h.len() < min_len * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(format!("|H| = {} is below the minimum {min_len}", blk.h.len())));
    }
    let r = nf.powf(params.theta).ceil() as usize;
    let deg_bound = (3.0 * nf.powf(2.0 * params.theta) + 1e-9).floor() as usize;
    let m = deg_bound / r + 1;
    let kappa = fejer_power(m, r);
    let cells = blk.cells.end() - blk.cells.start() + 1;
    let half = 0.5 * blk.h.len() / cells as f64;
    let q = smoothed_indicator(&kappa, blk.h.lo - half, blk.h.hi + half);
    Ok(QProfile::measured(blk, n, q, deg_bound, r, m, domain))
}

/// Least squares fit of `log F_hat` against `n^θ` and the envelope constant
/// `C3 = max F_hat^p·n^γ`. Needs at least two profiles.
pub fn fit_constants(profiles: &[QProfile], params: &ParamSet) -> Result<QConstants> {
    if profiles.len() < 2 || profiles.iter().any(|q| !(q.f_hat > 0.0)) {
        return Err(Error::InvalidInput("need two or more profiles with positive F_hat".into()));
    }
    let pts: Vec<(f64, f64)> = profiles
        .iter()
        .map(|q| ((q.n as f64).powf(params.theta), q.f_hat.ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let c3_hat = profiles
        .iter()
        .map(|q| q.f_hat.powf(params.p) * (q.n as f64).powf(params.gamma))
        .fold(0.0, f64::max);
    Ok(QConstants { c1_hat: -slope, c2_hat: (my - slope * mx).exp(), c3_hat })
}

/// `T*(t) = Σ_h T_n(t_h)·q(t_h) = S(U(t))`, stored as the Chebyshev series of
/// `S` and evaluated through `U`.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetrizedPoly {
    pub nstar: usize,
    /// `⌊n*/N⌋`, the size of the fit basis.
    pub deg_s: usize,
    /// `S(y) = Σ c_k T_k(y)`.
    pub s_coeffs: Vec<f64>,
    /// Max of `|S(y) − Σ_h T_n(t_h)q(t_h)|` over check levels, relative to
    /// the largest value (at least 1).
    pub fit_residual: f64,
    /// Max spread of the stored representation across the `2N` preimages of
    /// a level, relative to the largest value (at least 1).
    pub branch_consistency: f64,
    /// Coefficients of `T*` itself; only formed on the full circle, where
    /// `|U| ≤ 1` everywhere keeps them well conditioned.
    pub tstar: Option<TrigPoly>,
    #[serde(skip)]
    ds_coeffs: Vec<f64>,
    #[serde(skip)]
    u: TrigPoly,
    #[serde(skip)]
    order: usize,
}

fn clenshaw(c: &[f64], y: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * y * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    y * b1 - b2 + c.first().copied().unwrap_or(0.0)
}

fn cheb_derivative(c: &[f64]) -> Vec<f64> {
    let d = c.len().saturating_sub(1);
    if d == 0 {
        return vec![0.0];
    }
    let mut out = vec![0.0; d + 1];
    for k in (1..=d).rev() {
        out[k - 1] = out.get(k + 1).copied().unwrap_or(0.0) + 2.0 * k as f64 * c[k];
    }
    out[0] *= 0.5;
    out.truncate(d);
    out
}

impl SymmetrizedPoly {
    pub fn s_value(&self, y: f64) -> f64 {
        clenshaw(&self.s_coeffs, y)
    }
}

impl TrigFunction for SymmetrizedPoly {
    fn value(&self, t: f64) -> f64 {
        self.s_value(self.u.eval(t))
    }

    fn derivative(&self, t: f64) -> f64 {
        let d = self.u.eval_derivative(t);
        if d == 0.0 {
            return 0.0;
        }
        clenshaw(&self.ds_coeffs, self.u.eval(t)) * d
    }

    fn nominal_degree(&self) -> usize {
        self.deg_s * self.order
    }
}

/// `Σ_h f(t_h)` over the preimages of level `y`, with the preimages.
fn branch_sum(t: &TSet, f: &impl Fn(f64) -> f64, y: f64) -> Result<(f64, Vec<f64>)> {
    let y = y.clamp(-1.0, 1.0);
    let pre = (0..t.branches().len())
        .map(|h| t.branch_inverse(h, y))
        .collect::<Result<Vec<f64>>>()?;
    Ok((pre.iter().map(|&th| f(th)).sum(), pre))
}

/// Symmetrizes `tn·q` over the branches of `t`.
pub fn symmetrize(t: &TSet, tn: &TrigPoly, qp: &QProfile) -> Result<SymmetrizedPoly> {
    if tn.effective_degree() == 0 {
        return Err(Error::InvalidInput("T_n must have degree at least 1".into()));
    }
    let nstar = tn.degree() + qp.q.degree();
    let order = t.order();
    let deg_s = nstar / order;
    let f = |s: f64| tn.eval(s) * qp.q.eval(s);

    // discrete Chebyshev transform on 2(deg_s + 1) Gauss nodes
    let k = 2 * (deg_s + 1);
    let nodes: Vec<f64> = (0..k).map(|i| (PI * (i as f64 + 0.5) / k as f64).cos()).collect();
    let vals = nodes
        .iter()
        .map(|&y| branch_sum(t, &f, y).map(|r| r.0))
        .collect::<Result<Vec<f64>>>()?;
    let s_coeffs: Vec<f64> = (0..=deg_s)
        .map(|j| {
            let s: f64 = (0..k)
                .map(|i| vals[i] * (j as f64 * PI * (i as f64 + 0.5) / k as f64).cos())
                .sum();
            s * if j == 0 { 1.0 } else { 2.0 } / k as f64
        })
        .collect();

    let checks = 3 * (deg_s + 1) + 7;
    let mut scale = 1.0f64;
    let mut worst = 0.0f64;
    for i in 0..=checks {
        let y = (PI * i as f64 / checks as f64).cos();
        let (direct, _) = branch_sum(t, &f, y)?;
        scale = scale.max(direct.abs());
        worst = worst.max((clenshaw(&s_coeffs, y) - direct).abs());
    }
    let fit_residual = worst / scale;

    let tstar = if t.set().is_full() {
        let len = 2 * nstar + 1;
        let samples = (0..len)
            .map(|j| branch_sum(t, &f, t.u().eval(TAU * j as f64 / len as f64)).map(|r| r.0))
            .collect::<Result<Vec<f64>>>()?;
        Some(TrigPoly::from_samples(&samples, nstar)?)
    } else {
        None
    };

    let ds_coeffs = cheb_derivative(&s_coeffs);
    let mut sym = SymmetrizedPoly {
        nstar,
        deg_s,
        s_coeffs,
        fit_residual,
        branch_consistency: 0.0,
        tstar,
        ds_coeffs,
        u: t.u().clone(),
        order,
    };
    sym.branch_consistency = consistency(t, &sym, &f, 100)?;
    Ok(sym)
}

/// Spread of the stored `T*` over the preimages of `levels` interior levels.
fn consistency(t: &TSet, sym: &SymmetrizedPoly, f: &impl Fn(f64) -> f64, levels: usize) -> Result<f64> {
    let eval = |s: f64| match &sym.tstar {
        Some(p) => p.eval(s),
        None => sym.value(s),
    };
    let mut scale = 1.0f64;
    let mut spread = 0.0f64;
    for j in 0..levels {
        let y = (PI * (j as f64 + 0.5) / levels as f64).cos();
        let (direct, pre) = branch_sum(t, f, y)?;
        scale = scale.max(direct.abs());
        let vals: Vec<f64> = pre.iter().map(|&s| eval(s)).collect();
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        spread = spread.max(hi - lo);
    }
    Ok(spread / scale)
}

/// `max |T_n'(t)| / (n·2π·ω(t)·‖T_n‖_E)` over a dense grid of `E` that stays
/// `1e-6` away from the component ends.
pub fn lukashov_sup_ratio(tn: &dyn TrigFunction, n: usize, dens: &DensityModel) -> Result<f64> {
    if n == 0 || tn.nominal_degree() > n || tn.nominal_degree() == 0 {
        return Err(Error::InvalidInput("need n >= deg T_n >= 1".into()));
    }
    let e = dens.set();
    let norm = sup_norm(tn, e)?;
    if norm == 0.0 {
        return Err(Error::InvalidInput("zero polynomial".into()));
    }
    let collar = if e.is_full() { 0.0 } else { 1e-6 };
    let per = 32 * tn.nominal_degree() + 64;
    let mut worst = 0.0f64;
    for (l, arc) in e.arcs().iter().enumerate() {
        let (lo, hi) = (arc.lo + collar, arc.hi - collar);
        let count = per * ((hi - lo) / PI).ceil().max(1.0) as usize;
        for i in 0..=count {
            let s = lo + (hi - lo) * i as f64 / count as f64;
            let w = dens.density_in_arc(l, s, s - arc.lo, arc.hi - s);
            let ratio = tn.derivative(s).abs() / (n as f64 * TAU * w * norm);
            worst = worst.max(ratio);
        }
    }
    Ok(worst)
}

/// `∫_I |T|^p ω dt`. The caller normalizes `sup_I |T| = 1`.
pub fn nikolskii_value(tc: &TrigPoly, i: &ArcSet, dens: &DensityModel, p: f64, spec: &QuadSpec) -> Result<f64> {
    if tc.effective_degree() == 0 {
        return Err(Error::InvalidInput("the Nikolskii bound needs a nonconstant polynomial".into()));
    }
    Ok(integrals(tc, tc.effective_degree(), i, dens, p, spec)?.b)
}

/// `value·2^p·deg²`, which the lemma bounds below by a positive constant.
pub fn nikolskii_scaled(value: f64, p: f64, deg: usize) -> f64 {
    value * 2f64.powf(p) * (deg * deg) as f64
}

/// Both sides of one inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MarginRecord {
    pub lemma: String,
    pub n: usize,
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub quad_error: f64,
}

impl MarginRecord {
    fn new(lemma: &str, n: usize, p: f64, lhs: f64, rhs: f64, quad_error: f64) -> Self {
        Self { lemma: lemma.into(), n, p, lhs, rhs, slack: rhs - lhs, quad_error }
    }

    /// `slack ≥ −max(quad_error, floor)`.
    pub fn holds(&self, floor: f64) -> bool {
        self.slack >= -self.quad_error.max(floor)
    }
}

fn set_of(cells: &[Cell]) -> Result<ArcSet> {
    if cells.is_empty() {
        return Ok(ArcSet::empty());
    }
    ArcSet::new(cells.iter().map(|c| (c.lo, c.hi)).collect())
}

fn on(tn: &dyn TrigFunction, n: usize, x: &ArcSet, dens: &DensityModel, p: f64, spec: &QuadSpec) -> Result<Integrals> {
    if x.is_empty() {
        return Ok(Integrals { a: 0.0, b: 0.0, err_a: 0.0, err_b: 0.0, converged: true });
    }
    integrals(tn, n, x, dens, p, spec)
}

fn check_degree(tn: &TrigPoly, n: usize) -> Result<()> {
    if tn.effective_degree() == 0 || tn.degree() > n {
        return Err(Error::InvalidInput(format!("need n >= deg T_n >= 1, got n = {n}, deg = {}", tn.degree())));
    }
    Ok(())
}

/// Margins of the two symmetrization inequalities
///
/// `|A_n(T*, E) − 2N·A(T_n, H)| ≤ 2N(4F^p + a(T_n, H_b))A(T_n, E) + 2N·4·3^p(n^{2θ}/n)^p B(T_n, E)`
/// `|B(T*, E) − 2N·B(T_n, H)| ≤ 2N(3F^p + b(T_n, H_b))B(T_n, E)`
///
/// with `F` the measured `F_hat`. `A_n(T*)` is normalized by `n`, which is the
/// same as `(n*/n)^p·A_{n*}(T*)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_symmetrization_lemmas(
    t: &TSet,
    tn: &TrigPoly,
    n: usize,
    blk: &Block,
    qp: &QProfile,
    params: &ParamSet,
    dens: &DensityModel,
    spec: &QuadSpec,
) -> Result<[MarginRecord; 2]> {
    params.validate()?;
    check_degree(tn, n)?;
    let p = params.p;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidInput(format!("p = {p} must lie in (0, 1)")));
    }
    let mut pieces = vec![blk.h];
    pieces.extend(blk.border.iter().map(Cell::arc));
    if containing_branch(t, &pieces).is_none() {
        return Err(Error::Hypothesis("H together with its border is not inside one branch".into()));
    }
    let e = dens.set();
    let sym = symmetrize(t, tn, qp)?;
    let star = on(&sym, n, e, dens, p, spec)?;
    let on_e = on(tn, n, e, dens, p, spec)?;
    let on_h = on(tn, n, &blk.h_set(), dens, p, spec)?;
    let on_b = on(tn, n, &set_of(&blk.border)?, dens, p, spec)?;

    let nn = 2.0 * t.order() as f64;
    let fp = qp.f_hat.powf(p);
    let small = 3f64.powf(p) * ((n as f64).powf(2.0 * params.theta) / n as f64).powf(p);
    let ratio = |x: f64, tot: f64| if tot > 0.0 { x / tot } else { 0.0 };
    let a_b = ratio(on_b.a, on_e.a);
    let b_b = ratio(on_b.b, on_e.b);

    let lhs7 = (star.a - nn * on_h.a).abs();
    let rhs7 = nn * (4.0 * fp + a_b) * on_e.a + nn * 4.0 * small * on_e.b;
    let err7 = star.err_a + nn * on_h.err_a + nn * on_b.err_a + nn * 4.0 * fp * on_e.err_a + nn * 4.0 * small * on_e.err_b;

    let lhs8 = (star.b - nn * on_h.b).abs();
    let rhs8 = nn * (3.0 * fp + b_b) * on_e.b;
    let err8 = star.err_b + nn * on_h.err_b + nn * on_b.err_b + nn * 3.0 * fp * on_e.err_b;

    Ok([
        MarginRecord::new("lemma7", n, p, lhs7, rhs7, err7),
        MarginRecord::new("lemma8", n, p, lhs8, rhs8, err8),
    ])
}

/// Margins of the localization inequalities, with `T_n q` normalized by its
/// own degree `n + deg q`:
///
/// `|A(T_n q, H) − A(T_n, H)| ≤ (F^p + 3^p(n^{2θ}/n)^p)A(T_n, E) + 3^p(n^{2θ}/n)^p B(T_n, E)`
/// `A(T_n q, X) ≤ A(T_n, X) + 3^p(n^{2θ}/n)^p B(T_n, E)`
/// `B(T_n q, X) ≤ B(T_n, X)`
#[allow(clippy::too_many_arguments)]
pub fn verify_localization(
    tn: &TrigPoly,
    n: usize,
    blk: &Block,
    qp: &QProfile,
    x: &ArcSet,
    params: &ParamSet,
    dens: &DensityModel,
    spec: &QuadSpec,
) -> Result<[MarginRecord; 3]> {
    params.validate()?;
    check_degree(tn, n)?;
    let p = params.p;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidInput(format!("p = {p} must lie in (0, 1)")));
    }
    let e = dens.set();
    let tq = tn.product(&qp.q);
    let nq = n + qp.q.degree();
    let h = blk.h_set();
    let tq_h = on(&tq, nq, &h, dens, p, spec)?;
    let tq_x = on(&tq, nq, x, dens, p, spec)?;
    let t_h = on(tn, n, &h, dens, p, spec)?;
    let t_x = on(tn, n, x, dens, p, spec)?;
    let t_e = on(tn, n, e, dens, p, spec)?;

    let fp = qp.f_hat.powf(p);
    let small = 3f64.powf(p) * ((n as f64).powf(2.0 * params.theta) / n as f64).powf(p);

    let lhs3 = (tq_h.a - t_h.a).abs();
    let rhs3 = (fp + small) * t_e.a + small * t_e.b;
    let err3 = tq_h.err_a + t_h.err_a + (fp + small) * t_e.err_a + small * t_e.err_b;

    let rhs3b = t_x.a + small * t_e.b;
    let err3b = tq_x.err_a + t_x.err_a + small * t_e.err_b;

    let err4 = tq_x.err_b + t_x.err_b;

    Ok([
        MarginRecord::new("eq3", n, p, lhs3, rhs3, err3),
        MarginRecord::new("eq3b", n, p, tq_x.a, rhs3b, err3b),
        MarginRecord::new("eq4", n, p, tq_x.b, t_x.b, err4),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arcsets::partition_small;
    use crate::harness::random_trigpoly;

    fn fourarc() -> TSet {
        let u = TrigPoly::new(vec![-0.2 / 0.7, 0.0, 1.0 / 0.7], vec![0.0, 0.0]).unwrap();
        TSet::build(&u).unwrap()
    }

    fn circle_block(n: usize, params: &ParamSet) -> Block {
        let e = ArcSet::full_circle(-PI);
        partition_small(&e, n, params).unwrap().block(0, 0).unwrap()
    }

    #[test]
    fn fejer_power_matches_direct_kernel() {
        let (m, r) = (5, 3);
        let k = fejer_power(m, r);
        assert_eq!(k.len(), r * (m - 1) + 1);
        for &s in &[0.3f64, 1.1, 2.9] {
            let series: f64 = k[0] + 2.0 * (1..k.len()).map(|j| k[j] * (j as f64 * s).cos()).sum::<f64>();
            let direct = ((m as f64 * s / 2.0).sin() / (s / 2.0).sin()).powi(2 * r as i32);
            let at0 = (m as f64).powi(2 * r as i32);
            // ratio to the value at zero is scale free
            let series0: f64 = k[0] + 2.0 * k[1..].iter().sum::<f64>();
            assert!((series / series0 - direct / at0).abs() < 1e-12);
        }
    }

    #[test]
    fn q_profile_bounds() {
        let params = ParamSet::default_for(0.5).unwrap();
        let n = 4096;
        let blk = circle_block(n, &params);
        let qp = fast_decreasing_q(&blk, n, &params, &ArcSet::full_circle(-PI)).unwrap();
        assert!(qp.q.degree() <= 192);
        assert_eq!(qp.deg_bound, 192);
        let grid = 100_000;
        for i in 0..grid {
            let v = qp.q.eval(-PI + TAU * i as f64 / grid as f64);
            assert!(v >= -1e-12 && v <= 1.0 + 1e-12, "q = {v}");
        }
        assert!(qp.q.eval(blk.h.mid()) >= 1.0 - qp.f_hat);
        assert!(qp.f_hat <= 1e-2, "F_hat = {}", qp.f_hat);
        assert!(qp.dq_hat <= 1.0);
    }

    #[test]
    fn q_ladder_decreases() {
        let params = ParamSet::default_for(0.5).unwrap();
        let profiles: Vec<QProfile> = [256, 1024, 4096]
            .iter()
            .map(|&n| {
                let blk = circle_block(n, &params);
                fast_decreasing_q(&blk, n, &params, &ArcSet::full_circle(-PI)).unwrap()
            })
            .collect();
        assert!(profiles.windows(2).all(|w| w[1].f_hat < w[0].f_hat));
        let c = fit_constants(&profiles, &params).unwrap();
        assert!(c.c1_hat > 0.0 && c.c2_hat > 0.0 && c.c3_hat > 0.0);
    }

    #[test]
    fn short_h_rejected() {
        let params = ParamSet::default_for(0.5).unwrap();
        let blk = Block {
            cells: 0..=0,
            component: 0,
            h: Arc::new(0.0, 0.1),
            border: vec![],
            open_lo: true,
            open_hi: true,
        };
        assert!(fast_decreasing_q(&blk, 64, &params, &ArcSet::full_circle(-PI)).is_err());
    }

    fn unit_block(t: &TSet) -> (Block, QProfile) {
        let a = t.set().arcs()[0];
        let blk = Block { cells: 0..=0, component: 0, h: a, border: vec![], open_lo: true, open_hi: true };
        let qp = QProfile::unit(&blk, 1, t.set());
        (blk, qp)
    }

    #[test]
    fn odd_function_cancels() {
        let t = TSet::single_arc(2.0).unwrap();
        let (_, qp) = unit_block(&t);
        let sym = symmetrize(&t, &TrigPoly::sin_k(1), &qp).unwrap();
        assert!(sym.s_coeffs.iter().all(|c| c.abs() <= 1e-12));
        for i in 0..50 {
            let s = -2.0 + 4.0 * i as f64 / 49.0;
            assert!(sym.value(s).abs() <= 1e-12);
        }
    }

    #[test]
    fn cosine_symmetrizes_to_linear() {
        let beta = 2.0f64;
        let t = TSet::single_arc(beta).unwrap();
        let (_, qp) = unit_block(&t);
        let sym = symmetrize(&t, &TrigPoly::cos_k(1), &qp).unwrap();
        assert_eq!(sym.deg_s, 1);
        assert!((sym.s_coeffs[0] - (1.0 + beta.cos())).abs() < 1e-12);
        assert!((sym.s_coeffs[1] - (1.0 - beta.cos())).abs() < 1e-12);
        assert!((sym.value(0.7) - 2.0 * 0.7f64.cos()).abs() < 1e-12);
        assert!(sym.fit_residual < 1e-12);
    }

    #[test]
    fn full_circle_branch_consistency() {
        let u = TrigPoly::cos_k(2);
        let t = TSet::build(&u).unwrap();
        let blk = Block { cells: 0..=0, component: 0, h: Arc::new(0.0, 1.0), border: vec![], open_lo: false, open_hi: false };
        let qp = QProfile::unit(&blk, 3, t.set());
        let sym = symmetrize(&t, &TrigPoly::cos_k(3), &qp).unwrap();
        assert!(sym.tstar.is_some());
        assert!(sym.branch_consistency <= 1e-9, "{}", sym.branch_consistency);
        assert!(sym.fit_residual <= 1e-8);
        assert_eq!(sym.deg_s, 1);
        // cos 3t is odd about π/2, so the four preimage values cancel
        assert!(sym.tstar.unwrap().sample(3).iter().all(|v| v.abs() < 1e-12));

        let tn = random_trigpoly(12, 5);
        let sym = symmetrize(&t, &tn, &qp).unwrap();
        assert_eq!(sym.deg_s, 6);
        assert!(sym.branch_consistency <= 1e-9);
        assert!(sym.fit_residual <= 1e-8);
        for s in [0.1f64, 1.3, 2.9] {
            let direct: f64 = [s, -s, PI - s, PI + s].iter().map(|&x| tn.eval(x)).sum();
            assert!((sym.value(s) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetrized_derivative_matches_difference() {
        let t = fourarc();
        let (_, qp) = unit_block(&t);
        let tn = random_trigpoly(10, 3);
        let sym = symmetrize(&t, &tn, &qp).unwrap();
        let s = t.set().arcs()[1].mid();
        let h = 1e-6;
        let fd = (sym.value(s + h) - sym.value(s - h)) / (2.0 * h);
        assert!((fd - sym.derivative(s)).abs() < 1e-6 * (1.0 + fd.abs()));
    }

    #[test]
    fn lukashov_examples() {
        let circle = DensityModel::from_tset(TSet::build(&TrigPoly::cos_k(1)).unwrap());
        let r = lukashov_sup_ratio(&TrigPoly::sin_k(7), 7, &circle).unwrap();
        assert!((r - 1.0).abs() < 1e-12);

        let t = fourarc();
        let dens = DensityModel::from_tset(t.clone());
        let tk = crate::trigpoly::ChebComposed::new(5, t.u().clone());
        let r = lukashov_sup_ratio(&tk, 10, &dens).unwrap();
        assert!(r <= 1.0 + 1e-9 && r > 0.999, "{r}");
        for seed in 0..5 {
            let tn = random_trigpoly(20, seed);
            assert!(lukashov_sup_ratio(&tn, 20, &dens).unwrap() <= 1.0 + 1e-6);
        }
        assert!(lukashov_sup_ratio(&TrigPoly::constant(1.0), 1, &dens).is_err());
    }

    #[test]
    fn nikolskii_examples() {
        let circle = DensityModel::from_tset(TSet::build(&TrigPoly::cos_k(1)).unwrap());
        let i = ArcSet::new(vec![(0.0, PI / 2.0)]).unwrap();
        let spec = QuadSpec::default();
        let v = nikolskii_value(&TrigPoly::cos_k(1), &i, &circle, 1.0, &spec).unwrap();
        assert!((v - 1.0 / TAU).abs() < 1e-9);
        assert!(nikolskii_value(&TrigPoly::constant(1.0), &i, &circle, 1.0, &spec).is_err());
        assert!(nikolskii_value(&TrigPoly::zero(), &i, &circle, 1.0, &spec).is_err());
        assert!((nikolskii_scaled(v, 1.0, 1) - 2.0 * v).abs() < 1e-15);
    }

    #[test]
    fn symmetrization_margins_single_arc() {
        let params = ParamSet::default_for(0.5).unwrap();
        let t = TSet::single_arc(2.5).unwrap();
        let dens = DensityModel::from_tset(t.clone());
        let n = 32;
        let part = partition_small(t.set(), n, &params).unwrap();
        let blk = part.block(1, 1).unwrap();
        let qp = fast_decreasing_q(&blk, n, &params, t.set()).unwrap();
        let spec = QuadSpec::default();
        let tn = random_trigpoly(n, 11);
        let recs = verify_symmetrization_lemmas(&t, &tn, n, &blk, &qp, &params, &dens, &spec).unwrap();
        for r in &recs {
            assert!(r.holds(1e-6), "{r:?}");
            assert!(r.quad_error >= 0.0);
        }
        // a block straddling the two branches violates the hypothesis
        let bad = part.block(2, 3).unwrap();
        let qb = fast_decreasing_q(&bad, n, &params, t.set()).unwrap();
        assert!(matches!(
            verify_symmetrization_lemmas(&t, &tn, n, &bad, &qb, &params, &dens, &spec),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn unit_profile_symmetrization_even() {
        // H is the right branch, q = 1, T even: T* = 2T on E
        let params = ParamSet::default_for(0.5).unwrap();
        let t = TSet::single_arc(2.0).unwrap();
        let dens = DensityModel::from_tset(t.clone());
        let h = Arc::new(0.0, 2.0);
        let blk = Block { cells: 0..=0, component: 0, h, border: vec![], open_lo: false, open_hi: true };
        let qp = QProfile::unit(&blk, 4, t.set());
        let tn = TrigPoly::new(vec![0.3, 1.0, -0.5, 0.2, 0.7], vec![0.0; 4]).unwrap();
        let spec = QuadSpec::default();
        let recs = verify_symmetrization_lemmas(&t, &tn, 4, &blk, &qp, &params, &dens, &spec).unwrap();
        let b_e = integrals(&tn, 4, t.set(), &dens, 0.5, &spec).unwrap().b;
        assert!((recs[1].lhs - (2f64.sqrt() - 1.0) * b_e).abs() < 1e-8);
        assert!(recs.iter().all(|r| r.slack >= 0.0));
    }

    #[test]
    fn localization_margins() {
        let params = ParamSet::new(0.5, 0.45, 0.1, 0.04).unwrap();
        let t = fourarc();
        let dens = DensityModel::from_tset(t.clone());
        let n = 64;
        let part = partition_small(t.set(), n, &params).unwrap();
        let blk = part.block(0, 0).unwrap();
        let qp = fast_decreasing_q(&blk, n, &params, t.set()).unwrap();
        let spec = QuadSpec::default();
        let tn = random_trigpoly(n, 2);
        let recs = verify_localization(&tn, n, &blk, &qp, t.set(), &params, &dens, &spec).unwrap();
        for r in &recs {
            assert!(r.holds(1e-6), "{r:?}");
        }
        let unit = QProfile::unit(&blk, n, t.set());
        let recs = verify_localization(&tn, n, &blk, &unit, t.set(), &params, &dens, &spec).unwrap();
        assert!(recs[0].lhs.abs() < 1e-9);
        assert!((recs[2].lhs - recs[2].rhs).abs() < 1e-9);
    }

    #[test]
    fn margin_record_json() {
        let r = MarginRecord::new("eq4", 8, 0.5, 1.0, 2.0, 1e-9);
        let v = serde_json::to_value(&r).unwrap();
        for key in ["lemma", "n", "p", "lhs", "rhs", "slack", "quad_error"] {
            assert!(v.get(key).is_some());
        }
        assert_eq!(v["slack"], 1.0);
    }
}
