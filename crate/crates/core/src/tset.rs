//! Inverse images `E = U^{-1}[−1, 1]` of real trigonometric polynomials: branch
//! structure, inner extremal points, branch inverses and the closed-form
//! equilibrium density `|U'| / (2πN·sqrt(1 − U²))`.

use std::f64::consts::{PI, TAU};

use crate::arcsets::ArcSet;
use crate::error::{Error, Result};
use crate::roots;
use crate::trigpoly::{TrigPoly, TrigPolyJson};

/// Critical values within this distance of `±1` mark inner extremal points.
pub const TANGENCY_TOL: f64 = 1e-10;

/// Maximal interval on which `U` is monotone and runs once through `[−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Branch {
    pub lo: f64,
    pub hi: f64,
    pub component: usize,
    pub increasing: bool,
}

impl Branch {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone)]
pub struct TSet {
    u: TrigPoly,
    du: TrigPoly,
    order: usize,
    set: ArcSet,
    branches: Vec<Branch>,
    inner_extremals: Vec<Vec<f64>>,
    // branch endpoints that are inner extremal points, parallel to `branches`
    extremal_ends: Vec<(bool, bool)>,
}

impl TSet {
    /// Locates the critical points of `U`, checks that all critical values lie
    /// outside `(−1, 1)` and that there are `2N` monotone runs, and assembles
    /// the branches.
    pub fn build(u: &TrigPoly) -> Result<Self> {
        let u = u.trimmed();
        let order = u.degree();
        if order == 0 {
            return Err(Error::InvalidInput("U must be nonconstant".into()));
        }
        let du = u.derivative();
        let samples = (64 * order * order).max(256);

        // start the scan where U' is far from zero so no critical point sits on
        // the seam
        let start = (0..samples)
            .map(|i| TAU * i as f64 / samples as f64)
            .max_by(|a, b| du.eval(*a).abs().total_cmp(&du.eval(*b).abs()))
            .unwrap();
        let crit = roots::sign_change_roots(|t| du.eval(t), start, start + TAU, samples, 1e-15);
        let crit_values: Vec<(f64, f64)> = crit.iter().map(|&c| (c.rem_euclid(TAU), u.eval(c))).collect();
        let fail = |reason: String| Error::NotATSet { reason, critical_values: crit_values.clone() };

        if let Some(&(t, v)) = crit_values.iter().find(|(_, v)| v.abs() < 1.0 - TANGENCY_TOL) {
            return Err(fail(format!("critical value U({t:.6}) = {v:.6} lies inside (-1, 1)")));
        }
        let m = crit.len();
        if m != 2 * order {
            return Err(fail(format!("U has {m} monotone runs, a T-set of order {order} needs {}", 2 * order)));
        }

        let extremal: Vec<bool> = crit_values.iter().map(|(_, v)| (v.abs() - 1.0).abs() <= TANGENCY_TOL).collect();
        let mut raw = Vec::with_capacity(m);
        for i in 0..m {
            let (a, b) = (crit[i], if i + 1 == m { crit[0] + TAU } else { crit[i + 1] });
            let increasing = crit_values[i].1 < crit_values[(i + 1) % m].1;
            let f = |t: f64| u.eval(t);
            let lo_level = if increasing { -1.0 } else { 1.0 };
            let lo = if extremal[i] { a } else { roots::monotone_inverse(f, a, b, lo_level, increasing) };
            let hi = if extremal[(i + 1) % m] { b } else { roots::monotone_inverse(f, a, b, -lo_level, increasing) };
            raw.push((lo, hi, increasing, extremal[i], extremal[(i + 1) % m]));
        }

        let all_extremal = extremal.iter().all(|&x| x);
        let set = if all_extremal {
            let w = crit.iter().map(|c| c.rem_euclid(TAU)).fold(f64::INFINITY, f64::min);
            ArcSet::full_circle(w)
        } else {
            ArcSet::new(raw.iter().map(|r| (r.0, r.1)).collect())?
        };

        let mut branches = Vec::with_capacity(m);
        let mut ends = Vec::with_capacity(m);
        for &(lo, hi, increasing, el, eh) in &raw {
            let half = 0.5 * (hi - lo);
            let (component, mid) = set
                .locate(lo + half, 1e-9)
                .ok_or_else(|| fail("branch midpoint fell outside the assembled set".into()))?;
            let mut b = Branch { lo: mid - half, hi: mid + half, component, increasing };
            // snap to the canonical component ends
            let arc = set.arcs()[component];
            if (b.lo - arc.lo).abs() < 1e-9 {
                b.lo = arc.lo;
            }
            if (b.hi - arc.hi).abs() < 1e-9 {
                b.hi = arc.hi;
            }
            branches.push(b);
            ends.push((el, eh));
        }
        let mut order_idx: Vec<usize> = (0..m).collect();
        order_idx.sort_by(|&x, &y| branches[x].lo.total_cmp(&branches[y].lo));
        let branches: Vec<Branch> = order_idx.iter().map(|&i| branches[i]).collect();
        let extremal_ends: Vec<(bool, bool)> = order_idx.iter().map(|&i| ends[i]).collect();

        let mut inner_extremals = vec![Vec::new(); set.len()];
        for (b, &(el, _)) in branches.iter().zip(&extremal_ends) {
            if el {
                inner_extremals[b.component].push(b.lo);
            }
        }
        for list in &mut inner_extremals {
            list.sort_by(f64::total_cmp);
        }

        let t = Self { u, du, order, set, branches, inner_extremals, extremal_ends };
        t.validate().map_err(|reason| fail(reason))?;
        Ok(t)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        for (i, b) in self.branches.iter().enumerate() {
            for (end, level) in [(b.lo, if b.increasing { -1.0 } else { 1.0 }), (b.hi, if b.increasing { 1.0 } else { -1.0 })] {
                let v = self.u.eval(end);
                if (v - level).abs() > TANGENCY_TOL {
                    return Err(format!("branch {i} endpoint {end:.6} has U = {v:.12}, expected {level}"));
                }
            }
            let k = 32;
            for j in 1..k {
                let t = b.lo + b.len() * j as f64 / k as f64;
                let d = self.du.eval(t);
                if (d > 0.0) != b.increasing || d == 0.0 {
                    return Err(format!("U' changes sign inside branch {i} near t = {t:.6}"));
                }
            }
        }
        let gaps = ArcSet::full_circle(self.set.window_start()).difference(&self.set);
        for g in gaps.arcs() {
            let k = 64;
            for j in 1..k {
                let t = g.lo + g.len() * j as f64 / k as f64;
                if self.u.eval(t).abs() <= 1.0 + TANGENCY_TOL {
                    return Err(format!("|U| <= 1 at t = {t:.6} in a gap of E"));
                }
            }
        }
        Ok(())
    }

    /// `U(t) = (2cos t − 1 − cos β)/(1 − cos β)`, whose set is `[−β, β]`.
    pub fn single_arc(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < PI - 1e-9) {
            return Err(Error::InvalidInput(format!("beta = {beta} must lie in (0, π)")));
        }
        let c = beta.cos();
        let u = TrigPoly::new(vec![-(1.0 + c) / (1.0 - c), 2.0 / (1.0 - c)], vec![0.0])?;
        Self::build(&u)
    }

    pub fn from_json(j: &TrigPolyJson) -> Result<Self> {
        Self::build(&TrigPoly::from_json(j)?)
    }

    pub fn u(&self) -> &TrigPoly {
        &self.u
    }

    pub fn du(&self) -> &TrigPoly {
        &self.du
    }

    /// `N = deg U`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn set(&self) -> &ArcSet {
        &self.set
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn inner_extremals(&self) -> &[Vec<f64>] {
        &self.inner_extremals
    }

    /// Branch containing `t` together with the representative of `t` in the
    /// branch coordinates. At a shared endpoint the lower-index branch wins.
    pub fn branch_of(&self, t: f64, tol: f64) -> Option<(usize, f64)> {
        let (_, rep) = self.set.locate(t, tol)?;
        self.branches
            .iter()
            .position(|b| rep >= b.lo - tol && rep <= b.hi + tol)
            .map(|h| (h, rep))
    }

    /// The unique `t` in branch `h` with `U(t) = y`.
    pub fn branch_inverse(&self, h: usize, y: f64) -> Result<f64> {
        let b = self.branch(h)?;
        if !(y.abs() <= 1.0) {
            return Err(Error::InvalidInput(format!("level {y} outside [-1, 1]")));
        }
        Ok(roots::monotone_inverse(|t| self.u.eval(t), b.lo, b.hi, y, b.increasing))
    }

    fn branch(&self, h: usize) -> Result<Branch> {
        self.branches
            .get(h)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("branch index {h} out of range (2N = {})", self.branches.len())))
    }

    /// `|U'(t)| / (2πN·sqrt(1 − U(t)²))`, rejected where `|U(t)| ≥ 1 − 1e−14`.
    pub fn density_closed_form(&self, t: f64) -> Result<f64> {
        if self.set.locate(t, 1e-12).is_none() {
            return Err(Error::OutsideSet(t));
        }
        let y = self.u.eval(t);
        if y.abs() >= 1.0 - 1e-14 {
            // interior point where |U| = 1: the quotient has a finite limit
            if self.is_near_inner_extremal(t) {
                return self.density_stable(t);
            }
            return Err(Error::EndpointSingularity(t));
        }
        Ok(self.du.eval(t).abs() / (TAU * self.order as f64 * (1.0 - y * y).sqrt()))
    }

    fn is_near_inner_extremal(&self, t: f64) -> bool {
        let Some((_, rep)) = self.set.locate(t, 1e-12) else { return false };
        self.inner_extremals.iter().flatten().any(|&z| (z - rep).abs() < 1e-6)
    }

    /// The closed form evaluated without cancellation: near a point where
    /// `|U| = 1` the gap `1 − |U|` is rebuilt from the offset to the nearest
    /// branch endpoint. `t` must lie in `E`.
    pub fn density_stable(&self, t: f64) -> Result<f64> {
        let (h, rep) = self.branch_of(t, 1e-12).ok_or(Error::OutsideSet(t))?;
        let y = self.u.eval(rep);
        if 1.0 - y * y > 1e-6 {
            return Ok(self.du.eval(rep).abs() / (TAU * self.order as f64 * (1.0 - y * y).sqrt()));
        }
        let b = self.branches[h];
        let (anchor, delta) = if rep - b.lo <= b.hi - rep { (b.lo, rep - b.lo) } else { (b.hi, rep - b.hi) };
        Ok(self.density_from_anchor(anchor, delta))
    }

    /// Density at `anchor + delta`, where `anchor` is a branch endpoint
    /// (`|U(anchor)| = 1`) and `delta` is known to full relative precision.
    pub fn density_from_anchor(&self, anchor: f64, delta: f64) -> f64 {
        let nf = self.order as f64;
        let s = self.u.eval(anchor).signum();
        let slope_at_anchor = self.du.eval(anchor);
        let curvature = self.u.eval_second_derivative(anchor);
        let is_extremal = slope_at_anchor.abs() <= 1e-6 * curvature.abs().max(1.0);
        if delta == 0.0 || (is_extremal && delta.abs() < 1e-8) {
            if is_extremal {
                return curvature.abs().sqrt() / (TAU * nf);
            }
            return f64::INFINITY;
        }
        // the anchor is treated as an exact level crossing, so rounding in
        // U(anchor) cannot swamp the increment for tiny offsets
        let gap = (-s * self.u.increment(anchor, delta)).max(f64::MIN_POSITIVE);
        let one_minus_sq = gap * (2.0 - gap);
        self.du.eval(anchor + delta).abs() / (TAU * nf * one_minus_sq.sqrt())
    }

    /// Whether the endpoints of branch `h` are inner extremal points.
    pub fn extremal_ends(&self, h: usize) -> (bool, bool) {
        self.extremal_ends[h]
    }

    /// `|ω(t_h)·t_h'(t) / ω(t)|` with `t_h = U_h^{-1}(U(t))` and
    /// `t_h' = U'(t)/U'(t_h)`. Equal to 1 on a T-set.
    pub fn branch_jacobian_identity(&self, t: f64, h: usize) -> Result<f64> {
        self.branch(h)?;
        let (g, rep) = self.branch_of(t, 0.0).ok_or(Error::OutsideSet(t))?;
        let bg = self.branches[g];
        let distance = (rep - bg.lo).min(bg.hi - rep);
        if distance < 1e-8 {
            return Err(Error::NearBranchEndpoint { t, distance });
        }
        if g == h {
            return Ok(1.0);
        }
        let th = self.branch_inverse(h, self.u.eval(rep))?;
        let bh = self.branches[h];
        if (th - bh.lo).min(bh.hi - th) < 1e-8 {
            return Err(Error::NearBranchEndpoint { t, distance: (th - bh.lo).min(bh.hi - th) });
        }
        let jac = self.du.eval(rep) / self.du.eval(th);
        Ok((self.density_stable(th)? * jac / self.density_stable(rep)?).abs())
    }

    pub fn to_json(&self) -> TrigPolyJson {
        self.u.to_json()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_singular, QuadSpec};
    use std::f64::consts::FRAC_PI_2;

    fn fourarc() -> TSet {
        TSet::build(&TrigPoly::new(vec![-0.2 / 0.7, 0.0, 1.0 / 0.7], vec![0.0, 0.0]).unwrap()).unwrap()
    }

    #[test]
    fn cosine_structure() {
        let t = TSet::build(&TrigPoly::cos_k(4)).unwrap();
        assert!(t.set().is_full());
        assert_eq!(t.branches().len(), 8);
        assert_eq!(t.inner_extremals()[0].len(), 8);
        for (k, b) in t.branches().iter().enumerate() {
            assert!((b.lo - k as f64 * PI / 4.0).abs() < 1e-12);
            assert!((b.hi - (k + 1) as f64 * PI / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degree_one_arc() {
        let t = TSet::build(&TrigPoly::new(vec![-1.0, 2.0], vec![0.0]).unwrap()).unwrap();
        assert_eq!(t.set().len(), 1);
        let a = t.set().arcs()[0];
        assert!((a.lo + FRAC_PI_2).abs() < 1e-12 && (a.hi - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(t.branches().len(), 2);
        assert_eq!(t.inner_extremals()[0].len(), 1);
        assert!(t.inner_extremals()[0][0].abs() < 1e-12);
    }

    #[test]
    fn four_arc_set() {
        let t = fourarc();
        assert_eq!(t.order(), 2);
        assert_eq!(t.set().len(), 4);
        assert_eq!(t.branches().len(), 4);
        assert!(t.inner_extremals().iter().all(Vec::is_empty));
        for a in t.set().arcs() {
            for end in [a.lo, a.hi] {
                let c = (2.0 * end).cos();
                assert!((c + 0.5).abs() < 1e-12 || (c - 0.9).abs() < 1e-12, "cos 2t = {c}");
            }
        }
    }

    #[test]
    fn rejects_non_tsets() {
        let small = TrigPoly::new(vec![0.0, 0.5], vec![0.0]).unwrap();
        match TSet::build(&small) {
            Err(Error::NotATSet { critical_values, .. }) => assert_eq!(critical_values.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
        // critical values 1.3 and -0.7: the minimum sits inside (-1, 1)
        assert!(TSet::build(&TrigPoly::new(vec![0.3, 1.0], vec![0.0]).unwrap()).is_err());
        assert!(TSet::build(&TrigPoly::constant(2.0)).is_err());
    }

    #[test]
    fn single_arc_family() {
        let t = TSet::single_arc(FRAC_PI_2).unwrap();
        assert!((t.u().cos_coeffs()[0] + 1.0).abs() < 1e-15);
        assert!((t.u().cos_coeffs()[1] - 2.0).abs() < 1e-15);
        let t = TSet::single_arc(2.0 * PI / 3.0).unwrap();
        assert!((t.u().eval(2.0 * PI / 3.0) + 1.0).abs() < 1e-12);
        assert!(TSet::single_arc(PI).is_err());
        assert!(TSet::single_arc(0.0).is_err());
        for beta in [0.3, 1.0, 2.5, 3.0] {
            let a = TSet::single_arc(beta).unwrap().set().arcs()[0];
            assert!((a.lo + beta).abs() < 1e-10 && (a.hi - beta).abs() < 1e-10);
        }
    }

    #[test]
    fn branch_inverse_examples() {
        let c = TSet::build(&TrigPoly::cos_k(1)).unwrap();
        let h = c.branch_of(1.0, 0.0).unwrap().0;
        assert!((c.branch_inverse(h, 0.0).unwrap() - FRAC_PI_2).abs() < 1e-14);
        let b = c.branches()[h];
        assert!((c.branch_inverse(h, 1.0).unwrap() - b.lo).abs() < 1e-15);

        let t = TSet::single_arc(FRAC_PI_2).unwrap();
        let h = t.branch_of(0.5, 0.0).unwrap().0;
        let r = t.branch_inverse(h, 0.0).unwrap();
        assert!((r - PI / 3.0).abs() < 1e-13);
        assert!(t.u().eval(r).abs() <= 1e-12);
    }

    #[test]
    fn density_examples() {
        let t = TSet::build(&TrigPoly::cos_k(4)).unwrap();
        for t0 in [0.1, 1.0, 2.9, 5.5] {
            assert!((t.density_closed_form(t0).unwrap() - 1.0 / TAU).abs() < 1e-12);
        }
        let s = TSet::single_arc(FRAC_PI_2).unwrap();
        assert!((s.density_closed_form(0.0).unwrap() - 1.0 / (2f64.sqrt() * PI)).abs() < 1e-12);
        assert!((s.density_stable(0.0).unwrap() - 1.0 / (2f64.sqrt() * PI)).abs() < 1e-12);
        assert!(matches!(s.density_closed_form(2.0), Err(Error::OutsideSet(_))));
        assert!(matches!(s.density_closed_form(FRAC_PI_2), Err(Error::EndpointSingularity(_))));

        // symbolic form cos(t/2) / (2π sqrt(sin²(β/2) − sin²(t/2)))
        let beta: f64 = 2.0;
        let s = TSet::single_arc(beta).unwrap();
        for t0 in [-1.9f64, -0.7, 0.3, 1.5] {
            let exact = (t0 / 2.0).cos() / (TAU * ((beta / 2.0).sin().powi(2) - (t0 / 2.0).sin().powi(2)).sqrt());
            assert!((s.density_stable(t0).unwrap() - exact).abs() < 1e-12 * exact);
        }
        // inverse square root growth at the edge
        let ratios: Vec<f64> = [1e-4f64, 1e-6, 1e-8]
            .iter()
            .map(|&d| s.density_from_anchor(beta, -d) * d.sqrt())
            .collect();
        assert!((ratios[0] / ratios[2] - 1.0).abs() < 1e-3);
        assert!((ratios[1] / ratios[2] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn stable_density_agrees_near_extremal() {
        let t = TSet::single_arc(FRAC_PI_2).unwrap();
        let limit = t.density_from_anchor(0.0, 1e-12);
        assert!((limit - 1.0 / (2f64.sqrt() * PI)).abs() < 1e-10);
        assert!((t.density_from_anchor(0.0, 1e-5) - t.density_stable(1e-5).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn mass_is_one() {
        let spec = QuadSpec::default();
        for t in [TSet::single_arc(1.2).unwrap(), fourarc()] {
            let mut total = 0.0;
            for b in t.branches() {
                let (lo, hi) = (b.lo, b.hi);
                let v = integrate_singular(
                    |node| {
                        if node.d_lo <= node.d_hi {
                            t.density_from_anchor(lo, node.d_lo)
                        } else {
                            t.density_from_anchor(hi, -node.d_hi)
                        }
                    },
                    lo,
                    hi,
                    (true, true),
                    &spec,
                )
                .value;
                total += v;
            }
            assert!((total - 1.0).abs() < 1e-8, "{total}");
        }
    }

    #[test]
    fn jacobian_identity_examples() {
        let c2 = TSet::build(&TrigPoly::cos_k(2)).unwrap();
        for h in 0..4 {
            assert!((c2.branch_jacobian_identity(PI / 8.0, h).unwrap() - 1.0).abs() < 1e-10);
        }
        let own = c2.branch_of(PI / 8.0, 0.0).unwrap().0;
        assert_eq!(c2.branch_jacobian_identity(PI / 8.0, own).unwrap(), 1.0);

        let s = TSet::single_arc(FRAC_PI_2).unwrap();
        let mirror = s.branch_of(-PI / 6.0, 0.0).unwrap().0;
        assert!((s.branch_jacobian_identity(PI / 6.0, mirror).unwrap() - 1.0).abs() < 1e-10);
        assert!(matches!(
            s.branch_jacobian_identity(1e-10, mirror),
            Err(Error::NearBranchEndpoint { .. })
        ));
    }

    #[test]
    fn jacobian_identity_on_four_arcs() {
        let t = fourarc();
        for g in 0..4 {
            let b = t.branches()[g];
            for i in 1..200 {
                let s = b.lo + b.len() * i as f64 / 200.0;
                for h in 0..4 {
                    let q = t.branch_jacobian_identity(s, h).unwrap();
                    assert!((q - 1.0).abs() < 1e-9, "g={g} h={h} s={s} q={q}");
                }
            }
        }
    }
}
