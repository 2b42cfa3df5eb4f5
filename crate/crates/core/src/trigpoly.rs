//! Real trigonometric polynomials `a_0 + Σ (a_k cos kt + b_k sin kt)`.
//!
//! Evaluation runs Horner's scheme on `z = e^{it}` with complex coefficients
//! `a_k - i b_k`, which keeps the rounding error proportional to
//! `deg · Σ|c_k| · ε` at every angle. Products go through exact sampling and
//! discrete Fourier recovery.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::arcsets::ArcSet;
use crate::error::{Error, Result};
use crate::roots;

/// Anything that can be evaluated together with its first derivative, with a
/// nominal trigonometric degree used to size sampling grids.
pub trait TrigFunction: Sync {
    fn value(&self, t: f64) -> f64;
    fn derivative(&self, t: f64) -> f64;
    fn nominal_degree(&self) -> usize;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    cos: Vec<f64>,
    // sin[0] is always zero so both vectors share indexing.
    sin: Vec<f64>,
}

/// On-disk form `{"N": degree, "cos": [a_0..a_N], "sin": [b_1..b_N]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPolyJson {
    #[serde(rename = "N")]
    pub degree: usize,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Serialize for TrigPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl TrigPoly {
    /// `cos` holds `a_0..a_d`, `sin` holds `b_1..b_d`.
    pub fn new(cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        if cos.is_empty() {
            return Err(Error::InvalidInput("cosine coefficients must include a_0".into()));
        }
        if sin.len() + 1 != cos.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} sine coefficients for degree {}, got {}",
                cos.len() - 1,
                cos.len() - 1,
                sin.len()
            )));
        }
        if cos.iter().chain(sin.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        let mut s = Vec::with_capacity(cos.len());
        s.push(0.0);
        s.extend(sin);
        Ok(Self { cos, sin: s })
    }

    fn from_parts(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        debug_assert_eq!(cos.len(), sin.len());
        let mut p = Self { cos, sin };
        p.sin[0] = 0.0;
        p
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self { cos: vec![c], sin: vec![0.0] }
    }

    /// `cos(kt)`
    pub fn cos_k(k: usize) -> Self {
        let mut cos = vec![0.0; k + 1];
        cos[k] = 1.0;
        Self::from_parts(cos, vec![0.0; k + 1])
    }

    /// `sin(kt)`
    pub fn sin_k(k: usize) -> Self {
        let mut sin = vec![0.0; k + 1];
        if k > 0 {
            sin[k] = 1.0;
        }
        Self::from_parts(vec![0.0; k + 1], sin)
    }

    pub fn from_json(j: &TrigPolyJson) -> Result<Self> {
        if j.cos.len() != j.degree + 1 {
            return Err(Error::InvalidInput(format!(
                "N = {} requires {} cosine coefficients, got {}",
                j.degree,
                j.degree + 1,
                j.cos.len()
            )));
        }
        Self::new(j.cos.clone(), j.sin.clone())
    }

    pub fn to_json(&self) -> TrigPolyJson {
        TrigPolyJson {
            degree: self.degree(),
            cos: self.cos.clone(),
            sin: self.sin[1..].to_vec(),
        }
    }

    /// Declared degree (length of the coefficient vectors minus one).
    pub fn degree(&self) -> usize {
        self.cos.len() - 1
    }

    /// Index of the highest nonzero coefficient.
    pub fn effective_degree(&self) -> usize {
        (0..self.cos.len())
            .rev()
            .find(|&k| self.cos[k] != 0.0 || self.sin[k] != 0.0)
            .unwrap_or(0)
    }

    /// Drops trailing zero coefficients.
    pub fn trimmed(&self) -> Self {
        let d = self.effective_degree();
        Self::from_parts(self.cos[..=d].to_vec(), self.sin[..=d].to_vec())
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    /// `b_1..b_d`
    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin[1..]
    }

    pub fn is_zero(&self) -> bool {
        self.cos.iter().chain(self.sin.iter()).all(|&c| c == 0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        horner(&self.cos, &self.sin, t, |_| 1.0)
    }

    /// `P'(t)` without building the derivative polynomial.
    pub fn eval_derivative(&self, t: f64) -> f64 {
        // d/dt Re Σ c_k e^{ikt} = Re Σ (i k c_k) e^{ikt}; i(a - ib) = b + ia.
        let d = self.degree();
        if d == 0 {
            return 0.0;
        }
        let (s, c) = t.sin_cos();
        let (mut re, mut im) = (0.0, 0.0);
        for k in (1..=d).rev() {
            let kf = k as f64;
            let (cr, ci) = (kf * self.sin[k], kf * self.cos[k]);
            let nr = re * c - im * s + cr;
            let ni = re * s + im * c + ci;
            re = nr;
            im = ni;
        }
        // multiply by z once more for the k >= 1 offset
        re * c - im * s
    }

    /// `P''(t)`
    pub fn eval_second_derivative(&self, t: f64) -> f64 {
        horner(&self.cos, &self.sin, t, |k| -((k * k) as f64))
    }

    /// `P(base + delta) - P(base)` without cancellation for small `delta`.
    pub fn increment(&self, base: f64, delta: f64) -> f64 {
        // cos k(b+δ) - cos kb = -2 sin(kδ/2) sin(k(b+δ/2))
        // sin k(b+δ) - sin kb =  2 sin(kδ/2) cos(k(b+δ/2))
        let mid = base + 0.5 * delta;
        let mut acc = 0.0;
        for k in 1..=self.degree() {
            let kf = k as f64;
            let s = (0.5 * kf * delta).sin();
            let (sm, cm) = (kf * mid).sin_cos();
            acc += 2.0 * s * (self.sin[k] * cm - self.cos[k] * sm);
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        let d = self.degree();
        let mut cos = vec![0.0; d + 1];
        let mut sin = vec![0.0; d + 1];
        for k in 1..=d {
            let kf = k as f64;
            cos[k] = kf * self.sin[k];
            sin[k] = -kf * self.cos[k];
        }
        Self::from_parts(cos, sin)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_parts(
            self.cos.iter().map(|x| c * x).collect(),
            self.sin.iter().map(|x| c * x).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        let d = self.degree().max(other.degree());
        let mut cos = vec![0.0; d + 1];
        let mut sin = vec![0.0; d + 1];
        for k in 0..=d {
            cos[k] = self.cos.get(k).copied().unwrap_or(0.0) + sign * other.cos.get(k).copied().unwrap_or(0.0);
            sin[k] = self.sin.get(k).copied().unwrap_or(0.0) + sign * other.sin.get(k).copied().unwrap_or(0.0);
        }
        Self::from_parts(cos, sin)
    }

    /// Adds a constant to `a_0`.
    pub fn shift(&self, c: f64) -> Self {
        let mut p = self.clone();
        p.cos[0] += c;
        p
    }

    /// Values at the `2m+1` equispaced angles `2πj/(2m+1)`.
    pub fn sample(&self, m: usize) -> Vec<f64> {
        let len = 2 * m + 1;
        (0..len).map(|j| self.eval(2.0 * PI * j as f64 / len as f64)).collect()
    }

    /// Unique interpolant of degree `<= m` through samples at `2πj/(2m+1)`.
    pub fn from_samples(values: &[f64], m: usize) -> Result<Self> {
        let len = 2 * m + 1;
        if values.len() != len {
            return Err(Error::SampleCount { expected: len, got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("samples must be finite".into()));
        }
        let table: Vec<(f64, f64)> = (0..len)
            .map(|r| (2.0 * PI * r as f64 / len as f64).sin_cos())
            .collect();
        let mut cos = vec![0.0; m + 1];
        let mut sin = vec![0.0; m + 1];
        cos[0] = values.iter().sum::<f64>() / len as f64;
        for k in 1..=m {
            let (mut ac, mut as_) = (0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                let (s, c) = table[(j * k) % len];
                ac += v * c;
                as_ += v * s;
            }
            cos[k] = 2.0 * ac / len as f64;
            sin[k] = 2.0 * as_ / len as f64;
        }
        Ok(Self::from_parts(cos, sin))
    }

    /// Product by sampling at `2(deg P + deg Q) + 1` points and recovering
    /// coefficients.
    pub fn product(&self, other: &Self) -> Self {
        let d = self.degree() + other.degree();
        if d == 0 {
            return Self::constant(self.cos[0] * other.cos[0]);
        }
        let a = self.sample(d);
        let b = other.sample(d);
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Self::from_samples(&prod, d).expect("sample count matches by construction")
    }

    /// `T_k(U(t))` with `T_k` the Chebyshev polynomial of the first kind,
    /// built from the three-term recurrence in coefficient space.
    ///
    /// Coefficient magnitudes grow like `T_k(max |U|)` over the whole circle,
    /// so for large `k` and `max |U| > 1` evaluate with [`ChebComposed`]
    /// instead.
    pub fn cheb_compose(k: usize, u: &Self) -> Self {
        if k == 0 {
            return Self::constant(1.0);
        }
        let mut prev = Self::constant(1.0);
        let mut cur = u.clone();
        let two_u = u.scale(2.0);
        for _ in 1..k {
            let next = two_u.product(&cur).sub(&prev);
            prev = cur;
            cur = next;
        }
        cur
    }
}

fn horner(cos: &[f64], sin: &[f64], t: f64, weight: impl Fn(usize) -> f64) -> f64 {
    let d = cos.len() - 1;
    let (s, c) = t.sin_cos();
    let (mut re, mut im) = (0.0, 0.0);
    for k in (0..=d).rev() {
        let w = weight(k);
        let (cr, ci) = (w * cos[k], -w * sin[k]);
        let nr = re * c - im * s + cr;
        let ni = re * s + im * c + ci;
        re = nr;
        im = ni;
    }
    re
}

impl TrigFunction for TrigPoly {
    fn value(&self, t: f64) -> f64 {
        self.eval(t)
    }

    fn derivative(&self, t: f64) -> f64 {
        self.eval_derivative(t)
    }

    fn nominal_degree(&self) -> usize {
        self.degree()
    }
}

/// `T_k(U(t))` evaluated in value space: the Chebyshev recurrence runs on the
/// number `U(t)`, never on coefficients.
#[derive(Debug, Clone)]
pub struct ChebComposed {
    pub k: usize,
    pub u: TrigPoly,
}

impl ChebComposed {
    pub fn new(k: usize, u: TrigPoly) -> Self {
        Self { k, u }
    }
}

/// `(T_k(y), U_{k-1}(y))`, first and second kind.
pub fn chebyshev_pair(k: usize, y: f64) -> (f64, f64) {
    if k == 0 {
        return (1.0, 0.0);
    }
    let (mut t_prev, mut t_cur) = (1.0, y);
    let (mut u_prev, mut u_cur) = (0.0, 1.0);
    for _ in 1..k {
        let t_next = 2.0 * y * t_cur - t_prev;
        let u_next = 2.0 * y * u_cur - u_prev;
        t_prev = t_cur;
        t_cur = t_next;
        u_prev = u_cur;
        u_cur = u_next;
    }
    (t_cur, u_cur)
}

impl TrigFunction for ChebComposed {
    fn value(&self, t: f64) -> f64 {
        chebyshev_pair(self.k, self.u.eval(t)).0
    }

    fn derivative(&self, t: f64) -> f64 {
        let (_, second) = chebyshev_pair(self.k, self.u.eval(t));
        self.k as f64 * second * self.u.eval_derivative(t)
    }

    fn nominal_degree(&self) -> usize {
        self.k * self.u.degree()
    }
}

/// Maximum of `|P|` over `x`.
///
/// Each arc is oversampled at `8·deg + 16` points per half-turn of length;
/// every sampled local maximum of `P²` is polished by locating the sign change
/// of `P·P'` to `1e-12` in angle. Arc endpoints are always included.
pub fn sup_norm<P: TrigFunction + ?Sized>(p: &P, x: &ArcSet) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(x.arcs()
        .iter()
        .map(|arc| sup_on_interval(p, arc.lo, arc.hi).0)
        .fold(0.0, f64::max))
}

/// `(max |P|, argmax)` on `[lo, hi]`.
pub fn sup_on_interval<P: TrigFunction + ?Sized>(p: &P, lo: f64, hi: f64) -> (f64, f64) {
    let deg = p.nominal_degree();
    let per = 8 * deg + 16;
    let count = per * ((hi - lo) / PI).ceil().max(1.0) as usize;
    let h = (hi - lo) / count as f64;
    let ts: Vec<f64> = (0..=count)
        .map(|i| if i == count { hi } else { lo + h * i as f64 })
        .collect();
    let vals: Vec<f64> = ts.iter().map(|&t| p.value(t).abs()).collect();

    let mut best = (vals[0], ts[0]);
    if vals[count] > best.0 {
        best = (vals[count], ts[count]);
    }
    let slope = |t: f64| p.value(t) * p.derivative(t);
    for i in 1..count {
        if vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] {
            let mut cand = (vals[i], ts[i]);
            for (a, b) in [(ts[i - 1], ts[i]), (ts[i], ts[i + 1])] {
                let (ga, gb) = (slope(a), slope(b));
                if ga >= 0.0 && gb <= 0.0 && ga != gb {
                    let r = roots::brent(slope, a, b, 1e-12);
                    let v = p.value(r).abs();
                    if v > cand.0 {
                        cand = (v, r);
                    }
                }
            }
            if cand.0 > best.0 {
                best = cand;
            }
        }
    }
    best
}

/// `|a - b|^p - ||a|^p - |b|^p|`, nonnegative for `0 < p < 1`.
pub fn lipschitz_gap(a: f64, b: f64, p: f64) -> f64 {
    (a - b).abs().powf(p) - (a.abs().powf(p) - b.abs().powf(p)).abs()
}

/// `|a|^p + |b|^p - |a + b|^p`, nonnegative for `0 < p < 1`.
pub fn subadditivity_gap(a: f64, b: f64, p: f64) -> f64 {
    a.abs().powf(p) + b.abs().powf(p) - (a + b).abs().powf(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_poly(rng: &mut ChaCha8Rng, d: usize) -> TrigPoly {
        let cos: Vec<f64> = (0..=d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sin: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        TrigPoly::new(cos, sin).unwrap()
    }

    fn naive_eval(p: &TrigPoly, t: f64) -> f64 {
        let mut s = p.cos_coeffs()[0];
        for k in 1..=p.degree() {
            s += p.cos_coeffs()[k] * (k as f64 * t).cos() + p.sin_coeffs()[k - 1] * (k as f64 * t).sin();
        }
        s
    }

    /// Product-to-sum convolution, independent of the sampling route.
    fn convolution_product(p: &TrigPoly, q: &TrigPoly) -> TrigPoly {
        let (dp, dq) = (p.degree(), q.degree());
        let d = dp + dq;
        let mut cos = vec![0.0; d + 1];
        let mut sin = vec![0.0; d + 1];
        let a = |k: usize| p.cos_coeffs()[k];
        let b = |k: usize| if k == 0 { 0.0 } else { p.sin_coeffs()[k - 1] };
        let c = |k: usize| q.cos_coeffs()[k];
        let e = |k: usize| if k == 0 { 0.0 } else { q.sin_coeffs()[k - 1] };
        for j in 0..=dp {
            for k in 0..=dq {
                let (s, df) = (j + k, j.abs_diff(k));
                // cos j cos k = (cos(j+k) + cos(j-k))/2
                cos[s] += 0.5 * a(j) * c(k);
                cos[df] += 0.5 * a(j) * c(k);
                // sin j sin k = (cos(j-k) - cos(j+k))/2
                cos[df] += 0.5 * b(j) * e(k);
                cos[s] -= 0.5 * b(j) * e(k);
                // sin j cos k = (sin(j+k) + sin(j-k))/2
                sin[s] += 0.5 * b(j) * c(k);
                let sg = if j >= k { 1.0 } else { -1.0 };
                sin[df] += 0.5 * sg * b(j) * c(k);
                // cos j sin k = (sin(j+k) - sin(j-k))/2
                sin[s] += 0.5 * a(j) * e(k);
                sin[df] -= 0.5 * sg * a(j) * e(k);
            }
        }
        let mut sin_tail = sin[1..].to_vec();
        if d == 0 {
            sin_tail.clear();
        }
        TrigPoly::new(cos, sin_tail).unwrap()
    }

    #[test]
    fn eval_identity_cases() {
        assert!((TrigPoly::cos_k(1).eval(0.0) - 1.0).abs() < 1e-15);
        assert!((TrigPoly::sin_k(1).eval(PI / 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eval_matches_naive_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = random_poly(&mut rng, 12);
        for _ in 0..100 {
            let t = rng.gen_range(-10.0..10.0);
            let a = p.eval(t);
            let b = naive_eval(&p, t);
            let scale = p.cos_coeffs().iter().chain(p.sin_coeffs()).map(|c| c.abs()).sum::<f64>();
            assert!((a - b).abs() <= 1e-13 * scale.max(b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn derivative_cases() {
        let d = TrigPoly::cos_k(1).derivative();
        assert!((d.eval(PI / 2.0) + 1.0).abs() < 1e-15);
        assert!(TrigPoly::constant(3.0).derivative().is_zero());
        let d3 = TrigPoly::cos_k(3).derivative();
        assert!((d3.eval(PI / 6.0) + 3.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_poly(&mut rng, 9);
        let dp = p.derivative();
        for i in 0..20 {
            let t = 0.31 * i as f64;
            assert!((dp.eval(t) - p.eval_derivative(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn second_derivative_matches_twice_differentiated() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_poly(&mut rng, 6);
        let dd = p.derivative().derivative();
        for i in 0..20 {
            let t = 0.17 * i as f64 - 1.0;
            assert!((dd.eval(t) - p.eval_second_derivative(t)).abs() < 1e-11);
        }
    }

    #[test]
    fn increment_is_cancellation_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_poly(&mut rng, 5);
        let base = 0.7;
        let delta = 1e-9;
        let inc = p.increment(base, delta);
        let approx = p.eval_derivative(base) * delta;
        assert!((inc - approx).abs() < 1e-6 * approx.abs() + 1e-20);
        assert!((p.increment(base, 0.4) - (p.eval(1.1) - p.eval(0.7))).abs() < 1e-14);
    }

    #[test]
    fn product_cases() {
        let c = TrigPoly::cos_k(1);
        let sq = c.product(&c);
        assert!((sq.cos_coeffs()[0] - 0.5).abs() < 1e-15);
        assert!((sq.cos_coeffs()[2] - 0.5).abs() < 1e-15);
        assert!(sq.cos_coeffs()[1].abs() < 1e-15);
        assert!(sq.sin_coeffs().iter().all(|b| b.abs() < 1e-15));

        let z = c.product(&TrigPoly::zero());
        assert!(z.cos_coeffs().iter().chain(z.sin_coeffs()).all(|x| x.abs() < 1e-16));

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = random_poly(&mut rng, 5);
        let q = random_poly(&mut rng, 7);
        let pq = p.product(&q);
        assert_eq!(pq.degree(), 12);
        for _ in 0..50 {
            let t = rng.gen_range(0.0..2.0 * PI);
            assert!((pq.eval(t) - p.eval(t) * q.eval(t)).abs() < 1e-12);
        }
        let conv = convolution_product(&p, &q);
        for k in 0..=12 {
            assert!((conv.cos_coeffs()[k] - pq.cos_coeffs()[k]).abs() < 1e-12);
            if k > 0 {
                assert!((conv.sin_coeffs()[k - 1] - pq.sin_coeffs()[k - 1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn from_samples_cases() {
        let p = TrigPoly::cos_k(2);
        let r = TrigPoly::from_samples(&p.sample(2), 2).unwrap();
        assert!((r.cos_coeffs()[2] - 1.0).abs() < 1e-13);
        for k in [0, 1] {
            assert!(r.cos_coeffs()[k].abs() < 1e-13);
        }
        assert!(r.sin_coeffs().iter().all(|b| b.abs() < 1e-13));

        let c = TrigPoly::from_samples(&[2.5; 7], 3).unwrap();
        assert!((c.cos_coeffs()[0] - 2.5).abs() < 1e-15);

        assert!(matches!(
            TrigPoly::from_samples(&[1.0; 6], 3),
            Err(Error::SampleCount { expected: 7, got: 6 })
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let q = random_poly(&mut rng, 6);
        let back = TrigPoly::from_samples(&q.sample(6), 6).unwrap();
        for k in 0..=6 {
            assert!((back.cos_coeffs()[k] - q.cos_coeffs()[k]).abs() < 1e-12);
        }
        for k in 0..6 {
            assert!((back.sin_coeffs()[k] - q.sin_coeffs()[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn cheb_compose_cases() {
        let c2 = TrigPoly::cheb_compose(2, &TrigPoly::cos_k(1));
        let target = TrigPoly::cos_k(2);
        for k in 0..=2 {
            assert!((c2.cos_coeffs()[k] - target.cos_coeffs()[k]).abs() < 1e-14);
        }

        let u = TrigPoly::new(vec![-1.0, 2.0], vec![0.0]).unwrap();
        let one = TrigPoly::cheb_compose(1, &u);
        assert_eq!(one, u);

        let c5 = TrigPoly::cheb_compose(5, &u);
        assert_eq!(c5.degree(), 5);
        let composed = ChebComposed::new(5, u.clone());
        for i in 0..200 {
            let t = -PI + 2.0 * PI * i as f64 / 200.0;
            let y = u.eval(t);
            if y.abs() <= 1.0 {
                let oracle = (5.0 * y.acos()).cos();
                assert!((c5.eval(t) - oracle).abs() < 1e-11);
                assert!((composed.value(t) - oracle).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cheb_composed_derivative_matches_coefficient_form() {
        let u = TrigPoly::new(vec![-1.0, 2.0], vec![0.0]).unwrap();
        let c5 = TrigPoly::cheb_compose(5, &u);
        let composed = ChebComposed::new(5, u);
        for i in 0..50 {
            let t = -1.5 + 0.06 * i as f64;
            assert!((c5.eval_derivative(t) - composed.derivative(t)).abs() < 1e-9);
        }
    }

    #[test]
    fn sup_norm_cases() {
        let full = ArcSet::full_circle(0.0);
        assert!((sup_norm(&TrigPoly::cos_k(3), &full).unwrap() - 1.0).abs() < 1e-12);

        let x = ArcSet::new(vec![(PI / 6.0, PI / 3.0)]).unwrap();
        let s = sup_norm(&TrigPoly::sin_k(1), &x).unwrap();
        assert!((s - 3f64.sqrt() / 2.0).abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = random_poly(&mut rng, 10);
        let two = ArcSet::new(vec![(0.3, 1.9), (2.5, 4.4)]).unwrap();
        let fast = sup_norm(&p, &two).unwrap();
        let mut brute: f64 = 0.0;
        let total = 1_000_000;
        for arc in two.arcs() {
            let per = total / 2;
            for i in 0..=per {
                let t = arc.lo + (arc.hi - arc.lo) * i as f64 / per as f64;
                brute = brute.max(p.eval(t).abs());
            }
        }
        assert!(fast >= brute - 1e-12);
        assert!((fast - brute).abs() <= 1e-9 * brute, "{fast} vs {brute}");
    }

    #[test]
    fn sup_norm_rejects_empty() {
        assert!(matches!(sup_norm(&TrigPoly::cos_k(1), &ArcSet::empty()), Err(Error::EmptySet)));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let p = TrigPoly::new(vec![0.5, 1.0, -2.0], vec![0.25, 0.0]).unwrap();
        let j = p.to_json();
        assert_eq!(j.degree, 2);
        assert_eq!(TrigPoly::from_json(&j).unwrap(), p);
        let bad = TrigPolyJson { degree: 3, cos: vec![1.0], sin: vec![] };
        assert!(TrigPoly::from_json(&bad).is_err());
        assert!(TrigPoly::new(vec![f64::NAN], vec![]).is_err());
    }

    fn coeffs(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-2.0f64..2.0, len)
    }

    proptest! {
        #[test]
        fn product_rule_holds(a in coeffs(5), b in coeffs(4), c in coeffs(4), d in coeffs(3), t in -4.0f64..4.0) {
            let p = TrigPoly::new(a, b).unwrap();
            let q = TrigPoly::new(c, d).unwrap();
            let lhs = p.product(&q).derivative().eval(t);
            let rhs = p.derivative().product(&q).eval(t) + p.product(&q.derivative()).eval(t);
            prop_assert!((lhs - rhs).abs() < 1e-11);
        }

        #[test]
        fn sampling_round_trip(a in coeffs(6), b in coeffs(5), extra in 0usize..4) {
            let p = TrigPoly::new(a, b).unwrap();
            let m = p.degree() + extra;
            let back = TrigPoly::from_samples(&p.sample(m), m).unwrap();
            for k in 0..=p.degree() {
                prop_assert!((back.cos_coeffs()[k] - p.cos_coeffs()[k]).abs() < 1e-12);
            }
            for k in 0..p.degree() {
                prop_assert!((back.sin_coeffs()[k] - p.sin_coeffs()[k]).abs() < 1e-12);
            }
            for k in p.degree() + 1..=m {
                prop_assert!(back.cos_coeffs()[k].abs() < 1e-12);
            }
        }

        #[test]
        fn sup_norm_is_monotone(a in coeffs(5), b in coeffs(4), lo in 0.0f64..2.0, w in 0.2f64..2.0, inner in 0.05f64..0.45) {
            let p = TrigPoly::new(a, b).unwrap();
            let big = ArcSet::new(vec![(lo, lo + w)]).unwrap();
            let small = ArcSet::new(vec![(lo + inner * w, lo + (1.0 - inner) * w)]).unwrap();
            prop_assert!(sup_norm(&p, &small).unwrap() <= sup_norm(&p, &big).unwrap() + 1e-12);
        }

        #[test]
        fn scalar_power_inequalities(a in -50.0f64..50.0, b in -50.0f64..50.0, p in 0.01f64..0.99) {
            prop_assert!(lipschitz_gap(a, b, p) >= -1e-12);
            prop_assert!(subadditivity_gap(a, b, p) >= -1e-12);
        }
    }
}
