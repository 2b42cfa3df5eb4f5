//! Globally adaptive Gauss–Kronrod (7/15) quadrature with optional `t = a ± u²`
//! substitution at endpoints carrying inverse-square-root or power-type
//! singularities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadSpec {
    pub rel_tol: f64,
    /// Absolute floor for integrals that vanish.
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub endpoint_substitution: bool,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { rel_tol: 1e-9, abs_tol: 1e-15, max_subdivisions: 1 << 14, endpoint_substitution: true }
    }
}

/// Evaluation point handed to integrands. `d_lo` and `d_hi` are the distances
/// to the ends of the original interval, exact where a substitution was used.
#[derive(Debug, Clone, Copy)]
pub struct QuadNode {
    pub t: f64,
    pub d_lo: f64,
    pub d_hi: f64,
    /// Index of the segment the node belongs to.
    pub seg: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    /// Twice the summed Gauss–Kronrod error estimates.
    pub error: f64,
    pub converged: bool,
    pub subdivisions: usize,
}

/// One integration interval with its singular-endpoint flags.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub sing_lo: bool,
    pub sing_hi: bool,
}

impl Segment {
    pub fn new(lo: f64, hi: f64, sing_lo: bool, sing_hi: bool) -> Self {
        Self { lo, hi, sing_lo, sing_hi }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
enum Map {
    // t = x
    Plain { lo: f64, hi: f64, seg: usize },
    // t = lo + x², x ≥ 0
    FromLo { lo: f64, hi: f64, seg: usize },
    // t = hi − x², x ≥ 0
    FromHi { lo: f64, hi: f64, seg: usize },
}

impl Map {
    #[inline]
    fn node(&self, x: f64) -> (QuadNode, f64) {
        match *self {
            Map::Plain { lo, hi, seg } => (QuadNode { t: x, d_lo: x - lo, d_hi: hi - x, seg }, 1.0),
            Map::FromLo { lo, hi, seg } => {
                let d = x * x;
                (QuadNode { t: lo + d, d_lo: d, d_hi: (hi - lo) - d, seg }, 2.0 * x)
            }
            Map::FromHi { lo, hi, seg } => {
                let d = x * x;
                (QuadNode { t: hi - d, d_lo: (hi - lo) - d, d_hi: d, seg }, 2.0 * x)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    map: Map,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(QuadNode) -> f64>(f: &F, map: Map, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let eval = |x: f64| {
        let (node, jac) = map.node(x);
        let v = f(node) * jac;
        if v.is_finite() { v } else { 0.0 }
    };
    let fc = eval(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (eval(c - dx), eval(c + dx));
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let (resk, resabs, resasc) = (resk * h.abs(), resabs * h.abs(), resasc * h.abs());
    let mut err = ((resk - resg * h).abs()).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Piece { map, a, b, value: resk, error: err }
}

fn initial_pieces<F: Fn(QuadNode) -> f64>(f: &F, index: usize, seg: &Segment, spec: &QuadSpec, out: &mut Vec<Piece>) {
    let (lo, hi, seg_i) = (seg.lo, seg.hi, index);
    if hi <= lo {
        return;
    }
    let sub = spec.endpoint_substitution;
    match (seg.sing_lo && sub, seg.sing_hi && sub) {
        (false, false) => out.push(kronrod(f, Map::Plain { lo, hi, seg: seg_i }, lo, hi)),
        (true, false) => out.push(kronrod(f, Map::FromLo { lo, hi, seg: seg_i }, 0.0, (hi - lo).sqrt())),
        (false, true) => out.push(kronrod(f, Map::FromHi { lo, hi, seg: seg_i }, 0.0, (hi - lo).sqrt())),
        (true, true) => {
            let half = (0.5 * (hi - lo)).sqrt();
            out.push(kronrod(f, Map::FromLo { lo, hi, seg: seg_i }, 0.0, half));
            out.push(kronrod(f, Map::FromHi { lo, hi, seg: seg_i }, 0.0, half));
        }
    }
}

/// Integrates over the union of `segments`, refining the piece with the
/// largest error estimate until the summed estimate drops below
/// `max(rel_tol·|value|, abs_tol)` or the subdivision budget is exhausted.
pub fn integrate_segments<F: Fn(QuadNode) -> f64>(f: F, segments: &[Segment], spec: &QuadSpec) -> QuadResult {
    let mut init = Vec::new();
    for (i, s) in segments.iter().enumerate() {
        initial_pieces(&f, i, s, spec, &mut init);
    }
    let mut heap: BinaryHeap<Piece> = init.into_iter().collect();
    let mut subdivisions = 0;
    let (mut value, mut error) = totals(&heap);
    loop {
        let target = (spec.rel_tol * value.abs()).max(spec.abs_tol);
        if error <= target || heap.is_empty() {
            // re-sum to shed drift from the running totals
            (value, error) = totals(&heap);
            if error <= (spec.rel_tol * value.abs()).max(spec.abs_tol) || heap.is_empty() {
                return QuadResult { value, error: 2.0 * error, converged: true, subdivisions };
            }
        }
        if subdivisions >= spec.max_subdivisions {
            let (value, error) = totals(&heap);
            return QuadResult { value, error: 2.0 * error, converged: false, subdivisions };
        }
        let worst = heap.pop().unwrap();
        subdivisions += 1;
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // exhausted at machine precision: accept the piece as is
            error -= worst.error;
            heap.push(Piece { error: 0.0, ..worst });
            continue;
        }
        let left = kronrod(&f, worst.map, worst.a, m);
        let right = kronrod(&f, worst.map, m, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
}

fn totals(heap: &BinaryHeap<Piece>) -> (f64, f64) {
    heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
}

/// Single interval `[lo, hi]` with singular endpoints flagged by `singular`.
pub fn integrate_singular<F: Fn(QuadNode) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    singular: (bool, bool),
    spec: &QuadSpec,
) -> QuadResult {
    integrate_segments(f, &[Segment::new(lo, hi, singular.0, singular.1)], spec)
}

/// Plain integrand of `t` on `[lo, hi]` without singular endpoints.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, spec: &QuadSpec) -> QuadResult {
    integrate_singular(|n| f(n.t), lo, hi, (false, false), spec)
}
