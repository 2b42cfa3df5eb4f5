//! Scalar root bracketing and polishing shared by the polynomial, T-set and
//! quadrature code.

/// Brent's method on a bracket with `f(a)` and `f(b)` of opposite sign (or one
/// of them zero). Returns the root to within `xtol`.
pub fn brent<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    debug_assert!(fa.signum() != fb.signum(), "brent: root not bracketed");

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    b
}

/// All sign changes of `f` on `[lo, hi]` detected on a uniform grid of
/// `samples` intervals, each polished with Brent's method.
///
/// Exact zeros at grid nodes are reported once. Double roots without a sign
/// change are not found.
pub fn sign_change_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, samples: usize, xtol: f64) -> Vec<f64> {
    let samples = samples.max(1);
    let h = (hi - lo) / samples as f64;
    let mut roots = Vec::new();
    let mut t_prev = lo;
    let mut f_prev = f(lo);
    if f_prev == 0.0 {
        roots.push(lo);
    }
    for i in 1..=samples {
        let t = if i == samples { hi } else { lo + h * i as f64 };
        let ft = f(t);
        if ft == 0.0 {
            roots.push(t);
        } else if f_prev != 0.0 && ft.signum() != f_prev.signum() {
            roots.push(brent(&f, t_prev, t, xtol));
        }
        t_prev = t;
        f_prev = ft;
    }
    roots
}

/// Bisection on a monotone function to hit the level `y`. `increasing` gives
/// the direction of monotonicity on `[lo, hi]`.
pub fn monotone_inverse<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, y: f64, increasing: bool) -> f64 {
    let g = |t: f64| if increasing { f(t) - y } else { y - f(t) };
    let glo = g(lo);
    let ghi = g(hi);
    if glo >= 0.0 {
        return lo;
    }
    if ghi <= 0.0 {
        return hi;
    }
    brent(g, lo, hi, 1e-15 * (1.0 + lo.abs().max(hi.abs())))
}
