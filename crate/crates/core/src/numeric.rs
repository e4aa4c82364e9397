//! Small numerical kernels shared by the isotherm, scheme and Riemann modules:
//! adaptive Simpson quadrature, bracketed root refinement and cubic Hermite
//! tables on uniform grids.

use crate::error::QuadratureError;

/// Absolute tolerance used for every table-building quadrature.
pub const QUAD_TOL: f64 = 1e-10;
/// Recursion limit for [`adaptive_simpson`].
pub const QUAD_MAX_DEPTH: u32 = 40;

struct Panel {
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` with Richardson correction.
///
/// Returns an error carrying the accumulated error estimate when some panel hits
/// `max_depth` before meeting its share of `tol`.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0;
    let mut unresolved = 0.0;
    let value = simpson_panel(&f, Panel { a, m, b, fa, fm, fb, whole }, tol, max_depth, &mut unresolved);
    if !value.is_finite() {
        return Err(QuadratureError { achieved: f64::INFINITY, requested: tol });
    }
    if unresolved > tol {
        return Err(QuadratureError { achieved: unresolved, requested: tol });
    }
    Ok(value)
}

fn simpson_panel<F>(f: &F, p: Panel, tol: f64, depth: u32, unresolved: &mut f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let Panel { a, m, b, fa, fm, fb, whole } = p;
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) * (fa + 4.0 * flm + fm) / 6.0;
    let right = (b - m) * (fm + 4.0 * frm + fb) / 6.0;
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || depth == 0 || m <= a || b <= m {
        if depth == 0 && delta.abs() > 15.0 * tol {
            *unresolved += delta.abs() / 15.0;
        }
        return left + right + delta / 15.0;
    }
    simpson_panel(f, Panel { a, m: lm, b: m, fa, fm: flm, fb: fm, whole: left }, 0.5 * tol, depth - 1, unresolved)
        + simpson_panel(
            f,
            Panel { a: m, m: rm, b, fa: fm, fm: frm, fb, whole: right },
            0.5 * tol,
            depth - 1,
            unresolved,
        )
}

/// Bisection on a sign-changing bracket. Returns `None` when `f(lo)` and `f(hi)`
/// have the same strict sign.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Some(mid);
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Some(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Safeguarded secant iteration on a bracket `[lo, hi]` (Illinois variant of
/// regula falsi). Falls back to plain bisection when the bracket is invalid.
pub fn secant_bracketed<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 || hi - lo <= tol {
            return Some(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        if (hi - lo).abs() <= tol {
            return Some(0.5 * (lo + hi));
        }
    }
    Some(0.5 * (lo + hi))
}

/// Piecewise cubic Hermite interpolant on a uniform grid, built from nodal values
/// and exact nodal derivatives.
///
/// Nodal slopes are limited per interval (Fritsch–Carlson) so the interpolant
/// stays monotone wherever the nodal data is.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    x0: f64,
    step: f64,
    values: Vec<f64>,
    // per-interval (left slope, right slope) after limiting
    slopes: Vec<(f64, f64)>,
}

impl HermiteTable {
    pub fn new(x0: f64, x1: f64, values: Vec<f64>, derivatives: &[f64]) -> Self {
        let n = values.len();
        assert!(n >= 2 && derivatives.len() == n && x1 > x0);
        let step = (x1 - x0) / (n - 1) as f64;
        let slopes = (0..n - 1)
            .map(|k| {
                let secant = (values[k + 1] - values[k]) / step;
                let (mut dl, mut dr) = (derivatives[k], derivatives[k + 1]);
                if secant == 0.0 {
                    return (0.0, 0.0);
                }
                if dl * secant < 0.0 {
                    dl = 0.0;
                }
                if dr * secant < 0.0 {
                    dr = 0.0;
                }
                let (alpha, beta) = (dl / secant, dr / secant);
                let r2 = alpha * alpha + beta * beta;
                if r2 > 9.0 {
                    let tau = 3.0 / r2.sqrt();
                    dl = tau * alpha * secant;
                    dr = tau * beta * secant;
                }
                (dl, dr)
            })
            .collect();
        Self { x0, step, values, slopes }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x0, self.x0 + self.step * (self.values.len() - 1) as f64)
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let last = self.values.len() - 2;
        let s = (x - self.x0) / self.step;
        let k = if s <= 0.0 { 0 } else { (s.floor() as usize).min(last) };
        (k, s - k as f64)
    }

    /// Interpolated value; clamps to the end intervals outside the domain.
    pub fn eval(&self, x: f64) -> f64 {
        let (k, t) = self.locate(x);
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (d0, d1) = self.slopes[k];
        let h = self.step;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }

    /// Derivative of the interpolant.
    pub fn derivative(&self, x: f64) -> f64 {
        let (k, t) = self.locate(x);
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (d0, d1) = self.slopes[k];
        let h = self.step;
        let t2 = t * t;
        let dh00 = 6.0 * t2 - 6.0 * t;
        let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
        let dh01 = -6.0 * t2 + 6.0 * t;
        let dh11 = 3.0 * t2 - 2.0 * t;
        (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
    }
}

/// Builds a [`HermiteTable`] for the antiderivative `F(x) = ∫_{x0}^{x} f`, with
/// `nodes` uniform nodes; each sub-interval is integrated independently.
pub fn antiderivative_table<F>(f: F, x0: f64, x1: f64, nodes: usize, tol: f64) -> Result<HermiteTable, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    let step = (x1 - x0) / (nodes - 1) as f64;
    let mut values = Vec::with_capacity(nodes);
    let mut derivs = Vec::with_capacity(nodes);
    let per_panel = tol / (nodes as f64);
    let mut acc = 0.0;
    values.push(0.0);
    derivs.push(f(x0));
    for k in 1..nodes {
        let a = x0 + step * (k - 1) as f64;
        let b = if k == nodes - 1 { x1 } else { x0 + step * k as f64 };
        acc += adaptive_simpson(&f, a, b, per_panel, QUAD_MAX_DEPTH)?;
        values.push(acc);
        derivs.push(f(b));
    }
    Ok(HermiteTable::new(x0, x1, values, &derivs))
}
