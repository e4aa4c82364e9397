use serde::Serialize;

use crate::isotherm::DerivedFunctions;
use crate::numeric::secant_bracketed;

/// Default number of uniform samples for [`convex_envelope`].
pub const ENVELOPE_SAMPLES: usize = 8192;
/// Nonadjacent hull edges this short, lying on `f`, are sampling noise.
const NOISE_SPAN: usize = 16;
const TANGENCY_TOL: f64 = 1e-13;

/// A flux with two derivatives.
pub trait ScalarFlux {
    fn f(&self, c: f64) -> f64;
    fn df(&self, c: f64) -> f64;
    fn d2f(&self, c: f64) -> f64;
}

impl ScalarFlux for DerivedFunctions {
    fn f(&self, c: f64) -> f64 {
        DerivedFunctions::f(self, c)
    }
    fn df(&self, c: f64) -> f64 {
        DerivedFunctions::df(self, c)
    }
    fn d2f(&self, c: f64) -> f64 {
        DerivedFunctions::d2f(self, c)
    }
}

/// Closure-backed flux, mainly for tests.
pub struct FnFlux<F, D, D2>(pub F, pub D, pub D2);

impl<F, D, D2> ScalarFlux for FnFlux<F, D, D2>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
    D2: Fn(f64) -> f64,
{
    fn f(&self, c: f64) -> f64 {
        (self.0)(c)
    }
    fn df(&self, c: f64) -> f64 {
        (self.1)(c)
    }
    fn d2f(&self, c: f64) -> f64 {
        (self.2)(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeSide {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    /// The envelope equals `f`.
    Coincide,
    /// The envelope is the affine chord between the endpoints.
    Chord,
}

/// One piece of the envelope, `c_start < c_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeSegment {
    pub c_start: f64,
    pub c_end: f64,
    pub kind: SegmentKind,
    /// For chords, `max |f − chord|` over the sampled span.
    pub deviation: f64,
}

impl EnvelopeSegment {
    pub fn slope<F: ScalarFlux + ?Sized>(&self, flux: &F) -> f64 {
        (flux.f(self.c_end) - flux.f(self.c_start)) / (self.c_end - self.c_start)
    }
}

/// Classification tolerance `1e-9 (1 + max |f|)` over `[lo, hi]`.
pub fn envelope_tolerance<F: ScalarFlux + ?Sized>(flux: &F, lo: f64, hi: f64) -> f64 {
    let n = 256;
    let fmax = (0..=n).map(|k| flux.f(lo + (hi - lo) * k as f64 / n as f64).abs()).fold(0.0, f64::max);
    1e-9 * (1.0 + fmax)
}

/// Lower (or upper) convex envelope of `f` on `[min(a, b), max(a, b)]` from
/// `samples` uniform points, by monotone chain. Chord/coincide junctions are
/// polished to tangency.
pub fn convex_envelope<F: ScalarFlux + ?Sized>(
    flux: &F,
    a: f64,
    b: f64,
    side: EnvelopeSide,
    samples: usize,
) -> Vec<EnvelopeSegment> {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if lo == hi {
        return Vec::new();
    }
    assert!(samples >= 3, "envelope needs at least 3 samples");
    let sign = match side {
        EnvelopeSide::Lower => 1.0,
        EnvelopeSide::Upper => -1.0,
    };
    let step = (hi - lo) / (samples - 1) as f64;
    let xs: Vec<f64> = (0..samples).map(|k| if k == samples - 1 { hi } else { lo + step * k as f64 }).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| sign * flux.f(x)).collect();

    let mut hull: Vec<usize> = Vec::with_capacity(samples);
    for k in 0..samples {
        while hull.len() >= 2 {
            let (i, j) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let (dx1, dy1) = (xs[j] - xs[i], ys[j] - ys[i]);
            let (dx2, dy2) = (xs[k] - xs[i], ys[k] - ys[i]);
            let cross = dx1 * dy2 - dy1 * dx2;
            // absolute rounding of the sampled coordinates, propagated through the products
            let ey = 16.0 * f64::EPSILON * ys[i].abs().max(ys[j].abs()).max(ys[k].abs());
            let ex = 16.0 * f64::EPSILON * xs[i].abs().max(xs[k].abs());
            let noise = ey * (dx1.abs() + dx2.abs()) + ex * (dy1.abs() + dy2.abs());
            if cross <= noise {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }

    let eps_env = envelope_tolerance(flux, lo, hi);
    let mut raw: Vec<(usize, usize, SegmentKind, f64)> = Vec::new();
    for w in hull.windows(2) {
        let (i, j) = (w[0], w[1]);
        if j == i + 1 {
            push_coincide(&mut raw, i, j);
            continue;
        }
        let slope = (ys[j] - ys[i]) / (xs[j] - xs[i]);
        let dev = (i..=j).map(|k| (ys[k] - ys[i] - slope * (xs[k] - xs[i])).abs()).fold(0.0, f64::max);
        if dev <= eps_env && j - i <= NOISE_SPAN {
            push_coincide(&mut raw, i, j);
        } else {
            raw.push((i, j, SegmentKind::Chord, dev));
        }
    }

    let mut segments: Vec<EnvelopeSegment> = raw
        .iter()
        .map(|&(i, j, kind, dev)| EnvelopeSegment { c_start: xs[i], c_end: xs[j], kind, deviation: dev })
        .collect();
    polish_tangencies(flux, &mut segments, lo, hi, step);
    segments
}

fn push_coincide(raw: &mut Vec<(usize, usize, SegmentKind, f64)>, i: usize, j: usize) {
    if let Some(last) = raw.last_mut() {
        if last.2 == SegmentKind::Coincide && last.1 == i {
            last.1 = j;
            return;
        }
    }
    raw.push((i, j, SegmentKind::Coincide, 0.0));
}

fn polish_tangencies<F: ScalarFlux + ?Sized>(flux: &F, segs: &mut Vec<EnvelopeSegment>, lo: f64, hi: f64, step: f64) {
    for k in 0..segs.len() {
        if segs[k].kind != SegmentKind::Chord {
            continue;
        }
        let (p0, q0) = (segs[k].c_start, segs[k].c_end);
        let free_p = p0 > lo && k > 0 && segs[k - 1].kind == SegmentKind::Coincide;
        let free_q = q0 < hi && k + 1 < segs.len() && segs[k + 1].kind == SegmentKind::Coincide;
        let bracket = |x: f64| ((x - 3.0 * step).max(lo), (x + 3.0 * step).min(hi));
        let (p, q) = match (free_p, free_q) {
            (false, false) => (p0, q0),
            (false, true) => {
                let tangency = |q: f64| flux.f(q) - flux.f(p0) - flux.df(q) * (q - p0);
                let (a, b) = bracket(q0);
                (p0, secant_bracketed(tangency, a.max(p0 + step), b, TANGENCY_TOL).unwrap_or(q0))
            }
            (true, false) => {
                let tangency = |p: f64| flux.f(q0) - flux.f(p) - flux.df(p) * (q0 - p);
                let (a, b) = bracket(p0);
                (secant_bracketed(tangency, a, b.min(q0 - step), TANGENCY_TOL).unwrap_or(p0), q0)
            }
            (true, true) => bitangent(flux, p0, q0, step),
        };
        segs[k].c_start = p;
        segs[k].c_end = q;
        if k > 0 {
            segs[k - 1].c_end = p;
        }
        if k + 1 < segs.len() {
            segs[k + 1].c_start = q;
        }
    }
    segs.retain(|s| s.c_end > s.c_start);
}

// Newton on f′(p) = f′(q) = chord slope, decoupled per endpoint.
fn bitangent<F: ScalarFlux + ?Sized>(flux: &F, p0: f64, q0: f64, step: f64) -> (f64, f64) {
    let (mut p, mut q) = (p0, q0);
    for _ in 0..50 {
        let s = (flux.f(q) - flux.f(p)) / (q - p);
        let (dp, dq) = ((flux.df(p) - s) / flux.d2f(p), (flux.df(q) - s) / flux.d2f(q));
        if !dp.is_finite() || !dq.is_finite() {
            return (p0, q0);
        }
        p -= dp;
        q -= dq;
        if (p - p0).abs() > 4.0 * step || (q - q0).abs() > 4.0 * step {
            return (p0, q0);
        }
        if dp.abs() < TANGENCY_TOL && dq.abs() < TANGENCY_TOL {
            break;
        }
    }
    (p, q)
}

/// Liu's chord condition for a discontinuity joining `c_minus` to `c_plus`:
/// the chord slope does not exceed the slope from `c_minus` to any
/// intermediate state (2048 samples, tolerance 1e-10).
pub fn liu_admissible<F: Fn(f64) -> f64>(c_minus: f64, c_plus: f64, f: F) -> bool {
    if c_minus == c_plus {
        return true;
    }
    let f_minus = f(c_minus);
    let chord = (f(c_plus) - f_minus) / (c_plus - c_minus);
    let n = 2048;
    (1..n).all(|k| {
        let c = c_minus + (c_plus - c_minus) * k as f64 / n as f64;
        chord <= (f(c) - f_minus) / (c - c_minus) + 1e-10
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type Plain = fn(f64) -> f64;

    fn square() -> FnFlux<Plain, Plain, Plain> {
        FnFlux(|c| c * c, |c| 2.0 * c, |_| 2.0)
    }

    #[test]
    fn convex_flux_lower_envelope_is_one_coincide() {
        let segs = convex_envelope(&square(), 0.1, 0.9, EnvelopeSide::Lower, ENVELOPE_SAMPLES);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].kind, SegmentKind::Coincide);
        assert_eq!((segs[0].c_start, segs[0].c_end), (0.1, 0.9));
    }

    #[test]
    fn convex_flux_upper_envelope_is_one_chord() {
        let segs = convex_envelope(&square(), 0.9, 0.1, EnvelopeSide::Upper, ENVELOPE_SAMPLES);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].kind, SegmentKind::Chord);
        assert!((segs[0].deviation - 0.16).abs() < 1e-6);
    }

    #[test]
    fn affine_flux_is_one_flat_chord() {
        let flux = FnFlux(|c: f64| 3.0 * c, |_| 3.0, |_| 0.0);
        for side in [EnvelopeSide::Lower, EnvelopeSide::Upper] {
            let segs = convex_envelope(&flux, 0.2, 0.7, side, ENVELOPE_SAMPLES);
            assert_eq!(segs.len(), 1);
            assert_eq!(segs[0].kind, SegmentKind::Chord);
            assert!(segs[0].deviation < 1e-12);
        }
    }

    #[test]
    fn cubic_bitangent_and_tangency() {
        // f = c³ − c on [-1, 1]: the lower envelope is a chord from -1 tangent at 1/2
        let flux = FnFlux(|c: f64| c * c * c - c, |c| 3.0 * c * c - 1.0, |c| 6.0 * c);
        let segs = convex_envelope(&flux, -1.0, 1.0, EnvelopeSide::Lower, ENVELOPE_SAMPLES);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].kind, SegmentKind::Chord);
        assert!((segs[0].c_end - 0.5).abs() < 1e-10, "{}", segs[0].c_end);
        assert_eq!(segs[1].kind, SegmentKind::Coincide);

        // quartic with two wells: lower envelope bridges them with a bitangent
        let w = FnFlux(
            |c: f64| (c * c - 0.25).powi(2) + 0.1 * c,
            |c| 4.0 * c * (c * c - 0.25) + 0.1,
            |c| 12.0 * c * c - 1.0,
        );
        let segs = convex_envelope(&w, -1.0, 1.0, EnvelopeSide::Lower, ENVELOPE_SAMPLES);
        let chord = segs.iter().find(|s| s.kind == SegmentKind::Chord).unwrap();
        let s = chord.slope(&w);
        assert!((w.df(chord.c_start) - s).abs() < 1e-8);
        assert!((w.df(chord.c_end) - s).abs() < 1e-8);
    }

    #[test]
    fn degenerate_interval_is_empty() {
        assert!(convex_envelope(&square(), 0.4, 0.4, EnvelopeSide::Lower, 64).is_empty());
    }

    #[test]
    fn liu_on_square_flux() {
        let f = |c: f64| c * c;
        assert!(!liu_admissible(0.2, 0.7, f));
        assert!(liu_admissible(0.7, 0.2, f));
        assert!(liu_admissible(0.2, 0.7, |c| 2.0 * c + 1.0));
        assert!(liu_admissible(0.7, 0.2, |c| 2.0 * c + 1.0));
    }
}
