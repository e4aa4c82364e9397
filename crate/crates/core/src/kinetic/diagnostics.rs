use rand::Rng;
use serde::Serialize;

use super::GridState;
use crate::error::QuadratureError;
use crate::isotherm::DerivedFunctions;
use crate::numeric::adaptive_simpson;

/// Per-column record emitted by the march.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub n: usize,
    pub x: f64,
    /// `Δx` used to reach this column.
    pub dx: f64,
    /// Total variation over the whole valid window, including the `t = 0` neighbor.
    pub tv: f64,
    pub tv_increase: f64,
    /// Total variation over the cells covering `[0, T]` only.
    pub tv_effective: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// `λ_max (‖h‖∞ + 2‖a‖∞)` of the step; equals the safety factor in adaptive mode.
    pub cfl_ratio: f64,
    pub min_weight: f64,
    /// Largest entropy residual for each requested `ψ`.
    pub entropy_max: Vec<f64>,
}

pub fn total_variation(column: &[f64]) -> f64 {
    column.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Convex entropies for the discrete entropy inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntropyFunction {
    /// `ψ(c) = c`, which saturates the inequality.
    Linear,
    Square,
    Exp,
    /// `ψ(c) = √((c − center)² + width²)`.
    SmoothedAbs {
        center: f64,
        width: f64,
    },
}

impl EntropyFunction {
    pub fn value(&self, c: f64) -> f64 {
        match *self {
            EntropyFunction::Linear => c,
            EntropyFunction::Square => c * c,
            EntropyFunction::Exp => c.exp(),
            EntropyFunction::SmoothedAbs { center, width } => ((c - center).powi(2) + width * width).sqrt(),
        }
    }

    pub fn derivative(&self, c: f64) -> f64 {
        match *self {
            EntropyFunction::Linear => 1.0,
            EntropyFunction::Square => 2.0 * c,
            EntropyFunction::Exp => c.exp(),
            EntropyFunction::SmoothedAbs { center, width } => {
                (c - center) / ((c - center).powi(2) + width * width).sqrt()
            }
        }
    }
}

/// Oriented integrals `(∫ ψ′ a⁺, ∫ ψ′ a⁻)` from `lo` to `hi`, split at the sign
/// changes of `a` so each piece is smooth.
fn entropy_flux_increment(
    funcs: &DerivedFunctions,
    psi: &EntropyFunction,
    lo: f64,
    hi: f64,
) -> Result<(f64, f64), QuadratureError> {
    if lo == hi {
        return Ok((0.0, 0.0));
    }
    let (a, b, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
    let mut cuts = vec![a];
    cuts.extend(funcs.sign_changes().iter().copied().filter(|&k| k > a && k < b));
    cuts.push(b);
    let (mut plus, mut minus) = (0.0, 0.0);
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let tol = 1e-15 + 1e-14 * (w[1] - w[0]);
        let integral = adaptive_simpson(|s| psi.derivative(s) * funcs.a(s), w[0], w[1], tol, 40)?;
        if funcs.a(mid) >= 0.0 {
            plus += integral;
        } else {
            minus -= integral;
        }
    }
    Ok((sign * plus, sign * minus))
}

/// Residual of the discrete entropy inequality for the step `prev → next`,
/// one entry per updated cell `i = 1..next.c.len()`:
///
/// ```text
/// uᵢ(ψ(cᵢⁿ⁺¹) − ψ(cᵢⁿ)) + (Δx/Δt)(D⁺ᵢ₋½ − D⁻ᵢ₊½) + (Δx/Δt) h(cᵢ)(ψ(cᵢ) − ψ(cᵢ₋₁)),
/// D±ᵢ₋½ = ∫_{cᵢ₋₁}^{cᵢ} ψ′ a±.
/// ```
///
/// Nonpositive (to round-off) for convex `ψ` under the CFL condition.
pub fn entropy_residual(
    funcs: &DerivedFunctions,
    prev: &GridState,
    next: &GridState,
    dt: f64,
    psi: &EntropyFunction,
) -> Result<Vec<f64>, QuadratureError> {
    let ratio = prev.dx / dt;
    let cells = next.c.len().min(prev.c.len() - 1);
    let mut out = Vec::with_capacity(cells.saturating_sub(1));
    let mut left = entropy_flux_increment(funcs, psi, prev.c[0], prev.c[1])?;
    for i in 1..cells {
        let (cl, ci, cr) = (prev.c[i - 1], prev.c[i], prev.c[i + 1]);
        let right = entropy_flux_increment(funcs, psi, ci, cr)?;
        let cn = next.c[i];
        let r = if cl == ci && ci == cr && cn == ci {
            0.0
        } else {
            prev.u[i] * (psi.value(cn) - psi.value(ci))
                + ratio * (left.0 - right.1)
                + ratio * funcs.h(ci) * (psi.value(ci) - psi.value(cl))
        };
        out.push(r);
        left = right;
    }
    Ok(out)
}

/// `χ(c, ξ) = 1` for `0 < ξ < c`, else 0.
pub fn chi(c: f64, xi: f64) -> f64 {
    if xi > 0.0 && xi < c {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GibbsReport {
    pub passed: bool,
    /// `∫ χ(c, ξ) dξ` on the grid.
    pub chi_mass: f64,
    /// `∫ S′ χ`.
    pub chi_value: f64,
    /// Smallest `∫ S′ φ` among the competitors.
    pub best_competitor: f64,
    /// Largest `|∫ φ − c|` after projection.
    pub competitor_mass_error: f64,
}

const GIBBS_CELLS: usize = 512;

/// Brenier's minimization check on a 512-cell `ξ` grid: `χ(c, ·)` must
/// minimize `∫₀¹ S′ φ` over `0 ≤ φ ≤ 1`, `∫ φ = c`, against `trials` random
/// competitors. Cell weights are exact: `S(ξ_{k+1}) − S(ξ_k)`.
pub fn chi_gibbs_check<S, R>(c: f64, s: S, trials: usize, rng: &mut R) -> GibbsReport
where
    S: Fn(f64) -> f64,
    R: Rng + ?Sized,
{
    let h = 1.0 / GIBBS_CELLS as f64;
    let weights: Vec<f64> = (0..GIBBS_CELLS).map(|k| s((k + 1) as f64 * h) - s(k as f64 * h)).collect();
    // cell fractions of the indicator of (0, c)
    let chi_cells: Vec<f64> = (0..GIBBS_CELLS).map(|k| ((c - k as f64 * h) / h).clamp(0.0, 1.0)).collect();
    let chi_mass = chi_cells.iter().sum::<f64>() * h;
    // ∫ S′χ over a partial cell is S(c) − S(ξ_k), not a fraction of the weight
    let chi_value = s(c.clamp(0.0, 1.0)) - s(0.0);
    let scale = weights.iter().map(|w| w.abs()).fold(0.0, f64::max).max(1.0);

    let mut best = f64::INFINITY;
    let mut mass_err = 0.0_f64;
    let mut phi = vec![0.0; GIBBS_CELLS];
    for _ in 0..trials {
        let shape = rng.gen_range(0..3);
        for (k, p) in phi.iter_mut().enumerate() {
            *p = match shape {
                0 => rng.gen::<f64>(),
                1 => {
                    let xi = (k as f64 + 0.5) * h;
                    (xi * rng.gen_range(1.0..8.0)).sin().abs()
                }
                _ => f64::from(u8::from(rng.gen_bool(0.5))),
            };
        }
        project_mass(&mut phi, c / h);
        let mass = phi.iter().sum::<f64>() * h;
        mass_err = mass_err.max((mass - c).abs());
        let value: f64 = phi.iter().zip(&weights).map(|(p, w)| p * w).sum();
        best = best.min(value);
    }
    let passed = (chi_mass - c).abs() <= 1e-12 && chi_value <= best + 1e-12 * scale;
    GibbsReport { passed, chi_mass, chi_value, best_competitor: best, competitor_mass_error: mass_err }
}

/// Shifts `φ` by τ and clips to `[0, 1]` so that `Σ φ = target`.
fn project_mass(phi: &mut [f64], target: f64) {
    let sum_at = |tau: f64, phi: &[f64]| phi.iter().map(|p| (p + tau).clamp(0.0, 1.0)).sum::<f64>();
    let (mut lo, mut hi) = (-1.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum_at(mid, phi) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    let tau = 0.5 * (lo + hi);
    for p in phi.iter_mut() {
        *p = (*p + tau).clamp(0.0, 1.0);
    }
    // remove the residual bisection error on one interior cell
    let excess = phi.iter().sum::<f64>() - target;
    if let Some(p) = phi.iter_mut().find(|p| **p - excess >= 0.0 && **p - excess <= 1.0 && **p > 0.0 && **p < 1.0) {
        *p -= excess;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn total_variation_examples() {
        assert_eq!(total_variation(&[0.3; 7]), 0.0);
        let ramp: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        assert!((total_variation(&ramp) - 1.0).abs() < 1e-15);
        assert!((total_variation(&[0.2, 0.7, 0.7, 0.7]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn chi_indicator() {
        assert_eq!(chi(0.5, 0.25), 1.0);
        assert_eq!(chi(0.5, 0.5), 0.0);
        assert_eq!(chi(0.5, 0.0), 0.0);
        assert_eq!(chi(0.0, 0.1), 0.0);
    }

    #[test]
    fn gibbs_square_at_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = chi_gibbs_check(0.5, |x| x * x, 200, &mut rng);
        assert!(r.passed, "{r:?}");
        assert!((r.chi_value - 0.25).abs() < 1e-15);
        assert!(r.competitor_mass_error < 1e-12);
    }

    #[test]
    fn gibbs_zero_mass_is_trivial() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = chi_gibbs_check(0.0, |x| x.exp(), 20, &mut rng);
        assert!(r.passed);
        assert_eq!(r.chi_mass, 0.0);
        assert_eq!(r.chi_value, 0.0);
    }

    #[test]
    fn chi_integral_is_antiderivative_increment() {
        let c = 0.5;
        let n = 100_000;
        let h = 1.0 / n as f64;
        let integral: f64 = (0..n)
            .map(|k| {
                let xi = (k as f64 + 0.5) * h;
                3.0 * xi * xi * chi(c, xi) * h
            })
            .sum();
        assert!((integral - 0.125).abs() < 1e-9);
    }

    #[test]
    fn entropy_derivatives_match_finite_differences() {
        let fs = [
            EntropyFunction::Linear,
            EntropyFunction::Square,
            EntropyFunction::Exp,
            EntropyFunction::SmoothedAbs { center: 0.4, width: 0.05 },
        ];
        for psi in fs {
            for &c in &[0.1, 0.35, 0.8] {
                let e = 1e-6;
                let fd = (psi.value(c + e) - psi.value(c - e)) / (2.0 * e);
                assert!((fd - psi.derivative(c)).abs() < 1e-8, "{psi:?} at {c}");
            }
        }
    }
}
