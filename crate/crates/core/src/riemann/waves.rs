use std::sync::Arc;

use serde::Serialize;

use crate::error::RiemannError;
use crate::isotherm::DerivedFunctions;
use crate::numeric::{antiderivative_table, HermiteTable, QUAD_TOL};

const PHI_NODES: usize = 1025;
/// Allowed drift of the invariant `u·G(c)` across a rarefaction.
pub const W_TOLERANCE: f64 = 1e-8;

/// `(u_left, s)` for a discontinuity with right state `(c_right, u_right)`:
/// `u_left([I] − c_left[h]) = u_right([I] − c_right[h])`, `s = [h]/[u]`.
///
/// `s` is infinite when `[u] = 0` but `[h] ≠ 0`, and zero for `c_left == c_right`.
pub fn shock_connect(
    funcs: &DerivedFunctions,
    c_left: f64,
    c_right: f64,
    u_right: f64,
) -> Result<(f64, f64), RiemannError> {
    funcs.check_domain(c_left)?;
    funcs.check_domain(c_right)?;
    if !(u_right > 0.0) {
        return Err(RiemannError::InvalidProblem(format!("u_right must be positive, got {u_right}")));
    }
    if c_left == c_right {
        return Ok((u_right, 0.0));
    }
    let jump_i = funcs.i(c_right) - funcs.i(c_left);
    let jump_h = funcs.h(c_right) - funcs.h(c_left);
    let den_left = jump_i - c_left * jump_h;
    let den_right = jump_i - c_right * jump_h;
    // admissible isotherms keep ([I] − c[h]) / [c] ≥ 1 for both end states
    let orientation = (c_right - c_left).signum();
    if !(den_left * orientation > 0.0) {
        return Err(RiemannError::NonAdmissibleIsotherm(den_left * orientation));
    }
    let u_left = u_right * den_right / den_left;
    let jump_u = u_right - u_left;
    let s = if jump_u == 0.0 { f64::INFINITY * jump_h.signum() } else { jump_h / jump_u };
    Ok((u_left, s))
}

/// Self-similar rarefaction `z ∈ [z_left, z_right]` on an interval where `f″`
/// keeps one sign: `ln z(c) − ln z_right = φ(c) − φ(c_right)` with `φ′ = f″/H`,
/// and `U = H(C)/z`.
#[derive(Debug, Clone)]
pub struct Rarefaction {
    pub c_left: f64,
    pub c_right: f64,
    pub u_left: f64,
    pub u_right: f64,
    pub z_left: f64,
    pub z_right: f64,
    /// `|u_left G(c_left) − u_right G(c_right)|`.
    pub w_residual: f64,
    phi: Option<HermiteTable>,
    phi_right: f64,
    funcs: Arc<DerivedFunctions>,
}

impl Rarefaction {
    /// True when the fan opens (`z_left < z_right`); a closing integral curve
    /// is not an admissible wave.
    pub fn is_expansive(&self) -> bool {
        self.z_left < self.z_right || self.c_left == self.c_right
    }

    /// `z(c)` for `c` between the end states.
    pub fn z_of(&self, c: f64) -> f64 {
        match &self.phi {
            Some(t) => self.z_right * (t.eval(c) - self.phi_right).exp(),
            None => self.z_right,
        }
    }

    /// Inverse of [`Self::z_of`] by bisection (to 1e-12 in `c`); `z` is clamped
    /// to the fan.
    pub fn c_of(&self, z: f64) -> f64 {
        if self.phi.is_none() {
            return self.c_right;
        }
        let (zl, zr) = (self.z_left.min(self.z_right), self.z_left.max(self.z_right));
        let z = z.clamp(zl, zr);
        let (mut a, mut b) = (self.c_left, self.c_right);
        // z_of(a) is the left end, z_of(b) the right end
        let increasing = self.z_right >= self.z_left;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if (b - a).abs() <= 1e-12 || m == a || m == b {
                break;
            }
            if (self.z_of(m) < z) == increasing {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// `(C(z), U(z))` inside the fan.
    pub fn state_at(&self, z: f64) -> (f64, f64) {
        let c = self.c_of(z);
        let zc = self.z_of(c);
        (c, self.funcs.big_h(c) / zc)
    }

    /// `dC/dz · z · f″(C) / H(C)` at `z`; equals 1 on the integral curve.
    pub fn ode_residual(&self, z: f64) -> f64 {
        let c = self.c_of(z);
        let dcdz = match &self.phi {
            Some(t) => 1.0 / (self.z_of(c) * t.derivative(c)),
            None => 0.0,
        };
        dcdz * z * self.funcs.d2f(c) / self.funcs.big_h(c)
    }
}

/// Integral-curve connection of `(c_right, u_right)` to `c_left`.
///
/// Fails if `f″` changes sign strictly inside the interval. The returned wave
/// may be compressive; check [`Rarefaction::is_expansive`].
pub fn rarefaction_connect(
    funcs: &Arc<DerivedFunctions>,
    c_left: f64,
    c_right: f64,
    u_right: f64,
) -> Result<Rarefaction, RiemannError> {
    funcs.check_domain(c_left)?;
    funcs.check_domain(c_right)?;
    if !(u_right > 0.0) {
        return Err(RiemannError::InvalidProblem(format!("u_right must be positive, got {u_right}")));
    }
    let z_right = funcs.big_h(c_right) / u_right;
    if c_left == c_right {
        return Ok(Rarefaction {
            c_left,
            c_right,
            u_left: u_right,
            u_right,
            z_left: z_right,
            z_right,
            w_residual: 0.0,
            phi: None,
            phi_right: 0.0,
            funcs: Arc::clone(funcs),
        });
    }
    let (lo, hi) = (c_left.min(c_right), c_left.max(c_right));
    let probes = 256;
    let scale = (0..=probes).map(|k| funcs.d2f(lo + (hi - lo) * k as f64 / probes as f64).abs()).fold(0.0, f64::max);
    let (mut pos, mut neg) = (false, false);
    for k in 1..probes {
        let v = funcs.d2f(lo + (hi - lo) * k as f64 / probes as f64);
        pos |= v > 1e-9 * scale;
        neg |= v < -1e-9 * scale;
    }
    if pos && neg {
        return Err(RiemannError::Internal(format!("f'' changes sign inside rarefaction [{lo}, {hi}]")));
    }
    let table = antiderivative_table(|c| funcs.d2f(c) / funcs.big_h(c), lo, hi, PHI_NODES, QUAD_TOL)
        .map_err(|e| RiemannError::Isotherm(e.into()))?;
    let phi_right = table.eval(c_right);
    let z_left = z_right * (table.eval(c_left) - phi_right).exp();
    let u_left = funcs.big_h(c_left) / z_left;
    let w_residual = (u_left * funcs.big_g(c_left) - u_right * funcs.big_g(c_right)).abs();
    if w_residual > W_TOLERANCE * u_right.max(1.0) {
        return Err(RiemannError::Internal(format!("rarefaction breaks u G(c) invariance by {w_residual:e}")));
    }
    Ok(Rarefaction {
        c_left,
        c_right,
        u_left,
        u_right,
        z_left,
        z_right,
        w_residual,
        phi: Some(table),
        phi_right,
        funcs: Arc::clone(funcs),
    })
}

#[derive(Debug, Clone)]
pub enum Wave {
    /// Discontinuity on a chord where `f` is affine, or the head velocity jump at `σ = 0`.
    Contact {
        sigma: f64,
        c_left: f64,
        c_right: f64,
        u_left: f64,
        u_right: f64,
    },
    Shock {
        s: f64,
        c_left: f64,
        c_right: f64,
        u_left: f64,
        u_right: f64,
    },
    Rarefaction(Rarefaction),
}

/// Flat description of a wave for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveSummary {
    pub kind: &'static str,
    pub z_start: f64,
    pub z_end: f64,
    pub c_left: f64,
    pub c_right: f64,
    pub u_left: f64,
    pub u_right: f64,
}

impl Wave {
    pub fn kind(&self) -> &'static str {
        match self {
            Wave::Contact { .. } => "contact",
            Wave::Shock { .. } => "shock",
            Wave::Rarefaction(_) => "rarefaction",
        }
    }

    /// `(z_min, z_max)`; a point for discontinuities.
    pub fn z_range(&self) -> (f64, f64) {
        match self {
            Wave::Contact { sigma, .. } => (*sigma, *sigma),
            Wave::Shock { s, .. } => (*s, *s),
            Wave::Rarefaction(r) => (r.z_left.min(r.z_right), r.z_left.max(r.z_right)),
        }
    }

    pub fn left_state(&self) -> (f64, f64) {
        match self {
            Wave::Contact { c_left, u_left, .. } | Wave::Shock { c_left, u_left, .. } => (*c_left, *u_left),
            Wave::Rarefaction(r) => (r.c_left, r.u_left),
        }
    }

    pub fn right_state(&self) -> (f64, f64) {
        match self {
            Wave::Contact { c_right, u_right, .. } | Wave::Shock { c_right, u_right, .. } => (*c_right, *u_right),
            Wave::Rarefaction(r) => (r.c_right, r.u_right),
        }
    }

    pub fn summary(&self) -> WaveSummary {
        let (z_start, z_end) = self.z_range();
        let (c_left, u_left) = self.left_state();
        let (c_right, u_right) = self.right_state();
        WaveSummary { kind: self.kind(), z_start, z_end, c_left, c_right, u_left, u_right }
    }
}
