//! Exact self-similar solution of the PSA Riemann problem
//!
//! ```text
//! c(0, x) = c⁻ (x > 0),   c(t, 0) = c⁺,   u(t, 0) = u⁺ (t > 0),
//! ```
//!
//! as functions of `z = t/x`. The concentration fan follows the lower (`c⁻ < c⁺`)
//! or upper (`c⁻ > c⁺`) convex envelope of `f` between the two states; the
//! velocity is chained backwards from `u⁺` through Rankine–Hugoniot relations
//! and rarefaction integral curves, and a stationary velocity jump at `z = 0⁺`
//! heads the fan.

mod envelope;
mod waves;

use std::sync::Arc;

use serde::Serialize;

pub use envelope::{
    convex_envelope, envelope_tolerance, liu_admissible, EnvelopeSegment, EnvelopeSide, FnFlux, ScalarFlux,
    SegmentKind, ENVELOPE_SAMPLES,
};
pub use waves::{rarefaction_connect, shock_connect, Rarefaction, Wave, WaveSummary, W_TOLERANCE};

use crate::error::RiemannError;
use crate::isotherm::{DerivedFunctions, IsothermModel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiemannProblem {
    pub model: IsothermModel,
    /// Initial concentration (`t = 0` side).
    pub c_minus: f64,
    /// Boundary concentration (`x = 0` side).
    pub c_plus: f64,
    /// Boundary velocity.
    pub u_plus: f64,
}

impl RiemannProblem {
    pub fn new(model: IsothermModel, c_minus: f64, c_plus: f64, u_plus: f64) -> Self {
        Self { model, c_minus, c_plus, u_plus }
    }
}

/// Wave fan ordered by increasing `z`; the first wave is always the head contact at `z = 0`.
#[derive(Debug, Clone)]
pub struct RiemannSolution {
    pub problem: RiemannProblem,
    /// Velocity behind the head contact, `U(z → 0⁺)`.
    pub u0: f64,
    pub waves: Vec<Wave>,
    pub envelope: Vec<EnvelopeSegment>,
    funcs: Arc<DerivedFunctions>,
}

pub fn solve(problem: &RiemannProblem) -> Result<RiemannSolution, RiemannError> {
    let funcs = Arc::new(DerivedFunctions::new(&problem.model)?);
    solve_with(problem, funcs)
}

/// [`solve`] with prebuilt derived functions for `problem.model`.
pub fn solve_with(problem: &RiemannProblem, funcs: Arc<DerivedFunctions>) -> Result<RiemannSolution, RiemannError> {
    let RiemannProblem { c_minus, c_plus, u_plus, .. } = *problem;
    if !(u_plus > 0.0 && u_plus.is_finite()) {
        return Err(RiemannError::InvalidProblem(format!("u_plus must be positive, got {u_plus}")));
    }
    for (name, c) in [("c_minus", c_minus), ("c_plus", c_plus)] {
        if !(0.0..=1.0).contains(&c) {
            return Err(RiemannError::InvalidProblem(format!("{name} = {c} outside [0, 1]")));
        }
        funcs.check_domain(c)?;
    }

    let side = if c_minus < c_plus { EnvelopeSide::Lower } else { EnvelopeSide::Upper };
    let envelope = convex_envelope(funcs.as_ref(), c_minus, c_plus, side, ENVELOPE_SAMPLES);
    let eps_env = if envelope.is_empty() { 0.0 } else { envelope_tolerance(funcs.as_ref(), c_minus, c_plus) };

    // walk from the boundary state towards c⁻, i.e. from large z to small z
    let ordered: Vec<(f64, f64, &EnvelopeSegment)> = if c_minus < c_plus {
        envelope.iter().rev().map(|s| (s.c_start, s.c_end, s)).collect()
    } else {
        envelope.iter().map(|s| (s.c_end, s.c_start, s)).collect()
    };
    let mut fan = Vec::with_capacity(ordered.len() + 1);
    let mut u_right = u_plus;
    for (c_left, c_right, seg) in ordered {
        let wave = match seg.kind {
            SegmentKind::Coincide => {
                let r = rarefaction_connect(&funcs, c_left, c_right, u_right)?;
                if !r.is_expansive() {
                    return Err(RiemannError::Internal(format!(
                        "envelope piece [{}, {}] yields a closing fan",
                        seg.c_start, seg.c_end
                    )));
                }
                Wave::Rarefaction(r)
            }
            SegmentKind::Chord => {
                let (u_left, s) = shock_connect(&funcs, c_left, c_right, u_right)?;
                if !s.is_finite() {
                    return Err(RiemannError::Internal(format!("discontinuity {c_left} -> {c_right} with [u] = 0")));
                }
                if seg.deviation <= eps_env {
                    Wave::Contact { sigma: s, c_left, c_right, u_left, u_right }
                } else {
                    Wave::Shock { s, c_left, c_right, u_left, u_right }
                }
            }
        };
        u_right = wave.left_state().1;
        fan.push(wave);
    }
    let u0 = u_right;
    fan.push(Wave::Contact { sigma: 0.0, c_left: c_minus, c_right: c_minus, u_left: u0, u_right: u0 });
    fan.reverse();

    let mut prev_end = 0.0_f64;
    for w in &fan {
        let (lo, hi) = w.z_range();
        if lo < prev_end - 1e-7 * prev_end.max(1.0) || lo < 0.0 {
            return Err(RiemannError::Internal(format!(
                "wave fan out of order: {} starts at z = {lo} before {prev_end}",
                w.kind()
            )));
        }
        prev_end = prev_end.max(hi);
    }

    Ok(RiemannSolution { problem: problem.clone(), u0, waves: fan, envelope, funcs })
}

impl RiemannSolution {
    pub fn functions(&self) -> &Arc<DerivedFunctions> {
        &self.funcs
    }

    /// `(C(z), U(z))`; `z = ∞` (the boundary `x = 0`) gives `(c⁺, u⁺)`.
    pub fn state_at_z(&self, z: f64) -> (f64, f64) {
        if z.is_nan() || z == f64::INFINITY {
            return (self.problem.c_plus, self.problem.u_plus);
        }
        for w in self.waves.iter().rev() {
            let (lo, hi) = w.z_range();
            if z >= hi {
                return w.right_state();
            }
            if let Wave::Rarefaction(r) = w {
                if z >= lo {
                    return r.state_at(z);
                }
            }
        }
        (self.problem.c_minus, self.u0)
    }

    /// `(c, u)` at `(t, x)` with `t > 0`, `x ≥ 0`.
    pub fn sample(&self, t: f64, x: f64) -> (f64, f64) {
        if x <= 0.0 {
            return (self.problem.c_plus, self.problem.u_plus);
        }
        self.state_at_z(t / x)
    }

    /// Profile at time `t` on an `x` grid.
    pub fn profile(&self, t: f64, xs: &[f64]) -> Vec<(f64, f64)> {
        xs.iter().map(|&x| self.sample(t, x)).collect()
    }

    /// Positions `x = t/z` of the discontinuities at time `t`, with their kinds
    /// (head contact excluded).
    pub fn discontinuities_at(&self, t: f64) -> Vec<(&'static str, f64)> {
        self.waves
            .iter()
            .skip(1)
            .filter_map(|w| match w {
                Wave::Contact { sigma, .. } => Some(("contact", t / sigma)),
                Wave::Shock { s, .. } => Some(("shock", t / s)),
                Wave::Rarefaction(_) => None,
            })
            .collect()
    }

    pub fn summaries(&self) -> Vec<WaveSummary> {
        self.waves.iter().map(Wave::summary).collect()
    }
}

/// Every stored velocity and 1000 sampled values of `U` are positive.
pub fn positivity_check(solution: &RiemannSolution) -> bool {
    let stored = solution.waves.iter().all(|w| w.left_state().1 > 0.0 && w.right_state().1 > 0.0);
    let z_max = solution.waves.iter().map(|w| w.z_range().1).fold(0.0_f64, f64::max).max(1.0);
    let sampled = (0..1000).all(|k| {
        let z = 2.0 * z_max * (k as f64 + 0.5) / 1000.0;
        solution.state_at_z(z).1 > 0.0
    });
    stored && sampled && solution.u0 > 0.0
}
