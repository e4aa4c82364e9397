//! Kinetic upwind scheme for the PSA system, marching in the column
//! coordinate `x` over a fixed partition of the physical time window into
//! cells of width `Δt`.
//!
//! One column update reads
//!
//! ```text
//! cᵢⁿ⁺¹ = cᵢⁿ − λᵢⁿ { A⁺(cᵢ) − A⁺(cᵢ₋₁) − (A⁻(cᵢ₊₁) − A⁻(cᵢ)) + h(cᵢ)(cᵢ − cᵢ₋₁) },
//! λᵢⁿ = Δxⁿ / (uᵢⁿ Δt),
//! ```
//!
//! followed by a velocity update (centered finite difference of `∂ₓu = −∂ₜh`
//! or conservation of the Riemann invariant `u·G(c)`). `Δxⁿ` comes from the
//! CFL bound `(‖h‖∞ + 2‖a‖∞) Δxⁿ ≤ minᵢ uᵢⁿ Δt`.

mod data;
mod diagnostics;
mod scheme;

pub use data::DataProfile;
pub use diagnostics::{
    chi, chi_gibbs_check, entropy_residual, total_variation, EntropyFunction, GibbsReport, StepDiagnostics,
};
pub use scheme::{init, march, GridState, KineticScheme, MarchHistory, MarchSummary};

use serde::Serialize;

use crate::error::SchemeError;
use crate::isotherm::IsothermModel;

/// How the velocity column is advanced after the concentration update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum VelocityUpdate {
    /// `uᵢⁿ⁺¹ = uᵢⁿ − Δx/(2Δt) (h(cᵢ₊₁) − h(cᵢ₋₁))`.
    #[default]
    FiniteDifference,
    /// `uᵢⁿ⁺¹ G(cᵢⁿ⁺¹) = uᵢⁿ G(cᵢⁿ)`.
    RiemannInvariant,
    /// `uᵢⁿ⁺¹ = uᵢⁿ − Δx/Δt (h(cᵢ₊₁) − h(cᵢ₋₁))`, without the centering factor.
    /// Kept for comparison only: it doubles the velocity response.
    FiniteDifferenceUncentered,
}

/// Choice of `Δxⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CflMode {
    /// Recompute from `minᵢ uᵢⁿ` every column.
    #[default]
    Adaptive,
    /// Constant step from the lower bound `inf u_b · inf G / sup G`; only valid
    /// with [`VelocityUpdate::RiemannInvariant`].
    Uniform,
}

/// Full input of one scheme run.
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub model: IsothermModel,
    /// Physical time window `T`.
    pub t_end: f64,
    /// Number of temporal cells `N` covering `[0, T]`.
    pub n_cells: usize,
    /// Column length `L`.
    pub length: f64,
    /// Boundary concentration `c_b(t)` at `x = 0`.
    pub c_boundary: DataProfile,
    /// Boundary velocity `u_b(t)` at `x = 0`.
    pub u_boundary: DataProfile,
    /// Initial concentration `c₀(x)` at `t = 0`.
    pub c_initial: DataProfile,
    pub velocity_update: VelocityUpdate,
    pub cfl_safety: f64,
    pub cfl_mode: CflMode,
    /// Number of extension cells beyond `T`; estimated from the uniform CFL
    /// bound when `None`.
    pub extension_cells: Option<usize>,
}

impl SchemeConfig {
    /// Riemann data: `c(0, x) = c⁻`, `c(t, 0) = c⁺`, `u(t, 0) = u⁺`, with
    /// `T = 1.2`, `N = 50`, `L = 0.1`, safety 0.9.
    pub fn riemann(model: IsothermModel, c_minus: f64, c_plus: f64, u_plus: f64) -> Self {
        Self {
            model,
            t_end: 1.2,
            n_cells: 50,
            length: 0.1,
            c_boundary: DataProfile::Constant(c_plus),
            u_boundary: DataProfile::Constant(u_plus),
            c_initial: DataProfile::Constant(c_minus),
            velocity_update: VelocityUpdate::FiniteDifference,
            cfl_safety: 0.9,
            cfl_mode: CflMode::Adaptive,
            extension_cells: None,
        }
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_cells as f64
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let bad = |m: String| Err(SchemeError::InvalidConfig(m));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("T must be positive, got {}", self.t_end));
        }
        if self.n_cells == 0 {
            return bad("N must be at least 1".into());
        }
        if !(self.length >= 0.0 && self.length.is_finite()) {
            return bad(format!("L must be non-negative, got {}", self.length));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety));
        }
        if self.cfl_mode == CflMode::Uniform && self.velocity_update != VelocityUpdate::RiemannInvariant {
            return bad("uniform CFL step requires the riemann-invariant velocity update".into());
        }
        let (tmin, tmax) = self.c_boundary.range(0.0, self.t_end);
        let (xmin, xmax) = self.c_initial.range(0.0, self.length.max(f64::MIN_POSITIVE));
        if tmin < 0.0 || tmax > 1.0 || xmin < 0.0 || xmax > 1.0 {
            return bad("concentration data must lie in [0, 1]".into());
        }
        let (umin, umax) = self.u_boundary.range(0.0, self.t_end);
        if !(umin > 0.0 && umax.is_finite()) {
            return bad(format!("boundary velocity must be positive, inf u_b = {umin}"));
        }
        self.model.validate()?;
        Ok(())
    }
}
