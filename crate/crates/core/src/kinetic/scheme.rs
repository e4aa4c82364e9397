use std::sync::Arc;

use log::{debug, trace};

use super::diagnostics::{entropy_residual, total_variation, EntropyFunction, StepDiagnostics};
use super::{CflMode, SchemeConfig, VelocityUpdate};
use crate::error::SchemeError;
use crate::isotherm::DerivedFunctions;

/// Below this value the velocity is considered lost (hyperbolicity fails).
pub const VELOCITY_FLOOR: f64 = 1e-12;
const WEIGHT_TOLERANCE: f64 = 1e-10;
/// Headroom on the extension estimate: behind a shock the finite-difference
/// velocity can fall below the Riemann-invariant bound.
pub const EXTENSION_MARGIN: f64 = 1.25;
/// Largest deviation from the extension state tolerated at the window end
/// before more extension cells are appended.
pub const TAIL_TOLERANCE: f64 = 1e-12;
// differences smaller than this use the pointwise speed instead of a ratio
const RATIO_CUTOFF: f64 = 1e-7;

/// One column of the march.
///
/// `c[0]` is the initial-data average over `[x, x + dx]`, the `t = 0` neighbor
/// of cell 1; `c[i]`, `u[i]` for `i ≥ 1` are temporal-cell averages. `u[0]`
/// mirrors `u[1]` and is never read by the update. The window shrinks by one
/// cell per column.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub n: usize,
    pub x: f64,
    /// `Δxⁿ` used to advance this column.
    pub dx: f64,
    pub c: Vec<f64>,
    pub u: Vec<f64>,
}

impl GridState {
    /// Index of the last valid cell.
    pub fn last(&self) -> usize {
        self.c.len() - 1
    }
}

/// Precomputed data for one run: derived functions, CFL norms on the data
/// range, `Δt` and the extension sizing.
#[derive(Debug, Clone)]
pub struct KineticScheme {
    config: SchemeConfig,
    funcs: Arc<DerivedFunctions>,
    dt: f64,
    c_range: (f64, f64),
    h_norm: f64,
    a_norm: f64,
    a_plus_norm: f64,
    a_minus_norm: f64,
    u_inf: f64,
    g_inf: f64,
    g_sup: f64,
    extension_cells: usize,
    ext_state: (f64, f64),
}

/// Result of [`KineticScheme::march_with`].
#[derive(Debug, Clone)]
pub struct MarchSummary {
    pub final_state: GridState,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Cells appended after the initial extension ran short.
    pub cells_appended: usize,
}

/// Every column of a march, for small runs.
#[derive(Debug, Clone)]
pub struct MarchHistory {
    pub columns: Vec<GridState>,
    pub diagnostics: Vec<StepDiagnostics>,
}

/// Validates `config` and returns the scheme with its initial column.
pub fn init(config: SchemeConfig) -> Result<(KineticScheme, GridState), SchemeError> {
    let scheme = KineticScheme::new(config)?;
    let state = scheme.init()?;
    Ok((scheme, state))
}

/// Marches `config` to `x ≥ L`, keeping every column.
pub fn march(config: SchemeConfig) -> Result<MarchHistory, SchemeError> {
    let scheme = KineticScheme::new(config)?;
    let mut columns = Vec::new();
    let summary = scheme.march_with(&[], |s| columns.push(s.clone()))?;
    Ok(MarchHistory { columns, diagnostics: summary.diagnostics })
}

impl KineticScheme {
    pub fn new(config: SchemeConfig) -> Result<Self, SchemeError> {
        config.validate()?;
        let funcs = Arc::new(DerivedFunctions::new(&config.model)?);
        Self::with_functions(config, funcs)
    }

    /// Shares prebuilt derived functions (sweeps reuse one table set).
    pub fn with_functions(config: SchemeConfig, funcs: Arc<DerivedFunctions>) -> Result<Self, SchemeError> {
        config.validate()?;
        let t_end = config.t_end;
        let (b_lo, b_hi) = config.c_boundary.range(0.0, t_end);
        let (i_lo, i_hi) = config.c_initial.range(0.0, config.length.max(f64::MIN_POSITIVE));
        let c_range = (b_lo.min(i_lo), b_hi.max(i_hi));
        funcs.check_domain(c_range.0)?;
        funcs.check_domain(c_range.1)?;
        let (h_norm, a_norm) = funcs.norms_on(c_range.0, c_range.1);
        let (a_plus_norm, a_minus_norm) = a_part_norms(&funcs, c_range);
        let (g_inf, g_sup) = funcs.big_g_range(c_range.0, c_range.1);
        let (u_inf, _) = config.u_boundary.range(0.0, t_end);
        let dt = config.dt();
        let tail = (t_end * (1.0 - 1e-12), t_end);
        let ext_state = (config.c_boundary.average(tail.0, tail.1), config.u_boundary.average(tail.0, tail.1));

        let mut scheme = Self {
            config,
            funcs,
            dt,
            c_range,
            h_norm,
            a_norm,
            a_plus_norm,
            a_minus_norm,
            u_inf,
            g_inf,
            g_sup,
            extension_cells: 0,
            ext_state,
        };
        scheme.extension_cells = match scheme.config.extension_cells {
            Some(m) => m.max(1),
            None => (EXTENSION_MARGIN * scheme.config.length / scheme.uniform_dx()).ceil() as usize + 1,
        };
        debug!(
            "scheme: dt={:.3e} |h|={:.4} |a|={:.4} G in [{:.4}, {:.4}] M={}",
            dt, h_norm, a_norm, g_inf, g_sup, scheme.extension_cells
        );
        Ok(scheme)
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn functions(&self) -> &Arc<DerivedFunctions> {
        &self.funcs
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `(min, max)` of the concentration data.
    pub fn data_range(&self) -> (f64, f64) {
        self.c_range
    }

    /// `(‖h‖∞, ‖a‖∞)` on the data range.
    pub fn norms(&self) -> (f64, f64) {
        (self.h_norm, self.a_norm)
    }

    /// `(‖a⁺‖∞, ‖a⁻‖∞)` on the data range.
    pub fn a_part_norms(&self) -> (f64, f64) {
        (self.a_plus_norm, self.a_minus_norm)
    }

    pub fn extension_cells(&self) -> usize {
        self.extension_cells
    }

    /// Lower bound `inf u_b · inf G / sup G` on the velocity under the
    /// Riemann-invariant update.
    pub fn velocity_lower_bound(&self) -> f64 {
        self.u_inf * self.g_inf / self.g_sup
    }

    /// Constant step from [`Self::velocity_lower_bound`].
    pub fn uniform_dx(&self) -> f64 {
        self.config.cfl_safety * self.velocity_lower_bound() * self.dt / (self.h_norm + 2.0 * self.a_norm)
    }

    /// `Δx` for a velocity column, checking hyperbolicity on cells `1..`.
    pub fn cfl_dx(&self, n: usize, u: &[f64]) -> Result<f64, SchemeError> {
        let (i, u_min) = u
            .iter()
            .enumerate()
            .skip(1)
            .fold((0, f64::INFINITY), |(bi, bu), (i, &v)| if v < bu { (i, v) } else { (bi, bu) });
        if !(u_min > VELOCITY_FLOOR) {
            return Err(SchemeError::HyperbolicityLoss { n, i, u: u_min });
        }
        Ok(match self.config.cfl_mode {
            CflMode::Adaptive => self.config.cfl_safety * u_min * self.dt / (self.h_norm + 2.0 * self.a_norm),
            CflMode::Uniform => self.uniform_dx(),
        })
    }

    /// Column `n = 0`: temporal-cell averages of the boundary data plus
    /// `M` cells of constant extension.
    pub fn init(&self) -> Result<GridState, SchemeError> {
        let n_cells = self.config.n_cells;
        let total = n_cells + self.extension_cells - 1;
        let mut c = Vec::with_capacity(total + 1);
        let mut u = Vec::with_capacity(total + 1);
        c.push(0.0);
        u.push(0.0);
        for i in 1..=total {
            if i <= n_cells {
                let (t0, t1) = ((i - 1) as f64 * self.dt, i as f64 * self.dt);
                c.push(self.config.c_boundary.average(t0, t1));
                u.push(self.config.u_boundary.average(t0, t1));
            } else {
                c.push(self.ext_state.0);
                u.push(self.ext_state.1);
            }
        }
        u[0] = u[1];
        let dx = self.cfl_dx(0, &u)?;
        c[0] = self.config.c_initial.average(0.0, dx);
        Ok(GridState { n: 0, x: 0.0, dx, c, u })
    }

    /// Advances one column.
    pub fn step(&self, state: &GridState) -> Result<GridState, SchemeError> {
        self.step_with_weight(state).map(|(s, _)| s)
    }

    /// Advances one column and returns the smallest convex-combination weight
    /// `1 − λ(p⁺ + p⁻ + h)` met in the update.
    pub fn step_with_weight(&self, state: &GridState) -> Result<(GridState, f64), SchemeError> {
        let n = state.n;
        let w = state.last();
        if w < 2 {
            return Err(SchemeError::ExtensionExhausted { n });
        }
        let dx = state.dx;
        let ratio = dx / self.dt;
        let f = &self.funcs;

        // (h, A⁺, A⁻) of the last three cells touched; stencils overlap
        let mut memo = [(usize::MAX, (0.0, 0.0, 0.0)); 3];
        let mut eval = |j: usize| {
            let slot = &mut memo[j % 3];
            if slot.0 != j {
                *slot = (j, f.h_and_a_pm(state.c[j]));
            }
            slot.1
        };

        let mut c_new = state.c[..w].to_vec();
        let mut u_new = state.u[..w].to_vec();
        let mut min_weight = f64::INFINITY;
        for i in 1..w {
            let (cl, ci, cr) = (state.c[i - 1], state.c[i], state.c[i + 1]);
            if cl == ci && ci == cr {
                // every difference vanishes: both velocity updates leave the cell as is
                continue;
            }
            let (hl, apl, _) = eval(i - 1);
            let (hi, api, ami) = eval(i);
            let (hr, _, amr) = eval(i + 1);
            let ui = state.u[i];
            let lambda = ratio / ui;
            let up = api - apl;
            let down = amr - ami;
            let next_c = ci - lambda * (up - down + hi * (ci - cl));

            let p_plus = if (ci - cl).abs() > RATIO_CUTOFF { up / (ci - cl) } else { f.a(ci).max(0.0) };
            let p_minus = if (cr - ci).abs() > RATIO_CUTOFF { down / (cr - ci) } else { (-f.a(ci)).max(0.0) };
            let weight = 1.0 - lambda * (p_plus + p_minus + hi);
            if weight < -WEIGHT_TOLERANCE {
                return Err(SchemeError::CflViolated { n, i, weight });
            }
            min_weight = min_weight.min(weight);

            let next_u = match self.config.velocity_update {
                VelocityUpdate::FiniteDifference => ui - 0.5 * ratio * (hr - hl),
                VelocityUpdate::FiniteDifferenceUncentered => ui - ratio * (hr - hl),
                VelocityUpdate::RiemannInvariant => {
                    if next_c == ci {
                        ui
                    } else {
                        ui * (f.g(ci) - f.g(next_c)).exp()
                    }
                }
            };
            if !next_c.is_finite() || !next_u.is_finite() {
                return Err(SchemeError::NonFinite { n: n + 1, i });
            }
            if next_u <= VELOCITY_FLOOR {
                return Err(SchemeError::HyperbolicityLoss { n: n + 1, i, u: next_u });
            }
            c_new[i] = next_c;
            u_new[i] = next_u;
        }
        if min_weight == f64::INFINITY {
            min_weight = 1.0;
        }

        let needed = self.config.n_cells + 2;
        if c_new.len() < needed {
            let k = c_new.len();
            let (ce, ue) = self.ext_state;
            let uniform_tail = k >= 4
                && (k - 3..k)
                    .all(|j| (c_new[j] - ce).abs() <= TAIL_TOLERANCE && (u_new[j] - ue).abs() <= TAIL_TOLERANCE * ue);
            if !uniform_tail {
                return Err(SchemeError::ExtensionExhausted { n: n + 1 });
            }
            let grow = needed - k + (self.extension_cells / 4).max(16);
            trace!("column {}: appending {grow} extension cells", n + 1);
            c_new.extend(std::iter::repeat_n(ce, grow));
            u_new.extend(std::iter::repeat_n(ue, grow));
        }

        u_new[0] = u_new[1];
        let x = state.x + dx;
        let next_dx = self.cfl_dx(n + 1, &u_new)?;
        c_new[0] = self.config.c_initial.average(x, x + next_dx);
        Ok((GridState { n: n + 1, x, dx: next_dx, c: c_new, u: u_new }, min_weight))
    }

    /// Marches until `x ≥ L`, calling `visit` on every column (including the
    /// initial one) and evaluating the entropy residual for each `ψ` in
    /// `entropies` on every step.
    pub fn march_with<F>(&self, entropies: &[EntropyFunction], mut visit: F) -> Result<MarchSummary, SchemeError>
    where
        F: FnMut(&GridState),
    {
        let mut state = self.init()?;
        visit(&state);
        let mut diagnostics = Vec::new();
        let mut cells_appended = 0;
        let mut prev_tv = total_variation(&state.c);
        while state.x < self.config.length {
            let before = state.c.len();
            let (next, min_weight) = self.step_with_weight(&state)?;
            if next.c.len() > before - 1 {
                cells_appended += next.c.len() - (before - 1);
            }
            let diag = self.diagnose(&state, &next, min_weight, prev_tv, entropies)?;
            prev_tv = diag.tv;
            diagnostics.push(diag);
            visit(&next);
            state = next;
        }
        debug!("march finished: {} columns, x = {:.6}", state.n, state.x);
        Ok(MarchSummary { final_state: state, diagnostics, cells_appended })
    }

    fn diagnose(
        &self,
        prev: &GridState,
        next: &GridState,
        min_weight: f64,
        prev_tv: f64,
        entropies: &[EntropyFunction],
    ) -> Result<StepDiagnostics, SchemeError> {
        let effective = (self.config.n_cells + 1).min(next.c.len());
        let (c_min, c_max) =
            next.c[1..].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let (u_min, u_max) =
            next.u[1..].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let prev_u_min = prev.u[1..].iter().copied().fold(f64::INFINITY, f64::min);
        let cfl_ratio = prev.dx * (self.h_norm + 2.0 * self.a_norm) / (prev_u_min * self.dt);
        let tv = total_variation(&next.c);
        let mut entropy_max = Vec::with_capacity(entropies.len());
        for psi in entropies {
            let res =
                entropy_residual(&self.funcs, prev, next, self.dt, psi).map_err(crate::error::IsothermError::from)?;
            entropy_max.push(res.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
        Ok(StepDiagnostics {
            n: next.n,
            x: next.x,
            dx: prev.dx,
            tv,
            tv_increase: tv - prev_tv,
            tv_effective: total_variation(&next.c[..effective]),
            c_min,
            c_max,
            u_min,
            u_max,
            cfl_ratio,
            min_weight,
            entropy_max,
        })
    }
}

fn a_part_norms(funcs: &DerivedFunctions, (lo, hi): (f64, f64)) -> (f64, f64) {
    let samples = 4096;
    (0..=samples).fold((0.0_f64, 0.0_f64), |(p, m), k| {
        let c = if hi > lo { lo + (hi - lo) * k as f64 / samples as f64 } else { lo };
        let a = funcs.a(c);
        (p.max(a), m.max(-a))
    })
}
