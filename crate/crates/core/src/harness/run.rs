use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;
use serde::Serialize;

use super::config::{ExperimentKind, RunConfig};
use super::csv::{format_number, numeric_row, render, write_file};
use crate::error::HarnessError;
use crate::isotherm::DerivedFunctions;
use crate::kinetic::{EntropyFunction, KineticScheme, StepDiagnostics};
use crate::riemann::{solve_with, RiemannSolution, WaveSummary};

pub const PROFILE_HEADER: [&str; 5] = ["x", "c_exact", "u_exact", "c_scheme", "u_scheme"];
/// Points of the exact profile written by [`run_exact`].
pub const EXACT_SAMPLES: usize = 1001;
/// Errors at or below this are treated as exact; no order is estimated from them.
pub const ORDER_FLOOR: f64 = 1e-12;
/// A jump is flagged where the slope exceeds this multiple of both neighbours.
const JUMP_FACTOR: f64 = 5.0;

/// One x-position of a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub x: f64,
    pub c_exact: f64,
    pub u_exact: f64,
    pub c_scheme: f64,
    pub u_scheme: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub l1_c: f64,
    pub linf_c: f64,
    pub l1_u: f64,
    pub linf_u: f64,
}

/// Exact wave with its position at the probe time (`inf` for the head contact).
#[derive(Debug, Clone, Serialize)]
pub struct WaveReport {
    #[serde(flatten)]
    pub wave: WaveSummary,
    pub x_start: f64,
    pub x_end: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub title: Option<String>,
    pub model: String,
    pub n_cells: usize,
    pub t_probe: f64,
    /// Temporal cell holding `t_probe`; cell `i` spans `[(i − 1)Δt, iΔt]`.
    pub probe_cell: usize,
    pub columns: usize,
    pub errors: ErrorNorms,
    pub u0_exact: f64,
    pub exact_waves: Vec<WaveReport>,
    /// Positions of jumps flagged in the exact and computed profiles.
    pub detected_jumps_exact: Vec<f64>,
    pub detected_jumps_scheme: Vec<f64>,
}

/// Comparison of one scheme run against the exact solution.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub report: CompareReport,
    pub rows: Vec<ProfileRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub n_cells: usize,
    pub columns: usize,
    pub errors: ErrorNorms,
    /// Order of `l1_c` from the previous entry; `None` for the first entry or
    /// when either error is at the floor.
    pub order_c: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub title: Option<String>,
    pub model: String,
    pub t_probe: f64,
    pub entries: Vec<SweepEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub title: Option<String>,
    pub model: String,
    pub n_cells: usize,
    pub columns: usize,
    pub final_x: f64,
    pub cells_appended: usize,
    pub max_tv_increase: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub u_min: f64,
    pub max_entropy_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactReport {
    pub title: Option<String>,
    pub problem: crate::riemann::RiemannProblem,
    pub u0: f64,
    pub t_probe: f64,
    pub waves: Vec<WaveReport>,
}

/// Files written by a runner.
#[derive(Debug, Clone, Default)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

fn out_path(dir: &Path, prefix: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{prefix}_{suffix}"))
}

fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Trapezoidal L¹ and maximum errors in `x`; rows may come in any order.
pub fn error_norms(rows: &[ProfileRow]) -> ErrorNorms {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x));
    let dc = |r: &ProfileRow| (r.c_scheme - r.c_exact).abs();
    let du = |r: &ProfileRow| (r.u_scheme - r.u_exact).abs();
    let mut n = ErrorNorms { l1_c: 0.0, linf_c: 0.0, l1_u: 0.0, linf_u: 0.0 };
    for w in sorted.windows(2) {
        let h = w[1].x - w[0].x;
        n.l1_c += 0.5 * h * (dc(&w[0]) + dc(&w[1]));
        n.l1_u += 0.5 * h * (du(&w[0]) + du(&w[1]));
    }
    for r in &sorted {
        n.linf_c = n.linf_c.max(dc(r));
        n.linf_u = n.linf_u.max(du(r));
    }
    n
}

/// Midpoints of intervals whose slope `|Δc/Δx|` exceeds [`JUMP_FACTOR`] times
/// the slope of both neighbouring intervals (report-only heuristic).
pub fn detect_jumps(xs: &[f64], cs: &[f64]) -> Vec<f64> {
    let slopes: Vec<f64> = xs
        .windows(2)
        .zip(cs.windows(2))
        .map(|(x, c)| if x[1] > x[0] { (c[1] - c[0]).abs() / (x[1] - x[0]) } else { 0.0 })
        .collect();
    let scale = cs.iter().fold(0.0_f64, |m, &c| m.max(c.abs())).max(1e-300);
    let mut jumps = Vec::new();
    for k in 0..slopes.len() {
        let jump = (cs[k + 1] - cs[k]).abs();
        if jump <= 1e-6 * scale {
            continue;
        }
        let left = if k > 0 { slopes[k - 1] } else { 0.0 };
        let right = slopes.get(k + 1).copied().unwrap_or(0.0);
        if slopes[k] > JUMP_FACTOR * left.max(right) {
            jumps.push(0.5 * (xs[k] + xs[k + 1]));
        }
    }
    jumps
}

fn wave_reports(solution: &RiemannSolution, t: f64) -> Vec<WaveReport> {
    let x_of = |z: f64| if z > 0.0 { t / z } else { f64::INFINITY };
    solution
        .summaries()
        .into_iter()
        .map(|wave| WaveReport { wave, x_start: x_of(wave.z_end), x_end: x_of(wave.z_start) })
        .collect()
}

fn exact_solution(cfg: &RunConfig, funcs: Arc<DerivedFunctions>) -> Result<RiemannSolution, HarnessError> {
    let problem = cfg.riemann_problem().ok_or_else(|| {
        HarnessError::config(None, "exact solution needs Riemann data: data.c_minus, data.c_plus, data.u_plus")
    })?;
    Ok(solve_with(&problem, funcs)?)
}

/// Runs the scheme with `n_cells` and compares the column profile at
/// `t_probe` with the exact solution. Nothing is written.
pub fn compare(cfg: &RunConfig, n_cells: usize) -> Result<Comparison, HarnessError> {
    let funcs = Arc::new(DerivedFunctions::new(&cfg.model)?);
    compare_with(cfg, n_cells, funcs)
}

fn compare_with(cfg: &RunConfig, n_cells: usize, funcs: Arc<DerivedFunctions>) -> Result<Comparison, HarnessError> {
    let solution = exact_solution(cfg, Arc::clone(&funcs))?;
    let scheme = KineticScheme::with_functions(cfg.scheme_config(n_cells), funcs)?;
    // piecewise-constant in t: the cell whose span contains t_probe
    let probe = (cfg.t_probe / scheme.dt()).floor() as usize + 1;
    let mut rows = Vec::new();
    scheme.march_with(&[], |state| {
        let (c_exact, u_exact) = solution.sample(cfg.t_probe, state.x);
        rows.push(ProfileRow { x: state.x, c_exact, u_exact, c_scheme: state.c[probe], u_scheme: state.u[probe] });
    })?;
    let xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
    let exact_c: Vec<f64> = rows.iter().map(|r| r.c_exact).collect();
    let scheme_c: Vec<f64> = rows.iter().map(|r| r.c_scheme).collect();
    let report = CompareReport {
        title: cfg.title.clone(),
        model: cfg.model.label(),
        n_cells,
        t_probe: cfg.t_probe,
        probe_cell: probe,
        columns: rows.len(),
        errors: error_norms(&rows),
        u0_exact: solution.u0,
        exact_waves: wave_reports(&solution, cfg.t_probe),
        detected_jumps_exact: detect_jumps(&xs, &exact_c),
        detected_jumps_scheme: detect_jumps(&xs, &scheme_c),
    };
    Ok(Comparison { report, rows })
}

pub fn profile_csv(rows: &[ProfileRow]) -> String {
    let body: Vec<Vec<String>> =
        rows.iter().map(|r| numeric_row(&[r.x, r.c_exact, r.u_exact, r.c_scheme, r.u_scheme])).collect();
    render(&PROFILE_HEADER, &body)
}

/// Comparison at `cfg.n_cells`; writes `<prefix>_profile.csv` and `<prefix>_report.json`.
pub fn run_compare(cfg: &RunConfig, out: &Path) -> Result<(CompareReport, Written), HarnessError> {
    let cmp = compare(cfg, cfg.n_cells)?;
    ensure_dir(out)?;
    let csv = out_path(out, &cfg.prefix, "profile.csv");
    let json = out_path(out, &cfg.prefix, "report.json");
    write_file(&csv, &profile_csv(&cmp.rows))?;
    write_file(&json, &to_json(&cmp.report))?;
    let e = &cmp.report.errors;
    info!("compare N={}: L1(c)={:e} Linf(c)={:e} L1(u)={:e}", cfg.n_cells, e.l1_c, e.linf_c, e.l1_u);
    Ok((cmp.report, Written { files: vec![csv, json] }))
}

/// `ln(e_prev/e_next) / ln(n_next/n_prev)`, or `None` at the error floor.
pub fn estimated_order(n_prev: usize, e_prev: f64, n_next: usize, e_next: f64) -> Option<f64> {
    if e_prev <= ORDER_FLOOR || e_next <= ORDER_FLOOR {
        return None;
    }
    Some((e_prev / e_next).ln() / (n_next as f64 / n_prev as f64).ln())
}

/// Convergence table over `cfg.sweep`; entries run concurrently.
pub fn sweep(cfg: &RunConfig) -> Result<(SweepTable, Vec<Comparison>), HarnessError> {
    let funcs = Arc::new(DerivedFunctions::new(&cfg.model)?);
    let results: Vec<Result<Comparison, HarnessError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .sweep
            .iter()
            .map(|&n| {
                let funcs = Arc::clone(&funcs);
                scope.spawn(move || compare_with(cfg, n, funcs))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let comparisons = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut entries: Vec<SweepEntry> = Vec::with_capacity(comparisons.len());
    for cmp in &comparisons {
        let r = &cmp.report;
        let order_c = entries.last().and_then(|p| estimated_order(p.n_cells, p.errors.l1_c, r.n_cells, r.errors.l1_c));
        entries.push(SweepEntry { n_cells: r.n_cells, columns: r.columns, errors: r.errors, order_c });
    }
    let table = SweepTable { title: cfg.title.clone(), model: cfg.model.label(), t_probe: cfg.t_probe, entries };
    Ok((table, comparisons))
}

pub fn sweep_csv(table: &SweepTable) -> String {
    let rows: Vec<Vec<String>> = table
        .entries
        .iter()
        .map(|e| {
            let mut row = vec![e.n_cells.to_string(), e.columns.to_string()];
            row.extend(numeric_row(&[e.errors.l1_c, e.errors.linf_c, e.errors.l1_u, e.errors.linf_u]));
            row.push(e.order_c.map(format_number).unwrap_or_else(|| "n/a".into()));
            row
        })
        .collect();
    render(&["n_cells", "columns", "l1_c", "linf_c", "l1_u", "linf_u", "order_c"], &rows)
}

/// Writes `<prefix>_sweep.csv`, `<prefix>_sweep.json` and one
/// `<prefix>_n<N>_profile.csv` per entry.
pub fn run_sweep(cfg: &RunConfig, out: &Path) -> Result<(SweepTable, Written), HarnessError> {
    let (table, comparisons) = sweep(cfg)?;
    ensure_dir(out)?;
    let mut written = Written::default();
    for cmp in &comparisons {
        let path = out_path(out, &cfg.prefix, &format!("n{}_profile.csv", cmp.report.n_cells));
        write_file(&path, &profile_csv(&cmp.rows))?;
        written.files.push(path);
    }
    let csv = out_path(out, &cfg.prefix, "sweep.csv");
    let json = out_path(out, &cfg.prefix, "sweep.json");
    write_file(&csv, &sweep_csv(&table))?;
    write_file(&json, &to_json(&table))?;
    written.files.extend([csv, json]);
    for e in &table.entries {
        info!("sweep N={}: L1(c)={:e} order={:?}", e.n_cells, e.errors.l1_c, e.order_c);
    }
    Ok((table, written))
}

/// Runs the scheme alone (general data allowed). Writes per-column
/// diagnostics, the probe-time profile and the last column.
pub fn run_simulate(cfg: &RunConfig, out: &Path) -> Result<(SimulateReport, Written), HarnessError> {
    let scheme = KineticScheme::new(cfg.scheme_config(cfg.n_cells))?;
    let dt = scheme.dt();
    let probe = (cfg.t_probe / dt).floor() as usize + 1;
    let mut probe_rows = Vec::new();
    let summary = scheme.march_with(&[EntropyFunction::Square], |s| {
        probe_rows.push(numeric_row(&[s.x, s.c[probe], s.u[probe]]));
    })?;
    let diags = &summary.diagnostics;
    let fold = |f: fn(&StepDiagnostics) -> f64, init: f64, op: fn(f64, f64) -> f64| diags.iter().map(f).fold(init, op);
    let report = SimulateReport {
        title: cfg.title.clone(),
        model: cfg.model.label(),
        n_cells: cfg.n_cells,
        columns: summary.final_state.n + 1,
        final_x: summary.final_state.x,
        cells_appended: summary.cells_appended,
        max_tv_increase: fold(|d| d.tv_increase, f64::NEG_INFINITY, f64::max),
        c_min: fold(|d| d.c_min, f64::INFINITY, f64::min),
        c_max: fold(|d| d.c_max, f64::NEG_INFINITY, f64::max),
        u_min: fold(|d| d.u_min, f64::INFINITY, f64::min),
        max_entropy_residual: fold(|d| d.entropy_max[0], f64::NEG_INFINITY, f64::max),
    };

    let column_rows: Vec<Vec<String>> = diags
        .iter()
        .map(|d| {
            let mut row = vec![d.n.to_string()];
            row.extend(numeric_row(&[
                d.x,
                d.dx,
                d.tv,
                d.tv_increase,
                d.c_min,
                d.c_max,
                d.u_min,
                d.u_max,
                d.cfl_ratio,
                d.entropy_max[0],
            ]));
            row
        })
        .collect();
    let fin = &summary.final_state;
    let final_rows: Vec<Vec<String>> =
        (1..fin.c.len()).map(|i| numeric_row(&[(i as f64 - 0.5) * dt, fin.c[i], fin.u[i]])).collect();

    ensure_dir(out)?;
    let files = [
        (
            "columns.csv",
            render(
                &["n", "x", "dx", "tv", "tv_increase", "c_min", "c_max", "u_min", "u_max", "cfl_ratio", "entropy_sq"],
                &column_rows,
            ),
        ),
        ("probe.csv", render(&["x", "c", "u"], &probe_rows)),
        ("final.csv", render(&["t", "c", "u"], &final_rows)),
        ("simulate.json", to_json(&report)),
    ];
    let mut written = Written::default();
    for (suffix, body) in files {
        let path = out_path(out, &cfg.prefix, suffix);
        write_file(&path, &body)?;
        written.files.push(path);
    }
    info!("simulate: {} columns to x = {:.6}", report.columns, report.final_x);
    Ok((report, written))
}

/// Exact profile at `t_probe` on [`EXACT_SAMPLES`] points of `[0, L]` plus the wave list.
pub fn run_exact(cfg: &RunConfig, out: &Path) -> Result<(ExactReport, Written), HarnessError> {
    let funcs = Arc::new(DerivedFunctions::new(&cfg.model)?);
    let solution = exact_solution(cfg, funcs)?;
    let rows: Vec<Vec<String>> = (0..EXACT_SAMPLES)
        .map(|k| {
            let x = cfg.length * k as f64 / (EXACT_SAMPLES - 1) as f64;
            let (c, u) = solution.sample(cfg.t_probe, x);
            numeric_row(&[x, c, u])
        })
        .collect();
    let report = ExactReport {
        title: cfg.title.clone(),
        problem: solution.problem.clone(),
        u0: solution.u0,
        t_probe: cfg.t_probe,
        waves: wave_reports(&solution, cfg.t_probe),
    };
    ensure_dir(out)?;
    let csv = out_path(out, &cfg.prefix, "exact.csv");
    let json = out_path(out, &cfg.prefix, "waves.json");
    write_file(&csv, &render(&["x", "c", "u"], &rows))?;
    write_file(&json, &to_json(&report))?;
    info!("exact: u0 = {}, waves {:?}", solution.u0, solution.waves.iter().map(|w| w.kind()).collect::<Vec<_>>());
    Ok((report, Written { files: vec![csv, json] }))
}

/// Dispatches on `kind`, writing into `out`.
pub fn run(kind: ExperimentKind, cfg: &RunConfig, out: &Path) -> Result<Written, HarnessError> {
    Ok(match kind {
        ExperimentKind::Simulate => run_simulate(cfg, out)?.1,
        ExperimentKind::Exact => run_exact(cfg, out)?.1,
        ExperimentKind::Compare => run_compare(cfg, out)?.1,
        ExperimentKind::Sweep => run_sweep(cfg, out)?.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isotherm::IsothermModel;

    fn row(x: f64, err: f64) -> ProfileRow {
        ProfileRow { x, c_exact: 0.5, u_exact: 1.0, c_scheme: 0.5 + err, u_scheme: 1.0 - 2.0 * err }
    }

    #[test]
    fn trapezoid_errors_and_order_invariance() {
        let rows = vec![row(0.0, 0.0), row(0.1, 0.2), row(0.3, 0.0)];
        let n = error_norms(&rows);
        assert!((n.l1_c - (0.5 * 0.1 * 0.2 + 0.5 * 0.2 * 0.2)).abs() < 1e-15);
        assert!((n.l1_u - 2.0 * n.l1_c).abs() < 1e-15);
        assert!((n.linf_c - 0.2).abs() < 1e-15);
        let reversed: Vec<_> = rows.iter().rev().copied().collect();
        assert_eq!(error_norms(&reversed), n);
    }

    #[test]
    fn order_formula() {
        let p = estimated_order(50, 4e-3, 100, 1e-3).unwrap();
        assert!((p - 2.0).abs() < 1e-12);
        assert_eq!(estimated_order(50, 1e-13, 100, 1e-14), None);
    }

    #[test]
    fn jump_detection_finds_step() {
        let xs: Vec<f64> = (0..21).map(|k| k as f64 * 0.05).collect();
        let cs: Vec<f64> = xs.iter().map(|&x| if x < 0.52 { 0.7 - 0.1 * x } else { 0.2 }).collect();
        let jumps = detect_jumps(&xs, &cs);
        assert_eq!(jumps.len(), 1);
        assert!((jumps[0] - 0.525).abs() < 1e-12);
        assert!(detect_jumps(&xs, &[0.3; 21]).is_empty());
    }

    #[test]
    fn constant_data_compares_exactly() {
        let cfg =
            RunConfig::riemann(IsothermModel::BinaryLangmuir { q1: 1.0, k1: 10.0, q2: 1.0, k2: 30.0 }, 0.4, 0.4, 0.3);
        let cmp = compare(&cfg, 50).unwrap();
        let e = cmp.report.errors;
        assert!(e.l1_c <= 1e-12 && e.linf_c <= 1e-12 && e.l1_u <= 1e-12 && e.linf_u <= 1e-12, "{e:?}");
        assert_eq!(cmp.report.probe_cell, 42);
    }

    #[test]
    fn profile_csv_header_only_when_empty() {
        assert_eq!(profile_csv(&[]), "x,c_exact,u_exact,c_scheme,u_scheme\n");
    }
}
