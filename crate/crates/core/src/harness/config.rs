use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::isotherm::{BetForm, IsothermModel};
use crate::kinetic::{CflMode, DataProfile, SchemeConfig, VelocityUpdate};
use crate::riemann::RiemannProblem;

pub const DEFAULT_T_END: f64 = 1.2;
pub const DEFAULT_N_CELLS: usize = 50;
pub const DEFAULT_LENGTH: f64 = 0.1;
pub const DEFAULT_CFL_SAFETY: f64 = 0.9;
pub const DEFAULT_T_PROBE: f64 = 1.0;
pub const DEFAULT_SWEEP: [usize; 4] = [50, 100, 200, 400];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    title: Option<String>,
    kind: Option<String>,
    model: RawModel,
    data: RawData,
    #[serde(default)]
    scheme: RawScheme,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(rename = "type")]
    kind: String,
    k1: Option<f64>,
    k2: Option<f64>,
    q1: Option<f64>,
    q2: Option<f64>,
    q: Option<f64>,
    k: Option<f64>,
    cs: Option<f64>,
    inv_cs: Option<f64>,
    form: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawProfile {
    Constant(f64),
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    c_minus: Option<f64>,
    c_plus: Option<f64>,
    u_plus: Option<f64>,
    c_boundary: Option<RawProfile>,
    u_boundary: Option<RawProfile>,
    c_initial: Option<RawProfile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheme {
    t_end: Option<f64>,
    n_cells: Option<i64>,
    length: Option<f64>,
    velocity_update: Option<String>,
    cfl_safety: Option<f64>,
    cfl_mode: Option<String>,
    extension_cells: Option<i64>,
    t_probe: Option<f64>,
    sweep: Option<Vec<i64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    prefix: Option<String>,
}

/// Which runner a config is meant for; the CLI subcommand takes precedence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Simulate,
    Exact,
    Compare,
    Sweep,
}

/// Boundary and initial data of a run.
#[derive(Debug, Clone)]
pub enum RunData {
    Riemann { c_minus: f64, c_plus: f64, u_plus: f64 },
    General { c_boundary: DataProfile, u_boundary: DataProfile, c_initial: DataProfile },
}

/// A validated run description with defaults applied.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub title: Option<String>,
    pub kind: Option<ExperimentKind>,
    pub model: IsothermModel,
    pub data: RunData,
    pub t_end: f64,
    pub n_cells: usize,
    pub length: f64,
    pub velocity_update: VelocityUpdate,
    pub cfl_safety: f64,
    pub cfl_mode: CflMode,
    pub extension_cells: Option<usize>,
    pub t_probe: f64,
    pub sweep: Vec<usize>,
    pub output_dir: PathBuf,
    pub prefix: String,
}

impl RunConfig {
    /// Riemann run with every default.
    pub fn riemann(model: IsothermModel, c_minus: f64, c_plus: f64, u_plus: f64) -> Self {
        Self {
            title: None,
            kind: None,
            model,
            data: RunData::Riemann { c_minus, c_plus, u_plus },
            t_end: DEFAULT_T_END,
            n_cells: DEFAULT_N_CELLS,
            length: DEFAULT_LENGTH,
            velocity_update: VelocityUpdate::FiniteDifference,
            cfl_safety: DEFAULT_CFL_SAFETY,
            cfl_mode: CflMode::Adaptive,
            extension_cells: None,
            t_probe: DEFAULT_T_PROBE,
            sweep: DEFAULT_SWEEP.to_vec(),
            output_dir: PathBuf::from("out"),
            prefix: "run".into(),
        }
    }

    pub fn scheme_config(&self, n_cells: usize) -> SchemeConfig {
        let (c_boundary, u_boundary, c_initial) = match &self.data {
            RunData::Riemann { c_minus, c_plus, u_plus } => {
                (DataProfile::Constant(*c_plus), DataProfile::Constant(*u_plus), DataProfile::Constant(*c_minus))
            }
            RunData::General { c_boundary, u_boundary, c_initial } => {
                (c_boundary.clone(), u_boundary.clone(), c_initial.clone())
            }
        };
        SchemeConfig {
            model: self.model,
            t_end: self.t_end,
            n_cells,
            length: self.length,
            c_boundary,
            u_boundary,
            c_initial,
            velocity_update: self.velocity_update,
            cfl_safety: self.cfl_safety,
            cfl_mode: self.cfl_mode,
            extension_cells: self.extension_cells,
        }
    }

    pub fn riemann_problem(&self) -> Option<RiemannProblem> {
        match self.data {
            RunData::Riemann { c_minus, c_plus, u_plus } => {
                Some(RiemannProblem::new(self.model, c_minus, c_plus, u_plus))
            }
            RunData::General { .. } => None,
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, HarnessError> {
    let src = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    let mut cfg = parse_config(&src)?;
    if !src.contains("prefix") {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            cfg.prefix = stem.to_string();
        }
    }
    Ok(cfg)
}

/// 1-based line of `key` inside `[section]`, for error messages.
fn locate(src: &str, section: &str, key: &str) -> Option<usize> {
    let header = format!("[{section}]");
    let mut inside = section.is_empty();
    for (k, line) in src.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            inside = t == header;
            if inside && key.is_empty() {
                return Some(k + 1);
            }
            continue;
        }
        if inside {
            if let Some((lhs, _)) = t.split_once('=') {
                if lhs.trim() == key {
                    return Some(k + 1);
                }
            }
        }
    }
    None
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

pub fn parse_config(src: &str) -> Result<RunConfig, HarnessError> {
    let raw: RawConfig = toml::from_str(src).map_err(|e| {
        let line = e.span().map(|s| line_of(src, s.start));
        HarnessError::config(line, e.message().trim().to_string())
    })?;
    let err = |section: &str, key: &str, msg: String| HarnessError::config(locate(src, section, key), msg);

    let kind = match raw.kind.as_deref() {
        None => None,
        Some("simulate") => Some(ExperimentKind::Simulate),
        Some("exact") => Some(ExperimentKind::Exact),
        Some("compare") => Some(ExperimentKind::Compare),
        Some("sweep") => Some(ExperimentKind::Sweep),
        Some(other) => {
            return Err(err("", "kind", format!("kind = {other:?}; expected simulate, exact, compare or sweep")))
        }
    };
    let model = parse_model(&raw.model, &err)?;
    model.validate().map_err(|e| err("model", "", format!("model: {e}")))?;

    let d = &raw.data;
    let data = if d.c_boundary.is_some() || d.u_boundary.is_some() || d.c_initial.is_some() {
        let profile = |p: &Option<RawProfile>,
                       scalar: Option<f64>,
                       key: &str,
                       fallback: &str|
         -> Result<DataProfile, HarnessError> {
            match (p, scalar) {
                (Some(RawProfile::Constant(v)), _) => Ok(DataProfile::Constant(*v)),
                (Some(RawProfile::Piecewise { breaks, values }), _) => {
                    if values.len() != breaks.len() + 1 || breaks.windows(2).any(|w| w[0] > w[1]) {
                        return Err(err(
                            "data",
                            key,
                            format!("data.{key}: need sorted breaks and one more value than breaks"),
                        ));
                    }
                    Ok(DataProfile::piecewise(breaks.clone(), values.clone()))
                }
                (None, Some(v)) => Ok(DataProfile::Constant(v)),
                (None, None) => Err(err("data", "", format!("data.{fallback} required"))),
            }
        };
        RunData::General {
            c_boundary: profile(&d.c_boundary, d.c_plus, "c_boundary", "c_plus")?,
            u_boundary: profile(&d.u_boundary, d.u_plus, "u_boundary", "u_plus")?,
            c_initial: profile(&d.c_initial, d.c_minus, "c_initial", "c_minus")?,
        }
    } else {
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| err("data", "", format!("data.{key} required")));
        RunData::Riemann {
            c_minus: need(d.c_minus, "c_minus")?,
            c_plus: need(d.c_plus, "c_plus")?,
            u_plus: need(d.u_plus, "u_plus")?,
        }
    };
    if let RunData::Riemann { c_minus, c_plus, u_plus } = data {
        for (key, v) in [("c_minus", c_minus), ("c_plus", c_plus)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(err("data", key, format!("data.{key} = {v} must lie in [0, 1]")));
            }
        }
        if !(u_plus > 0.0 && u_plus.is_finite()) {
            return Err(err("data", "u_plus", format!("data.u_plus = {u_plus} must be positive")));
        }
    }

    let s = &raw.scheme;
    let positive_int = |v: Option<i64>, key: &str, default: usize| -> Result<usize, HarnessError> {
        match v {
            None => Ok(default),
            Some(n) if n >= 1 => Ok(n as usize),
            Some(n) => Err(err("scheme", key, format!("scheme.{key} = {n} must be at least 1"))),
        }
    };
    let t_end = s.t_end.unwrap_or(DEFAULT_T_END);
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(err("scheme", "t_end", format!("scheme.t_end = {t_end} must be positive")));
    }
    let n_cells = positive_int(s.n_cells, "n_cells", DEFAULT_N_CELLS)?;
    let length = s.length.unwrap_or(DEFAULT_LENGTH);
    if !(length >= 0.0 && length.is_finite()) {
        return Err(err("scheme", "length", format!("scheme.length = {length} must be non-negative")));
    }
    let cfl_safety = s.cfl_safety.unwrap_or(DEFAULT_CFL_SAFETY);
    if !(cfl_safety > 0.0 && cfl_safety <= 1.0) {
        return Err(err("scheme", "cfl_safety", format!("scheme.cfl_safety = {cfl_safety} out of range (0, 1]")));
    }
    let velocity_update = match s.velocity_update.as_deref() {
        None | Some("finite-difference") => VelocityUpdate::FiniteDifference,
        Some("riemann-invariant") => VelocityUpdate::RiemannInvariant,
        Some("finite-difference-uncentered") => VelocityUpdate::FiniteDifferenceUncentered,
        Some(other) => {
            return Err(err(
                "scheme",
                "velocity_update",
                format!("scheme.velocity_update = {other:?}; expected finite-difference, riemann-invariant or finite-difference-uncentered"),
            ))
        }
    };
    let cfl_mode = match s.cfl_mode.as_deref() {
        None | Some("adaptive") => CflMode::Adaptive,
        Some("uniform") => CflMode::Uniform,
        Some(other) => {
            return Err(err("scheme", "cfl_mode", format!("scheme.cfl_mode = {other:?}; expected adaptive or uniform")))
        }
    };
    if cfl_mode == CflMode::Uniform && velocity_update != VelocityUpdate::RiemannInvariant {
        return Err(err(
            "scheme",
            "cfl_mode",
            "scheme.cfl_mode = uniform requires velocity_update = riemann-invariant".into(),
        ));
    }
    let extension_cells = match s.extension_cells {
        None => None,
        Some(_) => Some(positive_int(s.extension_cells, "extension_cells", 1)?),
    };
    let t_probe = s.t_probe.unwrap_or(DEFAULT_T_PROBE);
    if !(t_probe > 0.0 && t_probe < t_end) {
        return Err(err("scheme", "t_probe", format!("scheme.t_probe = {t_probe} must lie in (0, t_end)")));
    }
    let sweep = match &s.sweep {
        None => DEFAULT_SWEEP.to_vec(),
        Some(list) => {
            if list.len() < 2 || list.iter().any(|&n| n < 1) || list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(err(
                    "scheme",
                    "sweep",
                    "scheme.sweep must be a strictly increasing list of at least 2 positive cell counts".into(),
                ));
            }
            list.iter().map(|&n| n as usize).collect()
        }
    };

    let prefix = raw.output.prefix.clone().unwrap_or_else(|| "run".into());
    if prefix.is_empty() || prefix.contains(['/', '\\']) {
        return Err(err("output", "prefix", format!("output.prefix = {prefix:?} must be a plain file-name stem")));
    }
    let dir = raw.output.dir.clone().unwrap_or_else(|| "out".into());
    if dir.is_empty() {
        return Err(err("output", "dir", "output.dir must not be empty".into()));
    }

    Ok(RunConfig {
        title: raw.title,
        kind,
        model,
        data,
        t_end,
        n_cells,
        length,
        velocity_update,
        cfl_safety,
        cfl_mode,
        extension_cells,
        t_probe,
        sweep,
        output_dir: PathBuf::from(dir),
        prefix,
    })
}

fn parse_model<E>(m: &RawModel, err: &E) -> Result<IsothermModel, HarnessError>
where
    E: Fn(&str, &str, String) -> HarnessError,
{
    let need = |v: Option<f64>, key: &str| {
        v.ok_or_else(|| err("model", "type", format!("model.{key} required for type {}", m.kind)))
    };
    let reject = |present: &[(&str, bool)]| -> Result<(), HarnessError> {
        match present.iter().find(|(_, p)| *p) {
            Some((key, _)) => Err(err("model", key, format!("model.{key} not used by type {}", m.kind))),
            None => Ok(()),
        }
    };
    match m.kind.as_str() {
        "inert_rational" => {
            reject(&[
                ("k2", m.k2.is_some()),
                ("q1", m.q1.is_some()),
                ("q2", m.q2.is_some()),
                ("q", m.q.is_some()),
                ("k", m.k.is_some()),
                ("cs", m.cs.is_some()),
                ("inv_cs", m.inv_cs.is_some()),
                ("form", m.form.is_some()),
            ])?;
            Ok(IsothermModel::InertRational { k1: need(m.k1, "k1")? })
        }
        "bet" => {
            reject(&[("k1", m.k1.is_some()), ("k2", m.k2.is_some()), ("q1", m.q1.is_some()), ("q2", m.q2.is_some())])?;
            let cs = match (m.cs, m.inv_cs) {
                (Some(_), Some(_)) => {
                    return Err(err("model", "inv_cs", "give either model.cs or model.inv_cs, not both".into()))
                }
                (Some(cs), None) => cs,
                (None, Some(inv)) => 1.0 / inv,
                (None, None) => {
                    return Err(err("model", "type", "model.cs or model.inv_cs required for type bet".into()))
                }
            };
            let form = match m.form.as_deref() {
                None | Some("standard") => BetForm::Standard,
                Some("as-printed") => BetForm::AsPrinted,
                Some(other) => {
                    return Err(err(
                        "model",
                        "form",
                        format!("model.form = {other:?}; expected standard or as-printed"),
                    ))
                }
            };
            Ok(IsothermModel::Bet { q: need(m.q, "q")?, k: need(m.k, "k")?, cs, form })
        }
        "binary_langmuir" => {
            reject(&[
                ("q", m.q.is_some()),
                ("k", m.k.is_some()),
                ("cs", m.cs.is_some()),
                ("inv_cs", m.inv_cs.is_some()),
                ("form", m.form.is_some()),
            ])?;
            Ok(IsothermModel::BinaryLangmuir {
                q1: need(m.q1, "q1")?,
                k1: need(m.k1, "k1")?,
                q2: need(m.q2, "q2")?,
                k2: need(m.k2, "k2")?,
            })
        }
        other => Err(err(
            "model",
            "type",
            format!("model.type = {other:?}; expected inert_rational, bet or binary_langmuir"),
        )),
    }
}
