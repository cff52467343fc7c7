//! Strict flat `key = value` configuration with `[section]` headers.
//!
//! Every key is documented in the schema below; unknown keys, unknown
//! sections, duplicates, and type mismatches are rejected with their line
//! number. Defaults exist only for keys documented as optional, and the fully
//! resolved configuration can be echoed back in a canonical form that parses
//! to the same configuration (the echo is written next to experiment outputs
//! as the reproducibility record).
//!
//! Schema (`*` marks keys required for the kinds that read the section):
//!
//! ```text
//! [experiment]  kind* = sweep | svd | fbi-diagnostics | weights-audit
//!               seed = <u64, default 0>
//! [grid]        n_nodes* = <odd node count >= 3>   length = <f64, default 1>
//! [layout]      omega*, omega1*, omega_tilde*, o1*, o2*, o3*, omega0* = lo,hi
//!               x0* = <f64>   t_final = <f64, default 2 sup|x-x0|>
//!               dist_margin = <f64, default 2h>
//! [coefficients] a, c12, c21 = <field spec, default const:1>
//!               m1 = <f64, default 5>   theta1 = <f64, default 0.1>
//!               coupling_floor = <f64, default 0.1>
//! [truth]       c11*, c22* = <field spec>   background = <f64, default 0>
//! [inversion]   alpha = auto | <f64, default auto>   max_iters = <usize, 200>
//!               grad_tol = <f64, 1e-10>   fine_factor = <usize, 2>
//!               cfl = <f64, 0.9>   export_iterations = <bool, false>
//! [noise]       deltas* = <comma list of f64>   seeds = <usize, default 3>
//! [svd]         variant* = both-components | first-component
//!               fd_scale = <f64, default 1e-5>
//! [fbi]         dt = <f64, 0.005>   big_a = <f64, 2>   b = <f64, 1>
//!               n_signals = <usize, 20>   lambda = <f64, 10>
//!               parseval_dt = <f64, 0.1>   n_shift = <usize, 41>
//!               identity_lambda_low = <f64, 10>
//!               identity_lambda_high = <f64, 20>
//!               mean_lambda = <f64, 5>   mean_rho = <f64, 0.5>
//!               mean_nodes = <usize, 256>
//! [weights]     mu = <f64, 1>   b = <f64, 2>   b0 = <f64, 1.8>
//!               big_a = <f64, 2>   lambda = <f64, 2>   m = mid | <f64>
//!               s_nodes = <usize, 33>
//!               beta1, beta2, norm = <f64; all three or none (direct mode)>
//! ```
//!
//! Field specs: a plain number or `const:<v>` is a constant field;
//! `bump:center,radius,amp` (truth keys, rides on `background`) or
//! `bump:center,radius,amp,base` (coefficient keys) adds the compactly
//! supported profile `amp (1 - ((x-c)/r)^2)^4` on `|x-c| < r` to the base.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;
use wavepair_core::grid::{Grid, GridError, ScalarField};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: duplicate key {key}")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: unknown key {key}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: {key}: {msg}")]
    TypeError { line: usize, key: String, msg: String },
    #[error("missing required key {key}")]
    MissingRequired { key: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Sweep,
    Svd,
    FbiDiagnostics,
    WeightsAudit,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Svd => "svd",
            ExperimentKind::FbiDiagnostics => "fbi-diagnostics",
            ExperimentKind::WeightsAudit => "weights-audit",
        }
    }
}

/// Analytic coefficient profile: constant, or a smooth compact bump on a base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldSpec {
    Const(f64),
    Bump { center: f64, radius: f64, amp: f64, base: f64 },
}

impl FieldSpec {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            FieldSpec::Const(v) => v,
            FieldSpec::Bump { center, radius, amp, base } => {
                let u = (x - center) / radius;
                let w = 1.0 - u * u;
                if w > 0.0 {
                    base + amp * w * w * w * w
                } else {
                    base
                }
            }
        }
    }

    pub fn materialize(&self, grid: &Grid) -> Result<ScalarField, GridError> {
        ScalarField::from_fn(grid, |x| self.eval(x))
    }

    fn echo(&self, carries_base: bool) -> String {
        match *self {
            FieldSpec::Const(v) => format!("const:{v}"),
            FieldSpec::Bump { center, radius, amp, base } => {
                if carries_base {
                    format!("bump:{center},{radius},{amp},{base}")
                } else {
                    format!("bump:{center},{radius},{amp}")
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSpec {
    /// `1e-6` times the squared weighted data norm, resolved per run.
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MSpec {
    /// Midpoint of the admissible interval computed from the layout.
    Mid,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvdVariant {
    /// Both components, derivative orders one and two, observed on the
    /// observation window minus the second exclusion pocket.
    BothComponents,
    /// First component only, same orders, observed on the full window.
    FirstComponent,
}

impl SvdVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            SvdVariant::BothComponents => "both-components",
            SvdVariant::FirstComponent => "first-component",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridCfg {
    pub n_nodes: usize,
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct LayoutCfg {
    pub omega: (f64, f64),
    pub omega1: (f64, f64),
    pub omega_tilde: (f64, f64),
    pub o1: (f64, f64),
    pub o2: (f64, f64),
    pub o3: (f64, f64),
    pub omega0: (f64, f64),
    pub x0: f64,
    pub t_final: Option<f64>,
    pub dist_margin: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CoefficientsCfg {
    pub a: FieldSpec,
    pub c12: FieldSpec,
    pub c21: FieldSpec,
    pub m1: f64,
    pub theta1: f64,
    pub coupling_floor: f64,
}

#[derive(Debug, Clone)]
pub struct TruthCfg {
    pub c11: FieldSpec,
    pub c22: FieldSpec,
    pub background: f64,
}

#[derive(Debug, Clone)]
pub struct InversionCfg {
    pub alpha: AlphaSpec,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub fine_factor: usize,
    pub cfl: f64,
    pub export_iterations: bool,
}

#[derive(Debug, Clone)]
pub struct NoiseCfg {
    pub deltas: Vec<f64>,
    pub seeds: usize,
}

#[derive(Debug, Clone)]
pub struct SvdCfg {
    pub variant: SvdVariant,
    pub fd_scale: f64,
}

#[derive(Debug, Clone)]
pub struct FbiCfg {
    pub dt: f64,
    pub big_a: f64,
    pub b: f64,
    pub n_signals: usize,
    pub lambda: f64,
    pub parseval_dt: f64,
    pub n_shift: usize,
    pub identity_lambda_low: f64,
    pub identity_lambda_high: f64,
    pub mean_lambda: f64,
    pub mean_rho: f64,
    pub mean_nodes: usize,
}

#[derive(Debug, Clone)]
pub struct WeightsCfg {
    pub mu: f64,
    pub b: f64,
    pub b0: f64,
    pub big_a: f64,
    pub lambda: f64,
    pub m: MSpec,
    pub s_nodes: usize,
    /// `(beta1, beta2, norm)` bypassing the layout-derived values.
    pub direct: Option<(f64, f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub grid: Option<GridCfg>,
    pub layout: Option<LayoutCfg>,
    pub coefficients: CoefficientsCfg,
    pub truth: Option<TruthCfg>,
    pub inversion: InversionCfg,
    pub noise: Option<NoiseCfg>,
    pub svd: Option<SvdCfg>,
    pub fbi: FbiCfg,
    pub weights: WeightsCfg,
}

const SECTIONS: &[&str] = &[
    "experiment",
    "grid",
    "layout",
    "coefficients",
    "truth",
    "inversion",
    "noise",
    "svd",
    "fbi",
    "weights",
];

struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
    consumed: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let t = raw_line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if let Some(name) = t.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Syntax {
                        line,
                        msg: "section header must look like [name]".into(),
                    })?
                    .trim()
                    .to_string();
                if !SECTIONS.contains(&name.as_str()) {
                    return Err(ConfigError::UnknownSection { line, name });
                }
                section = Some(name);
                continue;
            }
            let (key, value) = t.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: "expected key = value".into(),
            })?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
                return Err(ConfigError::Syntax { line, msg: format!("bad key name {key:?}") });
            }
            let section = section.as_ref().ok_or_else(|| ConfigError::Syntax {
                line,
                msg: "key before any [section] header".into(),
            })?;
            let full = format!("{section}.{key}");
            if entries.contains_key(&full) {
                return Err(ConfigError::DuplicateKey { line, key: full });
            }
            entries.insert(full, (value.trim().to_string(), line));
        }
        Ok(Self { entries, consumed: Default::default() })
    }

    fn opt_raw(&self, key: &str) -> Option<(&str, usize)> {
        let hit = self.entries.get(key)?;
        self.consumed.borrow_mut().insert(key.to_string());
        Some((&hit.0, hit.1))
    }

    fn take<T>(
        &self,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, ConfigError> {
        match self.opt_raw(key) {
            None => Ok(None),
            Some((raw, line)) => parse(raw)
                .map(Some)
                .map_err(|msg| ConfigError::TypeError { line, key: key.to_string(), msg }),
        }
    }

    fn require<T>(
        &self,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, ConfigError> {
        self.take(key, parse)?
            .ok_or_else(|| ConfigError::MissingRequired { key: key.to_string() })
    }

    fn reject_unconsumed(&self) -> Result<(), ConfigError> {
        let consumed = self.consumed.borrow();
        let mut leftovers: Vec<(usize, &String)> = self
            .entries
            .iter()
            .filter(|(k, _)| !consumed.contains(*k))
            .map(|(k, (_, line))| (*line, k))
            .collect();
        leftovers.sort();
        if let Some((line, key)) = leftovers.first() {
            return Err(ConfigError::UnknownKey { line: *line, key: (*key).clone() });
        }
        Ok(())
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("expected a number, got {s:?}"))?;
    if !v.is_finite() {
        return Err(format!("number must be finite, got {s:?}"));
    }
    Ok(v)
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse().map_err(|_| format!("expected a nonnegative integer, got {s:?}"))
}

fn parse_u64(s: &str) -> Result<u64, String> {
    s.parse().map_err(|_| format!("expected a nonnegative integer, got {s:?}"))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got {s:?}")),
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected lo,hi, got {s:?}"))?;
    Ok((parse_f64(a.trim())?, parse_f64(b.trim())?))
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    let items: Result<Vec<f64>, String> =
        s.split(',').map(|p| parse_f64(p.trim())).collect();
    let v = items?;
    if v.is_empty() {
        return Err("list must not be empty".into());
    }
    Ok(v)
}

fn parse_field_spec(s: &str, truth_base: Option<f64>) -> Result<FieldSpec, String> {
    if let Some(rest) = s.strip_prefix("const:") {
        return Ok(FieldSpec::Const(parse_f64(rest.trim())?));
    }
    if let Some(rest) = s.strip_prefix("bump:") {
        let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        let nums: Result<Vec<f64>, String> = parts.iter().map(|p| parse_f64(p)).collect();
        let nums = nums?;
        let (expected, base) = match truth_base {
            Some(bg) => (3usize, bg),
            None => (4usize, *nums.last().unwrap_or(&0.0)),
        };
        if nums.len() != expected {
            return Err(format!(
                "bump takes {expected} numbers ({}), got {}",
                if truth_base.is_some() {
                    "center,radius,amp; the base comes from background"
                } else {
                    "center,radius,amp,base"
                },
                nums.len()
            ));
        }
        let (center, radius, amp) = (nums[0], nums[1], nums[2]);
        if radius <= 0.0 {
            return Err(format!("bump radius must be positive, got {radius}"));
        }
        return Ok(FieldSpec::Bump { center, radius, amp, base });
    }
    Ok(FieldSpec::Const(parse_f64(s)?))
}

fn parse_alpha(s: &str) -> Result<AlphaSpec, String> {
    if s == "auto" {
        return Ok(AlphaSpec::Auto);
    }
    let v = parse_f64(s)?;
    if v < 0.0 {
        return Err(format!("alpha must be nonnegative, got {v}"));
    }
    Ok(AlphaSpec::Value(v))
}

fn parse_m(s: &str) -> Result<MSpec, String> {
    if s == "mid" {
        return Ok(MSpec::Mid);
    }
    Ok(MSpec::Value(parse_f64(s)?))
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    match s {
        "sweep" => Ok(ExperimentKind::Sweep),
        "svd" => Ok(ExperimentKind::Svd),
        "fbi-diagnostics" => Ok(ExperimentKind::FbiDiagnostics),
        "weights-audit" => Ok(ExperimentKind::WeightsAudit),
        _ => Err(format!(
            "unknown kind {s:?}; expected sweep, svd, fbi-diagnostics, or weights-audit"
        )),
    }
}

fn parse_variant(s: &str) -> Result<SvdVariant, String> {
    match s {
        "both-components" => Ok(SvdVariant::BothComponents),
        "first-component" => Ok(SvdVariant::FirstComponent),
        _ => Err(format!("unknown variant {s:?}; expected both-components or first-component")),
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw = RawConfig::parse(text)?;

    let kind = raw.require("experiment.kind", parse_kind)?;
    let seed = raw.take("experiment.seed", parse_u64)?.unwrap_or(0);

    // A weights audit given the beta triple directly has no geometry to build,
    // so the grid and layout sections become optional for it.
    let direct_weights = kind == ExperimentKind::WeightsAudit
        && raw.entries.contains_key("weights.beta1");
    let needs_grid = !direct_weights
        && matches!(
            kind,
            ExperimentKind::Sweep | ExperimentKind::Svd | ExperimentKind::WeightsAudit
        );

    let grid = {
        let n_nodes = raw.take("grid.n_nodes", parse_usize)?;
        let length = raw.take("grid.length", parse_f64)?.unwrap_or(1.0);
        match (n_nodes, needs_grid) {
            (Some(n), _) => {
                if n < 3 {
                    return Err(ConfigError::Invalid(format!(
                        "grid.n_nodes must be at least 3, got {n}"
                    )));
                }
                Some(GridCfg { n_nodes: n, length })
            }
            (None, true) => {
                return Err(ConfigError::MissingRequired { key: "grid.n_nodes".into() })
            }
            (None, false) => None,
        }
    };

    let layout = {
        let omega = raw.take("layout.omega", parse_pair)?;
        let read_rest = omega.is_some() || needs_grid;
        if read_rest {
            if omega.is_none() {
                return Err(ConfigError::MissingRequired { key: "layout.omega".into() });
            }
            Some(LayoutCfg {
                omega: omega.unwrap(),
                omega1: raw.require("layout.omega1", parse_pair)?,
                omega_tilde: raw.require("layout.omega_tilde", parse_pair)?,
                o1: raw.require("layout.o1", parse_pair)?,
                o2: raw.require("layout.o2", parse_pair)?,
                o3: raw.require("layout.o3", parse_pair)?,
                omega0: raw.require("layout.omega0", parse_pair)?,
                x0: raw.require("layout.x0", parse_f64)?,
                t_final: raw.take("layout.t_final", parse_f64)?,
                dist_margin: raw.take("layout.dist_margin", parse_f64)?,
            })
        } else {
            None
        }
    };

    let coefficients = CoefficientsCfg {
        a: raw.take("coefficients.a", |s| parse_field_spec(s, None))?
            .unwrap_or(FieldSpec::Const(1.0)),
        c12: raw
            .take("coefficients.c12", |s| parse_field_spec(s, None))?
            .unwrap_or(FieldSpec::Const(1.0)),
        c21: raw
            .take("coefficients.c21", |s| parse_field_spec(s, None))?
            .unwrap_or(FieldSpec::Const(1.0)),
        m1: raw.take("coefficients.m1", parse_f64)?.unwrap_or(5.0),
        theta1: raw.take("coefficients.theta1", parse_f64)?.unwrap_or(0.1),
        coupling_floor: raw.take("coefficients.coupling_floor", parse_f64)?.unwrap_or(0.1),
    };

    let truth = {
        let background = raw.take("truth.background", parse_f64)?.unwrap_or(0.0);
        let c11 = raw.take("truth.c11", |s| parse_field_spec(s, Some(background)))?;
        let c22 = raw.take("truth.c22", |s| parse_field_spec(s, Some(background)))?;
        let needed = matches!(kind, ExperimentKind::Sweep | ExperimentKind::Svd);
        match (c11, c22) {
            (Some(c11), Some(c22)) => Some(TruthCfg { c11, c22, background }),
            (None, None) if !needed => None,
            (None, _) if needed => {
                return Err(ConfigError::MissingRequired { key: "truth.c11".into() })
            }
            (_, None) if needed => {
                return Err(ConfigError::MissingRequired { key: "truth.c22".into() })
            }
            _ => {
                return Err(ConfigError::Invalid(
                    "truth.c11 and truth.c22 must be given together".into(),
                ))
            }
        }
    };

    let inversion = InversionCfg {
        alpha: raw.take("inversion.alpha", parse_alpha)?.unwrap_or(AlphaSpec::Auto),
        max_iters: raw.take("inversion.max_iters", parse_usize)?.unwrap_or(200),
        grad_tol: raw.take("inversion.grad_tol", parse_f64)?.unwrap_or(1e-10),
        fine_factor: raw.take("inversion.fine_factor", parse_usize)?.unwrap_or(2),
        cfl: raw.take("inversion.cfl", parse_f64)?.unwrap_or(0.9),
        export_iterations: raw
            .take("inversion.export_iterations", parse_bool)?
            .unwrap_or(false),
    };
    if inversion.fine_factor == 0 {
        return Err(ConfigError::Invalid("inversion.fine_factor must be at least 1".into()));
    }
    if !(inversion.cfl > 0.0 && inversion.cfl <= 0.9) {
        return Err(ConfigError::Invalid(format!(
            "inversion.cfl must lie in (0, 0.9], got {}",
            inversion.cfl
        )));
    }

    let noise = {
        let deltas = raw.take("noise.deltas", parse_f64_list)?;
        let seeds = raw.take("noise.seeds", parse_usize)?.unwrap_or(3);
        match (deltas, kind) {
            (Some(deltas), _) => {
                if deltas.iter().any(|&d| d < 0.0) {
                    return Err(ConfigError::Invalid("noise levels must be nonnegative".into()));
                }
                if seeds == 0 {
                    return Err(ConfigError::Invalid("noise.seeds must be at least 1".into()));
                }
                Some(NoiseCfg { deltas, seeds })
            }
            (None, ExperimentKind::Sweep) => {
                return Err(ConfigError::MissingRequired { key: "noise.deltas".into() })
            }
            (None, _) => None,
        }
    };

    let svd = {
        let variant = raw.take("svd.variant", parse_variant)?;
        let fd_scale = raw.take("svd.fd_scale", parse_f64)?.unwrap_or(1e-5);
        match (variant, kind) {
            (Some(variant), _) => Some(SvdCfg { variant, fd_scale }),
            (None, ExperimentKind::Svd) => {
                return Err(ConfigError::MissingRequired { key: "svd.variant".into() })
            }
            (None, _) => None,
        }
    };

    let fbi = FbiCfg {
        dt: raw.take("fbi.dt", parse_f64)?.unwrap_or(0.005),
        big_a: raw.take("fbi.big_a", parse_f64)?.unwrap_or(2.0),
        b: raw.take("fbi.b", parse_f64)?.unwrap_or(1.0),
        n_signals: raw.take("fbi.n_signals", parse_usize)?.unwrap_or(20),
        lambda: raw.take("fbi.lambda", parse_f64)?.unwrap_or(10.0),
        parseval_dt: raw.take("fbi.parseval_dt", parse_f64)?.unwrap_or(0.1),
        n_shift: raw.take("fbi.n_shift", parse_usize)?.unwrap_or(41),
        identity_lambda_low: raw.take("fbi.identity_lambda_low", parse_f64)?.unwrap_or(10.0),
        identity_lambda_high: raw.take("fbi.identity_lambda_high", parse_f64)?.unwrap_or(20.0),
        mean_lambda: raw.take("fbi.mean_lambda", parse_f64)?.unwrap_or(5.0),
        mean_rho: raw.take("fbi.mean_rho", parse_f64)?.unwrap_or(0.5),
        mean_nodes: raw.take("fbi.mean_nodes", parse_usize)?.unwrap_or(256),
    };

    let weights = {
        let beta1 = raw.take("weights.beta1", parse_f64)?;
        let beta2 = raw.take("weights.beta2", parse_f64)?;
        let norm = raw.take("weights.norm", parse_f64)?;
        let direct = match (beta1, beta2, norm) {
            (Some(b1), Some(b2), Some(n)) => Some((b1, b2, n)),
            (None, None, None) => None,
            _ => {
                return Err(ConfigError::Invalid(
                    "weights.beta1, weights.beta2, weights.norm must be given together".into(),
                ))
            }
        };
        WeightsCfg {
            mu: raw.take("weights.mu", parse_f64)?.unwrap_or(1.0),
            b: raw.take("weights.b", parse_f64)?.unwrap_or(2.0),
            b0: raw.take("weights.b0", parse_f64)?.unwrap_or(1.8),
            big_a: raw.take("weights.big_a", parse_f64)?.unwrap_or(2.0),
            lambda: raw.take("weights.lambda", parse_f64)?.unwrap_or(2.0),
            m: raw.take("weights.m", parse_m)?.unwrap_or(MSpec::Mid),
            s_nodes: raw.take("weights.s_nodes", parse_usize)?.unwrap_or(33),
            direct,
        }
    };

    raw.reject_unconsumed()?;

    let config = ExperimentConfig {
        kind,
        seed,
        grid,
        layout,
        coefficients,
        truth,
        inversion,
        noise,
        svd,
        fbi,
        weights,
    };
    Ok(config)
}

impl ExperimentConfig {
    /// Canonical echo of the fully resolved configuration. Parsing the echo
    /// yields the same configuration; the echo of that parse is identical.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# resolved configuration");
        let _ = writeln!(s, "[experiment]");
        let _ = writeln!(s, "kind = {}", self.kind.as_str());
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(g) = &self.grid {
            let _ = writeln!(s, "[grid]");
            let _ = writeln!(s, "n_nodes = {}", g.n_nodes);
            let _ = writeln!(s, "length = {}", g.length);
        }
        if let Some(l) = &self.layout {
            let _ = writeln!(s, "[layout]");
            for (name, (lo, hi)) in [
                ("omega", l.omega),
                ("omega1", l.omega1),
                ("omega_tilde", l.omega_tilde),
                ("o1", l.o1),
                ("o2", l.o2),
                ("o3", l.o3),
                ("omega0", l.omega0),
            ] {
                let _ = writeln!(s, "{name} = {lo},{hi}");
            }
            let _ = writeln!(s, "x0 = {}", l.x0);
            if let Some(t) = l.t_final {
                let _ = writeln!(s, "t_final = {t}");
            }
            if let Some(m) = l.dist_margin {
                let _ = writeln!(s, "dist_margin = {m}");
            }
        }
        let c = &self.coefficients;
        let _ = writeln!(s, "[coefficients]");
        let _ = writeln!(s, "a = {}", c.a.echo(true));
        let _ = writeln!(s, "c12 = {}", c.c12.echo(true));
        let _ = writeln!(s, "c21 = {}", c.c21.echo(true));
        let _ = writeln!(s, "m1 = {}", c.m1);
        let _ = writeln!(s, "theta1 = {}", c.theta1);
        let _ = writeln!(s, "coupling_floor = {}", c.coupling_floor);
        if let Some(t) = &self.truth {
            let _ = writeln!(s, "[truth]");
            let _ = writeln!(s, "c11 = {}", t.c11.echo(false));
            let _ = writeln!(s, "c22 = {}", t.c22.echo(false));
            let _ = writeln!(s, "background = {}", t.background);
        }
        let inv = &self.inversion;
        let _ = writeln!(s, "[inversion]");
        match inv.alpha {
            AlphaSpec::Auto => {
                let _ = writeln!(s, "alpha = auto");
            }
            AlphaSpec::Value(v) => {
                let _ = writeln!(s, "alpha = {v}");
            }
        }
        let _ = writeln!(s, "max_iters = {}", inv.max_iters);
        let _ = writeln!(s, "grad_tol = {}", inv.grad_tol);
        let _ = writeln!(s, "fine_factor = {}", inv.fine_factor);
        let _ = writeln!(s, "cfl = {}", inv.cfl);
        let _ = writeln!(s, "export_iterations = {}", inv.export_iterations);
        if let Some(n) = &self.noise {
            let _ = writeln!(s, "[noise]");
            let list: Vec<String> = n.deltas.iter().map(|d| format!("{d}")).collect();
            let _ = writeln!(s, "deltas = {}", list.join(","));
            let _ = writeln!(s, "seeds = {}", n.seeds);
        }
        if let Some(v) = &self.svd {
            let _ = writeln!(s, "[svd]");
            let _ = writeln!(s, "variant = {}", v.variant.as_str());
            let _ = writeln!(s, "fd_scale = {}", v.fd_scale);
        }
        let f = &self.fbi;
        let _ = writeln!(s, "[fbi]");
        let _ = writeln!(s, "dt = {}", f.dt);
        let _ = writeln!(s, "big_a = {}", f.big_a);
        let _ = writeln!(s, "b = {}", f.b);
        let _ = writeln!(s, "n_signals = {}", f.n_signals);
        let _ = writeln!(s, "lambda = {}", f.lambda);
        let _ = writeln!(s, "parseval_dt = {}", f.parseval_dt);
        let _ = writeln!(s, "n_shift = {}", f.n_shift);
        let _ = writeln!(s, "identity_lambda_low = {}", f.identity_lambda_low);
        let _ = writeln!(s, "identity_lambda_high = {}", f.identity_lambda_high);
        let _ = writeln!(s, "mean_lambda = {}", f.mean_lambda);
        let _ = writeln!(s, "mean_rho = {}", f.mean_rho);
        let _ = writeln!(s, "mean_nodes = {}", f.mean_nodes);
        let w = &self.weights;
        let _ = writeln!(s, "[weights]");
        let _ = writeln!(s, "mu = {}", w.mu);
        let _ = writeln!(s, "b = {}", w.b);
        let _ = writeln!(s, "b0 = {}", w.b0);
        let _ = writeln!(s, "big_a = {}", w.big_a);
        let _ = writeln!(s, "lambda = {}", w.lambda);
        match w.m {
            MSpec::Mid => {
                let _ = writeln!(s, "m = mid");
            }
            MSpec::Value(v) => {
                let _ = writeln!(s, "m = {v}");
            }
        }
        let _ = writeln!(s, "s_nodes = {}", w.s_nodes);
        if let Some((b1, b2, n)) = w.direct {
            let _ = writeln!(s, "beta1 = {b1}");
            let _ = writeln!(s, "beta2 = {b2}");
            let _ = writeln!(s, "norm = {n}");
        }
        s
    }
}
