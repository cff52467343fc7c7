//! Weight bookkeeping audit: construct the weight core on the configured
//! layout (or take level constants directly), derive the admissible
//! normalization interval, the four level values, and the decay scalars, and
//! check every ordering and identity along the way.
//!
//! This experiment never refuses on a violated weight condition: finding and
//! reporting such violations is its purpose. Each stage failure is recorded
//! and the audit stops where the pipeline loses its footing.

use super::{mid_node_range, require_grid, require_layout, ExperimentError};
use crate::config::{ExperimentConfig, MSpec};
use crate::report::{ensure_dir, write_csv, write_text, Cell};
use std::fmt::Write as _;
use std::path::Path;
use wavepair_core::carleman::{
    admissible_m_interval, build_psi_hat, compute_beta_constants, psi_levels, tau_zeta_window,
    weight_eval_log, CarlemanParams, WeightLevels,
};
use wavepair_core::grid::ScalarField;

#[derive(Debug, Default)]
pub struct WeightsOutcome {
    /// `(beta1, beta2, norm)` once known.
    pub beta: Option<(f64, f64, f64)>,
    pub m_interval: Option<(f64, f64)>,
    pub m: Option<f64>,
    pub levels: Option<WeightLevels>,
    pub tau: Option<f64>,
    pub zeta: Option<f64>,
    pub window_length: Option<f64>,
    /// `|(phi3 - phi4) - tau phi3|`, the defining identity of `tau`.
    pub identity_defect: Option<f64>,
    pub identity_ok: Option<bool>,
    /// Whether some lattice exponent leaves double range (layout mode only).
    pub overflow: Option<bool>,
    pub max_exponent: Option<f64>,
    pub findings: Vec<String>,
}

impl WeightsOutcome {
    pub fn passed(&self) -> bool {
        self.findings.is_empty() && self.identity_ok == Some(true)
    }
}

pub fn run_weights_audit(
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<WeightsOutcome, ExperimentError> {
    ensure_dir(out)?;
    write_text(&out.join("config-echo.txt"), &cfg.echo())?;

    let w = &cfg.weights;
    let mut o = WeightsOutcome::default();
    let mut psi_hat_field: Option<(ScalarField, Vec<f64>)> = None;

    // Stage 1: level constants, from the layout or given directly.
    match w.direct {
        Some((beta1, beta2, norm)) => {
            o.beta = Some((beta1, beta2, norm));
        }
        None => match stage_core(cfg) {
            Ok((field, coords, beta1, beta2, norm)) => {
                psi_hat_field = Some((field, coords));
                o.beta = Some((beta1, beta2, norm));
            }
            Err(Stage::Refused(e)) => return Err(e),
            Err(Stage::Finding(msg)) => o.findings.push(msg),
        },
    }

    // Stage 2: normalization interval and the chosen constant.
    if let Some((beta1, beta2, norm)) = o.beta {
        match admissible_m_interval(beta1, beta2, norm, w.b0) {
            Ok(interval) => {
                o.m_interval = Some(interval);
                let m = match w.m {
                    MSpec::Mid => 0.5 * (interval.0 + interval.1),
                    MSpec::Value(v) => v,
                };
                o.m = Some(m);
                if !(m > interval.0 && m < interval.1) {
                    o.findings.push(format!(
                        "normalization constant {m} sits outside the admissible interval \
                         ({}, {})",
                        interval.0, interval.1
                    ));
                }
            }
            Err(e) => o.findings.push(format!("normalization interval: {e}")),
        }
    }

    // Stage 3: level values and their ordering.
    if let (Some((beta1, beta2, norm)), Some(m)) = (o.beta, o.m) {
        match psi_levels(beta1, beta2, norm, m, w.b, w.b0, w.mu) {
            Ok(levels) => o.levels = Some(levels),
            Err(e) => o.findings.push(format!("level ordering: {e}")),
        }
    }

    // Stage 4: decay scalars and the tau identity.
    if let Some(levels) = o.levels {
        match tau_zeta_window(&levels, w.mu, w.lambda, w.b, w.big_a) {
            Ok(t) => {
                o.tau = Some(t.tau);
                o.zeta = Some(t.zeta);
                o.window_length = Some(t.window_length);
                let phi3 = levels.phi[2];
                let phi4 = levels.phi[3];
                let defect = ((phi3 - phi4) - t.tau * phi3).abs();
                o.identity_defect = Some(defect);
                o.identity_ok = Some(defect <= 1e-12 * phi3);
            }
            Err(e) => o.findings.push(format!("decay scalars: {e}")),
        }
    }

    // Stage 5: lattice evaluation and overflow status (layout mode only).
    if let (Some((_, _, norm)), Some(m), Some(zeta), Some((field, _))) =
        (o.beta, o.m, o.zeta, psi_hat_field.as_ref())
    {
        match CarlemanParams::new(w.mu, m, w.b, w.b0, w.big_a, w.lambda, zeta, norm) {
            Ok(params) => {
                let n = w.s_nodes.max(2);
                let s_values: Vec<f64> = (0..n)
                    .map(|i| -w.b + 2.0 * w.b * i as f64 / (n - 1) as f64)
                    .collect();
                match weight_eval_log(field, &params, &s_values) {
                    Ok(ev) => {
                        let max_exp = ev.ell.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        o.max_exponent = Some(max_exp);
                        o.overflow = Some(ev.theta.is_none());
                    }
                    Err(e) => o.findings.push(format!("lattice evaluation: {e}")),
                }
            }
            Err(e) => o.findings.push(format!("parameter block: {e}")),
        }
    }

    write_files(out, cfg, &o, psi_hat_field.as_ref())?;
    Ok(o)
}

enum Stage {
    Refused(ExperimentError),
    Finding(String),
}

type CoreOutput = (ScalarField, Vec<f64>, f64, f64, f64);

/// Layout-mode core construction. Geometry failures are hard refusals (there
/// is nothing to audit without a valid layout); weight-specific failures are
/// findings.
fn stage_core(cfg: &ExperimentConfig) -> Result<CoreOutput, Stage> {
    let grid = require_grid(cfg).map_err(Stage::Refused)?;
    let layout = require_layout(cfg, &grid).map_err(Stage::Refused)?;
    let psi_hat =
        build_psi_hat(&grid, &layout.omega, &layout.omega0, &mid_node_range(&layout.omega0))
            .map_err(|e| Stage::Finding(format!("weight core construction: {e}")))?;
    let (beta1, beta2) =
        compute_beta_constants(&psi_hat.field, psi_hat.norm, &layout.o2, &layout.omega0)
            .map_err(|e| Stage::Finding(format!("level constants: {e}")))?;
    let coords = grid.nodes().to_vec();
    Ok((psi_hat.field, coords, beta1, beta2, psi_hat.norm))
}

fn write_files(
    out: &Path,
    cfg: &ExperimentConfig,
    o: &WeightsOutcome,
    psi_hat: Option<&(ScalarField, Vec<f64>)>,
) -> Result<(), ExperimentError> {
    let mut body: Vec<Vec<Cell>> = Vec::new();
    let mut push = |name: &str, v: f64| {
        body.push(vec![Cell::from(name), Cell::Float(v)]);
    };
    if let Some((b1, b2, n)) = o.beta {
        push("beta1", b1);
        push("beta2", b2);
        push("norm", n);
    }
    if let Some((lo, hi)) = o.m_interval {
        push("m_lo", lo);
        push("m_hi", hi);
    }
    if let Some(m) = o.m {
        push("m", m);
    }
    if let Some(l) = o.levels {
        for (i, v) in l.psi.iter().enumerate() {
            push(&format!("psi{}", i + 1), *v);
        }
        for (i, v) in l.phi.iter().enumerate() {
            push(&format!("phi{}", i + 1), *v);
        }
    }
    if let Some(t) = o.tau {
        push("tau", t);
    }
    if let Some(z) = o.zeta {
        push("zeta", z);
    }
    if let Some(wl) = o.window_length {
        push("window_length", wl);
    }
    if let Some(d) = o.identity_defect {
        push("tau_identity_defect", d);
    }
    if let Some(e) = o.max_exponent {
        push("max_exponent", e);
    }
    if let Some(flag) = o.overflow {
        push("overflow", if flag { 1.0 } else { 0.0 });
    }
    write_csv(&out.join("weights.csv"), &["name", "value"], &body)?;

    let psi_body: Vec<Vec<Cell>> = match psi_hat {
        Some((field, coords)) => coords
            .iter()
            .enumerate()
            .map(|(i, &x)| vec![Cell::from(i), Cell::Float(x), Cell::Float(field.get(i))])
            .collect(),
        None => Vec::new(),
    };
    write_csv(&out.join("psi.csv"), &["node", "x", "psi_hat"], &psi_body)?;

    let mut s = String::new();
    let _ = writeln!(s, "weight bookkeeping audit");
    let _ = writeln!(
        s,
        "mode: {}",
        if cfg.weights.direct.is_some() { "direct level constants" } else { "layout-derived" }
    );
    if let Some((b1, b2, n)) = o.beta {
        let _ = writeln!(s, "level constants: beta1 = {b1}, beta2 = {b2}, norm = {n}");
        let _ = writeln!(s, "gap margin beta2 - (beta1 + norm)/2 = {}", b2 - 0.5 * (b1 + n));
    }
    if let Some((lo, hi)) = o.m_interval {
        let _ = writeln!(s, "admissible normalization interval: ({lo}, {hi})");
    }
    if let Some(m) = o.m {
        let _ = writeln!(s, "normalization constant M = {m}");
    }
    match o.levels {
        Some(l) => {
            let _ = writeln!(
                s,
                "levels: psi1 = {}, psi2 = {}, psi3 = {}, psi4 = {}",
                l.psi[0], l.psi[1], l.psi[2], l.psi[3]
            );
            let _ = writeln!(s, "ordering psi1 < psi4 < psi3 < psi2: PASS");
        }
        None => {
            let _ = writeln!(s, "ordering psi1 < psi4 < psi3 < psi2: not reached");
        }
    }
    if let (Some(t), Some(d), Some(ok)) = (o.tau, o.identity_defect, o.identity_ok) {
        let _ = writeln!(
            s,
            "tau = {t}, identity defect {d}: {}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if let (Some(z), Some(wl)) = (o.zeta, o.window_length) {
        let _ = writeln!(s, "zeta = {z}, matched window length = {wl}");
    }
    if let (Some(flag), Some(e)) = (o.overflow, o.max_exponent) {
        let _ = writeln!(
            s,
            "lattice exponents: max = {e}, double-range overflow: {}",
            if flag { "YES" } else { "no" }
        );
    }
    if o.findings.is_empty() {
        let _ = writeln!(s, "findings: none");
    } else {
        for f in &o.findings {
            let _ = writeln!(s, "finding: {f}");
        }
    }
    let _ = writeln!(s, "seed: {}", cfg.seed);
    write_text(&out.join("summary.txt"), &s)?;
    Ok(())
}
