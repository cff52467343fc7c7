//! Linearized stability probe: assemble the Jacobian of the observation map
//! at the configured truth by finite differences over the free coefficient
//! nodes, then report its singular spectrum.
//!
//! Unlike the sweep, a violated coupling condition is not a refusal here: the
//! probe exists precisely to show what the data can and cannot see, so the
//! coupling status is measured and reported in the summary instead.

use super::{
    coupling_margin, default_initial_data, materialize, require_grid, require_layout,
    ExperimentError,
};
use crate::config::{ExperimentConfig, SvdVariant};
use crate::report::{ensure_dir, write_csv, write_text, Cell};
use std::fmt::Write as _;
use std::path::Path;
use wavepair_core::grid::ScalarField;
use wavepair_core::inversion::{
    build_linearized_map, stability_svd, DescentControls, InverseProblemSetup, StabilityReport,
};
use wavepair_core::solver::{AdmissibleSetSpec, Component};

#[derive(Debug)]
pub struct SvdOutcome {
    pub report: StabilityReport,
    pub variant: SvdVariant,
    /// Finite-difference probe size actually used.
    pub epsilon: f64,
    /// `min |c21|` on the marker region when the sign is uniform.
    pub coupling_margin: Option<f64>,
    pub coupling_floor: f64,
    pub block_size: usize,
}

/// Build the linearized map for the configured variant and write its
/// singular spectrum into `out`.
pub fn run_svd(cfg: &ExperimentConfig, out: &Path) -> Result<SvdOutcome, ExperimentError> {
    ensure_dir(out)?;
    write_text(&out.join("config-echo.txt"), &cfg.echo())?;

    let grid = require_grid(cfg)?;
    let layout = require_layout(cfg, &grid)?;
    let svd_cfg = cfg
        .svd
        .as_ref()
        .ok_or_else(|| crate::config::ConfigError::MissingRequired { key: "svd.variant".into() })?;
    let truth_cfg = cfg
        .truth
        .as_ref()
        .ok_or_else(|| crate::config::ConfigError::MissingRequired { key: "truth.c11".into() })?;

    let coeff = &cfg.coefficients;
    let a = materialize(&coeff.a, &grid)?;
    let c12 = materialize(&coeff.c12, &grid)?;
    let c21 = materialize(&coeff.c21, &grid)?;
    let cbar1 = materialize(&truth_cfg.c11, &grid)?;
    let cbar2 = materialize(&truth_cfg.c22, &grid)?;

    let margin = coupling_margin(&c21, &layout.omega0);

    let (region, components): (Vec<_>, Vec<Component>) = match svd_cfg.variant {
        SvdVariant::BothComponents => {
            (layout.omega_minus_o2(), vec![Component::Y1, Component::Y2])
        }
        SvdVariant::FirstComponent => (vec![layout.omega], vec![Component::Y1]),
    };

    let a_sup = a.sup_norm();
    let n_steps = super::step_count(layout.t_final, grid.h(), a_sup, cfg.inversion.cfl);
    let dt = layout.t_final / n_steps as f64;

    let setup = InverseProblemSetup {
        grid: grid.clone(),
        a,
        c12,
        c21,
        init: default_initial_data(&grid)?,
        t_final: layout.t_final,
        dt,
        region,
        components,
        orders: vec![1, 2],
        alpha: 0.0,
        c_ref1: ScalarField::constant(&grid, truth_cfg.background)?,
        c_ref2: ScalarField::constant(&grid, truth_cfg.background)?,
        admissible: AdmissibleSetSpec {
            m1: coeff.m1,
            theta1: coeff.theta1,
            varpi1: cbar1.clone(),
            varpi2: cbar2.clone(),
            omega_tilde: layout.omega_tilde,
            frozen_tol: 1e-12,
        },
        controls: DescentControls::default(),
    };

    let map = build_linearized_map(&setup, &cbar1, &cbar2, svd_cfg.fd_scale)?;
    let report = stability_svd(&map)?;

    let body: Vec<Vec<Cell>> = report
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &sigma)| vec![Cell::from(i), Cell::Float(sigma)])
        .collect();
    write_csv(&out.join("svd.csv"), &["index", "sigma"], &body)?;

    let outcome = SvdOutcome {
        report,
        variant: svd_cfg.variant,
        epsilon: map.epsilon,
        coupling_margin: margin,
        coupling_floor: coeff.coupling_floor,
        block_size: map.block_size(),
    };
    write_summary(out, cfg, &outcome)?;
    Ok(outcome)
}

fn write_summary(
    out: &Path,
    cfg: &ExperimentConfig,
    outcome: &SvdOutcome,
) -> Result<(), ExperimentError> {
    let r = &outcome.report;
    let mut s = String::new();
    let _ = writeln!(s, "linearized stability summary");
    let _ = writeln!(s, "variant: {}", outcome.variant.as_str());
    let _ = writeln!(
        s,
        "free nodes per coefficient block: {}",
        outcome.block_size
    );
    let _ = writeln!(s, "finite-difference probe size: {}", outcome.epsilon);
    let _ = writeln!(s, "singular values: {}", r.singular_values.len());
    let _ = writeln!(s, "sigma_max = {}", r.sigma_max);
    let _ = writeln!(s, "sigma_min = {}", r.sigma_min);
    let _ = writeln!(s, "condition = {}", r.condition);
    let _ = writeln!(s, "largest c11 column norm = {}", r.c11_max_column_norm);
    let _ = writeln!(s, "largest c22 column norm = {}", r.c22_max_column_norm);
    match outcome.coupling_margin {
        Some(m) if m >= outcome.coupling_floor => {
            let _ = writeln!(
                s,
                "coupling condition: satisfied, min |c21| = {m} on the marker region (floor {})",
                outcome.coupling_floor
            );
        }
        Some(m) => {
            let _ = writeln!(
                s,
                "coupling condition: VIOLATED, min |c21| = {m} below the floor {}",
                outcome.coupling_floor
            );
        }
        None => {
            let _ = writeln!(
                s,
                "coupling condition: VIOLATED, c21 changes sign or vanishes on the marker region"
            );
        }
    }
    let _ = writeln!(s, "seed: {}", cfg.seed);
    write_text(&out.join("summary.txt"), &s)?;
    Ok(())
}
