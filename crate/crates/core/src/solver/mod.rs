//! Explicit leapfrog solver for the coupled 1D wave pair
//!
//! ```text
//! d2/dt2 y_j - d/dx ( a(x) d/dx y_j ) + c_j1 y_1 + c_j2 y_2 = 0,   j = 1, 2
//! ```
//!
//! on `[0, X]` with homogeneous Neumann ends, conservative flux form, and
//! ghost-node reflection at the boundary. The flux form keeps the discrete
//! operator self-adjoint in the trapezoid inner product, which the energy
//! audit and the adjoint gradient both rely on.

mod observe;

pub use observe::*;

use crate::grid::{Grid, GridError, IndexRange, ScalarField};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("CFL number {cfl:.6} exceeds the stability margin {limit}")]
    CflViolation { cfl: f64, limit: f64 },
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
    #[error("time horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("solution lost finiteness at step {step}")]
    NonFinite { step: usize },
    #[error("trajectories are not on matching lattices: {0}")]
    IncompatibleTrajectories(String),
    #[error("coarsening factor {factor} does not divide the lattice ({n_cells} cells, {n_steps} steps)")]
    BadRestriction { factor: usize, n_cells: usize, n_steps: usize },
    #[error("initial data has zero energy norm; the bound ratio is undefined")]
    ZeroInitialData,
    #[error("component {component} fails Neumann compatibility at the {side} end: |one-sided slope| = {slope:.3e} > {tol:.3e}")]
    NeumannIncompatible { component: &'static str, side: &'static str, slope: f64, tol: f64 },
    #[error("observation needs {needed} snapshots for stencil order {order}, trajectory has {have}")]
    TooFewSnapshots { order: usize, needed: usize, have: usize },
    #[error("requested derivative order {0} is not in 0..=2")]
    BadDerivativeOrder(usize),
    #[error("observation region contains no nodes")]
    EmptySubdomain,
    #[error("observation records disagree: {0}")]
    RecordMismatch(String),
}

#[derive(Debug, Error)]
pub enum CoefficientError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("principal coefficient must exceed theta1 = {theta1}: a({node}) = {value}")]
    LowerBound { node: usize, value: f64, theta1: f64 },
    #[error("{which} exceeds the admissible sup bound m1 = {m1}: sup = {sup}")]
    SupBound { which: &'static str, sup: f64, m1: f64 },
    #[error("{which} must equal the frozen profile on the known region: node {node}, value {value}, expected {expected}")]
    FrozenRegionMismatch { which: &'static str, node: usize, value: f64, expected: f64 },
}

/// A-priori bounds defining the admissible coefficient class.
#[derive(Debug, Clone, Copy)]
pub struct AdmissibilityBounds {
    /// Sup bound on a and its first two derivatives.
    pub m0: f64,
    /// Sup bound on the unknown zeroth-order coefficients.
    pub m1: f64,
    /// Escape-ray slack in (0, 1).
    pub theta0: f64,
    /// Uniform lower bound on a.
    pub theta1: f64,
}

/// Known data defining the admissible set: diagonal coefficients are frozen to
/// `varpi` on `omega_tilde` and capped at `m1` elsewhere.
#[derive(Debug, Clone)]
pub struct AdmissibleSetSpec {
    pub m1: f64,
    pub theta1: f64,
    pub varpi1: ScalarField,
    pub varpi2: ScalarField,
    pub omega_tilde: IndexRange,
    /// Tolerance for the frozen-region equality test.
    pub frozen_tol: f64,
}

/// Coefficient bundle for one forward problem. Use [`CoefficientSet::validated`]
/// to certify membership in the admissible class before solving.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub a: ScalarField,
    pub c11: ScalarField,
    pub c12: ScalarField,
    pub c21: ScalarField,
    pub c22: ScalarField,
}

impl CoefficientSet {
    pub fn validated(self, spec: &AdmissibleSetSpec) -> Result<Self, CoefficientError> {
        for (node, &value) in self.a.values().iter().enumerate() {
            if value <= spec.theta1 {
                return Err(CoefficientError::LowerBound { node, value, theta1: spec.theta1 });
            }
        }
        let cap = spec.m1 * (1.0 + 1e-12) + 1e-300;
        for (which, field) in [("c11", &self.c11), ("c22", &self.c22)] {
            let sup = field.sup_norm();
            if sup > cap {
                return Err(CoefficientError::SupBound { which, sup, m1: spec.m1 });
            }
        }
        for (which, field, frozen) in [
            ("c11", &self.c11, &spec.varpi1),
            ("c22", &self.c22, &spec.varpi2),
        ] {
            for node in spec.omega_tilde.nodes() {
                let value = field.get(node);
                let expected = frozen.get(node);
                if (value - expected).abs() > spec.frozen_tol {
                    return Err(CoefficientError::FrozenRegionMismatch { which, node, value, expected });
                }
            }
        }
        Ok(self)
    }
}

/// Cauchy data for both components.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub y10: ScalarField,
    pub y11: ScalarField,
    pub y20: ScalarField,
    pub y21: ScalarField,
}

impl InitialData {
    /// Discrete Neumann compatibility: the one-sided boundary slope of each
    /// position component must vanish within `tol`.
    pub fn check_neumann_compatibility(&self, grid: &Grid, tol: f64) -> Result<(), SolverError> {
        let h = grid.h();
        let n = grid.n_nodes();
        for (component, field) in [("y10", &self.y10), ("y20", &self.y20)] {
            let v = field.values();
            let left = (v[1] - v[0]).abs() / h;
            if left > tol {
                return Err(SolverError::NeumannIncompatible { component, side: "left", slope: left, tol });
            }
            let right = (v[n - 1] - v[n - 2]).abs() / h;
            if right > tol {
                return Err(SolverError::NeumannIncompatible { component, side: "right", slope: right, tol });
            }
        }
        Ok(())
    }
}

/// Dense space-time record of one forward solve, both components, all steps.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Grid,
    dt: f64,
    n_steps: usize,
    y1: Vec<f64>,
    y2: Vec<f64>,
}

impl Trajectory {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_snapshots(&self) -> usize {
        self.n_steps + 1
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn y1_at(&self, n: usize) -> &[f64] {
        let w = self.grid.n_nodes();
        &self.y1[n * w..(n + 1) * w]
    }

    pub fn y2_at(&self, n: usize) -> &[f64] {
        let w = self.grid.n_nodes();
        &self.y2[n * w..(n + 1) * w]
    }

    pub fn component(&self, c: Component, n: usize) -> &[f64] {
        match c {
            Component::Y1 => self.y1_at(n),
            Component::Y2 => self.y2_at(n),
        }
    }

    /// Pointwise difference, demanding identical lattices.
    pub fn difference(&self, other: &Trajectory) -> Result<Trajectory, SolverError> {
        if self.grid != other.grid {
            return Err(SolverError::IncompatibleTrajectories("different grids".into()));
        }
        if self.n_steps != other.n_steps || (self.dt - other.dt).abs() > 1e-14 * self.dt {
            return Err(SolverError::IncompatibleTrajectories(format!(
                "steps {} vs {}, dt {} vs {}",
                self.n_steps, other.n_steps, self.dt, other.dt
            )));
        }
        Ok(Trajectory {
            grid: self.grid.clone(),
            dt: self.dt,
            n_steps: self.n_steps,
            y1: self.y1.iter().zip(&other.y1).map(|(a, b)| a - b).collect(),
            y2: self.y2.iter().zip(&other.y2).map(|(a, b)| a - b).collect(),
        })
    }

    /// Keep every `factor`-th node and snapshot. Exact subsampling, no
    /// interpolation, so fine-lattice data lands on the coarse lattice
    /// without committing the inverse crime.
    pub fn restrict(&self, factor: usize) -> Result<Trajectory, SolverError> {
        let n_cells = self.grid.n_nodes() - 1;
        if factor == 0 || n_cells % factor != 0 || self.n_steps % factor != 0 {
            return Err(SolverError::BadRestriction { factor, n_cells, n_steps: self.n_steps });
        }
        let coarse = Grid::uniform(n_cells / factor + 1, self.grid.length())?;
        let w = self.grid.n_nodes();
        let cw = coarse.n_nodes();
        let cs = self.n_steps / factor;
        let mut y1 = Vec::with_capacity((cs + 1) * cw);
        let mut y2 = Vec::with_capacity((cs + 1) * cw);
        for n in 0..=cs {
            let base = n * factor * w;
            for i in 0..cw {
                y1.push(self.y1[base + i * factor]);
            }
            for i in 0..cw {
                y2.push(self.y2[base + i * factor]);
            }
        }
        Ok(Trajectory { grid: coarse, dt: self.dt * factor as f64, n_steps: cs, y1, y2 })
    }
}

/// Arithmetic means of `a` at the cell midpoints.
pub(crate) fn half_node_average(a: &[f64]) -> Vec<f64> {
    a.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Conservative flux operator (div a grad) with Neumann ghost reflection.
/// `a_half` holds cell-midpoint values, `out` receives the result.
pub(crate) fn apply_operator(a_half: &[f64], h: f64, y: &[f64], out: &mut [f64]) {
    let n = y.len();
    let inv_h2 = 1.0 / (h * h);
    out[0] = 2.0 * a_half[0] * (y[1] - y[0]) * inv_h2;
    for i in 1..n - 1 {
        out[i] = (a_half[i] * (y[i + 1] - y[i]) - a_half[i - 1] * (y[i] - y[i - 1])) * inv_h2;
    }
    out[n - 1] = 2.0 * a_half[n - 2] * (y[n - 2] - y[n - 1]) * inv_h2;
}

/// Leapfrog time integration. The step count is `round(t_final / dt)` so the
/// horizon is hit exactly; the effective step is reported by the trajectory.
pub fn solve_coupled_wave(
    grid: &Grid,
    coeffs: &CoefficientSet,
    init: &InitialData,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory, SolverError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SolverError::BadTimeStep(dt));
    }
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(SolverError::BadHorizon(t_final));
    }
    let n = grid.n_nodes();
    let h = grid.h();
    let n_steps = ((t_final / dt).round() as usize).max(1);
    let dt = t_final / n_steps as f64;

    let a_max = coeffs.a.values().iter().fold(0.0_f64, |m, &v| m.max(v));
    let cfl = a_max.sqrt() * dt / h;
    const CFL_LIMIT: f64 = 0.9;
    if cfl > CFL_LIMIT * (1.0 + 1e-12) {
        return Err(SolverError::CflViolation { cfl, limit: CFL_LIMIT });
    }

    let a_half = half_node_average(coeffs.a.values());
    let (c11, c12) = (coeffs.c11.values(), coeffs.c12.values());
    let (c21, c22) = (coeffs.c21.values(), coeffs.c22.values());
    let dt2 = dt * dt;

    let mut y1 = Vec::with_capacity((n_steps + 1) * n);
    let mut y2 = Vec::with_capacity((n_steps + 1) * n);
    y1.extend_from_slice(init.y10.values());
    y2.extend_from_slice(init.y20.values());

    let mut op1 = vec![0.0; n];
    let mut op2 = vec![0.0; n];

    // Second-order Taylor start: y^1 = y^0 + dt v^0 + (dt^2/2) (A y^0 - C y^0).
    {
        let (u1, u2) = (init.y10.values(), init.y20.values());
        apply_operator(&a_half, h, u1, &mut op1);
        apply_operator(&a_half, h, u2, &mut op2);
        for i in 0..n {
            let acc1 = op1[i] - c11[i] * u1[i] - c12[i] * u2[i];
            let acc2 = op2[i] - c21[i] * u1[i] - c22[i] * u2[i];
            y1.push(u1[i] + dt * init.y11.get(i) + 0.5 * dt2 * acc1);
            y2.push(u2[i] + dt * init.y21.get(i) + 0.5 * dt2 * acc2);
        }
    }

    for step in 1..n_steps {
        let base_p = (step - 1) * n;
        let base_c = step * n;
        {
            let cur1 = &y1[base_c..base_c + n];
            let cur2 = &y2[base_c..base_c + n];
            apply_operator(&a_half, h, cur1, &mut op1);
            apply_operator(&a_half, h, cur2, &mut op2);
        }
        for i in 0..n {
            let (u1, u2) = (y1[base_c + i], y2[base_c + i]);
            let acc1 = op1[i] - c11[i] * u1 - c12[i] * u2;
            let acc2 = op2[i] - c21[i] * u1 - c22[i] * u2;
            let next1 = 2.0 * u1 - y1[base_p + i] + dt2 * acc1;
            let next2 = 2.0 * u2 - y2[base_p + i] + dt2 * acc2;
            y1.push(next1);
            y2.push(next2);
        }
        let tail = y1.len() - n;
        if !(y1[tail..].iter().all(|v| v.is_finite()) && y2[tail..].iter().all(|v| v.is_finite())) {
            return Err(SolverError::NonFinite { step: step + 1 });
        }
    }

    Ok(Trajectory { grid: grid.clone(), dt, n_steps, y1, y2 })
}

/// Staggered leapfrog energy, one value per step interval:
///
/// ```text
/// E^{n+1/2} = 1/2 || (y^{n+1} - y^n) / dt ||^2  +  1/2 <a grad y^{n+1}, grad y^n>
/// ```
///
/// summed over both components, trapezoid mass and midpoint flux. This is the
/// quadratic form the scheme conserves exactly for zero coupling.
pub fn energy(traj: &Trajectory, a: &ScalarField) -> Vec<f64> {
    let grid = traj.grid();
    let n = grid.n_nodes();
    let h = grid.h();
    let dt = traj.dt();
    let a_half = half_node_average(a.values());
    let mut out = Vec::with_capacity(traj.n_steps());
    for step in 0..traj.n_steps() {
        let mut e = 0.0;
        for comp in [Component::Y1, Component::Y2] {
            let cur = traj.component(comp, step);
            let nxt = traj.component(comp, step + 1);
            for i in 0..n {
                let v = (nxt[i] - cur[i]) / dt;
                e += 0.5 * grid.trap_weight(i) * v * v * h;
            }
            for i in 0..n - 1 {
                let gc = (cur[i + 1] - cur[i]) / h;
                let gn = (nxt[i + 1] - nxt[i]) / h;
                e += 0.5 * a_half[i] * gn * gc * h;
            }
        }
        out.push(e);
    }
    out
}

fn h1_norm_sq(values: &[f64], grid: &Grid) -> f64 {
    let h = grid.h();
    let mut acc = 0.0;
    for (i, &v) in values.iter().enumerate() {
        acc += grid.trap_weight(i) * v * v * h;
    }
    for w in values.windows(2) {
        let g = (w[1] - w[0]) / h;
        acc += g * g * h;
    }
    acc
}

fn l2_norm_sq(values: &[f64], grid: &Grid) -> f64 {
    let h = grid.h();
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| grid.trap_weight(i) * v * v * h)
        .sum()
}

/// Ratio of the largest snapshot H1 norm (both components) to the energy norm
/// of the Cauchy data. A finite, moderate value witnesses the a-priori
/// well-posedness estimate at the discrete level.
pub fn verify_wellposedness_bound(traj: &Trajectory, init: &InitialData) -> Result<f64, SolverError> {
    let grid = traj.grid();
    let denom_sq = h1_norm_sq(init.y10.values(), grid)
        + h1_norm_sq(init.y20.values(), grid)
        + l2_norm_sq(init.y11.values(), grid)
        + l2_norm_sq(init.y21.values(), grid);
    if denom_sq < 1e-300 {
        return Err(SolverError::ZeroInitialData);
    }
    let mut sup_sq = 0.0_f64;
    for n in 0..traj.n_snapshots() {
        let s = h1_norm_sq(traj.y1_at(n), grid) + h1_norm_sq(traj.y2_at(n), grid);
        sup_sq = sup_sq.max(s);
    }
    Ok((sup_sq / denom_sq).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::grid101;
    use std::f64::consts::PI;

    fn free_coeffs(grid: &Grid) -> CoefficientSet {
        CoefficientSet {
            a: ScalarField::constant(grid, 1.0).unwrap(),
            c11: ScalarField::constant(grid, 0.0).unwrap(),
            c12: ScalarField::constant(grid, 0.0).unwrap(),
            c21: ScalarField::constant(grid, 0.0).unwrap(),
            c22: ScalarField::constant(grid, 0.0).unwrap(),
        }
    }

    fn cosine_mode(grid: &Grid) -> InitialData {
        InitialData {
            y10: ScalarField::from_fn(grid, |x| (PI * x).cos()).unwrap(),
            y11: ScalarField::constant(grid, 0.0).unwrap(),
            y20: ScalarField::constant(grid, 0.0).unwrap(),
            y21: ScalarField::constant(grid, 0.0).unwrap(),
        }
    }

    /// The scheme propagates the discrete cosine eigenmode exactly: the
    /// computed snapshots must match cos(pi x_i) cos(n Omega) to roundoff,
    /// where sin(Omega/2) = dt w_h / 2 and w_h = (2/h) sin(pi h / 2).
    #[test]
    fn discrete_eigenmode_is_exact() {
        let grid = grid101();
        let traj =
            solve_coupled_wave(&grid, &free_coeffs(&grid), &cosine_mode(&grid), 1.0, 0.005)
                .unwrap();
        let h = grid.h();
        let wh = 2.0 / h * (PI * h / 2.0).sin();
        let omega = 2.0 * (traj.dt() * wh / 2.0).asin();
        let mut worst = 0.0_f64;
        for n in 0..traj.n_snapshots() {
            let phase = (n as f64 * omega).cos();
            for (i, &x) in grid.nodes().iter().enumerate() {
                let expected = (PI * x).cos() * phase;
                worst = worst.max((traj.y1_at(n)[i] - expected).abs());
            }
        }
        assert!(worst < 1e-10, "worst deviation {worst}");
    }

    #[test]
    fn eigenmode_convergence_is_second_order_in_sup_over_trajectory() {
        // measure sup over snapshots of the max-norm error against the
        // continuum mode; halving h must cut it by about 4
        let mut errors = Vec::new();
        for n_nodes in [51usize, 101] {
            let grid = Grid::uniform(n_nodes, 1.0).unwrap();
            let dt = 0.5 * grid.h();
            let traj =
                solve_coupled_wave(&grid, &free_coeffs(&grid), &cosine_mode(&grid), 1.0, dt)
                    .unwrap();
            let mut worst = 0.0_f64;
            for n in 0..traj.n_snapshots() {
                let t = traj.time(n);
                for (i, &x) in grid.nodes().iter().enumerate() {
                    let exact = (PI * x).cos() * (PI * t).cos();
                    worst = worst.max((traj.y1_at(n)[i] - exact).abs());
                }
            }
            errors.push(worst);
        }
        let ratio = errors[0] / errors[1];
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn cfl_violation_is_refused() {
        let grid = grid101();
        let err = solve_coupled_wave(&grid, &free_coeffs(&grid), &cosine_mode(&grid), 1.0, 0.05)
            .unwrap_err();
        assert!(matches!(err, SolverError::CflViolation { .. }));
    }

    #[test]
    fn staggered_energy_is_conserved_without_coupling() {
        let grid = grid101();
        let traj =
            solve_coupled_wave(&grid, &free_coeffs(&grid), &cosine_mode(&grid), 1.0, 0.005)
                .unwrap();
        let a = ScalarField::constant(&grid, 1.0).unwrap();
        let e = energy(&traj, &a);
        let e0 = e[0];
        assert!(e0 > 0.0);
        let drift = e
            .iter()
            .fold(0.0_f64, |m, &v| m.max((v - e0).abs()))
            / e0;
        assert!(drift < 1e-12, "drift {drift}");
    }

    #[test]
    fn wellposedness_ratio_is_one_for_the_conserved_mode() {
        let grid = grid101();
        let init = cosine_mode(&grid);
        let traj = solve_coupled_wave(&grid, &free_coeffs(&grid), &init, 1.0, 0.005).unwrap();
        let ratio = verify_wellposedness_bound(&traj, &init).unwrap();
        // the mode keeps |y| <= initial H1 size; ratio stays right at 1
        assert!(ratio > 0.9 && ratio <= 1.0 + 1e-6, "ratio {ratio}");

        let zero = InitialData {
            y10: ScalarField::constant(&grid, 0.0).unwrap(),
            y11: ScalarField::constant(&grid, 0.0).unwrap(),
            y20: ScalarField::constant(&grid, 0.0).unwrap(),
            y21: ScalarField::constant(&grid, 0.0).unwrap(),
        };
        let zt = solve_coupled_wave(&grid, &free_coeffs(&grid), &zero, 1.0, 0.005).unwrap();
        assert!(matches!(
            verify_wellposedness_bound(&zt, &zero),
            Err(SolverError::ZeroInitialData)
        ));
    }

    #[test]
    fn restriction_subsamples_nodes_and_steps() {
        let fine = Grid::uniform(201, 1.0).unwrap();
        let traj =
            solve_coupled_wave(&fine, &free_coeffs(&fine), &cosine_mode(&fine), 1.0, 0.0025)
                .unwrap();
        let coarse = traj.restrict(2).unwrap();
        assert_eq!(coarse.grid().n_nodes(), 101);
        assert_eq!(coarse.n_steps(), traj.n_steps() / 2);
        for i in 0..101 {
            assert_eq!(coarse.y1_at(3)[i], traj.y1_at(6)[2 * i]);
        }
        assert!(matches!(
            traj.restrict(3),
            Err(SolverError::BadRestriction { .. })
        ));
    }

    #[test]
    fn coefficient_validation_enforces_bounds_and_frozen_region() {
        let grid = grid101();
        let omega_tilde = IndexRange::new(50, 101);
        let varpi = ScalarField::constant(&grid, 0.5).unwrap();
        let spec = AdmissibleSetSpec {
            m1: 5.0,
            theta1: 0.5,
            varpi1: varpi.clone(),
            varpi2: varpi.clone(),
            omega_tilde,
            frozen_tol: 1e-12,
        };
        let good = CoefficientSet {
            a: ScalarField::constant(&grid, 1.0).unwrap(),
            c11: ScalarField::constant(&grid, 0.5).unwrap(),
            c12: ScalarField::constant(&grid, 1.0).unwrap(),
            c21: ScalarField::constant(&grid, 1.0).unwrap(),
            c22: ScalarField::constant(&grid, 0.5).unwrap(),
        };
        assert!(good.clone().validated(&spec).is_ok());

        let mut low_a = good.clone();
        low_a.a = ScalarField::constant(&grid, 0.4).unwrap();
        assert!(matches!(
            low_a.validated(&spec),
            Err(CoefficientError::LowerBound { .. })
        ));

        let mut big_c = good.clone();
        big_c.c11 = ScalarField::constant(&grid, 6.0).unwrap();
        assert!(matches!(
            big_c.validated(&spec),
            Err(CoefficientError::SupBound { which: "c11", .. })
        ));

        let mut off_frozen = good;
        let mut vals = vec![0.5; 101];
        vals[70] = 0.6;
        off_frozen.c11 = ScalarField::new(&grid, vals).unwrap();
        assert!(matches!(
            off_frozen.validated(&spec),
            Err(CoefficientError::FrozenRegionMismatch { node: 70, .. })
        ));
    }

    #[test]
    fn neumann_compatibility_check() {
        let grid = grid101();
        let flat = cosine_mode(&grid);
        // cos(pi x) has one-sided slope O(h) at the ends
        assert!(flat.check_neumann_compatibility(&grid, 0.05).is_ok());
        let ramp = InitialData {
            y10: ScalarField::from_fn(&grid, |x| x).unwrap(),
            y11: ScalarField::constant(&grid, 0.0).unwrap(),
            y20: ScalarField::constant(&grid, 0.0).unwrap(),
            y21: ScalarField::constant(&grid, 0.0).unwrap(),
        };
        assert!(matches!(
            ramp.check_neumann_compatibility(&grid, 0.05),
            Err(SolverError::NeumannIncompatible { component: "y10", .. })
        ));
    }
}
