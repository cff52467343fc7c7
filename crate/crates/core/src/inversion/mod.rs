//! Coefficient identification from subdomain observations: admissible-set
//! projection, output least-squares misfit with an exact discrete adjoint
//! gradient, projected-gradient descent, and an SVD probe of the linearized
//! observation map.

mod adjoint;
mod linearized;

pub use adjoint::*;
pub use linearized::*;

use crate::grid::{Grid, GridError, IndexRange, ScalarField};
use crate::solver::{
    observe, solve_coupled_wave, AdmissibleSetSpec, CoefficientError, CoefficientSet, Component,
    InitialData, ObservationRecord, SolverError, Trajectory,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InversionError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Coefficient(#[from] CoefficientError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid inverse-problem setup: {0}")]
    BadSetup(String),
    #[error("singular value decomposition did not converge")]
    SvdFailure,
}

/// Descent loop knobs for [`reconstruct`].
#[derive(Debug, Clone, Copy)]
pub struct DescentControls {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_init: f64,
    /// Sufficient-decrease fraction of the predicted reduction.
    pub armijo: f64,
    /// Below this step the line search is declared stalled.
    pub min_step: f64,
}

impl Default for DescentControls {
    fn default() -> Self {
        Self { max_iters: 200, grad_tol: 1e-10, step_init: 1.0, armijo: 1e-4, min_step: 1e-12 }
    }
}

/// Frozen problem description shared by misfit, gradient, descent, and the
/// linearized map: geometry, fixed coefficients, initial data, the time
/// lattice, what is observed, and the regularization reference.
#[derive(Debug, Clone)]
pub struct InverseProblemSetup {
    pub grid: Grid,
    pub a: ScalarField,
    pub c12: ScalarField,
    pub c21: ScalarField,
    pub init: InitialData,
    pub t_final: f64,
    pub dt: f64,
    pub region: Vec<IndexRange>,
    pub components: Vec<Component>,
    pub orders: Vec<usize>,
    pub alpha: f64,
    pub c_ref1: ScalarField,
    pub c_ref2: ScalarField,
    pub admissible: AdmissibleSetSpec,
    pub controls: DescentControls,
}

impl InverseProblemSetup {
    /// Forward solve with the diagonal coefficients swapped in.
    pub fn forward(&self, c11: &ScalarField, c22: &ScalarField) -> Result<Trajectory, InversionError> {
        let coeffs = CoefficientSet {
            a: self.a.clone(),
            c11: c11.clone(),
            c12: self.c12.clone(),
            c21: self.c21.clone(),
            c22: c22.clone(),
        }
        .validated(&self.admissible)?;
        Ok(solve_coupled_wave(&self.grid, &coeffs, &self.init, self.t_final, self.dt)?)
    }

    /// Observation of a trajectory with this setup's region and trace list.
    pub fn observe_traces(&self, traj: &Trajectory) -> Result<ObservationRecord, InversionError> {
        Ok(observe(traj, &self.region, &self.components, &self.orders)?)
    }
}

/// True when the off-diagonal coupling is uniformly bounded away from zero
/// with one sign on every node of `omega0`: either `c21 >= c0` throughout or
/// `-c21 >= c0` throughout. This is what lets observations of the first
/// component see the second coefficient.
pub fn check_coupling_condition(c21: &ScalarField, omega0: &IndexRange, c0: f64) -> bool {
    debug_assert!(c0 > 0.0, "coupling floor must be positive");
    let positive = omega0.nodes().all(|i| c21.get(i) >= c0);
    let negative = omega0.nodes().all(|i| -c21.get(i) >= c0);
    positive || negative
}

/// Project a coefficient pair onto the admissible set: clip to the sup bound
/// and overwrite with the known values on the frozen region. Idempotent and
/// nonexpansive in the sup norm.
pub fn project_admissible(
    c11: &ScalarField,
    c22: &ScalarField,
    spec: &AdmissibleSetSpec,
) -> (ScalarField, ScalarField) {
    let clip = |field: &ScalarField, known: &ScalarField| {
        let mut out = field.clone();
        for (i, v) in out.values_mut().iter_mut().enumerate() {
            *v = v.clamp(-spec.m1, spec.m1);
            if spec.omega_tilde.contains(i) {
                *v = known.get(i);
            }
        }
        out
    };
    (clip(c11, &spec.varpi1), clip(c22, &spec.varpi2))
}

/// Tikhonov output least-squares misfit:
///
/// ```text
/// J(c) = 1/2 sum_traces || sim - data ||^2_{L2(obs x (0,T))}
///      + alpha (||c11 - ref1||^2 + ||c22 - ref2||^2)_{L2(0,X)}
/// ```
///
/// The traces and their time-derivative orders come from the setup; simulated
/// and measured traces are differentiated with the same stencils.
pub fn misfit(
    c11: &ScalarField,
    c22: &ScalarField,
    setup: &InverseProblemSetup,
    data: &ObservationRecord,
) -> Result<f64, InversionError> {
    let traj = setup.forward(c11, c22)?;
    let sim = setup.observe_traces(&traj)?;
    sim.check_same_shape(data).map_err(InversionError::Solver)?;
    let mut j = 0.0;
    for (s, d) in sim.traces.iter().zip(&data.traces) {
        let diff: Vec<f64> = s.values.iter().zip(&d.values).map(|(a, b)| a - b).collect();
        j += 0.5 * sim.weighted_norm_sq(&diff);
    }
    j += regularization(c11, c22, setup);
    Ok(j)
}

pub(crate) fn regularization(
    c11: &ScalarField,
    c22: &ScalarField,
    setup: &InverseProblemSetup,
) -> f64 {
    if setup.alpha == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (field, reference) in [(c11, &setup.c_ref1), (c22, &setup.c_ref2)] {
        for i in 0..field.len() {
            let d = field.get(i) - reference.get(i);
            acc += setup.grid.trap_weight(i) * d * d;
        }
    }
    setup.alpha * acc * setup.grid.h()
}


#[cfg(test)]
mod tests {
    use super::test_setup::{bump, small_setup};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn coupling_condition_branches() {
        let grid = Grid::uniform(101, 1.0).unwrap();
        let omega0 = IndexRange::from_coords(&grid, 0.76, 0.84).unwrap();
        let ones = ScalarField::constant(&grid, 1.0).unwrap();
        assert!(check_coupling_condition(&ones, &omega0, 0.5));

        // negative branch: x - 0.9 is at most -0.06 on [0.76, 0.84]
        let negative = ScalarField::from_fn(&grid, |x| x - 0.9).unwrap();
        assert!(check_coupling_condition(&negative, &omega0, 0.05));

        let signed = ScalarField::from_fn(&grid, |x| x - 0.8).unwrap();
        assert!(!check_coupling_condition(&signed, &omega0, 0.01));
    }

    #[test]
    fn projection_is_idempotent_and_clips() {
        let (setup, truth1, truth2) = small_setup(0.0);
        let spec = &setup.admissible;
        let (p1, p2) = project_admissible(&truth1, &truth2, spec);
        // truth is admissible already
        assert_eq!(p1.values(), truth1.values());
        assert_eq!(p2.values(), truth2.values());

        let wild = ScalarField::from_fn(&setup.grid, |x| 40.0 * (x - 0.3)).unwrap();
        let (q1, q2) = project_admissible(&wild, &wild, spec);
        let (r1, r2) = project_admissible(&q1, &q2, spec);
        assert_eq!(q1.values(), r1.values());
        assert_eq!(q2.values(), r2.values());
        // clipped outside the frozen region, overwritten inside
        assert_eq!(q1.get(0), -5.0);
        for i in spec.omega_tilde.nodes() {
            assert_eq!(q1.get(i), spec.varpi1.get(i));
            assert_eq!(q2.get(i), spec.varpi2.get(i));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn projection_is_nonexpansive_in_sup_norm(scale in 0.1f64..20.0, shift in -3.0f64..3.0) {
            let (setup, _, _) = small_setup(0.0);
            let spec = &setup.admissible;
            let u = ScalarField::from_fn(&setup.grid, |x| scale * (7.0 * x).sin() + shift).unwrap();
            let v = ScalarField::from_fn(&setup.grid, |x| scale * (3.0 * x).cos() - shift).unwrap();
            let (pu, _) = project_admissible(&u, &u, spec);
            let (pv, _) = project_admissible(&v, &v, spec);
            let before = u
                .values()
                .iter()
                .zip(v.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            let after = pu
                .values()
                .iter()
                .zip(pv.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            prop_assert!(after <= before + 1e-15);
        }
    }

    #[test]
    fn misfit_vanishes_at_truth_with_same_grid_data() {
        let (setup, truth1, truth2) = small_setup(0.0);
        let traj = setup.forward(&truth1, &truth2).unwrap();
        let data = setup.observe_traces(&traj).unwrap();
        let j = misfit(&truth1, &truth2, &setup, &data).unwrap();
        assert!(j <= 1e-16, "misfit at truth: {j}");
    }

    #[test]
    fn misfit_nonnegative_and_regularization_adds() {
        let (mut setup, truth1, truth2) = small_setup(0.0);
        let traj = setup.forward(&truth1, &truth2).unwrap();
        let data = setup.observe_traces(&traj).unwrap();

        let off1 = ScalarField::from_fn(&setup.grid, |x| 0.5 + bump(x, 0.18, 0.1, 0.1)).unwrap();
        let off2 = ScalarField::constant(&setup.grid, 0.5).unwrap();
        let j0 = misfit(&off1, &off2, &setup, &data).unwrap();
        assert!(j0 > 0.0);

        setup.alpha = 1e-3;
        let j1 = misfit(&off1, &off2, &setup, &data).unwrap();
        assert!(j1 > j0);
        // at c = c_ref the penalty contributes nothing
        let j_ref = misfit(&truth1, &truth2, &setup, &data).unwrap();
        let expected = regularization(&truth1, &truth2, &setup);
        assert!((j_ref - expected).abs() <= 1e-16);
    }
}
