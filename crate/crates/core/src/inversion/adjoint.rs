//! Exact discrete adjoint of the leapfrog forward map and the projected
//! gradient descent built on it.
//!
//! The gradient is the transpose of the actual discrete pipeline (scheme,
//! observation sampling, time-derivative stencils, quadrature weights), not a
//! discretization of the continuous adjoint PDE, so finite-difference checks
//! agree to stencil truncation error rather than grid truncation error.

use super::{regularization, InverseProblemSetup, InversionError};
use crate::grid::ScalarField;
use crate::inversion::project_admissible;
use crate::quad::trapezoid_weights;
use crate::solver::{
    apply_operator, half_node_average, time_derivative_transpose, Component, ObservationRecord,
};

/// Gradient of the misfit with respect to both diagonal coefficients, as L2
/// densities, plus the misfit value from the shared forward solve.
#[derive(Debug, Clone)]
pub struct GradientEval {
    pub grad_c11: ScalarField,
    pub grad_c22: ScalarField,
    pub misfit: f64,
}

/// How a descent run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescentStatus {
    Converged,
    MaxIterations,
    LineSearchStall,
}

impl DescentStatus {
    pub fn label(self) -> &'static str {
        match self {
            DescentStatus::Converged => "converged",
            DescentStatus::MaxIterations => "max-iterations",
            DescentStatus::LineSearchStall => "line-search-stall",
        }
    }
}

/// One row of the descent log, recorded at the top of each outer iteration.
#[derive(Debug, Clone, Copy)]
pub struct IterationRow {
    pub iter: usize,
    pub misfit: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct ReconstructionOutcome {
    pub c11: ScalarField,
    pub c22: ScalarField,
    pub misfit: f64,
    pub status: DescentStatus,
    pub log: Vec<IterationRow>,
}

/// Apply the Euclidean transpose of the spatial operator to an adjoint pair.
///
/// The divergence-form operator A is self-adjoint in the trapezoid inner
/// product, so its Euclidean transpose is W A W^{-1} with W the diagonal of
/// trapezoid weights; the zeroth-order coupling transposes by swapping the
/// off-diagonal coefficients.
#[allow(clippy::too_many_arguments)]
fn apply_transposed_operator(
    a_half: &[f64],
    h: f64,
    w: &[f64],
    c11: &ScalarField,
    c12: &ScalarField,
    c21: &ScalarField,
    c22: &ScalarField,
    p1: &[f64],
    p2: &[f64],
    scratch: &mut [f64],
    out1: &mut [f64],
    out2: &mut [f64],
) {
    let n = w.len();
    let mut ws = vec![0.0; n];
    // component 1: W A W^{-1} p1 - c11 p1 - c21 p2
    for i in 0..n {
        ws[i] = p1[i] / w[i];
    }
    apply_operator(a_half, h, &ws, scratch);
    for i in 0..n {
        out1[i] = w[i] * scratch[i] - c11.get(i) * p1[i] - c21.get(i) * p2[i];
    }
    // component 2: W A W^{-1} p2 - c12 p1 - c22 p2
    for i in 0..n {
        ws[i] = p2[i] / w[i];
    }
    apply_operator(a_half, h, &ws, scratch);
    for i in 0..n {
        out2[i] = w[i] * scratch[i] - c12.get(i) * p1[i] - c22.get(i) * p2[i];
    }
}

/// Misfit gradient by one forward and one backward sweep.
///
/// Steps: solve forward, form the weighted data residual, pull it back through
/// the time-derivative stencils and the sampling operator, run the adjoint
/// leapfrog recursion, and accumulate the coefficient sensitivities
///
/// ```text
/// dJ/dc11_i = -dt^2 [ sum_{m=2..N} p1^m_i y1^{m-1}_i + (1/2) p1^1_i y1^0_i ]
/// ```
///
/// (the half term mirrors the Taylor first step), plus the Tikhonov term.
/// Euclidean components are converted to L2 densities by dividing by the node
/// measure h w_i, and the frozen region is zeroed since those nodes never move.
pub fn gradient_adjoint(
    c11: &ScalarField,
    c22: &ScalarField,
    setup: &InverseProblemSetup,
    data: &ObservationRecord,
) -> Result<GradientEval, InversionError> {
    let traj = setup.forward(c11, c22)?;
    let sim = setup.observe_traces(&traj)?;
    sim.check_same_shape(data).map_err(InversionError::Solver)?;

    let grid = &setup.grid;
    let n = grid.n_nodes();
    let h = grid.h();
    let dt = traj.dt();
    let n_times = traj.n_snapshots();
    let n_steps = traj.n_steps();
    let n_obs = sim.n_nodes();
    let tw = trapezoid_weights(n_times);

    // misfit and the adjoint source stacks R^m, one field per component
    let mut j = 0.0;
    let mut r1 = vec![0.0; n_times * n];
    let mut r2 = vec![0.0; n_times * n];
    for (s, d) in sim.traces.iter().zip(&data.traces) {
        let diff: Vec<f64> = s.values.iter().zip(&d.values).map(|(a, b)| a - b).collect();
        j += 0.5 * sim.weighted_norm_sq(&diff);

        let mut weighted = vec![0.0; diff.len()];
        for t in 0..n_times {
            for k in 0..n_obs {
                weighted[t * n_obs + k] = tw[t]
                    * sim.dt
                    * sim.space_weights[k]
                    * sim.dx
                    * diff[t * n_obs + k];
            }
        }
        let pulled = time_derivative_transpose(&weighted, n_times, n_obs, s.order, dt)
            .map_err(InversionError::Solver)?;
        let target = match s.component {
            Component::Y1 => &mut r1,
            Component::Y2 => &mut r2,
        };
        for t in 0..n_times {
            for (k, &node) in sim.nodes.iter().enumerate() {
                target[t * n + node] += pulled[t * n_obs + k];
            }
        }
    }
    j += regularization(c11, c22, setup);

    // adjoint sweep: p^m = R^m + 2 p^{m+1} - p^{m+2} + dt^2 (L^T p)^{m+1},
    // with p vanishing beyond m = N; R^0 never enters because the initial
    // snapshot does not depend on the coefficients.
    let a_half = half_node_average(setup.a.values());
    let w: Vec<f64> = (0..n).map(|i| grid.trap_weight(i)).collect();
    let dt2 = dt * dt;

    let mut p1_next = vec![0.0; n];
    let mut p2_next = vec![0.0; n];
    let mut p1_nn = vec![0.0; n];
    let mut p2_nn = vec![0.0; n];
    let mut lt1 = vec![0.0; n];
    let mut lt2 = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut g1 = vec![0.0; n];
    let mut g2 = vec![0.0; n];

    for m in (1..=n_steps).rev() {
        apply_transposed_operator(
            &a_half,
            h,
            &w,
            c11,
            &setup.c12,
            &setup.c21,
            c22,
            &p1_next,
            &p2_next,
            &mut scratch,
            &mut lt1,
            &mut lt2,
        );
        let mut p1 = vec![0.0; n];
        let mut p2 = vec![0.0; n];
        for i in 0..n {
            p1[i] = r1[m * n + i] + 2.0 * p1_next[i] - p1_nn[i] + dt2 * lt1[i];
            p2[i] = r2[m * n + i] + 2.0 * p2_next[i] - p2_nn[i] + dt2 * lt2[i];
        }
        let weight = if m == 1 { 0.5 } else { 1.0 };
        let y1_prev = traj.y1_at(m - 1);
        let y2_prev = traj.y2_at(m - 1);
        for i in 0..n {
            g1[i] += weight * p1[i] * y1_prev[i];
            g2[i] += weight * p2[i] * y2_prev[i];
        }
        p1_nn = p1_next;
        p2_nn = p2_next;
        p1_next = p1;
        p2_next = p2;
    }

    // Euclidean gradient: data term plus Tikhonov term, then density scaling
    let mut grad1 = ScalarField::constant(grid, 0.0)?;
    let mut grad2 = ScalarField::constant(grid, 0.0)?;
    let two_alpha_h = 2.0 * setup.alpha * h;
    for i in 0..n {
        let mut e1 = -dt2 * g1[i];
        let mut e2 = -dt2 * g2[i];
        e1 += two_alpha_h * w[i] * (c11.get(i) - setup.c_ref1.get(i));
        e2 += two_alpha_h * w[i] * (c22.get(i) - setup.c_ref2.get(i));
        let measure = h * w[i];
        grad1.values_mut()[i] = e1 / measure;
        grad2.values_mut()[i] = e2 / measure;
    }
    for i in setup.admissible.omega_tilde.nodes() {
        grad1.values_mut()[i] = 0.0;
        grad2.values_mut()[i] = 0.0;
    }

    Ok(GradientEval { grad_c11: grad1, grad_c22: grad2, misfit: j })
}

/// L2 inner product of two coefficient-pair directions.
fn pair_inner(
    grid: &crate::grid::Grid,
    a1: &ScalarField,
    a2: &ScalarField,
    b1: &ScalarField,
    b2: &ScalarField,
) -> f64 {
    let h = grid.h();
    let mut acc = 0.0;
    for i in 0..grid.n_nodes() {
        let w = grid.trap_weight(i) * h;
        acc += w * (a1.get(i) * b1.get(i) + a2.get(i) * b2.get(i));
    }
    acc
}

/// Projected gradient descent with a doubling/halving Armijo line search.
///
/// Each outer iteration projects the trial point onto the admissible set and
/// accepts it when the misfit drops by at least the Armijo fraction of the
/// predicted decrease along the projected direction. Accepted steps double the
/// step length, rejected ones halve it; a step below `min_step` stops the run
/// with [`DescentStatus::LineSearchStall`], returning the best iterate found.
/// The misfit sequence is nonincreasing by construction.
pub fn reconstruct(
    setup: &InverseProblemSetup,
    data: &ObservationRecord,
    init_c11: &ScalarField,
    init_c22: &ScalarField,
) -> Result<ReconstructionOutcome, InversionError> {
    let controls = setup.controls;
    let (mut c1, mut c2) = project_admissible(init_c11, init_c22, &setup.admissible);
    let mut eval = gradient_adjoint(&c1, &c2, setup, data)?;
    let mut step = controls.step_init;
    let mut log = Vec::new();
    let mut status = DescentStatus::MaxIterations;

    for iter in 0..controls.max_iters {
        let grad_norm = pair_inner(
            &setup.grid,
            &eval.grad_c11,
            &eval.grad_c22,
            &eval.grad_c11,
            &eval.grad_c22,
        )
        .sqrt();
        log.push(IterationRow { iter, misfit: eval.misfit, grad_norm, step });
        if grad_norm <= controls.grad_tol {
            status = DescentStatus::Converged;
            break;
        }

        // backtracking on the projected arc
        let mut accepted = false;
        while step >= controls.min_step {
            let mut t1 = c1.clone();
            let mut t2 = c2.clone();
            for i in 0..setup.grid.n_nodes() {
                t1.values_mut()[i] -= step * eval.grad_c11.get(i);
                t2.values_mut()[i] -= step * eval.grad_c22.get(i);
            }
            let (t1, t2) = project_admissible(&t1, &t2, &setup.admissible);
            let mut d1 = t1.clone();
            let mut d2 = t2.clone();
            for i in 0..setup.grid.n_nodes() {
                d1.values_mut()[i] -= c1.get(i);
                d2.values_mut()[i] -= c2.get(i);
            }
            let predicted =
                pair_inner(&setup.grid, &eval.grad_c11, &eval.grad_c22, &d1, &d2);
            let trial_eval = gradient_adjoint(&t1, &t2, setup, data)?;
            if trial_eval.misfit <= eval.misfit + controls.armijo * predicted {
                c1 = t1;
                c2 = t2;
                eval = trial_eval;
                step *= 2.0;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            status = DescentStatus::LineSearchStall;
            break;
        }
    }

    Ok(ReconstructionOutcome { c11: c1, c22: c2, misfit: eval.misfit, status, log })
}
