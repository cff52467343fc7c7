//! Finite-difference linearization of the coefficient-to-observation map and
//! its singular value decomposition, used to probe which coefficient
//! directions the chosen traces can and cannot see.

use super::{InverseProblemSetup, InversionError};
use crate::quad::trapezoid_weights;
use nalgebra::DMatrix;

/// Default relative step for the central differences.
pub const DEFAULT_FD_SCALE: f64 = 1e-5;

/// Discrete linearized observation map around a coefficient pair.
///
/// Columns are nodal-hat directions for the two diagonal coefficients, first
/// the `c11` block then the `c22` block, both over `basis_nodes` (the nodes
/// outside the frozen region). Rows are all observed samples, trace-major then
/// time-major. Row and column scalings make `matrix^T matrix` the Gram matrix
/// of the linearized map between discrete L2 spaces, so its singular values
/// are quadrature-consistent operator data.
#[derive(Debug, Clone)]
pub struct LinearizedMap {
    pub matrix: DMatrix<f64>,
    pub basis_nodes: Vec<usize>,
    pub epsilon: f64,
}

impl LinearizedMap {
    /// Nodes per coefficient block.
    pub fn block_size(&self) -> usize {
        self.basis_nodes.len()
    }
}

/// Build the linearized map by central differences through the full forward
/// and observation pipeline.
///
/// The step is `fd_scale * max(1, sup |cbar|)`; the base point must be at
/// least that far inside the admissible bounds, since each probe is validated
/// like any other coefficient set. Each column costs two forward solves.
pub fn build_linearized_map(
    setup: &InverseProblemSetup,
    cbar1: &crate::grid::ScalarField,
    cbar2: &crate::grid::ScalarField,
    fd_scale: f64,
) -> Result<LinearizedMap, InversionError> {
    if !(fd_scale.is_finite() && fd_scale > 0.0) {
        return Err(InversionError::BadSetup(format!(
            "finite-difference scale must be positive, got {fd_scale}"
        )));
    }
    let grid = &setup.grid;
    let n = grid.n_nodes();
    let basis_nodes: Vec<usize> =
        (0..n).filter(|&i| !setup.admissible.omega_tilde.contains(i)).collect();
    if basis_nodes.is_empty() {
        return Err(InversionError::BadSetup(
            "frozen region covers the whole domain, nothing to linearize".into(),
        ));
    }
    let epsilon = fd_scale * cbar1.sup_norm().max(cbar2.sup_norm()).max(1.0);

    // one probe to fix the row layout and weights
    let base_traj = setup.forward(cbar1, cbar2)?;
    let base = setup.observe_traces(&base_traj)?;
    let n_obs = base.n_nodes();
    let n_times = base.n_times;
    let n_traces = base.traces.len();
    let tw = trapezoid_weights(n_times);
    let rows = n_traces * n_times * n_obs;
    let mut row_weight = vec![0.0; rows];
    for tr in 0..n_traces {
        for t in 0..n_times {
            for k in 0..n_obs {
                row_weight[(tr * n_times + t) * n_obs + k] =
                    (tw[t] * base.dt * base.space_weights[k] * base.dx).sqrt();
            }
        }
    }

    let nb = basis_nodes.len();
    let mut matrix = DMatrix::zeros(rows, 2 * nb);
    let h = grid.h();
    for (bi, &node) in basis_nodes.iter().enumerate() {
        for block in 0..2 {
            let mut plus1 = cbar1.clone();
            let mut plus2 = cbar2.clone();
            let mut minus1 = cbar1.clone();
            let mut minus2 = cbar2.clone();
            if block == 0 {
                plus1.values_mut()[node] += epsilon;
                minus1.values_mut()[node] -= epsilon;
            } else {
                plus2.values_mut()[node] += epsilon;
                minus2.values_mut()[node] -= epsilon;
            }
            let rec_p = setup.observe_traces(&setup.forward(&plus1, &plus2)?)?;
            let rec_m = setup.observe_traces(&setup.forward(&minus1, &minus2)?)?;
            let col_scale = 1.0 / (h * grid.trap_weight(node)).sqrt();
            let col = block * nb + bi;
            for tr in 0..n_traces {
                let vp = &rec_p.traces[tr].values;
                let vm = &rec_m.traces[tr].values;
                for s in 0..n_times * n_obs {
                    let row = tr * n_times * n_obs + s;
                    matrix[(row, col)] =
                        row_weight[row] * col_scale * (vp[s] - vm[s]) / (2.0 * epsilon);
                }
            }
        }
    }

    Ok(LinearizedMap { matrix, basis_nodes, epsilon })
}

/// Singular spectrum of a linearized map, sorted descending, with per-block
/// column diagnostics for spotting directions the data cannot see.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub singular_values: Vec<f64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `sigma_max / sigma_min`, infinite when the smallest value is zero.
    pub condition: f64,
    pub c11_max_column_norm: f64,
    pub c22_max_column_norm: f64,
}

/// Full-accuracy SVD of the map (values only, no singular vectors).
pub fn stability_svd(map: &LinearizedMap) -> Result<StabilityReport, InversionError> {
    let svd = map
        .matrix
        .clone()
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or(InversionError::SvdFailure)?;
    let mut singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    singular_values.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let sigma_min = singular_values.last().copied().unwrap_or(0.0);
    let condition = if sigma_min > 0.0 { sigma_max / sigma_min } else { f64::INFINITY };

    let nb = map.block_size();
    let col_norm = |j: usize| map.matrix.column(j).norm();
    let c11_max_column_norm =
        (0..nb).map(col_norm).fold(0.0f64, f64::max);
    let c22_max_column_norm =
        (nb..2 * nb).map(col_norm).fold(0.0f64, f64::max);

    Ok(StabilityReport {
        singular_values,
        sigma_min,
        sigma_max,
        condition,
        c11_max_column_norm,
        c22_max_column_norm,
    })
}
