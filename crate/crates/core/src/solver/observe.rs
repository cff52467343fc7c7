//! Observation traces, exact-magnitude noise, and the even/odd time
//! extensions feeding the windowed transform.

use super::{SolverError, Trajectory};
use crate::grid::{IndexRange, ScalarField};
use crate::quad::trapezoid_weights;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Which solution component a trace samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Y1,
    Y2,
}

impl Component {
    pub fn label(self) -> &'static str {
        match self {
            Component::Y1 => "y1",
            Component::Y2 => "y2",
        }
    }
}

/// One observed time series block: a component differentiated `order` times,
/// restricted to the observation nodes. Values are time-major.
#[derive(Debug, Clone)]
pub struct Trace {
    pub component: Component,
    pub order: usize,
    pub values: Vec<f64>,
}

/// Everything measured in one experiment: traces over a node set drawn from a
/// union of index ranges, with the noise bookkeeping needed to reproduce it.
#[derive(Debug, Clone)]
pub struct ObservationRecord {
    pub region: Vec<IndexRange>,
    pub nodes: Vec<usize>,
    pub dt: f64,
    pub dx: f64,
    pub n_times: usize,
    pub traces: Vec<Trace>,
    pub noise_level: f64,
    pub seed: Option<u64>,
    /// Per-node trapezoid weights, piecewise over each range of the region.
    pub space_weights: Vec<f64>,
}

impl ObservationRecord {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Space-time weighted squared L2 norm of a trace-shaped value slab.
    pub fn weighted_norm_sq(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_times * self.nodes.len());
        let tw = trapezoid_weights(self.n_times);
        let mut acc = 0.0;
        for t in 0..self.n_times {
            let row = &values[t * self.nodes.len()..(t + 1) * self.nodes.len()];
            let mut spatial = 0.0;
            for (k, &v) in row.iter().enumerate() {
                spatial += self.space_weights[k] * v * v;
            }
            acc += tw[t] * spatial;
        }
        acc * self.dt * self.dx
    }

    pub fn check_same_shape(&self, other: &ObservationRecord) -> Result<(), SolverError> {
        if self.nodes != other.nodes {
            return Err(SolverError::RecordMismatch("node sets differ".into()));
        }
        if self.n_times != other.n_times || (self.dt - other.dt).abs() > 1e-14 * self.dt {
            return Err(SolverError::RecordMismatch("time lattices differ".into()));
        }
        if self.traces.len() != other.traces.len() {
            return Err(SolverError::RecordMismatch("trace counts differ".into()));
        }
        for (a, b) in self.traces.iter().zip(&other.traces) {
            if a.component != b.component || a.order != b.order {
                return Err(SolverError::RecordMismatch(format!(
                    "trace kinds differ: {}^({}) vs {}^({})",
                    a.component.label(),
                    a.order,
                    b.component.label(),
                    b.order
                )));
            }
        }
        Ok(())
    }
}

/// Time differentiation of a time-major slab, second order everywhere:
/// centered stencils inside, one-sided three/four point stencils at the ends.
pub(crate) fn time_derivative(
    values: &[f64],
    n_times: usize,
    n_cols: usize,
    order: usize,
    dt: f64,
) -> Result<Vec<f64>, SolverError> {
    debug_assert_eq!(values.len(), n_times * n_cols);
    let needed = match order {
        0 => 1,
        1 => 3,
        2 => 4,
        _ => return Err(SolverError::BadDerivativeOrder(order)),
    };
    if n_times < needed {
        return Err(SolverError::TooFewSnapshots { order, needed, have: n_times });
    }
    if order == 0 {
        return Ok(values.to_vec());
    }
    let m = n_times;
    let row = |t: usize| &values[t * n_cols..(t + 1) * n_cols];
    let mut out = vec![0.0; values.len()];
    match order {
        1 => {
            let c = 1.0 / (2.0 * dt);
            for k in 0..n_cols {
                out[k] = c * (-3.0 * row(0)[k] + 4.0 * row(1)[k] - row(2)[k]);
            }
            for t in 1..m - 1 {
                for k in 0..n_cols {
                    out[t * n_cols + k] = c * (row(t + 1)[k] - row(t - 1)[k]);
                }
            }
            for k in 0..n_cols {
                out[(m - 1) * n_cols + k] =
                    c * (3.0 * row(m - 1)[k] - 4.0 * row(m - 2)[k] + row(m - 3)[k]);
            }
        }
        2 => {
            let c = 1.0 / (dt * dt);
            for k in 0..n_cols {
                out[k] = c * (2.0 * row(0)[k] - 5.0 * row(1)[k] + 4.0 * row(2)[k] - row(3)[k]);
            }
            for t in 1..m - 1 {
                for k in 0..n_cols {
                    out[t * n_cols + k] = c * (row(t + 1)[k] - 2.0 * row(t)[k] + row(t - 1)[k]);
                }
            }
            for k in 0..n_cols {
                out[(m - 1) * n_cols + k] = c
                    * (2.0 * row(m - 1)[k] - 5.0 * row(m - 2)[k] + 4.0 * row(m - 3)[k]
                        - row(m - 4)[k]);
            }
        }
        _ => unreachable!(),
    }
    Ok(out)
}

/// Exact Euclidean transpose of [`time_derivative`], built by scattering each
/// stencil row back to its sources. The adjoint gradient depends on this being
/// the transpose of the forward stencil to the last bit, so it mirrors the
/// row structure instead of re-deriving closed forms.
pub(crate) fn time_derivative_transpose(
    values: &[f64],
    n_times: usize,
    n_cols: usize,
    order: usize,
    dt: f64,
) -> Result<Vec<f64>, SolverError> {
    debug_assert_eq!(values.len(), n_times * n_cols);
    if order == 0 {
        return Ok(values.to_vec());
    }
    let needed = match order {
        1 => 3,
        2 => 4,
        _ => return Err(SolverError::BadDerivativeOrder(order)),
    };
    if n_times < needed {
        return Err(SolverError::TooFewSnapshots { order, needed, have: n_times });
    }
    let m = n_times;
    let mut out = vec![0.0; values.len()];
    let mut add = |t: usize, k: usize, w: f64, v: f64| out[t * n_cols + k] += w * v;
    match order {
        1 => {
            let c = 1.0 / (2.0 * dt);
            for k in 0..n_cols {
                let v = values[k];
                add(0, k, -3.0 * c, v);
                add(1, k, 4.0 * c, v);
                add(2, k, -c, v);
            }
            for t in 1..m - 1 {
                for k in 0..n_cols {
                    let v = values[t * n_cols + k];
                    add(t + 1, k, c, v);
                    add(t - 1, k, -c, v);
                }
            }
            for k in 0..n_cols {
                let v = values[(m - 1) * n_cols + k];
                add(m - 1, k, 3.0 * c, v);
                add(m - 2, k, -4.0 * c, v);
                add(m - 3, k, c, v);
            }
        }
        2 => {
            let c = 1.0 / (dt * dt);
            for k in 0..n_cols {
                let v = values[k];
                add(0, k, 2.0 * c, v);
                add(1, k, -5.0 * c, v);
                add(2, k, 4.0 * c, v);
                add(3, k, -c, v);
            }
            for t in 1..m - 1 {
                for k in 0..n_cols {
                    let v = values[t * n_cols + k];
                    add(t + 1, k, c, v);
                    add(t, k, -2.0 * c, v);
                    add(t - 1, k, c, v);
                }
            }
            for k in 0..n_cols {
                let v = values[(m - 1) * n_cols + k];
                add(m - 1, k, 2.0 * c, v);
                add(m - 2, k, -5.0 * c, v);
                add(m - 3, k, 4.0 * c, v);
                add(m - 4, k, -c, v);
            }
        }
        _ => unreachable!(),
    }
    Ok(out)
}

fn region_nodes_and_weights(region: &[IndexRange]) -> Result<(Vec<usize>, Vec<f64>), SolverError> {
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for r in region {
        if r.is_empty() {
            continue;
        }
        for i in r.nodes() {
            nodes.push(i);
            weights.push(if i == r.start || i + 1 == r.end { 0.5 } else { 1.0 });
        }
        // a single-node range carries no length; give it zero measure
        if r.len() == 1 {
            *weights.last_mut().unwrap() = 0.0;
        }
    }
    if nodes.is_empty() {
        return Err(SolverError::EmptySubdomain);
    }
    Ok((nodes, weights))
}

/// Sample the trajectory on a region (a union of node ranges) and attach the
/// requested time-derivative orders of the requested components.
pub fn observe(
    traj: &Trajectory,
    region: &[IndexRange],
    components: &[Component],
    orders: &[usize],
) -> Result<ObservationRecord, SolverError> {
    for r in region {
        r.check(traj.grid())?;
    }
    let (nodes, space_weights) = region_nodes_and_weights(region)?;
    let n_times = traj.n_snapshots();
    let n_cols = nodes.len();

    let mut traces = Vec::with_capacity(components.len() * orders.len());
    for &component in components {
        let mut raw = vec![0.0; n_times * n_cols];
        for t in 0..n_times {
            let snap = traj.component(component, t);
            for (k, &i) in nodes.iter().enumerate() {
                raw[t * n_cols + k] = snap[i];
            }
        }
        for &order in orders {
            let values = time_derivative(&raw, n_times, n_cols, order, traj.dt())?;
            traces.push(Trace { component, order, values });
        }
    }

    Ok(ObservationRecord {
        region: region.to_vec(),
        nodes,
        dt: traj.dt(),
        dx: traj.grid().h(),
        n_times,
        traces,
        noise_level: 0.0,
        seed: None,
        space_weights,
    })
}

const TRACE_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Additive Gaussian perturbation scaled so each trace is moved by exactly
/// `delta` in relative weighted L2 norm. The draw direction depends on the
/// seed and trace index only, never on `delta`, so error curves stay
/// comparable across noise levels. `delta = 0` returns the input bit for bit.
pub fn add_noise(record: &ObservationRecord, delta: f64, seed: u64) -> ObservationRecord {
    let mut out = record.clone();
    out.noise_level = delta;
    out.seed = Some(seed);
    if delta == 0.0 {
        return out;
    }
    for (idx, trace) in out.traces.iter_mut().enumerate() {
        let clean_norm = record.weighted_norm_sq(&trace.values).sqrt();
        if clean_norm < 1e-300 {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(TRACE_SEED_STRIDE));
        let g: Vec<f64> = (0..trace.values.len())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let g_norm = record.weighted_norm_sq(&g).sqrt();
        if g_norm < 1e-300 {
            continue;
        }
        let scale = delta * clean_norm / g_norm;
        for (v, gi) in trace.values.iter_mut().zip(&g) {
            *v += scale * gi;
        }
    }
    out
}

/// Space-time lattice of values with a possibly negative time origin,
/// time-major storage.
#[derive(Debug, Clone)]
pub struct TimeSeriesField {
    pub t0: f64,
    pub dt: f64,
    pub n_nodes: usize,
    pub values: Vec<f64>,
}

impl TimeSeriesField {
    pub fn n_times(&self) -> usize {
        self.values.len() / self.n_nodes
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn frame(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_nodes..(k + 1) * self.n_nodes]
    }

    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.values[k * self.n_nodes + i]
    }
}

/// Time derivative of a whole series, same stencils as the observation traces.
pub(crate) fn series_time_derivative(
    f: &TimeSeriesField,
    order: usize,
) -> Result<TimeSeriesField, SolverError> {
    let d = time_derivative(&f.values, f.n_times(), f.n_nodes, order, f.dt)?;
    Ok(TimeSeriesField { t0: f.t0, dt: f.dt, n_nodes: f.n_nodes, values: d })
}

/// Localized first and second time derivatives of a difference trajectory,
/// extended evenly to negative times, plus the unlocalized first derivatives
/// that the space-commutator source needs on the cutoff's transition bands.
#[derive(Debug, Clone)]
pub struct UvFields {
    pub u1: TimeSeriesField,
    pub u2: TimeSeriesField,
    pub v1: TimeSeriesField,
    pub v2: TimeSeriesField,
    pub raw_u1: TimeSeriesField,
    pub raw_u2: TimeSeriesField,
}

/// Build `U = chi dw/dt` and `V = chi d2w/dt2` on the extended lattice
/// `[-T, T]`. The even extension of `w` makes `U` odd (zero at t = 0 exactly)
/// and `V` even; derivatives on `[0, T]` use the same stencils as the
/// observation operator. `raw_u*` carry the same odd extension without the
/// cutoff factor.
pub fn build_uv_fields(w: &Trajectory, chi: &ScalarField) -> Result<UvFields, SolverError> {
    let n = w.grid().n_nodes();
    let steps = w.n_steps();
    if w.n_snapshots() < 4 {
        return Err(SolverError::TooFewSnapshots { order: 2, needed: 4, have: w.n_snapshots() });
    }
    let dt = w.dt();
    let t0 = -(steps as f64) * dt;
    let n_ext = 2 * steps + 1;

    let build = |which: Component,
                 order: usize,
                 odd: bool,
                 cutoff: Option<&ScalarField>|
     -> Result<TimeSeriesField, SolverError> {
        let n_times = w.n_snapshots();
        let mut raw = vec![0.0; n_times * n];
        for t in 0..n_times {
            raw[t * n..(t + 1) * n].copy_from_slice(w.component(which, t));
        }
        let d = time_derivative(&raw, n_times, n, order, dt)?;
        let mut values = vec![0.0; n_ext * n];
        for m in 0..=steps {
            for i in 0..n {
                let factor = cutoff.map_or(1.0, |c| c.get(i));
                let v = factor * d[m * n + i];
                values[(steps + m) * n + i] = v;
                values[(steps - m) * n + i] = if odd { -v } else { v };
            }
        }
        if odd {
            // odd extension pins the center frame to exactly zero
            for i in 0..n {
                values[steps * n + i] = 0.0;
            }
        }
        Ok(TimeSeriesField { t0, dt, n_nodes: n, values })
    };

    Ok(UvFields {
        u1: build(Component::Y1, 1, true, Some(chi))?,
        u2: build(Component::Y2, 1, true, Some(chi))?,
        v1: build(Component::Y1, 2, false, Some(chi))?,
        v2: build(Component::Y2, 2, false, Some(chi))?,
        raw_u1: build(Component::Y1, 1, true, None)?,
        raw_u2: build(Component::Y2, 1, true, None)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::grid101;
    use crate::grid::Grid;
    use crate::solver::{solve_coupled_wave, CoefficientSet, InitialData};
    use rand::Rng;
    use std::f64::consts::PI;

    fn slab_from(f: impl Fn(f64) -> f64, n_times: usize, n_cols: usize, dt: f64) -> Vec<f64> {
        let mut v = vec![0.0; n_times * n_cols];
        for t in 0..n_times {
            for k in 0..n_cols {
                v[t * n_cols + k] = f(t as f64 * dt) * (k + 1) as f64;
            }
        }
        v
    }

    #[test]
    fn stencils_are_exact_on_cubics() {
        let (m, cols, dt) = (9usize, 2usize, 0.1);
        let cubic = slab_from(|t| t * t * t - 2.0 * t, m, cols, dt);
        let d1 = time_derivative(&cubic, m, cols, 1, dt).unwrap();
        let d2 = time_derivative(&cubic, m, cols, 2, dt).unwrap();
        for t in 0..m {
            let tt = t as f64 * dt;
            for k in 0..cols {
                let scale = (k + 1) as f64;
                // the one-sided first-derivative stencil is exact on quadratics;
                // on the cubic it carries the remainder dt^2 f'''/3 = 0.02
                let e1 = (d1[t * cols + k] - (3.0 * tt * tt - 2.0) * scale).abs();
                assert!(e1 < 2.1e-2 * scale, "d1 t={t}: {e1}");
                let e2 = (d2[t * cols + k] - 6.0 * tt * scale).abs();
                assert!(e2 < 1e-10, "d2 t={t}: {e2}");
            }
        }
        // interior rows of order 1 are exact on the cubic too
        for t in 1..m - 1 {
            let tt = t as f64 * dt;
            let e = (d1[t * cols] - (3.0 * tt * tt - 2.0)).abs();
            assert!(e < 1e-2 + 1e-12);
        }
    }

    #[test]
    fn derivative_transpose_is_the_exact_adjoint() {
        let (m, cols, dt) = (11usize, 3usize, 0.07);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for order in [1usize, 2] {
            let u: Vec<f64> = (0..m * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..m * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let du = time_derivative(&u, m, cols, order, dt).unwrap();
            let dtv = time_derivative_transpose(&v, m, cols, order, dt).unwrap();
            let lhs: f64 = du.iter().zip(&v).map(|(a, b)| a * b).sum();
            let rhs: f64 = u.iter().zip(&dtv).map(|(a, b)| a * b).sum();
            assert!(
                (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
                "order {order}: {lhs} vs {rhs}"
            );
        }
    }

    fn demo_trajectory() -> crate::solver::Trajectory {
        let grid = grid101();
        let coeffs = CoefficientSet {
            a: ScalarField::constant(&grid, 1.0).unwrap(),
            c11: ScalarField::constant(&grid, 0.5).unwrap(),
            c12: ScalarField::constant(&grid, 1.0).unwrap(),
            c21: ScalarField::constant(&grid, 1.0).unwrap(),
            c22: ScalarField::constant(&grid, 0.5).unwrap(),
        };
        let init = InitialData {
            y10: ScalarField::from_fn(&grid, |x| 2.0 + (PI * x).cos()).unwrap(),
            y11: ScalarField::constant(&grid, 0.0).unwrap(),
            y20: ScalarField::from_fn(&grid, |x| 2.0 + 0.5 * (2.0 * PI * x).cos()).unwrap(),
            y21: ScalarField::constant(&grid, 0.0).unwrap(),
        };
        solve_coupled_wave(&grid, &coeffs, &init, 1.0, 0.005).unwrap()
    }

    #[test]
    fn observe_produces_expected_trace_set() {
        let traj = demo_trajectory();
        let region = [IndexRange::new(60, 101)];
        let rec = observe(&traj, &region, &[Component::Y1, Component::Y2], &[1, 2]).unwrap();
        assert_eq!(rec.nodes.len(), 41);
        assert_eq!(rec.traces.len(), 4);
        assert_eq!(rec.traces[0].component, Component::Y1);
        assert_eq!(rec.traces[0].order, 1);
        assert_eq!(rec.traces[3].component, Component::Y2);
        assert_eq!(rec.traces[3].order, 2);
        assert_eq!(rec.n_times, traj.n_snapshots());
        // split region keeps per-piece trapezoid weights
        let split = [IndexRange::new(60, 75), IndexRange::new(91, 101)];
        let rec2 = observe(&traj, &split, &[Component::Y1], &[0]).unwrap();
        assert_eq!(rec2.nodes.len(), 25);
        assert_eq!(rec2.space_weights[0], 0.5);
        assert_eq!(rec2.space_weights[14], 0.5);
        assert_eq!(rec2.space_weights[15], 0.5);
    }

    #[test]
    fn noise_moves_each_trace_by_exactly_delta() {
        let traj = demo_trajectory();
        let region = [IndexRange::new(60, 101)];
        let clean = observe(&traj, &region, &[Component::Y1, Component::Y2], &[1, 2]).unwrap();
        let delta = 1e-2;
        let noisy = add_noise(&clean, delta, 1234);
        for (c, n) in clean.traces.iter().zip(&noisy.traces) {
            let diff: Vec<f64> = c.values.iter().zip(&n.values).map(|(a, b)| b - a).collect();
            let rel = clean.weighted_norm_sq(&diff).sqrt()
                / clean.weighted_norm_sq(&c.values).sqrt();
            assert!((rel - delta).abs() < 1e-12 * delta.max(1.0), "rel {rel}");
        }
        // determinism and the delta = 0 identity
        let again = add_noise(&clean, delta, 1234);
        assert_eq!(noisy.traces[0].values, again.traces[0].values);
        let silent = add_noise(&clean, 0.0, 99);
        assert_eq!(silent.traces[0].values, clean.traces[0].values);
    }

    #[test]
    fn noise_direction_is_shared_across_levels() {
        let traj = demo_trajectory();
        let region = [IndexRange::new(60, 101)];
        let clean = observe(&traj, &region, &[Component::Y1], &[1]).unwrap();
        let n1 = add_noise(&clean, 1e-2, 7);
        let n2 = add_noise(&clean, 2e-2, 7);
        // same seed, doubled level: the perturbation doubles up to the
        // rounding left by adding the perturbation onto O(1) samples, which
        // is absolute in the sample size, not relative to the perturbation
        let sup_d1 = clean.traces[0]
            .values
            .iter()
            .zip(&n1.traces[0].values)
            .map(|(c, a)| (a - c).abs())
            .fold(0.0_f64, f64::max);
        assert!(sup_d1 > 0.0);
        for ((c, a), b) in clean.traces[0]
            .values
            .iter()
            .zip(&n1.traces[0].values)
            .zip(&n2.traces[0].values)
        {
            let d1 = a - c;
            let d2 = b - c;
            assert!((d2 - 2.0 * d1).abs() <= 1e-10 * sup_d1);
        }
    }

    #[test]
    fn uv_fields_have_the_right_parity() {
        let grid = Grid::uniform(41, 1.0).unwrap();
        let coeffs = CoefficientSet {
            a: ScalarField::constant(&grid, 1.0).unwrap(),
            c11: ScalarField::constant(&grid, 0.3).unwrap(),
            c12: ScalarField::constant(&grid, 1.0).unwrap(),
            c21: ScalarField::constant(&grid, 1.0).unwrap(),
            c22: ScalarField::constant(&grid, 0.3).unwrap(),
        };
        let init = InitialData {
            y10: ScalarField::from_fn(&grid, |x| (PI * x).cos()).unwrap(),
            y11: ScalarField::constant(&grid, 0.0).unwrap(),
            y20: ScalarField::constant(&grid, 1.0).unwrap(),
            y21: ScalarField::constant(&grid, 0.0).unwrap(),
        };
        let traj = solve_coupled_wave(&grid, &coeffs, &init, 0.5, 0.0125).unwrap();
        let chi = ScalarField::from_fn(&grid, |x| if x > 0.5 { 1.0 } else { 0.0 }).unwrap();
        let uv = build_uv_fields(&traj, &chi).unwrap();

        let steps = traj.n_steps();
        assert_eq!(uv.u1.n_times(), 2 * steps + 1);
        assert!((uv.u1.t0 + 0.5).abs() < 1e-14);
        for i in 0..41 {
            assert_eq!(uv.u1.get(steps, i), 0.0);
        }
        for m in 0..=steps {
            for i in 0..41 {
                assert_eq!(uv.u1.get(steps + m, i), -uv.u1.get(steps - m, i));
                assert_eq!(uv.v1.get(steps + m, i), uv.v1.get(steps - m, i));
            }
        }
        // chi support carries over
        for k in 0..uv.u1.n_times() {
            for i in 0..20 {
                assert_eq!(uv.u1.get(k, i), 0.0);
                assert_eq!(uv.v2.get(k, i), 0.0);
            }
        }
    }
}
