//! Windowed complex-shift transform in the time variable.
//!
//! The kernel is the entire Gaussian
//!
//! ```text
//! F(z) = (sqrt(pi) / 2 pi) exp((Im z)^2 / 4 - (Re z)^2 / 4) exp(-i Im z Re z / 2),
//! ```
//!
//! scaled as `F_lambda(z) = lambda F(lambda z)`, with unit mass on the real
//! axis for every `lambda > 0`. Applied against a plateau window in time it
//! trades time regularity for an elliptic problem in the shift variable `s`.

mod diagnostics;
mod window;

pub use diagnostics::*;
pub use window::*;

use crate::grid::ScalarField;
use crate::quad::simpson_weights;
use crate::solver::TimeSeriesField;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FbiError {
    #[error("lambda must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("window slope constant {k1} is below the achievable floor {floor}")]
    InfeasibleSlope { k1: f64, floor: f64 },
    #[error("window length must be positive and finite, got {0}")]
    BadWindowLength(f64),
    #[error("window support [{lo:.3}, {hi:.3}] does not meet the signal lattice [{t0:.3}, {t1:.3}]")]
    WindowOutsideSignal { lo: f64, hi: f64, t0: f64, t1: f64 },
    #[error("signal lattice needs at least 2 frames")]
    DegenerateSignal,
    #[error("shift lattice needs at least 2 values")]
    DegenerateShiftLattice,
    #[error("fields disagree on lattice shape: {0}")]
    LatticeMismatch(String),
    #[error("window length {got} does not match the required 8*A*b = {expected}")]
    WindowLengthMismatch { expected: f64, got: f64 },
    #[error("circle radius must lie in (0, 1), got {0}")]
    BadRadius(f64),
}

/// Unscaled kernel value at the complex point `z`.
pub fn kernel_f(z: Complex64) -> Complex64 {
    let norm = std::f64::consts::PI.sqrt() / (2.0 * std::f64::consts::PI);
    let amp = ((z.im * z.im - z.re * z.re) / 4.0).exp();
    let phase = Complex64::new(0.0, -0.5 * z.im * z.re).exp();
    norm * amp * phase
}

/// Concentrated kernel `lambda F(lambda z)`.
pub fn kernel_f_lambda(lambda: f64, z: Complex64) -> Complex64 {
    lambda * kernel_f(lambda * z)
}

/// Closed-form modulus of `F_lambda(l0 + i s - l)` for real `l0`, `s`, `l`:
/// `(sqrt(pi) / 2 pi) lambda exp(lambda^2 (s^2 - (l0 - l)^2) / 4)`.
pub fn kernel_modulus(lambda: f64, l0: f64, s: f64, l: f64) -> f64 {
    let norm = std::f64::consts::PI.sqrt() / (2.0 * std::f64::consts::PI);
    let d = l0 - l;
    norm * lambda * (lambda * lambda * (s * s - d * d) / 4.0).exp()
}

/// Transform configuration: concentration, shift center, and the window.
#[derive(Debug, Clone)]
pub struct FbiContext {
    pub lambda: f64,
    pub l0: f64,
    pub window: Window,
}

impl FbiContext {
    pub fn new(lambda: f64, l0: f64, window: Window) -> Result<Self, FbiError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(FbiError::BadLambda(lambda));
        }
        Ok(Self { lambda, l0, window })
    }
}

/// Complex lattice of transformed values over (node, shift).
#[derive(Debug, Clone)]
pub struct FbiField {
    pub s_values: Vec<f64>,
    pub n_nodes: usize,
    /// s-major storage: `values[k * n_nodes + i]` is the value at
    /// `(node i, shift s_k)`.
    pub values: Vec<Complex64>,
}

impl FbiField {
    pub fn at(&self, k: usize, i: usize) -> Complex64 {
        self.values[k * self.n_nodes + i]
    }

    pub fn sup_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn check_same_lattice(&self, other: &FbiField) -> Result<(), FbiError> {
        if self.n_nodes != other.n_nodes || self.s_values.len() != other.s_values.len() {
            return Err(FbiError::LatticeMismatch(format!(
                "{} x {} vs {} x {}",
                self.s_values.len(),
                self.n_nodes,
                other.s_values.len(),
                other.n_nodes
            )));
        }
        for (a, b) in self.s_values.iter().zip(&other.s_values) {
            if (a - b).abs() > 1e-12 {
                return Err(FbiError::LatticeMismatch("shift lattices differ".into()));
            }
        }
        Ok(())
    }
}

/// Windowed transform of a single real time series at one shift value:
///
/// ```text
/// (T u)(s) = integral F_lambda(l0 + i s - l) Phi(l) u(l) dl
/// ```
///
/// integrated by composite Simpson with node spacing tied to the signal
/// lattice, over the part of the lattice where the window is supported.
pub fn fbi_transform_slice(
    ctx: &FbiContext,
    times: &[f64],
    signal: &[f64],
    s: f64,
) -> Result<Complex64, FbiError> {
    transform_at(ctx.lambda, &ctx.window, times, signal, ctx.l0, s)
}

/// Same quadrature with the shift center passed explicitly; the mean-value
/// diagnostic probes many centers against one context.
pub(crate) fn transform_at(
    lambda: f64,
    window: &Window,
    times: &[f64],
    signal: &[f64],
    l0: f64,
    s: f64,
) -> Result<Complex64, FbiError> {
    if times.len() < 2 || signal.len() != times.len() {
        return Err(FbiError::DegenerateSignal);
    }
    let dt = times[1] - times[0];
    let half = 0.5 * window.length();
    let (t0, t1) = (times[0], times[times.len() - 1]);
    if -half >= t1 || half <= t0 {
        return Err(FbiError::WindowOutsideSignal { lo: -half, hi: half, t0, t1 });
    }
    let w = simpson_weights(times.len(), dt);
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, (&l, &u)) in times.iter().zip(signal).enumerate() {
        let phi = window.eval(l);
        if phi == 0.0 {
            continue;
        }
        let z = Complex64::new(l0 - l, s);
        acc += w[idx] * kernel_f_lambda(lambda, z) * phi * u;
    }
    Ok(acc)
}

/// Transform of a space-time field over a lattice of shifts, node by node.
pub fn fbi_transform(
    ctx: &FbiContext,
    field: &TimeSeriesField,
    s_values: &[f64],
) -> Result<FbiField, FbiError> {
    if s_values.len() < 2 {
        return Err(FbiError::DegenerateShiftLattice);
    }
    let n_times = field.n_times();
    if n_times < 2 {
        return Err(FbiError::DegenerateSignal);
    }
    let times: Vec<f64> = (0..n_times).map(|k| field.time(k)).collect();
    let dt = field.dt;
    let half = 0.5 * ctx.window.length();
    let (t0, t1) = (times[0], times[n_times - 1]);
    if -half >= t1 || half <= t0 {
        return Err(FbiError::WindowOutsideSignal { lo: -half, hi: half, t0, t1 });
    }
    let w = simpson_weights(n_times, dt);

    // window and kernel-in-l factor independent of node index; hoist them
    let phis: Vec<f64> = times.iter().map(|&l| ctx.window.eval(l)).collect();
    let n = field.n_nodes;
    let mut values = vec![Complex64::new(0.0, 0.0); s_values.len() * n];
    for (k, &s) in s_values.iter().enumerate() {
        let row = &mut values[k * n..(k + 1) * n];
        for (idx, &l) in times.iter().enumerate() {
            let phi = phis[idx];
            if phi == 0.0 {
                continue;
            }
            let z = Complex64::new(ctx.l0 - l, s);
            let kern = kernel_f_lambda(ctx.lambda, z) * phi * w[idx];
            let frame = field.frame(idx);
            for i in 0..n {
                row[i] += kern * frame[i];
            }
        }
    }
    Ok(FbiField { s_values: s_values.to_vec(), n_nodes: n, values })
}

/// Commutator sources from space localization. For each component,
///
/// ```text
/// G_j = T[ (da/dx)(dchi/dx) W_j + a ((d2chi/dx2) W_j + 2 (dchi/dx) dW_j/dx) ]
/// ```
///
/// where `W_j` is the raw (unlocalized) time-derivative field, before the
/// cutoff is applied. Every term carries a derivative of `chi`, so `G` is
/// supported in the closure of the transition bands; the values of `W` there
/// matter even where `chi` itself vanishes, which is why the localized product
/// `chi W` cannot be substituted.
pub fn compute_g(
    ctx: &FbiContext,
    a: &ScalarField,
    chi: &ScalarField,
    w_raw: &TimeSeriesField,
    s_values: &[f64],
    h: f64,
) -> Result<FbiField, FbiError> {
    let n = w_raw.n_nodes;
    let da = crate::domain::first_derivative(a.values(), h);
    let dchi = crate::domain::first_derivative(chi.values(), h);
    let ddchi = crate::domain::second_derivative(chi.values(), h);

    // assemble the bracket as a time series, then transform it
    let n_times = w_raw.n_times();
    let mut bracket = vec![0.0; w_raw.values.len()];
    let mut dw = vec![0.0; n];
    for k in 0..n_times {
        let frame = w_raw.frame(k);
        dw[0] = (-3.0 * frame[0] + 4.0 * frame[1] - frame[2]) / (2.0 * h);
        for i in 1..n - 1 {
            dw[i] = (frame[i + 1] - frame[i - 1]) / (2.0 * h);
        }
        dw[n - 1] = (3.0 * frame[n - 1] - 4.0 * frame[n - 2] + frame[n - 3]) / (2.0 * h);
        for i in 0..n {
            bracket[k * n + i] =
                da[i] * dchi[i] * frame[i] + a.get(i) * (ddchi[i] * frame[i] + 2.0 * dchi[i] * dw[i]);
        }
    }
    let field = TimeSeriesField { t0: w_raw.t0, dt: w_raw.dt, n_nodes: n, values: bracket };
    fbi_transform(ctx, &field, s_values)
}

/// Window-commutator source:
///
/// ```text
/// H_j = - T_window''[U_j] - 2 T_window'[dU_j/dl]
/// ```
///
/// realised as one quadrature with `Phi'' U + 2 Phi' dU/dl` under the kernel.
pub fn compute_h(
    ctx: &FbiContext,
    u: &TimeSeriesField,
    s_values: &[f64],
) -> Result<FbiField, FbiError> {
    if s_values.len() < 2 {
        return Err(FbiError::DegenerateShiftLattice);
    }
    let n_times = u.n_times();
    if n_times < 4 {
        return Err(FbiError::DegenerateSignal);
    }
    let times: Vec<f64> = (0..n_times).map(|k| u.time(k)).collect();
    let dt = u.dt;
    let half = 0.5 * ctx.window.length();
    let (t0, t1) = (times[0], times[n_times - 1]);
    if -half >= t1 || half <= t0 {
        return Err(FbiError::WindowOutsideSignal { lo: -half, hi: half, t0, t1 });
    }
    let n = u.n_nodes;
    let dudl =
        crate::solver::series_time_derivative(u, 1).map_err(|_| FbiError::DegenerateSignal)?;
    let w = simpson_weights(n_times, dt);
    let mut values = vec![Complex64::new(0.0, 0.0); s_values.len() * n];
    for (k, &s) in s_values.iter().enumerate() {
        let row = &mut values[k * n..(k + 1) * n];
        for (idx, &l) in times.iter().enumerate() {
            let dphi = ctx.window.derivative(l);
            let ddphi = ctx.window.second_derivative(l);
            if dphi == 0.0 && ddphi == 0.0 {
                continue;
            }
            let z = Complex64::new(ctx.l0 - l, s);
            let kern = kernel_f_lambda(ctx.lambda, z) * w[idx];
            let frame = u.frame(idx);
            let dframe = dudl.frame(idx);
            for i in 0..n {
                row[i] -= kern * (ddphi * frame[i] + 2.0 * dphi * dframe[i]);
            }
        }
    }
    Ok(FbiField { s_values: s_values.to_vec(), n_nodes: n, values })
}

/// Residual of the transformed elliptic system:
///
/// ```text
/// r_j = d2/ds2 U^F_j + div(a grad U^F_j) - c_j1 U^F_1 - c_j2 U^F_2 - G_j - H_j.
/// ```
///
/// All derivatives are second-order discrete on the (node, shift) lattice.
pub struct EllipticResidual {
    pub r1: FbiField,
    pub r2: FbiField,
}

#[allow(clippy::too_many_arguments)]
pub fn elliptic_residual(
    uf1: &FbiField,
    uf2: &FbiField,
    g1: &FbiField,
    g2: &FbiField,
    h1: &FbiField,
    h2: &FbiField,
    a: &ScalarField,
    c11: &ScalarField,
    c12: &ScalarField,
    c21: &ScalarField,
    c22: &ScalarField,
    h: f64,
) -> Result<EllipticResidual, FbiError> {
    uf1.check_same_lattice(uf2)?;
    for other in [g1, g2, h1, h2] {
        uf1.check_same_lattice(other)?;
    }
    let n = uf1.n_nodes;
    let ns = uf1.s_values.len();
    if ns < 4 {
        return Err(FbiError::DegenerateShiftLattice);
    }
    let ds = uf1.s_values[1] - uf1.s_values[0];
    let a_half = crate::solver::half_node_average(a.values());

    let second_s = |f: &FbiField, k: usize, i: usize| -> Complex64 {
        let v = |kk: usize| f.at(kk, i);
        if k == 0 {
            (2.0 * v(0) - 5.0 * v(1) + 4.0 * v(2) - v(3)) / (ds * ds)
        } else if k + 1 == ns {
            (2.0 * v(ns - 1) - 5.0 * v(ns - 2) + 4.0 * v(ns - 3) - v(ns - 4)) / (ds * ds)
        } else {
            (v(k + 1) - 2.0 * v(k) + v(k - 1)) / (ds * ds)
        }
    };

    let div_grad = |f: &FbiField, k: usize, i: usize| -> Complex64 {
        let v = |ii: usize| f.at(k, ii);
        let inv_h2 = 1.0 / (h * h);
        if i == 0 {
            2.0 * a_half[0] * (v(1) - v(0)) * inv_h2
        } else if i + 1 == n {
            2.0 * a_half[n - 2] * (v(n - 2) - v(n - 1)) * inv_h2
        } else {
            (a_half[i] * (v(i + 1) - v(i)) - a_half[i - 1] * (v(i) - v(i - 1))) * inv_h2
        }
    };

    let mut r1 = FbiField {
        s_values: uf1.s_values.clone(),
        n_nodes: n,
        values: vec![Complex64::new(0.0, 0.0); uf1.values.len()],
    };
    let mut r2 = r1.clone();
    for k in 0..ns {
        for i in 0..n {
            let coupling1 = c11.get(i) * uf1.at(k, i) + c12.get(i) * uf2.at(k, i);
            let coupling2 = c21.get(i) * uf1.at(k, i) + c22.get(i) * uf2.at(k, i);
            r1.values[k * n + i] = second_s(uf1, k, i) + div_grad(uf1, k, i)
                - coupling1
                - g1.at(k, i)
                - h1.at(k, i);
            r2.values[k * n + i] = second_s(uf2, k, i) + div_grad(uf2, k, i)
                - coupling2
                - g2.at(k, i)
                - h2.at(k, i);
        }
    }
    Ok(EllipticResidual { r1, r2 })
}
