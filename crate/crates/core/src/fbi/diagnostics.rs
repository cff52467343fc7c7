//! Numerical audits of the windowed transform: near-inversion at small shift,
//! a one-sided energy comparison, and the mean-value test for harmonicity.

use super::{transform_at, FbiContext, FbiError};
use crate::quad::trapezoid_weights;

/// `|T(s = 0) - u(l0)|`: the transform at zero shift recovers the signal at
/// the window center up to `O(1/lambda^2)`.
pub fn identity_error(
    ctx: &FbiContext,
    times: &[f64],
    signal: &[f64],
) -> Result<f64, FbiError> {
    let value = transform_at(ctx.lambda, &ctx.window, times, signal, ctx.l0, 0.0)?;
    // sample the signal at the lattice node nearest the window center
    let mut best = 0usize;
    let mut dist = f64::INFINITY;
    for (idx, &t) in times.iter().enumerate() {
        let d = (t - ctx.l0).abs();
        if d < dist {
            dist = d;
            best = idx;
        }
    }
    Ok((value - signal[best]).norm())
}

/// One-sided energy comparison for the windowed transform.
///
/// The localized signal energy is dominated by a kernel term, decaying like
/// `1/lambda^2`, plus the shifted-transform energy over the strip `|s| < 1`:
///
/// ```text
/// ||Phi u||^2  <=  (8/lambda^2) [ (1/(32 A b))^2 int_{K0} |u|^2 + int |du/dl|^2 ]
///                + (16 A b / pi^2) int_{-1}^{1} int |T u(l0, s)|^2 dl0 ds
/// ```
///
/// with `K0 = [-A b, A b]` (an eighth of the window length each side). The
/// audit reports both right-hand terms and the defect `rhs - lhs`, which must
/// be nonnegative up to quadrature error.
#[derive(Debug, Clone, Copy)]
pub struct ParsevalAudit {
    pub lhs: f64,
    pub kernel_term: f64,
    pub energy_term: f64,
    pub defect: f64,
}

/// Evaluate the energy comparison for one scalar signal.
///
/// The window must have the matched length `8 A b`. The `l0` integral runs
/// over the signal lattice itself; the shift integral uses `n_shift` trapezoid
/// nodes on `[-1, 1]`, which overestimates the convex-in-`s` integrand and so
/// never fakes a positive defect.
pub fn parseval_defect(
    ctx: &FbiContext,
    times: &[f64],
    signal: &[f64],
    big_a: f64,
    b: f64,
    n_shift: usize,
) -> Result<ParsevalAudit, FbiError> {
    if times.len() < 3 || signal.len() != times.len() {
        return Err(FbiError::DegenerateSignal);
    }
    if n_shift < 2 {
        return Err(FbiError::DegenerateShiftLattice);
    }
    let expected = 8.0 * big_a * b;
    if (ctx.window.length() - expected).abs() > 1e-9 {
        return Err(FbiError::WindowLengthMismatch { expected, got: ctx.window.length() });
    }
    let n = times.len();
    let dt = times[1] - times[0];
    let lambda = ctx.lambda;

    // localized energy on the signal lattice
    let tw = trapezoid_weights(n);
    let mut lhs = 0.0;
    for i in 0..n {
        let v = ctx.window.eval(times[i]) * signal[i];
        lhs += tw[i] * v * v;
    }
    lhs *= dt;

    // kernel term: plateau-core mass plus full-lattice derivative energy
    let k0 = big_a * b;
    let mut core = 0.0;
    let mut grad = 0.0;
    for i in 0..n {
        if times[i].abs() <= k0 {
            core += tw[i] * signal[i] * signal[i];
        }
        let d = if i == 0 {
            (-3.0 * signal[0] + 4.0 * signal[1] - signal[2]) / (2.0 * dt)
        } else if i + 1 == n {
            (3.0 * signal[n - 1] - 4.0 * signal[n - 2] + signal[n - 3]) / (2.0 * dt)
        } else {
            (signal[i + 1] - signal[i - 1]) / (2.0 * dt)
        };
        grad += tw[i] * d * d;
    }
    core *= dt;
    grad *= dt;
    let scale = 1.0 / (32.0 * big_a * b);
    let kernel_term = (8.0 / (lambda * lambda)) * (scale * scale * core + grad);

    // shifted-transform energy over the strip; l0 runs over the same lattice
    let sw = trapezoid_weights(n_shift);
    let ds = 2.0 / (n_shift - 1) as f64;
    let mut energy = 0.0;
    for k in 0..n_shift {
        let s = -1.0 + k as f64 * ds;
        let mut slab = 0.0;
        for (i, &l0) in times.iter().enumerate() {
            let v = transform_at(lambda, &ctx.window, times, signal, l0, s)?;
            slab += tw[i] * v.norm_sqr();
        }
        energy += sw[k] * slab * dt;
    }
    energy *= ds;
    let energy_term = (16.0 * big_a * b / (std::f64::consts::PI * std::f64::consts::PI)) * energy;

    let defect = kernel_term + energy_term - lhs;
    Ok(ParsevalAudit { lhs, kernel_term, energy_term, defect })
}

/// Mean-value defect of the transform seen as a function of the complex shift
/// `l0 + i s`: the value at `kappa` against the average over a centered circle
/// of radius `rho`. The discrete transform is a finite sum of entire kernels,
/// so the defect vanishes to quadrature precision.
pub fn mean_value_defect(
    ctx: &FbiContext,
    times: &[f64],
    signal: &[f64],
    kappa: f64,
    rho: f64,
    angular_nodes: usize,
) -> Result<f64, FbiError> {
    if !(rho.is_finite() && rho > 0.0 && rho < 1.0) {
        return Err(FbiError::BadRadius(rho));
    }
    if angular_nodes == 0 {
        return Err(FbiError::DegenerateShiftLattice);
    }
    let center = transform_at(ctx.lambda, &ctx.window, times, signal, kappa, 0.0)?;
    let mut avg = num_complex::Complex64::new(0.0, 0.0);
    for k in 0..angular_nodes {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / angular_nodes as f64;
        let l0 = kappa + rho * phi.cos();
        let s = rho * phi.sin();
        avg += transform_at(ctx.lambda, &ctx.window, times, signal, l0, s)?;
    }
    avg /= angular_nodes as f64;
    Ok((center - avg).norm())
}
