//! Carleman weight bookkeeping on the observation subdomain.
//!
//! The weight is built from a concave quadratic `psi_hat` vanishing at the
//! ends of `omega`, normalized and lifted to the (node, shift) lattice as
//!
//! ```text
//! psi(x, s) = psi_hat(x) / (M ||psi_hat||) + b^2 - s^2,
//! phi = e^{mu psi},   ell = zeta phi,   theta = e^{ell},
//! ```
//!
//! together with the level values `psi_1..psi_4` that order the weight across
//! the layout, the admissible window for `M`, and the derived `tau`, `zeta`,
//! and window length. `theta` overflows double precision for realistic
//! parameters, so everything downstream works with `ell` and scales by a
//! common reference exponent.

use crate::fbi::FbiField;
use crate::grid::{Grid, GridError, IndexRange, ScalarField};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WeightError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid weight regions: {0}")]
    BadRegions(String),
    #[error("reparametrization coefficient {c:.4} leaves no monotone map placing the maximizer inside the target interval")]
    MaximizerOutsideOmega0 { c: f64 },
    #[error("beta gap violated: beta2 = {beta2:.6} must exceed (beta1 + norm)/2 = {threshold:.6} (beta1 = {beta1:.6}, norm = {norm:.6})")]
    BetaGapViolation { beta1: f64, beta2: f64, norm: f64, threshold: f64 },
    #[error("admissible M-interval is empty: lo = {lo:.6} >= hi = {hi:.6}")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("invalid weight parameters: {0}")]
    BadParams(String),
    #[error("weight level ordering violated: {0}")]
    OrderingViolation(String),
    #[error("tau would be nonpositive: psi4 = {psi4:.6} >= psi3 = {psi3:.6}")]
    NonPositiveTau { psi3: f64, psi4: f64 },
    #[error("weight overflow at node {node}, shift index {s_index}: zeta phi = {exponent:.1} > 700")]
    WeightOverflow { node: usize, s_index: usize, exponent: f64 },
    #[error("lattice mismatch in diagnostic inputs: {0}")]
    LatticeMismatch(String),
}

/// Concave quadratic weight core with its exact sup and maximizer.
#[derive(Debug, Clone)]
pub struct PsiHat {
    pub field: ScalarField,
    /// Sup over the continuum of `omega`; the maximizer need not be a node.
    pub norm: f64,
    pub x_hat: f64,
    /// Reparametrization coefficient; 0 when the target sits at the center.
    pub reparam: f64,
}

/// Build the weight core on `omega = (p, q)`: the parabola `(x-p)(q-x)`
/// composed with a monotone quadratic reparametrization that moves the
/// maximizer to the midpoint of `omega_tilde0`. Zero outside `omega`.
///
/// Requires the nesting `omega_tilde0 strictly inside omega0, omega0 within
/// omega`. Fails when the target midpoint is so off-center that no monotone
/// quadratic reparametrization reaches it (|c| >= 1).
pub fn build_psi_hat(
    grid: &Grid,
    omega: &IndexRange,
    omega0: &IndexRange,
    omega_tilde0: &IndexRange,
) -> Result<PsiHat, WeightError> {
    omega.check(grid)?;
    omega0.check(grid)?;
    omega_tilde0.check(grid)?;
    if !omega0.is_subset_of(omega) {
        return Err(WeightError::BadRegions("omega0 must lie within omega".into()));
    }
    if omega_tilde0.start <= omega0.start || omega_tilde0.end >= omega0.end {
        return Err(WeightError::BadRegions(
            "omega_tilde0 must lie strictly inside omega0".into(),
        ));
    }
    let p = omega.left_coord(grid);
    let q = omega.right_coord(grid);
    let span = q - p;
    let x_hat = 0.5 * (omega_tilde0.left_coord(grid) + omega_tilde0.right_coord(grid));
    let u_hat = (x_hat - p) / span;
    let c = (0.5 - u_hat) / (u_hat * (1.0 - u_hat));
    if !(c.is_finite() && c.abs() < 1.0) {
        return Err(WeightError::MaximizerOutsideOmega0 { c });
    }
    let sigma = |u: f64| u + c * u * (1.0 - u);
    let field = ScalarField::from_fn(grid, |x| {
        if x <= p || x >= q {
            return 0.0;
        }
        let w = sigma((x - p) / span);
        span * span * w * (1.0 - w)
    })?;
    // verify the defining clauses on the nodes themselves
    for i in omega.nodes() {
        let x = grid.coord(i);
        let v = field.get(i);
        let interior = x > p + 1e-14 && x < q - 1e-14;
        if interior && v <= 0.0 {
            return Err(WeightError::BadRegions(format!(
                "psi_hat not positive at interior node {i}"
            )));
        }
        if !interior && v != 0.0 {
            return Err(WeightError::BadRegions(format!(
                "psi_hat not zero at boundary node {i}"
            )));
        }
    }
    let norm = span * span * 0.25;
    Ok(PsiHat { field, norm, x_hat, reparam: c })
}

/// Extract the level constants of the weight core over the two marked
/// regions: `beta1` bounds it from above on `O2`, `beta2` from below on
/// `omega0`. The pair is usable only when `beta2 > (beta1 + norm)/2`.
pub fn compute_beta_constants(
    psi_hat: &ScalarField,
    norm: f64,
    o2: &IndexRange,
    omega0: &IndexRange,
) -> Result<(f64, f64), WeightError> {
    let beta1 = o2
        .nodes()
        .map(|i| psi_hat.get(i))
        .fold(f64::NEG_INFINITY, f64::max);
    let beta2 = omega0.nodes().map(|i| psi_hat.get(i)).fold(f64::INFINITY, f64::min);
    if !(beta1.is_finite() && beta2.is_finite()) {
        return Err(WeightError::BadRegions("empty O2 or omega0 range".into()));
    }
    let threshold = 0.5 * (beta1 + norm);
    if !(beta2 > threshold) {
        return Err(WeightError::BetaGapViolation { beta1, beta2, norm, threshold });
    }
    Ok((beta1, beta2))
}

/// Open interval of admissible normalization constants `M`:
///
/// ```text
/// (1 - beta2/norm) / (b0^2 - 1)  <  M  <  (1 - beta1/norm) / b0^2.
/// ```
pub fn admissible_m_interval(
    beta1: f64,
    beta2: f64,
    norm: f64,
    b0: f64,
) -> Result<(f64, f64), WeightError> {
    if !(b0 > 1.0) {
        return Err(WeightError::BadParams(format!("b0 must exceed 1, got {b0}")));
    }
    if !(beta1 > 0.0 && beta1 < beta2 && beta2 <= norm) {
        return Err(WeightError::BadParams(format!(
            "need 0 < beta1 < beta2 <= norm, got beta1 = {beta1}, beta2 = {beta2}, norm = {norm}"
        )));
    }
    let lo = (1.0 - beta2 / norm) / (b0 * b0 - 1.0);
    let hi = (1.0 - beta1 / norm) / (b0 * b0);
    if lo >= hi {
        return Err(WeightError::EmptyInterval { lo, hi });
    }
    Ok((lo, hi))
}

/// Full parameter block for the weight family.
#[derive(Debug, Clone, Copy)]
pub struct CarlemanParams {
    pub mu: f64,
    pub m: f64,
    pub b: f64,
    pub b0: f64,
    pub big_a: f64,
    pub lambda: f64,
    pub zeta: f64,
    pub psi_hat_norm: f64,
}

impl CarlemanParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mu: f64,
        m: f64,
        b: f64,
        b0: f64,
        big_a: f64,
        lambda: f64,
        zeta: f64,
        psi_hat_norm: f64,
    ) -> Result<Self, WeightError> {
        if !(mu.is_finite() && mu >= 1.0) {
            return Err(WeightError::BadParams(format!("mu must be >= 1, got {mu}")));
        }
        if !(b0.is_finite() && b.is_finite() && 1.0 < b0 && b0 < b && b <= 2.0) {
            return Err(WeightError::BadParams(format!(
                "need 1 < b0 < b <= 2, got b0 = {b0}, b = {b}"
            )));
        }
        if !(big_a.is_finite() && big_a > 1.0) {
            return Err(WeightError::BadParams(format!("A must exceed 1, got {big_a}")));
        }
        if !(lambda.is_finite() && lambda >= 1.0) {
            return Err(WeightError::BadParams(format!("lambda must be >= 1, got {lambda}")));
        }
        if !(m.is_finite() && m > 0.0) {
            return Err(WeightError::BadParams(format!("M must be positive, got {m}")));
        }
        if !(zeta.is_finite() && zeta >= 0.0) {
            return Err(WeightError::BadParams(format!("zeta must be >= 0, got {zeta}")));
        }
        if !(psi_hat_norm.is_finite() && psi_hat_norm > 0.0) {
            return Err(WeightError::BadParams(format!(
                "psi_hat norm must be positive, got {psi_hat_norm}"
            )));
        }
        Ok(Self { mu, m, b, b0, big_a, lambda, zeta, psi_hat_norm })
    }

    /// `M` must lie strictly inside the admissible interval.
    pub fn check_m_inside(&self, lo: f64, hi: f64) -> Result<(), WeightError> {
        if !(self.m > lo && self.m < hi) {
            return Err(WeightError::BadParams(format!(
                "M = {} outside the admissible interval ({lo}, {hi})",
                self.m
            )));
        }
        Ok(())
    }
}

/// The four level values of the weight and their exponentials.
#[derive(Debug, Clone, Copy)]
pub struct WeightLevels {
    pub beta1: f64,
    pub beta2: f64,
    pub psi: [f64; 4],
    pub phi: [f64; 4],
    pub tau: f64,
}

/// Level bookkeeping:
///
/// ```text
/// psi1 = beta1/(M norm) + b^2          (top of the weight over O2)
/// psi2 = 1/M + b^2                     (global top)
/// psi3 = beta2/(M norm) + b^2 - 1      (floor over omega0 within |s| < 1)
/// psi4 = 1/M + b^2 - b0^2              (top outside the inner strip)
/// ```
///
/// `M` inside the admissible interval is equivalent to the strict ordering
/// `psi1 < psi4 < psi3 < psi2`, which is checked here; `tau = 1 - e^{mu (psi4
/// - psi3)}` then lies in (0, 1).
pub fn psi_levels(
    beta1: f64,
    beta2: f64,
    norm: f64,
    m: f64,
    b: f64,
    b0: f64,
    mu: f64,
) -> Result<WeightLevels, WeightError> {
    if !(m > 0.0 && norm > 0.0) {
        return Err(WeightError::BadParams(format!(
            "need positive M and norm, got M = {m}, norm = {norm}"
        )));
    }
    let psi1 = beta1 / (m * norm) + b * b;
    let psi2 = 1.0 / m + b * b;
    let psi3 = beta2 / (m * norm) + b * b - 1.0;
    let psi4 = 1.0 / m + b * b - b0 * b0;
    for (label, lo_v, hi_v) in [
        ("psi1 < psi4", psi1, psi4),
        ("psi4 < psi3", psi4, psi3),
        ("psi3 < psi2", psi3, psi2),
    ] {
        if !(lo_v < hi_v) {
            return Err(WeightError::OrderingViolation(format!(
                "{label} fails: {lo_v:.9} vs {hi_v:.9}"
            )));
        }
    }
    let psi = [psi1, psi2, psi3, psi4];
    let phi = psi.map(|v| (mu * v).exp());
    let tau = 1.0 - (mu * (psi4 - psi3)).exp();
    Ok(WeightLevels { beta1, beta2, psi, phi, tau })
}

/// Derived scalars of the weight family.
#[derive(Debug, Clone, Copy)]
pub struct TauZetaL {
    pub tau: f64,
    pub zeta: f64,
    pub window_length: f64,
}

/// `tau` from the exact identity `phi3 - phi4 = tau phi3`, the weight
/// magnitude `zeta = lambda^2 b^2 / (4 tau phi3)`, and the matched window
/// length `L = 8 A b`.
pub fn tau_zeta_window(
    levels: &WeightLevels,
    mu: f64,
    lambda: f64,
    b: f64,
    big_a: f64,
) -> Result<TauZetaL, WeightError> {
    let (psi3, psi4) = (levels.psi[2], levels.psi[3]);
    if psi4 >= psi3 {
        return Err(WeightError::NonPositiveTau { psi3, psi4 });
    }
    let tau = 1.0 - (mu * (psi4 - psi3)).exp();
    let phi3 = levels.phi[2];
    let zeta = lambda * lambda * b * b / (4.0 * tau * phi3);
    Ok(TauZetaL { tau, zeta, window_length: 8.0 * big_a * b })
}

/// Weight values over the (node, shift) lattice, shift-major like the
/// transform fields. `theta` is materialized only when every exponent
/// `ell = zeta phi` stays at or below 700; the log values are always present.
#[derive(Debug, Clone)]
pub struct WeightEval {
    pub s_values: Vec<f64>,
    pub n_nodes: usize,
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
    pub ell: Vec<f64>,
    pub theta: Option<Vec<f64>>,
}

impl WeightEval {
    pub fn psi_at(&self, k: usize, i: usize) -> f64 {
        self.psi[k * self.n_nodes + i]
    }

    pub fn ell_at(&self, k: usize, i: usize) -> f64 {
        self.ell[k * self.n_nodes + i]
    }
}

fn eval_lattice(
    psi_hat: &ScalarField,
    params: &CarlemanParams,
    s_values: &[f64],
) -> Result<WeightEval, WeightError> {
    if s_values.len() < 2 {
        return Err(WeightError::BadParams("shift lattice needs at least 2 values".into()));
    }
    let b = params.b;
    for &s in s_values {
        if !(s.is_finite() && s.abs() <= b * (1.0 + 1e-12)) {
            return Err(WeightError::BadParams(format!("shift {s} outside [-b, b] = [-{b}, {b}]")));
        }
    }
    let n = psi_hat.len();
    let mut psi = Vec::with_capacity(n * s_values.len());
    let mut phi = Vec::with_capacity(n * s_values.len());
    let mut ell = Vec::with_capacity(n * s_values.len());
    for &s in s_values {
        for i in 0..n {
            let p = psi_hat.get(i) / (params.m * params.psi_hat_norm) + b * b - s * s;
            let f = (params.mu * p).exp();
            psi.push(p);
            phi.push(f);
            ell.push(params.zeta * f);
        }
    }
    let overflow = ell.iter().any(|&l| l > 700.0);
    let theta = if overflow { None } else { Some(ell.iter().map(|&l| l.exp()).collect()) };
    Ok(WeightEval { s_values: s_values.to_vec(), n_nodes: n, psi, phi, ell, theta })
}

/// Pointwise weight evaluation. Errors with the offending lattice point when
/// any exponent exceeds 700, where `theta = e^{ell}` leaves double range.
pub fn weight_eval(
    psi_hat: &ScalarField,
    params: &CarlemanParams,
    s_values: &[f64],
) -> Result<WeightEval, WeightError> {
    let eval = eval_lattice(psi_hat, params, s_values)?;
    if eval.theta.is_none() {
        let n = eval.n_nodes;
        let (idx, &exponent) = eval
            .ell
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty lattice");
        return Err(WeightError::WeightOverflow { node: idx % n, s_index: idx / n, exponent });
    }
    Ok(eval)
}

/// Same evaluation without materializing `theta`; never fails on overflow.
/// The ratio diagnostic uses this and works with scaled exponentials.
pub fn weight_eval_log(
    psi_hat: &ScalarField,
    params: &CarlemanParams,
    s_values: &[f64],
) -> Result<WeightEval, WeightError> {
    eval_lattice(psi_hat, params, s_values)
}

/// Two-sided energy bookkeeping of the weighted estimate, both sides scaled
/// by `e^{-2 zeta phi2}` so nothing overflows.
#[derive(Debug, Clone, Copy)]
pub struct RatioReport {
    pub lhs: f64,
    pub source_term: f64,
    pub observation_term: f64,
    pub boundary_term: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub zero_over_zero: bool,
}

fn span_weights(len: usize, step: f64) -> Vec<f64> {
    let mut w = vec![step; len];
    if len >= 2 {
        w[0] = 0.5 * step;
        w[len - 1] = 0.5 * step;
    } else if len == 1 {
        w[0] = 0.0;
    }
    w
}

/// Evaluate both sides of the weighted inequality, without its unknown
/// constant:
///
/// ```text
/// LHS = int_{|s|<b0} int_omega theta^2 [ zeta mu^2 phi (|dU/dx|^2 + |dU/ds|^2)
///                                      + zeta^3 mu^4 phi^3 |U|^2 ]   (both components)
/// RHS = int_{|s|<b} int_omega theta^2 (|G1+H1|^2 + |G2+H2|^2)
///     + int_{|s|<b} int_omega0 zeta^5 mu^7 theta^2 phi^5 |U1|^2
///     + int_{b0<|s|<b} int_omega theta^2 (|dU/ds|^2 + |U|^2)         (both components)
/// ```
///
/// A finite positive ratio LHS/RHS across varied inputs is evidence of the
/// estimate's shape, not a proof. Zero over zero returns ratio 0 with the
/// flag set; positive over zero returns +infinity.
#[allow(clippy::too_many_arguments)]
pub fn carleman_ratio_diagnostic(
    uf1: &FbiField,
    uf2: &FbiField,
    g1: &FbiField,
    g2: &FbiField,
    h1: &FbiField,
    h2: &FbiField,
    weights: &WeightEval,
    levels: &WeightLevels,
    params: &CarlemanParams,
    omega: &IndexRange,
    omega0: &IndexRange,
    h: f64,
) -> Result<RatioReport, WeightError> {
    uf1.check_same_lattice(uf2)
        .and_then(|_| uf1.check_same_lattice(g1))
        .and_then(|_| uf1.check_same_lattice(g2))
        .and_then(|_| uf1.check_same_lattice(h1))
        .and_then(|_| uf1.check_same_lattice(h2))
        .map_err(|e| WeightError::LatticeMismatch(e.to_string()))?;
    let n = uf1.n_nodes;
    let ns = uf1.s_values.len();
    if weights.n_nodes != n || weights.s_values.len() != ns {
        return Err(WeightError::LatticeMismatch(format!(
            "weights on {} x {}, fields on {} x {}",
            weights.s_values.len(),
            weights.n_nodes,
            ns,
            n
        )));
    }
    if ns < 3 {
        return Err(WeightError::LatticeMismatch("need at least 3 shift values".into()));
    }
    if !omega0.is_subset_of(omega) {
        return Err(WeightError::BadRegions("omega0 must lie within omega".into()));
    }
    let ds = uf1.s_values[1] - uf1.s_values[0];
    let (zeta, mu) = (params.zeta, params.mu);
    let ell_ref = zeta * levels.phi[1];
    let scaled_sq = |k: usize, i: usize| (2.0 * (weights.ell_at(k, i) - ell_ref)).exp();

    // centered differences, one-sided second order at lattice edges
    let dx = |f: &FbiField, k: usize, i: usize| {
        if i == 0 {
            (-3.0 * f.at(k, 0) + 4.0 * f.at(k, 1) - f.at(k, 2)) / (2.0 * h)
        } else if i + 1 == n {
            (3.0 * f.at(k, n - 1) - 4.0 * f.at(k, n - 2) + f.at(k, n - 3)) / (2.0 * h)
        } else {
            (f.at(k, i + 1) - f.at(k, i - 1)) / (2.0 * h)
        }
    };
    let dsd = |f: &FbiField, k: usize, i: usize| {
        if k == 0 {
            (-3.0 * f.at(0, i) + 4.0 * f.at(1, i) - f.at(2, i)) / (2.0 * ds)
        } else if k + 1 == ns {
            (3.0 * f.at(ns - 1, i) - 4.0 * f.at(ns - 2, i) + f.at(ns - 3, i)) / (2.0 * ds)
        } else {
            (f.at(k + 1, i) - f.at(k - 1, i)) / (2.0 * ds)
        }
    };

    let tol = 1e-12 * params.b0.max(1.0);
    let inner: Vec<usize> =
        (0..ns).filter(|&k| uf1.s_values[k].abs() <= params.b0 + tol).collect();
    let outer: Vec<usize> =
        (0..ns).filter(|&k| uf1.s_values[k].abs() >= params.b0 - tol).collect();
    let x_w_omega = span_weights(omega.len(), h);
    let x_w_omega0 = span_weights(omega0.len(), h);
    let s_w_full = span_weights(ns, ds);

    // strip weights: trapezoid within each contiguous run of selected nodes
    let strip_weights = |sel: &[usize]| -> Vec<f64> {
        let mut w = vec![ds; sel.len()];
        for j in 0..sel.len() {
            let isolated_left = j == 0 || sel[j - 1] + 1 != sel[j];
            let isolated_right = j + 1 == sel.len() || sel[j + 1] != sel[j] + 1;
            if isolated_left && isolated_right {
                w[j] = 0.0;
            } else if isolated_left || isolated_right {
                w[j] = 0.5 * ds;
            }
        }
        w
    };
    let inner_w = strip_weights(&inner);
    let outer_w = strip_weights(&outer);

    let mut lhs = 0.0;
    for (j, &k) in inner.iter().enumerate() {
        let sw = inner_w[j];
        for (m, i) in omega.nodes().enumerate() {
            let th2 = scaled_sq(k, i);
            let phi = weights.phi[k * n + i];
            let grad = dx(uf1, k, i).norm_sqr()
                + dsd(uf1, k, i).norm_sqr()
                + dx(uf2, k, i).norm_sqr()
                + dsd(uf2, k, i).norm_sqr();
            let val = uf1.at(k, i).norm_sqr() + uf2.at(k, i).norm_sqr();
            lhs += sw
                * x_w_omega[m]
                * th2
                * (zeta * mu * mu * phi * grad
                    + zeta * zeta * zeta * mu.powi(4) * phi * phi * phi * val);
        }
    }

    let mut source_term = 0.0;
    let mut observation_term = 0.0;
    for k in 0..ns {
        let sw = s_w_full[k];
        for (m, i) in omega.nodes().enumerate() {
            let th2 = scaled_sq(k, i);
            let s1 = (g1.at(k, i) + h1.at(k, i)).norm_sqr();
            let s2 = (g2.at(k, i) + h2.at(k, i)).norm_sqr();
            source_term += sw * x_w_omega[m] * th2 * (s1 + s2);
        }
        for (m, i) in omega0.nodes().enumerate() {
            let th2 = scaled_sq(k, i);
            let phi = weights.phi[k * n + i];
            observation_term += sw
                * x_w_omega0[m]
                * th2
                * zeta.powi(5)
                * mu.powi(7)
                * phi.powi(5)
                * uf1.at(k, i).norm_sqr();
        }
    }

    let mut boundary_term = 0.0;
    for (j, &k) in outer.iter().enumerate() {
        let sw = outer_w[j];
        for (m, i) in omega.nodes().enumerate() {
            let th2 = scaled_sq(k, i);
            let v = dsd(uf1, k, i).norm_sqr()
                + uf1.at(k, i).norm_sqr()
                + dsd(uf2, k, i).norm_sqr()
                + uf2.at(k, i).norm_sqr();
            boundary_term += sw * x_w_omega[m] * th2 * v;
        }
    }

    let rhs = source_term + observation_term + boundary_term;
    let (ratio, zero_over_zero) = if rhs == 0.0 {
        if lhs == 0.0 {
            (0.0, true)
        } else {
            (f64::INFINITY, false)
        }
    } else {
        (lhs / rhs, false)
    };
    Ok(RatioReport { lhs, source_term, observation_term, boundary_term, rhs, ratio, zero_over_zero })
}
