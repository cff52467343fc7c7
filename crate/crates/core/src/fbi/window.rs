//! Plateau window in the time variable: compactly supported, identically one
//! on the middle half of its support, with C2 smoothstep shoulders.

use super::FbiError;
use crate::profile::Smoothstep;

/// Best slope constant a C2 ramp over a quarter-length shoulder can reach
/// here: the quintic smoothstep has sup |s'| = 15/8 on a shoulder of width
/// L/4, giving sup |Phi'| = (15/8) * (4/L) = 7.5 / L. Any requested constant
/// below this is infeasible for this profile (and every profile is bounded
/// below by 4/L, the mean-value floor for a unit rise over L/4).
pub const ACHIEVABLE_SLOPE_CONSTANT: f64 = 7.5;

/// Even window supported on `[-L/2, L/2]`, equal to 1 on `[-L/4, L/4]`,
/// quintic smoothstep in between. The slope bound `sup |Phi'| <= k1 / L`
/// and curvature bound `sup |Phi''| <= k2 / L^2` hold with
/// `k1 = 7.5` and `k2 = 160 / sqrt 3`.
#[derive(Debug, Clone)]
pub struct Window {
    length: f64,
    profile: Smoothstep,
}

impl Window {
    /// Build the window, refusing slope budgets no C2 plateau of this shape
    /// can meet.
    pub fn plateau(length: f64, k1: f64) -> Result<Self, FbiError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(FbiError::BadWindowLength(length));
        }
        if k1 < ACHIEVABLE_SLOPE_CONSTANT {
            return Err(FbiError::InfeasibleSlope { k1, floor: ACHIEVABLE_SLOPE_CONSTANT });
        }
        Ok(Self { length, profile: Smoothstep::Quintic })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Shoulder width L/4.
    fn ramp(&self) -> f64 {
        0.25 * self.length
    }

    pub fn eval(&self, l: f64) -> f64 {
        let half = 0.5 * self.length;
        let quarter = 0.25 * self.length;
        let x = l.abs();
        if x >= half {
            0.0
        } else if x <= quarter {
            1.0
        } else {
            // descending ramp from 1 at L/4 to 0 at L/2
            1.0 - self.profile.eval((x - quarter) / self.ramp())
        }
    }

    pub fn derivative(&self, l: f64) -> f64 {
        let half = 0.5 * self.length;
        let quarter = 0.25 * self.length;
        let x = l.abs();
        if x >= half || x <= quarter {
            0.0
        } else {
            let inner = -self.profile.derivative((x - quarter) / self.ramp()) / self.ramp();
            if l < 0.0 {
                -inner
            } else {
                inner
            }
        }
    }

    pub fn second_derivative(&self, l: f64) -> f64 {
        let half = 0.5 * self.length;
        let quarter = 0.25 * self.length;
        let x = l.abs();
        if x >= half || x <= quarter {
            0.0
        } else {
            // even function: second derivative is even
            -self.profile.second_derivative((x - quarter) / self.ramp()) / (self.ramp() * self.ramp())
        }
    }

    /// Achieved sup of |Phi'| times L.
    pub fn slope_constant(&self) -> f64 {
        4.0 * self.profile.max_slope()
    }

    /// Achieved sup of |Phi''| times L^2.
    pub fn curvature_constant(&self) -> f64 {
        16.0 * self.profile.max_curvature()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_pointwise_structure() {
        let w = Window::plateau(32.0, 7.5).unwrap();
        assert_eq!(w.eval(0.0), 1.0);
        assert_eq!(w.eval(8.0), 1.0);
        assert_eq!(w.eval(-8.0), 1.0);
        assert_eq!(w.eval(16.0), 0.0);
        assert_eq!(w.eval(-17.0), 0.0);
        let mid = w.eval(12.0);
        assert!(mid > 0.0 && mid < 1.0);
        assert_eq!(w.eval(12.0), w.eval(-12.0));
        for i in 0..=400 {
            let l = -20.0 + 0.1 * i as f64;
            let v = w.eval(l);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn slope_bound_is_achieved_not_exceeded() {
        let w = Window::plateau(32.0, 7.5).unwrap();
        let bound = 7.5 / 32.0;
        let mut sup = 0.0_f64;
        for i in 0..=64000 {
            let l = -16.0 + 0.0005 * i as f64;
            sup = sup.max(w.derivative(l).abs());
        }
        assert!(sup <= bound * (1.0 + 1e-12), "sup {sup} > bound {bound}");
        assert!(sup >= bound * (1.0 - 1e-6), "bound not achieved: {sup} vs {bound}");
    }

    #[test]
    fn curvature_bound_matches_profile_constant() {
        let w = Window::plateau(32.0, 7.5).unwrap();
        let bound = w.curvature_constant() / (32.0 * 32.0);
        let mut sup = 0.0_f64;
        for i in 0..=64000 {
            let l = -16.0 + 0.0005 * i as f64;
            sup = sup.max(w.second_derivative(l).abs());
        }
        assert!(sup <= bound * (1.0 + 1e-9));
        assert!(sup >= bound * (1.0 - 1e-4));
    }

    #[test]
    fn infeasible_slope_budget_is_refused() {
        let err = Window::plateau(32.0, 7.4).unwrap_err();
        assert!(matches!(err, FbiError::InfeasibleSlope { .. }));
        assert!(Window::plateau(32.0, 8.0).is_ok());
    }

    #[test]
    fn derivative_consistent_with_finite_differences() {
        let w = Window::plateau(10.0, 7.5).unwrap();
        let eps = 1e-6;
        for &l in &[-4.9, -3.7, -2.6, 2.51, 3.3, 4.2, 4.99] {
            let fd = (w.eval(l + eps) - w.eval(l - eps)) / (2.0 * eps);
            assert!((fd - w.derivative(l)).abs() < 1e-6, "l = {l}");
            // wider step for the second difference: at 1e-6 the cancellation
            // noise (ulp / eps^2) would swamp the comparison
            let e2 = 1e-4;
            let fd2 = (w.eval(l + e2) - 2.0 * w.eval(l) + w.eval(l - e2)) / (e2 * e2);
            assert!((fd2 - w.second_derivative(l)).abs() < 1e-4, "l = {l}");
        }
    }
}
