//! Smoothstep transition profiles shared by cutoff and window constructions.

/// Transition smoothness selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothstep {
    /// C1 cubic 3u^2 - 2u^3.
    Cubic,
    /// C2 quintic u^3 (10 - 15u + 6u^2).
    Quintic,
}

impl Smoothstep {
    /// Monotone ramp from 0 at u=0 to 1 at u=1, clamped outside [0, 1].
    pub fn eval(self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            Smoothstep::Cubic => u * u * (3.0 - 2.0 * u),
            Smoothstep::Quintic => u * u * u * (10.0 + u * (-15.0 + 6.0 * u)),
        }
    }

    pub fn derivative(self, u: f64) -> f64 {
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        match self {
            Smoothstep::Cubic => 6.0 * u * (1.0 - u),
            Smoothstep::Quintic => 30.0 * u * u * (1.0 - u) * (1.0 - u),
        }
    }

    pub fn second_derivative(self, u: f64) -> f64 {
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        match self {
            Smoothstep::Cubic => 6.0 - 12.0 * u,
            Smoothstep::Quintic => 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u),
        }
    }

    /// sup |d/du| over [0, 1].
    pub fn max_slope(self) -> f64 {
        match self {
            Smoothstep::Cubic => 1.5,
            // 30 * (1/2)^2 * (1/2)^2 at the midpoint.
            Smoothstep::Quintic => 1.875,
        }
    }

    /// sup |d^2/du^2| over [0, 1].
    pub fn max_curvature(self) -> f64 {
        match self {
            Smoothstep::Cubic => 6.0,
            // Extremum of 60u(1-u)(1-2u) at u = 1/2 +/- 1/(2 sqrt 3).
            Smoothstep::Quintic => 10.0 / 3.0_f64.sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quintic_endpoint_flatness() {
        let s = Smoothstep::Quintic;
        assert_eq!(s.eval(0.0), 0.0);
        assert_eq!(s.eval(1.0), 1.0);
        assert_eq!(s.derivative(0.0), 0.0);
        assert_eq!(s.derivative(1.0), 0.0);
        assert_eq!(s.second_derivative(0.0), 0.0);
        assert_eq!(s.second_derivative(1.0), 0.0);
    }

    #[test]
    fn quintic_slope_peaks_at_midpoint() {
        let s = Smoothstep::Quintic;
        assert!((s.derivative(0.5) - 1.875).abs() < 1e-15);
        let sup = (0..=1000)
            .map(|i| s.derivative(i as f64 / 1000.0))
            .fold(0.0_f64, f64::max);
        assert!((sup - s.max_slope()).abs() < 1e-12);
    }

    #[test]
    fn quintic_curvature_bound_is_achieved() {
        let s = Smoothstep::Quintic;
        let sup = (0..=100_000)
            .map(|i| s.second_derivative(i as f64 / 100_000.0).abs())
            .fold(0.0_f64, f64::max);
        assert!((sup - s.max_curvature()).abs() < 1e-6);
    }

    #[test]
    fn monotone_on_unit_interval() {
        for s in [Smoothstep::Cubic, Smoothstep::Quintic] {
            let mut prev = -1.0;
            for i in 0..=500 {
                let v = s.eval(i as f64 / 500.0);
                assert!(v >= prev);
                prev = v;
            }
        }
    }
}
