//! Composite quadrature weights on uniform lattices.

/// Trapezoid weights (without the `h` factor): 1/2 at the ends, 1 inside.
pub fn trapezoid_weights(n: usize) -> Vec<f64> {
    assert!(n >= 2, "quadrature needs at least 2 points");
    let mut w = vec![1.0; n];
    w[0] = 0.5;
    w[n - 1] = 0.5;
    w
}

/// Trapezoid integral of samples with spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    assert!(values.len() >= 2);
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (0.5 * (values[0] + values[values.len() - 1]) + inner)
}

/// Composite Simpson weights including the `h` factor. An odd interval count is
/// finished with the 3/8 rule on the last three cells, keeping fourth order.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 2);
    let m = n - 1;
    let mut w = vec![0.0; n];
    if m == 1 {
        return vec![0.5 * h, 0.5 * h];
    }
    let (simpson_cells, tail) = if m % 2 == 0 { (m, false) } else { (m - 3, true) };
    if simpson_cells > 0 {
        w[0] += h / 3.0;
        w[simpson_cells] += h / 3.0;
        for i in 1..simpson_cells {
            w[i] += if i % 2 == 1 { 4.0 * h / 3.0 } else { 2.0 * h / 3.0 };
        }
    }
    if tail {
        let base = simpson_cells;
        if simpson_cells == 0 {
            // m == 3: pure 3/8 rule.
        }
        w[base] += 3.0 * h / 8.0;
        w[base + 1] += 9.0 * h / 8.0;
        w[base + 2] += 9.0 * h / 8.0;
        w[base + 3] += 3.0 * h / 8.0;
    }
    w
}

/// Weighted dot product used as a discrete integral.
pub fn dot(weights: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), values.len());
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / (n - 1) as f64;
        let w = simpson_weights(n, h);
        (0..n).map(|i| w[i] * f(a + i as f64 * h)).sum()
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let vals: Vec<f64> = (0..=10).map(|i| 3.0 * i as f64 * 0.1 + 2.0).collect();
        assert!((trapezoid(&vals, 0.1) - 3.5).abs() < 1e-14);
    }

    #[test]
    fn simpson_exact_for_cubics_even_and_odd_cells() {
        // integral of x^3 on [0,1] is 1/4; both parities of interval count must nail it
        for n in [5usize, 6, 9, 10, 4] {
            let v = integrate_simpson(|x| x * x * x, 0.0, 1.0, n);
            assert!((v - 0.25).abs() < 1e-14, "n = {n}: {v}");
        }
    }

    #[test]
    fn simpson_weights_sum_to_interval_length() {
        for n in [4usize, 5, 6, 7, 11, 12] {
            let h = 2.0 / (n - 1) as f64;
            let s: f64 = simpson_weights(n, h).iter().sum();
            assert!((s - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn simpson_fourth_order_on_smooth_integrand() {
        let exact = 1.0 - (-1.0_f64).exp();
        let e1 = (integrate_simpson(|x| (-x).exp(), 0.0, 1.0, 17) - exact).abs();
        let e2 = (integrate_simpson(|x| (-x).exp(), 0.0, 1.0, 33) - exact).abs();
        assert!(e1 / e2 > 12.0, "ratio {}", e1 / e2);
    }
}
