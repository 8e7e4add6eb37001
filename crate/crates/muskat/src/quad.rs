//! Uniform-grid quadrature and differentiation in the vertical variable.

/// Composite weights on `n >= 2` equal intervals of width `h`: Simpson when
/// `n` is even, otherwise a leading 3/8 panel followed by Simpson.
pub fn composite_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 2, "composite rule needs at least two intervals");
    let mut w = vec![0.0; n + 1];
    let start = if n % 2 == 1 {
        let c = 3.0 * h / 8.0;
        w[0] += c;
        w[1] += 3.0 * c;
        w[2] += 3.0 * c;
        w[3] += c;
        3
    } else {
        0
    };
    let mut i = start;
    while i < n {
        let c = h / 3.0;
        w[i] += c;
        w[i + 1] += 4.0 * c;
        w[i + 2] += c;
        i += 2;
    }
    w
}

/// One interval `[x0, x1]` integrated with a third point `x2` beyond `x1`.
pub const SINGLE_INTERVAL: [f64; 3] = [5.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0];

/// Full-range integral of nodal samples.
pub fn integrate(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    if n == 1 {
        return 0.5 * h * (values[0] + values[1]);
    }
    composite_weights(n, h).iter().zip(values).map(|(w, v)| w * v).sum()
}

/// Fourth-order derivative of nodal samples on a uniform grid.
pub fn derivative<T>(f: &[T], h: f64) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = f.len();
    assert!(n >= 5, "fourth-order stencil needs five nodes");
    let s = 1.0 / (12.0 * h);
    let mut d = Vec::with_capacity(n);
    d.push((f[1] * 48.0 - f[0] * 25.0 - f[2] * 36.0 + f[3] * 16.0 - f[4] * 3.0) * s);
    d.push((f[2] * 18.0 - f[0] * 3.0 - f[1] * 10.0 - f[3] * 6.0 + f[4]) * s);
    for i in 2..n - 2 {
        d.push((f[i - 2] - f[i - 1] * 8.0 + f[i + 1] * 8.0 - f[i + 2]) * s);
    }
    let m = n - 1;
    d.push((f[m - 4] * -1.0 + f[m - 3] * 6.0 - f[m - 2] * 18.0 + f[m - 1] * 10.0 + f[m] * 3.0) * s);
    d.push((f[m - 4] * 3.0 - f[m - 3] * 16.0 + f[m - 2] * 36.0 - f[m - 1] * 48.0 + f[m] * 25.0) * s);
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_are_exact_for_cubics() {
        for n in [2usize, 3, 4, 5, 8, 9] {
            let h = 1.0 / n as f64;
            let vals: Vec<f64> = (0..=n)
                .map(|i| {
                    let x = -1.0 + i as f64 * h;
                    x * x * x - 2.0 * x + 1.0
                })
                .collect();
            let exact = -0.25 + 1.0 + 1.0;
            assert!((integrate(&vals, h) - exact).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn single_interval_rule_is_exact_for_quadratics() {
        let f = |x: f64| 3.0 * x * x - x + 2.0;
        let h = 0.1;
        let approx = h * (SINGLE_INTERVAL[0] * f(0.0) + SINGLE_INTERVAL[1] * f(h) + SINGLE_INTERVAL[2] * f(2.0 * h));
        let exact = h * h * h - h * h / 2.0 + 2.0 * h;
        assert!((approx - exact).abs() < 1e-15);
    }

    #[test]
    fn derivative_is_exact_for_quartics() {
        let m = 12;
        let h = 1.0 / m as f64;
        let xs: Vec<f64> = (0..=m).map(|i| -1.0 + i as f64 * h).collect();
        let f: Vec<f64> = xs.iter().map(|x| x.powi(4) - x * x + 3.0).collect();
        let d = derivative(&f, h);
        for (x, di) in xs.iter().zip(d) {
            assert!((di - (4.0 * x.powi(3) - 2.0 * x)).abs() < 1e-11);
        }
    }
}
