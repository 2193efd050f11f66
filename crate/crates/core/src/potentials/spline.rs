/// Natural cubic spline through `(x_i, y_i)`; second derivative vanishes at
/// both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    second: Vec<f64>,
}

impl NaturalSpline {
    /// `x` must be strictly increasing with at least two points; callers
    /// validate this before construction.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        debug_assert!(n >= 2 && n == y.len());
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior equations
            let mut diag = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                diag[i] = 2.0 * (h0 + h1);
                rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            for i in 2..n - 1 {
                let h0 = x[i] - x[i - 1];
                let w = h0 / diag[i - 1];
                diag[i] -= w * h0;
                rhs[i] -= w * rhs[i - 1];
            }
            for i in (1..n - 1).rev() {
                let h1 = x[i + 1] - x[i];
                second[i] = (rhs[i] - h1 * second[i + 1]) / diag[i];
            }
        }
        Self { x, y, second }
    }

    pub fn first_x(&self) -> f64 {
        self.x[0]
    }

    pub fn last_x(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().copied().zip(self.y.iter().copied())
    }

    /// Evaluates inside `[x_0, x_n]`; outside the range the end cubic is
    /// continued.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&xi| xi <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knots_and_cubics_exactly_inside() {
        let x: Vec<f64> = (0..9).map(|i| 1.0 + 0.5 * i as f64 + 0.01 * (i * i) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| (v * 1.3).sin()).collect();
        let s = NaturalSpline::new(x.clone(), y.clone());
        for (xi, yi) in x.iter().zip(&y) {
            assert!((s.eval(*xi) - yi).abs() < 1e-14);
        }
    }

    #[test]
    fn two_points_is_linear() {
        let s = NaturalSpline::new(vec![1.0, 3.0], vec![2.0, 6.0]);
        assert!((s.eval(2.0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn interpolates_smooth_function_accurately() {
        let x: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|v| (-v).exp() * v.cos()).collect();
        let s = NaturalSpline::new(x, y);
        let t = 4.321;
        assert!((s.eval(t) - (-t).exp() * t.cos()).abs() < 1e-7);
    }
}
