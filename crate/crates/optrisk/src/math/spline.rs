//! Natural cubic spline interpolation with analytic derivatives.

use crate::error::{Error, Result};

/// Natural cubic spline through `(x_i, y_i)` knots (zero second derivative
/// at both ends). With two knots it degenerates to the straight line.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Interpolation(format!(
                "knot count mismatch: {} x-values vs {} y-values",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::Interpolation(
                "at least two knots are required".into(),
            ));
        }
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Interpolation(format!(
                    "knots must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let n = xs.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior second derivatives.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                let h0 = xs[i + 1] - xs[i];
                let h1 = xs[i + 2] - xs[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h1 - (ys[i + 1] - ys[i]) / h0);
            }
            // Thomas algorithm; sub-diagonal equals the previous upper entry.
            for i in 1..k {
                let sub = xs[i + 1] - xs[i];
                let w = sub / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (1..k).rev() {
                m[i] = (rhs[i - 1] - upper[i - 1] * m[i + 1]) / diag[i - 1];
            }
        }
        Ok(Self { xs, ys, m })
    }

    pub fn min_x(&self) -> f64 {
        self.xs[0]
    }

    pub fn max_x(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    fn segment(&self, x: f64) -> usize {
        // Rightmost segment whose left knot is <= x, clamped to valid range.
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    fn eval_segment(&self, i: usize, x: f64) -> f64 {
        let h = self.xs[i + 1] - self.xs[i];
        let t = x - self.xs[i];
        let b = (self.ys[i + 1] - self.ys[i]) / h - h * (2.0 * self.m[i] + self.m[i + 1]) / 6.0;
        let c = self.m[i] / 2.0;
        let d = (self.m[i + 1] - self.m[i]) / (6.0 * h);
        self.ys[i] + t * (b + t * (c + t * d))
    }

    fn deriv_segment(&self, i: usize, x: f64) -> f64 {
        let h = self.xs[i + 1] - self.xs[i];
        let t = x - self.xs[i];
        let b = (self.ys[i + 1] - self.ys[i]) / h - h * (2.0 * self.m[i] + self.m[i + 1]) / 6.0;
        let c = self.m[i] / 2.0;
        let d = (self.m[i + 1] - self.m[i]) / (6.0 * h);
        b + t * (2.0 * c + 3.0 * t * d)
    }

    /// Evaluate strictly inside the knot range.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < self.min_x() || x > self.max_x() {
            return Err(Error::Interpolation(format!(
                "x = {x} outside knot range [{}, {}]",
                self.min_x(),
                self.max_x()
            )));
        }
        Ok(self.eval_segment(self.segment(x), x))
    }

    /// Evaluate, extending linearly with the end slope outside the knots.
    /// The natural boundary (zero curvature) makes the extension C¹.
    pub fn eval_extended(&self, x: f64) -> f64 {
        if x < self.min_x() {
            self.ys[0] + self.deriv_segment(0, self.min_x()) * (x - self.min_x())
        } else if x > self.max_x() {
            let i = self.xs.len() - 2;
            *self.ys.last().unwrap() + self.deriv_segment(i, self.max_x()) * (x - self.max_x())
        } else {
            self.eval_segment(self.segment(x), x)
        }
    }

    /// First derivative inside the knot range.
    pub fn deriv1(&self, x: f64) -> Result<f64> {
        if x < self.min_x() || x > self.max_x() {
            return Err(Error::Interpolation(format!(
                "x = {x} outside knot range for derivative"
            )));
        }
        Ok(self.deriv_segment(self.segment(x), x))
    }

    /// Second derivative inside the knot range.
    pub fn deriv2(&self, x: f64) -> Result<f64> {
        if x < self.min_x() || x > self.max_x() {
            return Err(Error::Interpolation(format!(
                "x = {x} outside knot range for derivative"
            )));
        }
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = x - self.xs[i];
        Ok(self.m[i] + (self.m[i + 1] - self.m[i]) * t / h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reproduces_affine_data() {
        let xs = vec![-0.2, -0.1, 0.05, 0.3, 0.5];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let s = CubicSpline::new(xs, ys).unwrap();
        for &x in &[-0.2, -0.15, 0.0, 0.21, 0.5] {
            assert_abs_diff_eq!(s.eval(x).unwrap(), 3.0 - 2.0 * x, epsilon = 1e-12);
            assert_abs_diff_eq!(s.deriv1(x).unwrap(), -2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.deriv2(x).unwrap(), 0.0, epsilon = 1e-12);
        }
        // Linear extension continues the same line.
        assert_abs_diff_eq!(s.eval_extended(0.8), 3.0 - 2.0 * 0.8, epsilon = 1e-12);
    }

    #[test]
    fn interpolates_at_knots() {
        let xs = vec![0.0, 1.0, 2.0, 3.0];
        let ys = vec![1.0, 0.4, 0.9, -0.3];
        let s = CubicSpline::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_abs_diff_eq!(s.eval(*x).unwrap(), *y, epsilon = 1e-13);
        }
        // Natural boundary: zero curvature at the ends.
        assert_abs_diff_eq!(s.deriv2(0.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.deriv2(3.0).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_out_of_range_and_bad_knots() {
        let s = CubicSpline::new(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        assert!(s.eval(1.5).is_err());
        assert!(CubicSpline::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }
}
