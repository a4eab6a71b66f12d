// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::error::{Error, Result};

/// Natural cubic spline through `(knots[i], values[i])`.
///
/// Each interval `[knots[i], knots[i+1]]` stores `[a, b, c, d]` so that
/// `s(t) = a + b·δ + c·δ² + d·δ³` with `δ = t − knots[i]`. Evaluation
/// outside the knot range clamps to the endpoint values.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline1D {
    knots: Vec<f64>,
    values: Vec<f64>,
    coefficients: Vec<[f64; 4]>,
}

impl CubicSpline1D {
    /// Fit with zero second derivative at both ends. Two knots give a line.
    pub fn fit(knots: &[f64], values: &[f64]) -> Result<Self> {
        let n = knots.len();
        if values.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{n} knots but {} values",
                values.len()
            )));
        }
        if n < 2 {
            return Err(Error::TooFewKnots(n));
        }
        if knots.iter().chain(values).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "spline knots and values must be finite".into(),
            ));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotoneKnots);
        }

        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1)
            .map(|i| (values[i + 1] - values[i]) / h[i])
            .collect();

        // Second derivatives; m[0] = m[n-1] = 0. Thomas algorithm on the
        // interior tridiagonal system.
        let mut m = vec![0.0; n];
        if n > 2 {
            let size = n - 2;
            let mut diag = vec![0.0; size];
            let mut rhs = vec![0.0; size];
            let mut sub = vec![0.0; size];
            let mut sup = vec![0.0; size];
            for j in 0..size {
                let i = j + 1;
                sub[j] = h[i - 1];
                diag[j] = 2.0 * (h[i - 1] + h[i]);
                sup[j] = h[i];
                rhs[j] = 6.0 * (slope[i] - slope[i - 1]);
            }
            for j in 1..size {
                let w = sub[j] / diag[j - 1];
                diag[j] -= w * sup[j - 1];
                rhs[j] -= w * rhs[j - 1];
            }
            m[size] = rhs[size - 1] / diag[size - 1];
            for j in (0..size - 1).rev() {
                m[j + 1] = (rhs[j] - sup[j] * m[j + 2]) / diag[j];
            }
        }

        let coefficients = (0..n - 1)
            .map(|i| {
                let a = values[i];
                let b = slope[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
                let c = m[i] / 2.0;
                let d = (m[i + 1] - m[i]) / (6.0 * h[i]);
                [a, b, c, d]
            })
            .collect();

        Ok(Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            coefficients,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coefficients(&self) -> &[[f64; 4]] {
        &self.coefficients
    }

    /// Knot range `[first, last]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let (lo, hi) = self.domain();
        let t = t.clamp(lo, hi);
        let seg = self
            .knots
            .partition_point(|&k| k <= t)
            .saturating_sub(1)
            .min(self.coefficients.len() - 1);
        (seg, t - self.knots[seg])
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (seg, dx) = self.locate(t);
        let [a, b, c, d] = self.coefficients[seg];
        a + dx * (b + dx * (c + dx * d))
    }

    /// First derivative; zero outside the knot range (the clamped extension is flat).
    pub fn derivative(&self, t: f64) -> f64 {
        let (lo, hi) = self.domain();
        if t < lo || t > hi {
            return 0.0;
        }
        let (seg, dx) = self.locate(t);
        let [_, b, c, d] = self.coefficients[seg];
        b + dx * (2.0 * c + 3.0 * d * dx)
    }

    /// Second derivative evaluated on interval `seg` at offset `t − knots[seg]`.
    pub fn second_derivative_on(&self, seg: usize, t: f64) -> f64 {
        let [_, _, c, d] = self.coefficients[seg];
        2.0 * c + 6.0 * d * (t - self.knots[seg])
    }
}
