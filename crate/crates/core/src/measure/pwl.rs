use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Continuous piecewise-linear function given by breakpoints and values.
///
/// Outside `[first, last]` the function is zero when `zero_outside` is set,
/// otherwise it is extended by its end values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    #[serde(default)]
    zero_outside: bool,
}

impl PiecewiseLinear {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.len() < 2 {
            return Err(Error::InvalidInput(
                "piecewise-linear function needs at least two breakpoints".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("breakpoints must be strictly increasing".into()));
        }
        if breakpoints.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite breakpoint or value".into()));
        }
        Ok(Self {
            breakpoints,
            values,
            zero_outside: false,
        })
    }

    /// Constant function on `[lo, hi]`.
    pub fn constant(lo: f64, hi: f64, value: f64) -> Self {
        Self {
            breakpoints: vec![lo, hi],
            values: vec![value, value],
            zero_outside: false,
        }
    }

    /// Samples `f` at `n` uniform points of `[lo, hi]`.
    pub fn sample<F: Fn(f64) -> f64>(lo: f64, hi: f64, n: usize, f: F) -> Self {
        let n = n.max(2);
        let h = (hi - lo) / (n - 1) as f64;
        let breakpoints: Vec<f64> = (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + i as f64 * h })
            .collect();
        let values = breakpoints.iter().map(|&x| f(x)).collect();
        Self {
            breakpoints,
            values,
            zero_outside: false,
        }
    }

    /// Same function, but zero outside its breakpoint range.
    pub fn with_zero_outside(mut self) -> Self {
        self.zero_outside = true;
        self
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let bp = &self.breakpoints;
        let n = bp.len();
        if x <= bp[0] {
            return if self.zero_outside && x < bp[0] { 0.0 } else { self.values[0] };
        }
        if x >= bp[n - 1] {
            return if self.zero_outside && x > bp[n - 1] {
                0.0
            } else {
                self.values[n - 1]
            };
        }
        let i = bp.partition_point(|&b| b <= x) - 1;
        let (x0, x1) = (bp[i], bp[i + 1]);
        let w = (x - x0) / (x1 - x0);
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Exact `∫ |f|` over the breakpoint range.
    pub fn integral_abs(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| {
                let len = x[1] - x[0];
                let (y0, y1) = (y[0], y[1]);
                if y0 * y1 >= 0.0 {
                    0.5 * len * (y0.abs() + y1.abs())
                } else {
                    0.5 * len * (y0 * y0 + y1 * y1) / (y0.abs() + y1.abs())
                }
            })
            .sum()
    }

    /// Exact `∫ f` over the breakpoint range.
    pub fn integral(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_interpolates_and_extends() {
        let f = PiecewiseLinear::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(f.eval(0.25), 0.5);
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(2.0), 0.0);
        let g = PiecewiseLinear::new(vec![0.2, 0.4], vec![1.0, 1.0]).unwrap();
        assert_eq!(g.eval(0.0), 1.0);
        assert_eq!(g.clone().with_zero_outside().eval(0.0), 0.0);
        assert_eq!(g.with_zero_outside().eval(0.2), 1.0);
    }

    #[test]
    fn abs_integral_handles_sign_change() {
        let f = PiecewiseLinear::new(vec![0.0, 1.0], vec![-1.0, 1.0]).unwrap();
        assert!((f.integral_abs() - 0.5).abs() < 1e-15);
        assert!(f.integral().abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert!(PiecewiseLinear::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(PiecewiseLinear::new(vec![0.0], vec![1.0]).is_err());
        assert!(PiecewiseLinear::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }
}
