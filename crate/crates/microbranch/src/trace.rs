//! Piecewise-affine boundary traces `u(0, .)` on (0,1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A continuous piecewise-affine function on [0,1] given by its breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceProfile {
    /// Strictly increasing, first 0, last 1.
    pub breakpoints: Vec<f64>,
    /// Values at the breakpoints.
    pub values: Vec<f64>,
}

impl TraceProfile {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.len() != values.len() {
            return Err(Error::FieldFormat(format!(
                "trace needs matching breakpoint/value lists of length >= 2, got {}/{}",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::FieldFormat(
                "trace breakpoints must start at 0 and end at 1".into(),
            ));
        }
        if breakpoints.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::FieldFormat("trace contains non-finite entries".into()));
        }
        for w in breakpoints.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::FieldFormat(
                    "trace breakpoints must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self { breakpoints, values })
    }

    pub fn constant(v: f64) -> Self {
        Self { breakpoints: vec![0.0, 1.0], values: vec![v, v] }
    }

    /// Affine interpolation of samples of `f` on a uniform grid of `n` segments.
    pub fn sample(f: impl Fn(f64) -> f64, n: usize) -> Self {
        let n = n.max(1);
        let breakpoints: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let values = breakpoints.iter().map(|&x| f(x)).collect();
        Self { breakpoints, values }
    }

    pub fn num_segments(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Slope on segment `j`.
    pub fn slope(&self, j: usize) -> f64 {
        (self.values[j + 1] - self.values[j]) / (self.breakpoints[j + 1] - self.breakpoints[j])
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        // Last breakpoint <= x.
        let j = match self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&x).unwrap())
        {
            Ok(j) => j.min(self.num_segments() - 1),
            Err(j) => j.saturating_sub(1).min(self.num_segments() - 1),
        };
        self.values[j] + self.slope(j) * (x - self.breakpoints[j])
    }

    pub fn is_periodic_compatible(&self, tol: f64) -> bool {
        let osc = self.oscillation().max(1.0e-300);
        (self.values[0] - *self.values.last().unwrap()).abs() <= tol * osc.max(1.0)
    }

    pub fn oscillation(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }

    /// Adds a constant to all values.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// Drops repeated collinear breakpoints (exact slope equality).
    pub fn simplified(&self) -> Self {
        let mut bp = vec![self.breakpoints[0]];
        let mut vals = vec![self.values[0]];
        for j in 1..self.num_segments() {
            if self.slope(j) != self.slope(j - 1) {
                bp.push(self.breakpoints[j]);
                vals.push(self.values[j]);
            }
        }
        bp.push(*self.breakpoints.last().unwrap());
        vals.push(*self.values.last().unwrap());
        Self { breakpoints: bp, values: vals }
    }

    /// True if breakpoints form the uniform grid j/n (exactly, in f64).
    pub fn is_uniform(&self) -> bool {
        let n = self.num_segments();
        self.breakpoints
            .iter()
            .enumerate()
            .all(|(j, &b)| b == j as f64 / n as f64)
    }
}
