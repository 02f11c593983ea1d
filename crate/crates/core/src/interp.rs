//! One-dimensional interpolation on sampled data.

use crate::error::{Error, Result};

/// Piecewise cubic Hermite interpolant with Fritsch–Carlson slopes
/// (shape preserving, monotone data stays monotone).
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidInput("interpolation needs >= 2 matching samples".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("interpolation abscissae must increase".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut slope = vec![0.0; n];
        if n == 2 {
            slope[0] = d[0];
            slope[1] = d[0];
        } else {
            for i in 1..n - 1 {
                if d[i - 1] * d[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    slope[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
                }
            }
            slope[0] = end_slope(h[0], h[1], d[0], d[1]);
            slope[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
        }
        Ok(Self { x, y, slope })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    /// Value at `t`; clamps to the end samples outside the domain.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|&v| v <= t) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (h00, h10, h01, h11) = hermite_basis(s);
        h00 * self.y[i] + h10 * h * self.slope[i] + h01 * self.y[i + 1] + h11 * h * self.slope[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

fn hermite_basis(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2)
}

/// Cubic (Catmull–Rom) interpolation of samples on a uniform grid over
/// `[0, duration]`. Exact for quadratics away from the two end intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformCubic {
    duration: f64,
    values: Vec<f64>,
}

impl UniformCubic {
    pub fn new(duration: f64, values: Vec<f64>) -> Self {
        assert!(values.len() >= 2, "need at least two samples");
        Self { duration, values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn step(&self) -> f64 {
        self.duration / (self.values.len() - 1) as f64
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.values.len();
        if self.duration <= 0.0 {
            return self.values[0];
        }
        let u = (t / self.step()).clamp(0.0, (n - 1) as f64);
        let i = (u.floor() as usize).min(n - 2);
        let s = u - i as f64;
        let p1 = self.values[i];
        let p2 = self.values[i + 1];
        let p0 = if i > 0 { self.values[i - 1] } else { 2.0 * p1 - p2 };
        let p3 = if i + 2 < n { self.values[i + 2] } else { 2.0 * p2 - p1 };
        let m1 = 0.5 * (p2 - p0);
        let m2 = 0.5 * (p3 - p1);
        let (h00, h10, h01, h11) = hermite_basis(s);
        h00 * p1 + h10 * m1 + h01 * p2 + h11 * m2
    }
}
