use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::tf::RationalTF;
use crate::error::{Error, Result};

/// Wraps an angle in degrees to `(-180, 180]`.
pub fn wrap_deg(x: f64) -> f64 {
    let y = (x + 180.0).rem_euclid(360.0) - 180.0;
    if y <= -180.0 {
        y + 360.0
    } else {
        y
    }
}

pub fn hz_to_rad(f: f64) -> f64 {
    2.0 * PI * f
}

pub fn rad_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// Log-spaced points from `lo` to `hi` inclusive with the given density.
pub fn log_grid_per_decade(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1) + 1;
    log_grid(lo, hi, n)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexGainPhase {
    pub magnitude: f64,
    /// Degrees, wrapped to (-180, 180].
    pub phase_deg: f64,
}

impl From<Complex64> for ComplexGainPhase {
    fn from(z: Complex64) -> Self {
        Self {
            magnitude: z.norm(),
            phase_deg: wrap_deg(z.arg().to_degrees()),
        }
    }
}

/// Sampled frequency response on a strictly ascending, positive grid (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    omega: Vec<f64>,
    value: Vec<Complex64>,
}

impl FrequencyResponse {
    pub fn new(omega: Vec<f64>, value: Vec<Complex64>) -> Result<Self> {
        if omega.len() != value.len() {
            return Err(Error::InvariantViolation(format!(
                "{} frequencies but {} samples",
                omega.len(),
                value.len()
            )));
        }
        if omega.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvariantViolation("frequencies must be positive".into()));
        }
        if omega.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvariantViolation(
                "frequencies must be strictly ascending".into(),
            ));
        }
        Ok(Self { omega, value })
    }

    pub fn from_tf(tf: &RationalTF, omega: &[f64]) -> Result<Self> {
        let value = omega.iter().map(|&w| tf.eval(w)).collect::<Result<Vec<_>>>()?;
        Self::new(omega.to_vec(), value)
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn value(&self) -> &[Complex64] {
        &self.value
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.value.iter().map(|z| z.norm()).collect()
    }

    /// CSV with columns `omega_rad_s,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega_rad_s,re,im\n");
        for (w, z) in self.omega.iter().zip(&self.value) {
            let _ = writeln!(out, "{w},{},{}", z.re, z.im);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping_is_canonical() {
        assert_eq!(wrap_deg(190.0), -170.0);
        assert_eq!(wrap_deg(-180.0), 180.0);
        assert_eq!(wrap_deg(180.0), 180.0);
        assert_eq!(wrap_deg(540.0), 180.0);
        assert!((wrap_deg(-190.0) - 170.0).abs() < 1e-12);
        assert_eq!(wrap_deg(0.0), 0.0);
    }

    #[test]
    fn grid_density() {
        let g = log_grid_per_decade(0.1, 10.0, 400);
        assert_eq!(g.len(), 801);
        assert!((g[0] - 0.1).abs() < 1e-15 && (g[800] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        let z = Complex64::new(1.0, 0.0);
        assert!(FrequencyResponse::new(vec![1.0, 1.0], vec![z, z]).is_err());
        assert!(FrequencyResponse::new(vec![0.0, 1.0], vec![z, z]).is_err());
        assert!(FrequencyResponse::new(vec![1.0], vec![z, z]).is_err());
    }

    #[test]
    fn csv_header() {
        let fr = FrequencyResponse::new(vec![1.0], vec![Complex64::new(0.5, -0.5)]).unwrap();
        assert_eq!(fr.to_csv(), "omega_rad_s,re,im\n1,0.5,-0.5\n");
    }
}
