//! Phase-fit cost, out-of-band gain constraint and per-point error report.

use serde::{Deserialize, Serialize};

use super::cascade::LeadLagCascade;
use crate::analysis::ModalPoint;
use crate::error::{Error, Result};
use crate::lti::{hz_to_rad, log_grid, wrap_deg};
use crate::scenario::Channel;

pub const IN_BAND_HZ: (f64, f64) = (0.1, 2.0);

/// 60 log-spaced points on each side of `band_hz`, spanning 0.001 to 200 Hz
/// (rad/s).
pub fn out_band_grid(band_hz: (f64, f64)) -> Vec<f64> {
    let mut g = log_grid(hz_to_rad(0.001), hz_to_rad(band_hz.0), 60);
    g.extend(log_grid(hz_to_rad(band_hz.1), hz_to_rad(200.0), 60));
    g
}

pub fn default_out_band_grid() -> Vec<f64> {
    out_band_grid(IN_BAND_HZ)
}

fn point_error(x: &LeadLagCascade, p: &ModalPoint) -> f64 {
    wrap_deg(x.phase_unwrapped(p.omega_o) - p.target_phase).abs()
}

pub fn cost(x: &LeadLagCascade, points: &[ModalPoint], m: u32) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyDesignSet);
    }
    Ok(points.iter().map(|p| point_error(x, p).powi(m as i32)).sum())
}

/// `max(|C(jw)|) - 1` over `grid`; negative when the cascade attenuates
/// everywhere on it.
pub fn constraint_violation(x: &LeadLagCascade, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(max_gain(x, grid) - 1.0)
}

fn max_gain(x: &LeadLagCascade, grid: &[f64]) -> f64 {
    grid.iter().map(|&w| x.magnitude(w)).fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointError {
    pub scenario_id: i64,
    pub mode_index: usize,
    pub channel: Channel,
    pub omega_o: f64,
    pub target_phase: f64,
    pub achieved_phase: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub per_point_error: Vec<PointError>,
    pub mean_error: f64,
    pub max_error: f64,
    pub cost_value: f64,
    pub max_out_band_gain: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Error report with cost at exponent `m` and gain over `grid`.
pub fn evaluate(x: &LeadLagCascade, points: &[ModalPoint], m: u32, grid: &[f64]) -> Result<DesignReport> {
    if points.is_empty() {
        return Err(Error::EmptyDesignSet);
    }
    let per_point_error: Vec<PointError> = points
        .iter()
        .map(|p| PointError {
            scenario_id: p.scenario_id,
            mode_index: p.mode_index,
            channel: p.channel,
            omega_o: p.omega_o,
            target_phase: p.target_phase,
            achieved_phase: x.eval(p.omega_o).phase_deg,
            error: point_error(x, p),
        })
        .collect();
    let n = per_point_error.len() as f64;
    let mean_error = per_point_error.iter().map(|e| e.error).sum::<f64>() / n;
    let max_error = per_point_error.iter().map(|e| e.error).fold(0.0, f64::max);
    let cost_value = per_point_error.iter().map(|e| e.error.powi(m as i32)).sum();
    let max_out_band_gain = if grid.is_empty() { f64::NAN } else { max_gain(x, grid) };
    Ok(DesignReport {
        per_point_error,
        mean_error,
        max_error,
        cost_value,
        max_out_band_gain,
        iterations: 0,
        converged: true,
    })
}

/// Report with the default exponent (3) and the default out-of-band grid.
pub fn design_error(x: &LeadLagCascade, points: &[ModalPoint]) -> Result<DesignReport> {
    evaluate(x, points, 3, &default_out_band_grid())
}
