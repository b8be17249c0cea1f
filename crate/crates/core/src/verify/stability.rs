//! Closed-loop stability and damping across configurations.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{closed_loop_poles, damping_ratio, min_in_band_damping, PODControllerDesign, DAMPING_BAND_HZ, STABLE_RE_TOL};
use crate::error::Result;
use crate::scenario::NetworkScenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub scenario_id: i64,
    pub stable: bool,
    pub poles: Vec<(f64, f64)>,
    pub max_pole_re: f64,
    /// Least damping over in-band complex modes, if any.
    pub min_in_band_zeta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    pub all_stable: bool,
}

impl StabilityReport {
    pub fn row(&self, scenario_id: i64) -> Option<&StabilityRow> {
        self.rows.iter().find(|r| r.scenario_id == scenario_id)
    }
}

/// Checks every scenario, excluded ones included.
pub fn verify_all(scenarios: &[NetworkScenario], d: &PODControllerDesign) -> Result<StabilityReport> {
    verify_all_in(scenarios, d, DAMPING_BAND_HZ)
}

/// [`verify_all`] with the damping statistic taken over `band_hz`.
pub fn verify_all_in(scenarios: &[NetworkScenario], d: &PODControllerDesign, band_hz: (f64, f64)) -> Result<StabilityReport> {
    let rows: Vec<StabilityRow> = scenarios
        .par_iter()
        .map(|scn| {
            let poles = closed_loop_poles(scn, d)?;
            let max_pole_re = poles.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
            Ok(StabilityRow {
                scenario_id: scn.id,
                stable: max_pole_re < STABLE_RE_TOL,
                min_in_band_zeta: min_in_band_damping(&poles, band_hz),
                poles: poles.iter().map(|p| (p.re, p.im)).collect(),
                max_pole_re,
            })
        })
        .collect::<Result<_>>()?;
    let all_stable = rows.iter().all(|r| r.stable);
    Ok(StabilityReport { rows, all_stable })
}

/// `scenario_id,stable,pole_re,pole_im,zeta`, one line per pole.
pub fn stability_csv(report: &StabilityReport) -> String {
    let mut s = String::from("scenario_id,stable,pole_re,pole_im,zeta\n");
    for r in &report.rows {
        for &(re, im) in &r.poles {
            let zeta = damping_ratio(Complex64::new(re, im)).map_or(String::from("nan"), |z| format!("{z:.11e}"));
            let _ = writeln!(s, "{},{},{:.11e},{:.11e},{}", r.scenario_id, r.stable, re, im, zeta);
        }
    }
    s
}
