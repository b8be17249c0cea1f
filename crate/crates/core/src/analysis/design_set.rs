//! Modal points per configuration and their aggregation into a design set.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::peaks::{detect_peaks, PeakOptions};
use crate::design::BandPass;
use crate::error::{Error, Result};
use crate::lti::{hz_to_rad, log_grid_per_decade, rad_to_hz, wrap_deg, FrequencyResponse, RationalTF};
use crate::scenario::{Channel, NetworkScenario};

/// Analysis grid: 400 points per decade over [0.05, 4] Hz.
pub const GRID_HZ: (f64, f64) = (0.05, 4.0);
pub const GRID_PER_DECADE: usize = 400;

/// Real-part threshold above which a pole counts as unstable.
pub const STABILITY_TOL: f64 = 1e-9;

pub fn analysis_grid() -> Vec<f64> {
    log_grid_per_decade(hz_to_rad(GRID_HZ.0), hz_to_rad(GRID_HZ.1), GRID_PER_DECADE)
}

/// One resonance of one plant channel and the phase the compensator has to
/// supply there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalPoint {
    pub scenario_id: i64,
    pub mode_index: usize,
    pub omega_o: f64,
    pub channel: Channel,
    pub plant_phase: f64,
    pub bandpass_phase: f64,
    pub target_phase: f64,
    pub peak_magnitude: f64,
}

impl ModalPoint {
    pub fn new(
        scenario_id: i64,
        mode_index: usize,
        omega_o: f64,
        channel: Channel,
        plant_phase: f64,
        bandpass_phase: f64,
        peak_magnitude: f64,
    ) -> Self {
        Self {
            scenario_id,
            mode_index,
            omega_o,
            channel,
            plant_phase,
            bandpass_phase,
            target_phase: wrap_deg(-(plant_phase + bandpass_phase)),
            peak_magnitude,
        }
    }

    /// A point with a prescribed target and no plant behind it.
    pub fn synthetic(omega_o: f64, channel: Channel, target_phase: f64) -> Self {
        Self::new(0, 0, omega_o, channel, -target_phase, 0.0, 1.0)
    }

    pub fn f_hz(&self) -> f64 {
        rad_to_hz(self.omega_o)
    }
}

/// Modal points of one channel at the given peak frequencies.
pub fn channel_points(
    scn: &NetworkScenario,
    channel: Channel,
    bp: &BandPass,
    peaks: &[f64],
) -> Result<Vec<ModalPoint>> {
    let b = bp.tf()?;
    let plant = scn.plant(channel);
    peaks
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let g = plant.eval(w)?;
            let bw = b.eval(w)?;
            Ok(ModalPoint::new(
                scn.id,
                i,
                w,
                channel,
                g.arg().to_degrees(),
                bw.arg().to_degrees(),
                g.norm(),
            ))
        })
        .collect()
}

/// Points for both channels at the same peak list (P points first).
pub fn modal_points(scn: &NetworkScenario, bp: &BandPass, peaks: &[f64]) -> Result<Vec<ModalPoint>> {
    let mut out = channel_points(scn, Channel::P, bp, peaks)?;
    out.extend(channel_points(scn, Channel::Q, bp, peaks)?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub id: i64,
    pub label: String,
    /// Largest real part over the poles of both plant channels.
    pub max_pole_re: f64,
    pub excluded: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSet {
    pub points_p: Vec<ModalPoint>,
    pub points_q: Vec<ModalPoint>,
    pub in_band: (f64, f64),
    pub scenario_count: usize,
    pub scenarios: Vec<ScenarioSummary>,
}

impl DesignSet {
    pub fn points(&self, channel: Channel) -> &[ModalPoint] {
        match channel {
            Channel::P => &self.points_p,
            Channel::Q => &self.points_q,
        }
    }

    pub fn included_ids(&self) -> Vec<i64> {
        self.scenarios.iter().filter(|s| s.excluded.is_none()).map(|s| s.id).collect()
    }

    /// Drops the points of the given scenarios and records the reasons.
    pub fn without(&self, removals: &[(i64, String)]) -> Result<DesignSet> {
        let mut out = self.clone();
        for (id, reason) in removals {
            if let Some(s) = out.scenarios.iter_mut().find(|s| s.id == *id && s.excluded.is_none()) {
                s.excluded = Some(reason.clone());
            }
        }
        let keep = out.included_ids();
        out.points_p.retain(|p| keep.contains(&p.scenario_id));
        out.points_q.retain(|p| keep.contains(&p.scenario_id));
        out.scenario_count = keep.len();
        if keep.is_empty() {
            return Err(Error::AllScenariosExcluded);
        }
        Ok(out)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("scenario_id,mode_index,channel,f_hz,plant_phase_deg,target_phase_deg,peak_mag\n");
        for p in self.points_p.iter().chain(&self.points_q) {
            let _ = writeln!(
                s,
                "{},{},{},{:.11e},{:.11e},{:.11e},{:.11e}",
                p.scenario_id,
                p.mode_index,
                p.channel,
                p.f_hz(),
                p.plant_phase,
                p.target_phase,
                p.peak_magnitude
            );
        }
        s
    }
}

fn max_pole_re(tf: &RationalTF) -> Result<f64> {
    if tf.den_degree() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(tf.poles()?.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max))
}

enum Analysed {
    Included(Vec<ModalPoint>, Vec<ModalPoint>),
    Excluded(String),
}

fn analyse(scn: &NetworkScenario, bp: &BandPass, opts: &PeakOptions, grid: &[f64]) -> Result<Analysed> {
    if let Some(reason) = &scn.excluded {
        return Ok(Analysed::Excluded(reason.clone()));
    }
    let mut per_channel = Vec::with_capacity(2);
    for channel in Channel::BOTH {
        let plant = scn.plant(channel);
        let fr = match FrequencyResponse::from_tf(plant, grid) {
            Ok(fr) => fr,
            Err(Error::PoleOnImaginaryAxis { omega }) => {
                return Ok(Analysed::Excluded(format!(
                    "channel {channel} plant has a pole on the imaginary axis at {:.4} Hz",
                    rad_to_hz(omega)
                )))
            }
            Err(e) => return Err(e),
        };
        let peaks = match detect_peaks(&fr, opts.band_hz, opts.prominence_db, Some(plant)) {
            Ok(p) => p,
            Err(Error::NoPeaksFound) => {
                return Ok(Analysed::Excluded(format!("no in-band peaks in channel {channel}")))
            }
            Err(e) => return Err(e),
        };
        per_channel.push(channel_points(scn, channel, bp, &peaks)?);
    }
    let q = per_channel.pop().expect("two channels");
    let p = per_channel.pop().expect("two channels");
    Ok(Analysed::Included(p, q))
}

/// Peak detection and modal points for every scenario. Scenarios without
/// in-band peaks are flagged excluded rather than failing the run.
pub fn aggregate(scenarios: &[NetworkScenario], bp: &BandPass, opts: &PeakOptions) -> Result<DesignSet> {
    bp.validate()?;
    let grid = analysis_grid();
    let analysed: Vec<(ScenarioSummary, Option<(Vec<ModalPoint>, Vec<ModalPoint>)>)> = scenarios
        .par_iter()
        .map(|scn| {
            let max_re = max_pole_re(&scn.plant_p)?.max(max_pole_re(&scn.plant_q)?);
            let (excluded, points) = match analyse(scn, bp, opts, &grid)? {
                Analysed::Included(p, q) => (None, Some((p, q))),
                Analysed::Excluded(reason) => (Some(reason), None),
            };
            let summary = ScenarioSummary {
                id: scn.id,
                label: scn.label.clone(),
                max_pole_re: max_re,
                excluded,
            };
            Ok((summary, points))
        })
        .collect::<Result<_>>()?;

    let mut ds = DesignSet {
        points_p: Vec::new(),
        points_q: Vec::new(),
        in_band: opts.band_hz,
        scenario_count: 0,
        scenarios: Vec::with_capacity(analysed.len()),
    };
    for (summary, points) in analysed {
        if let Some((p, q)) = points {
            ds.points_p.extend(p);
            ds.points_q.extend(q);
            ds.scenario_count += 1;
        }
        ds.scenarios.push(summary);
    }
    if ds.scenario_count == 0 {
        return Err(Error::AllScenariosExcluded);
    }
    Ok(ds)
}
