//! Incremental gain sweep on one configuration.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{closed_loop_poles, closed_loop_response, min_in_band_damping, PODControllerDesign, DAMPING_BAND_HZ, STABLE_RE_TOL};
use crate::analysis::peaks::{local_maxima, prominence};
use crate::error::{Error, Result};
use crate::lti::{hz_to_rad, log_grid_per_decade, rad_to_hz};
use crate::scenario::NetworkScenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub band_hz: (f64, f64),
    /// Closed-loop response grid (Hz) and density.
    pub grid_hz: (f64, f64),
    pub per_decade: usize,
    /// Minimum prominence (dB) of a reported in-band peak.
    pub prominence_db: f64,
    /// Out-of-band growth over the zero-gain response that ends the sweep.
    pub out_band_rise_db: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            band_hz: DAMPING_BAND_HZ,
            grid_hz: (0.001, 200.0),
            per_decade: 200,
            prominence_db: 0.5,
            out_band_rise_db: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSweepRow {
    pub gain: f64,
    /// `(f Hz, |T|)` of in-band local maxima.
    pub in_band_peaks: Vec<(f64, f64)>,
    /// `(f Hz, |T|)` of the largest response below and above the band.
    pub out_band_peaks: Vec<(f64, f64)>,
    pub min_damping: Option<f64>,
    pub max_pole_re: f64,
    pub stable: bool,
    /// Set on the row that ended the sweep.
    pub stop_reason: Option<String>,
}

impl GainSweepRow {
    pub fn max_in_band(&self) -> f64 {
        self.in_band_peaks.iter().map(|p| p.1).fold(0.0, f64::max)
    }
}

struct Evaluated {
    gain: f64,
    in_band: Vec<(f64, f64)>,
    out_band: Vec<(f64, f64)>,
    min_damping: Option<f64>,
    max_re: f64,
}

fn evaluate(scn: &NetworkScenario, d: &PODControllerDesign, gain: f64, grid: &[f64], opts: &SweepOptions) -> Result<Evaluated> {
    let dg = d.with_gain(gain);
    let poles = closed_loop_poles(scn, &dg)?;
    let max_re = poles.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
    let mag: Vec<f64> = grid
        .iter()
        .map(|&w| closed_loop_response(scn, &dg, w).map(|z| z.norm()))
        .collect::<Result<_>>()?;
    let db: Vec<f64> = mag.iter().map(|m| 20.0 * m.max(1e-300).log10()).collect();
    let (lo, hi) = (hz_to_rad(opts.band_hz.0), hz_to_rad(opts.band_hz.1));
    let in_band = local_maxima(&db)
        .into_iter()
        .filter(|&i| grid[i] >= lo && grid[i] <= hi && prominence(&db, i) >= opts.prominence_db)
        .map(|i| (rad_to_hz(grid[i]), mag[i]))
        .collect();
    let region_max = |keep: &dyn Fn(f64) -> bool| {
        grid.iter()
            .zip(&mag)
            .filter(|(w, _)| keep(**w))
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(w, m)| (rad_to_hz(*w), *m))
    };
    let out_band = [region_max(&|w| w < lo), region_max(&|w| w > hi)]
        .into_iter()
        .flatten()
        .collect();
    Ok(Evaluated {
        gain,
        in_band,
        out_band,
        min_damping: min_in_band_damping(&poles, opts.band_hz),
        max_re,
    })
}

/// Closed-loop responses over ascending `gains` (applied to both channels).
/// The sweep ends at the first unstable gain, or at the first gain whose
/// out-of-band response rises `out_band_rise_db` above the zero-gain one;
/// that row is kept and carries the reason.
pub fn gain_sweep(scn: &NetworkScenario, d: &PODControllerDesign, gains: &[f64], opts: &SweepOptions) -> Result<Vec<GainSweepRow>> {
    if gains.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) || gains.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvariantViolation("gains must be finite, non-negative and ascending".into()));
    }
    let grid = log_grid_per_decade(hz_to_rad(opts.grid_hz.0), hz_to_rad(opts.grid_hz.1), opts.per_decade);
    let base = evaluate(scn, d, 0.0, &grid, opts)?;
    let evaluated: Vec<Evaluated> = gains
        .par_iter()
        .map(|&g| evaluate(scn, d, g, &grid, opts))
        .collect::<Result<_>>()?;
    let rise = 10f64.powf(opts.out_band_rise_db / 20.0);

    let mut rows = Vec::new();
    for e in evaluated {
        let stable = e.max_re < STABLE_RE_TOL;
        let stop_reason = if !stable {
            Some(format!("unstable (max pole real part {:.3e})", e.max_re))
        } else {
            e.out_band
                .iter()
                .zip(&base.out_band)
                .find(|(now, zero)| now.1 > rise * zero.1)
                .map(|(now, zero)| {
                    format!(
                        "out-of-band response at {:.3} Hz is {:.1} dB above zero gain",
                        now.0,
                        20.0 * (now.1 / zero.1).log10()
                    )
                })
        };
        let stop = stop_reason.is_some();
        rows.push(GainSweepRow {
            gain: e.gain,
            in_band_peaks: e.in_band,
            out_band_peaks: e.out_band,
            min_damping: e.min_damping,
            max_pole_re: e.max_re,
            stable,
            stop_reason,
        });
        if stop {
            break;
        }
    }
    Ok(rows)
}

/// Gain with the largest least in-band damping among the rows before the
/// stop row (lowest gain on ties).
pub fn select_gain(rows: &[GainSweepRow]) -> Option<f64> {
    rows.iter()
        .filter(|r| r.stop_reason.is_none() && r.stable)
        .filter_map(|r| r.min_damping.map(|z| (r.gain, z)))
        .fold(None, |best: Option<(f64, f64)>, (g, z)| match best {
            Some((_, bz)) if z <= bz => best,
            _ => Some((g, z)),
        })
        .map(|(g, _)| g)
}

/// `gain,f_hz,mag,band_tag` with one line per recorded peak.
pub fn sweep_csv(rows: &[GainSweepRow]) -> String {
    let mut s = String::from("gain,f_hz,mag,band_tag\n");
    for r in rows {
        for (f, m) in &r.in_band_peaks {
            let _ = writeln!(s, "{:.11e},{:.11e},{:.11e},in", r.gain, f, m);
        }
        for (f, m) in &r.out_band_peaks {
            let _ = writeln!(s, "{:.11e},{:.11e},{:.11e},out", r.gain, f, m);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::reference_benchmark;
    use crate::design::{BandPass, LeadLagCascade};

    fn design() -> PODControllerDesign {
        PODControllerDesign::new(BandPass::default(), LeadLagCascade::identity(1), LeadLagCascade::identity(1))
    }

    #[test]
    fn zero_gain_row_is_plant() {
        let scn = &reference_benchmark()[0];
        let rows = gain_sweep(scn, &design(), &[0.0], &SweepOptions::default()).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!(r.in_band_peaks.len(), 3);
        for (f, m) in &r.in_band_peaks {
            let direct = scn.plant_p.eval(hz_to_rad(*f)).unwrap().norm();
            assert!((m - direct).abs() < 1e-12 * direct);
        }
        assert!(r.stable);
    }

    #[test]
    fn rejects_unsorted_gains() {
        let scn = &reference_benchmark()[0];
        assert!(gain_sweep(scn, &design(), &[0.2, 0.1], &SweepOptions::default()).is_err());
        assert!(gain_sweep(scn, &design(), &[-0.1], &SweepOptions::default()).is_err());
    }

    #[test]
    fn selection_rule() {
        let row = |gain: f64, z: f64, stop: bool| GainSweepRow {
            gain,
            in_band_peaks: vec![],
            out_band_peaks: vec![],
            min_damping: Some(z),
            max_pole_re: -0.1,
            stable: true,
            stop_reason: stop.then(|| "stop".into()),
        };
        let rows = [row(0.0, 0.01, false), row(0.5, 0.08, false), row(1.0, 0.08, false), row(1.5, 0.3, true)];
        assert_eq!(select_gain(&rows), Some(0.5));
        assert_eq!(select_gain(&rows[3..]), None);
    }

    #[test]
    fn csv_layout() {
        let scn = &reference_benchmark()[0];
        let rows = gain_sweep(scn, &design(), &[0.0, 0.1], &SweepOptions::default()).unwrap();
        let csv = sweep_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("gain,f_hz,mag,band_tag"));
        assert!(csv.lines().skip(1).all(|l| l.ends_with(",in") || l.ends_with(",out")));
    }
}
