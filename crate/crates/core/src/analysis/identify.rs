//! Frequency response estimation from simulated sine probing.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lti::{max_step, ss_simulate, FrequencyResponse, RationalTF};

/// Transients are allowed this many slowest time constants to decay.
const SETTLE_TIME_CONSTANTS: f64 = 12.0;
/// Samples per probe period, before the pole-based step limit applies.
const SAMPLES_PER_PERIOD: f64 = 200.0;

/// Probes `plant` with `amplitude * sin(w t)` at each (ascending) frequency,
/// waits at least `settle_cycles` periods and fits gain and phase on the
/// trailing period.
pub fn identify_fr(plant: &RationalTF, probe_freqs: &[f64], amplitude: f64, settle_cycles: usize) -> Result<FrequencyResponse> {
    if !(amplitude > 0.0) {
        return Err(Error::InvariantViolation("probe amplitude must be positive".into()));
    }
    let slowest = if plant.den_degree() == 0 {
        0.0
    } else {
        let poles = plant.poles()?;
        let max_re = poles.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
        if max_re >= 0.0 {
            return Err(Error::UnstablePlant { max_re });
        }
        SETTLE_TIME_CONSTANTS / -max_re
    };
    let limit = max_step(plant)?;
    let values = probe_freqs
        .par_iter()
        .map(|&w| probe(plant, w, amplitude, settle_cycles, slowest, limit))
        .collect::<Result<Vec<_>>>()?;
    FrequencyResponse::new(probe_freqs.to_vec(), values)
}

fn probe(plant: &RationalTF, w: f64, amplitude: f64, settle_cycles: usize, settle_min: f64, limit: f64) -> Result<Complex64> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvariantViolation(format!("probe frequency must be positive, got {w}")));
    }
    let period = std::f64::consts::TAU / w;
    let per_period = (period / (period / SAMPLES_PER_PERIOD).min(limit)).ceil() as usize;
    let dt = period / per_period as f64;
    let settle_periods = ((settle_cycles as f64).max(settle_min / period)).ceil() as usize;
    let n = (settle_periods + 1) * per_period + 1;
    let u: Vec<f64> = (0..n).map(|k| amplitude * (w * k as f64 * dt).sin()).collect();
    let y = ss_simulate(plant, &u, dt, None)?;

    // Over exactly one period of uniform samples sin, cos and 1 are
    // orthogonal, so the least-squares fit reduces to projections.
    let start = n - 1 - per_period;
    let (mut a, mut b) = (0.0, 0.0);
    for k in start..n - 1 {
        let th = w * k as f64 * dt;
        a += y[k] * th.sin();
        b += y[k] * th.cos();
    }
    let scale = 2.0 / (per_period as f64 * amplitude);
    Ok(Complex64::new(a * scale, b * scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{hz_to_rad, log_grid, wrap_deg};

    #[test]
    fn first_order_lag() {
        let tf = RationalTF::new(&[1.0], &[1.0, 1.0]).unwrap();
        let fr = identify_fr(&tf, &[1.0], 0.1, 5).unwrap();
        let g = fr.value()[0];
        assert!((g.norm() - 0.7071).abs() < 0.007);
        assert!((g.arg().to_degrees() + 45.0).abs() < 1.0);
        // Much tighter than required in practice.
        assert!((g - Complex64::new(0.5, -0.5)).norm() < 1e-4);
    }

    #[test]
    fn static_gain() {
        let tf = RationalTF::gain(2.0);
        let fr = identify_fr(&tf, &[0.3, 7.0], 1.0, 2).unwrap();
        for g in fr.value() {
            assert!((g.norm() - 2.0).abs() < 1e-9);
            assert!(g.arg().abs() < 1e-9);
        }
    }

    #[test]
    fn unstable_rejected() {
        let tf = RationalTF::new(&[1.0], &[1.0, -0.1]).unwrap();
        assert!(matches!(identify_fr(&tf, &[1.0], 1.0, 3), Err(Error::UnstablePlant { .. })));
        let tf = RationalTF::new(&[1.0], &[1.0, 1.0]).unwrap();
        assert!(identify_fr(&tf, &[1.0], 0.0, 3).is_err());
    }

    #[test]
    fn resonant_plant_matches_evaluation() {
        let wn = hz_to_rad(0.7);
        let tf = RationalTF::new(&[0.3, wn * wn], &[1.0, 2.0 * 0.05 * wn, wn * wn]).unwrap();
        let w = log_grid(hz_to_rad(0.1), hz_to_rad(2.0), 8);
        let fr = identify_fr(&tf, &w, 0.01, 3).unwrap();
        for (wk, g) in w.iter().zip(fr.value()) {
            let e = tf.eval(*wk).unwrap();
            assert!((g.norm() - e.norm()).abs() < 0.01 * e.norm());
            assert!(wrap_deg(g.arg().to_degrees() - e.arg().to_degrees()).abs() < 1.0);
        }
    }
}
