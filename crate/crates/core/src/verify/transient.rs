//! Time-domain response of the damping loop to a disturbance pulse.

use serde::{Deserialize, Serialize};

use super::{LoopModel, PODControllerDesign};
use crate::error::{Error, Result};
use crate::lti::rk4_step;
use crate::scenario::NetworkScenario;

/// Rectangular disturbance injected with the active-power channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub amplitude: f64,
    pub width: f64,
    pub start: f64,
    pub horizon: f64,
}

impl Default for Pulse {
    fn default() -> Self {
        Self {
            amplitude: 0.01,
            width: 0.5,
            start: 1.0,
            horizon: 150.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transient {
    pub t: Vec<f64>,
    pub d_omega: Vec<f64>,
    pub p_d: Vec<f64>,
    pub q_d: Vec<f64>,
}

/// Simulates the loop from rest. With `use_limits` the injections are clipped
/// at the controller's power limits inside the loop.
pub fn transient(scn: &NetworkScenario, d: &PODControllerDesign, pulse: &Pulse, use_limits: bool) -> Result<Transient> {
    if !(pulse.width > 0.0 && pulse.horizon > pulse.start + pulse.width && pulse.start >= 0.0) {
        return Err(Error::InvariantViolation(format!("invalid pulse {pulse:?}")));
    }
    let model = LoopModel::new(scn, d)?;
    // The pulse is applied on whole steps; the step divides its width and
    // the start is rounded to the grid.
    let limit = model.max_step()?;
    let dt = pulse.width / (pulse.width / limit).ceil();
    let k_on = (pulse.start / dt).round() as usize;
    let k_off = k_on + (pulse.width / dt).round() as usize;
    let level = |k: usize| if k >= k_on && k < k_off { pulse.amplitude } else { 0.0 };
    let steps = (pulse.horizon / dt).ceil() as usize;
    let n = model.order();
    let mut x = vec![0.0; n];
    let mut out = Transient {
        t: Vec::with_capacity(steps + 1),
        d_omega: Vec::with_capacity(steps + 1),
        p_d: Vec::with_capacity(steps + 1),
        q_d: Vec::with_capacity(steps + 1),
    };
    for k in 0..=steps {
        let t = k as f64 * dt;
        let (w, u) = model.outputs(&x, level(k), use_limits);
        out.t.push(t);
        out.d_omega.push(w);
        out.p_d.push(u[0]);
        out.q_d.push(u[1]);
        if k == steps {
            break;
        }
        let w_k = level(k);
        rk4_step(&mut x, t, dt, |_, x, dx| model.derivative(x, w_k, use_limits, dx));
    }
    Ok(out)
}

/// Time after `t0` at which `|y|` last leaves the band of `frac` times its
/// peak magnitude.
pub fn settling_time(t: &[f64], y: &[f64], t0: f64, frac: f64) -> f64 {
    let peak = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    match y.iter().rposition(|v| v.abs() > frac * peak) {
        Some(i) if i + 1 < t.len() => (t[i + 1] - t0).max(0.0),
        Some(i) => t[i] - t0,
        None => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::reference_benchmark;
    use crate::design::{BandPass, LeadLagCascade};

    fn design(k: f64) -> PODControllerDesign {
        PODControllerDesign::new(BandPass::default(), LeadLagCascade::identity(1), LeadLagCascade::identity(1)).with_gain(k)
    }

    fn short() -> Pulse {
        Pulse {
            horizon: 20.0,
            ..Pulse::default()
        }
    }

    #[test]
    fn zero_disturbance_is_silent() {
        let scn = &reference_benchmark()[0];
        let p = Pulse { amplitude: 0.0, ..short() };
        let tr = transient(scn, &design(0.5), &p, true).unwrap();
        assert!(tr.d_omega.iter().chain(&tr.p_d).chain(&tr.q_d).all(|v| *v == 0.0));
    }

    #[test]
    fn unsaturated_loop_is_linear() {
        let scn = &reference_benchmark()[0];
        let a = transient(scn, &design(0.5), &short(), false).unwrap();
        let p3 = Pulse { amplitude: 3.0 * short().amplitude, ..short() };
        let b = transient(scn, &design(0.5), &p3, false).unwrap();
        let peak = a.d_omega.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (x, y) in a.d_omega.iter().zip(&b.d_omega) {
            assert!((3.0 * x - y).abs() <= 1e-6 * 3.0 * peak);
        }
    }

    #[test]
    fn limits_clip_exactly() {
        let scn = &reference_benchmark()[0];
        let p = Pulse { amplitude: 5.0, ..short() };
        let tr = transient(scn, &design(1.3), &p, true).unwrap();
        let max_p = tr.p_d.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert_eq!(max_p, 0.1);
        assert!(tr.q_d.iter().all(|v| v.abs() <= 0.1 + 1e-12));
    }

    #[test]
    fn settling_of_decaying_signal() {
        let t: Vec<f64> = (0..10_001).map(|k| k as f64 * 0.01).collect();
        let y: Vec<f64> = t.iter().map(|&t| (-0.5 * t).exp() * (3.0 * t).cos()).collect();
        let ts = settling_time(&t, &y, 0.0, 0.02);
        // Envelope bound: e^{-0.5 t} = 0.02 at t = 7.82 s.
        assert!(ts > 6.5 && ts <= 7.83, "{ts}");
    }
}
