//! Loop assembly, gain selection and closed-loop verification.

mod loop_model;
pub mod stability;
pub mod sweep;
pub mod transient;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::design::{BandPass, LeadLagCascade};
use crate::error::{Error, Result};
use crate::lti::{poly, rad_to_hz, RationalTF};
use crate::scenario::{Channel, NetworkScenario};

pub use stability::{stability_csv, verify_all, verify_all_in, StabilityReport, StabilityRow};
pub use sweep::{gain_sweep, select_gain, sweep_csv, GainSweepRow, SweepOptions};
pub use transient::{settling_time, transient, Pulse, Transient};

pub(crate) use loop_model::LoopModel;

/// Real-part threshold for closed-loop stability.
pub const STABLE_RE_TOL: f64 = 1e-9;
/// Oscillation band (Hz) used to pick the modes that count for damping.
pub const DAMPING_BAND_HZ: (f64, f64) = (0.1, 2.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PODControllerDesign {
    pub bandpass: BandPass,
    pub cascade_p: LeadLagCascade,
    pub cascade_q: LeadLagCascade,
    pub k_p: f64,
    pub k_q: f64,
    pub p_limit: f64,
    pub q_limit: f64,
    /// Converter rating in MVA; carried along for reporting only.
    pub s_n: f64,
}

impl PODControllerDesign {
    pub fn new(bandpass: BandPass, cascade_p: LeadLagCascade, cascade_q: LeadLagCascade) -> Self {
        Self {
            bandpass,
            cascade_p,
            cascade_q,
            k_p: 1.3,
            k_q: 1.3,
            p_limit: 0.1,
            q_limit: 0.1,
            s_n: 50.0,
        }
    }

    /// Same controller with both channel gains set to `k`.
    pub fn with_gain(&self, k: f64) -> Self {
        Self {
            k_p: k,
            k_q: k,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bandpass.validate()?;
        let ok = self.k_p >= 0.0
            && self.k_q >= 0.0
            && self.k_p.is_finite()
            && self.k_q.is_finite()
            && self.p_limit > 0.0
            && self.q_limit > 0.0;
        if !ok {
            return Err(Error::InvariantViolation(format!(
                "controller needs non-negative gains and positive limits (K_P {}, K_Q {}, limits {} / {})",
                self.k_p, self.k_q, self.p_limit, self.q_limit
            )));
        }
        Ok(())
    }
}

/// `zeta = -Re(l) / |l|`.
pub fn damping_ratio(pole: Complex64) -> Result<f64> {
    let r = pole.norm();
    if r == 0.0 {
        return Err(Error::ZeroPole);
    }
    Ok(-pole.re / r)
}

/// Least damping ratio over complex poles (upper half-plane) whose natural
/// frequency lies in `band_hz`; `None` when there are none.
pub fn min_in_band_damping(poles: &[Complex64], band_hz: (f64, f64)) -> Option<f64> {
    poles
        .iter()
        .filter(|p| p.im > 0.0)
        .filter(|p| {
            let f = rad_to_hz(p.norm());
            f >= band_hz.0 && f <= band_hz.1
        })
        .filter_map(|&p| damping_ratio(p).ok())
        .min_by(f64::total_cmp)
}

/// `G = K C B P` for one channel, as an uncancelled product.
pub fn open_loop(scn: &NetworkScenario, d: &PODControllerDesign, channel: Channel) -> Result<RationalTF> {
    d.validate()?;
    Ok(loop_model::controller_tf(d, channel)?.series(scn.plant(channel)))
}

/// Disturbance-to-frequency-deviation transfer function. The disturbance
/// enters at the active-power input of the plant, and each channel feeds
/// back `-K C B` of the frequency deviation, so the characteristic function
/// is `1 + G_P + G_Q`. Channels with zero gain are left out of the loop.
pub fn closed_loop(scn: &NetworkScenario, d: &PODControllerDesign) -> Result<RationalTF> {
    d.validate()?;
    let (den, np, nq) = loop_model::common_plant(scn);
    let mut e = vec![1.0];
    let mut active = Vec::new();
    for (channel, k, n) in [(Channel::P, d.k_p, &np), (Channel::Q, d.k_q, &nq)] {
        if k != 0.0 {
            let h = loop_model::controller_tf(d, channel)?;
            active.push((h, n));
        }
    }
    for (h, _) in &active {
        e = poly::mul(&e, h.den());
    }
    let mut ch = poly::mul(&den, &e);
    for (i, (h, n)) in active.iter().enumerate() {
        // Numerator of H_i over the common controller denominator.
        let mut hn = h.num().to_vec();
        for (j, (other, _)) in active.iter().enumerate() {
            if j != i {
                hn = poly::mul(&hn, other.den());
            }
        }
        ch = poly::add(&ch, &poly::mul(n, &hn));
    }
    if poly::is_zero(&ch) {
        return Err(Error::DegenerateLoop);
    }
    RationalTF::new(&poly::mul(&np, &e), &ch)
}

/// Closed-loop poles from the state-space realization of the loop, which is
/// better conditioned than rooting the characteristic polynomial.
pub fn closed_loop_poles(scn: &NetworkScenario, d: &PODControllerDesign) -> Result<Vec<Complex64>> {
    LoopModel::new(scn, d)?.poles()
}

/// `T(jw)` evaluated from the loop components.
pub fn closed_loop_response(scn: &NetworkScenario, d: &PODControllerDesign, omega: f64) -> Result<Complex64> {
    let pp = scn.plant_p.eval(omega)?;
    let mut den = Complex64::new(1.0, 0.0);
    for channel in Channel::BOTH {
        let k = match channel {
            Channel::P => d.k_p,
            Channel::Q => d.k_q,
        };
        if k != 0.0 {
            den += loop_model::controller_tf(d, channel)?.eval(omega)? * scn.plant(channel).eval(omega)?;
        }
    }
    Ok(pp / den)
}
