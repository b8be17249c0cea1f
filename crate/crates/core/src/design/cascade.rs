use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{wrap_deg, ComplexGainPhase, RationalTF};

/// Lower bound on denominator time constants; keeps every stage pole in the
/// open left half-plane.
pub const T_MIN: f64 = 0.01;
/// Upper bound on all time-constant magnitudes (s).
pub const T_MAX: f64 = 30.0;

/// `prod_k (1 + s T_{2k-1}) / (1 + s T_{2k})` with time constants stored
/// in order `[T1, T2, ..., Tc]`. Numerator constants may be negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LeadLagCascade {
    t: Vec<f64>,
}

impl TryFrom<Vec<f64>> for LeadLagCascade {
    type Error = Error;

    fn try_from(t: Vec<f64>) -> Result<Self> {
        Self::new(t)
    }
}

impl From<LeadLagCascade> for Vec<f64> {
    fn from(c: LeadLagCascade) -> Self {
        c.t
    }
}

impl LeadLagCascade {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || t.len() % 2 != 0 {
            return Err(Error::InvariantViolation(format!(
                "cascade needs an even number (>= 2) of time constants, got {}",
                t.len()
            )));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCoefficient);
        }
        if let Some(bad) = t.chunks(2).map(|p| p[1]).find(|&d| d <= 0.0) {
            return Err(Error::InvariantViolation(format!(
                "denominator time constant must be positive, got {bad}"
            )));
        }
        Ok(Self { t })
    }

    /// Skips validation; callers guarantee positive denominator constants.
    pub(crate) fn from_raw(t: Vec<f64>) -> Self {
        debug_assert!(t.len() >= 2 && t.len() % 2 == 0);
        Self { t }
    }

    /// `stages` unit stages (all time constants equal to 1 s).
    pub fn identity(stages: usize) -> Self {
        Self { t: vec![1.0; 2 * stages.max(1)] }
    }

    pub fn time_constants(&self) -> &[f64] {
        &self.t
    }

    pub fn stages(&self) -> usize {
        self.t.len() / 2
    }

    pub fn stage_pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.chunks(2).map(|p| (p[0], p[1]))
    }

    /// Unwrapped phase (degrees) accumulated stage by stage.
    pub fn phase_unwrapped(&self, omega: f64) -> f64 {
        self.stage_pairs()
            .map(|(a, b)| (omega * a).atan().to_degrees() - (omega * b).atan().to_degrees())
            .sum()
    }

    pub fn magnitude(&self, omega: f64) -> f64 {
        let w2 = omega * omega;
        self.stage_pairs()
            .map(|(a, b)| ((1.0 + w2 * a * a) / (1.0 + w2 * b * b)).sqrt())
            .product()
    }

    pub fn eval(&self, omega: f64) -> ComplexGainPhase {
        ComplexGainPhase {
            magnitude: self.magnitude(omega),
            phase_deg: wrap_deg(self.phase_unwrapped(omega)),
        }
    }

    pub fn tf(&self) -> RationalTF {
        self.stage_pairs()
            .map(|(a, b)| {
                RationalTF::new(&[a, 1.0], &[b, 1.0]).expect("denominator constant is positive")
            })
            .fold(RationalTF::gain(1.0), |acc, st| acc.series(&st))
    }

    /// Orders of magnitude between the largest and smallest |T|.
    pub fn log_spread(&self) -> f64 {
        let mags = self.t.iter().map(|v| v.abs().max(1e-300));
        let (lo, hi) = mags.fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        (hi / lo).log10()
    }
}

pub fn cascade_eval(x: &LeadLagCascade, omega: f64) -> ComplexGainPhase {
    x.eval(omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lead_stage_at_center() {
        let c = LeadLagCascade::new(vec![1.0, 0.1]).unwrap();
        let w = 1.0 / (1.0_f64 * 0.1).sqrt();
        let oracle = (w * 1.0).atan().to_degrees() - (w * 0.1).atan().to_degrees();
        let got = c.eval(w);
        assert!((got.phase_deg - oracle).abs() < 1e-12);
        assert!((got.phase_deg - 54.90).abs() < 5e-3);
    }

    #[test]
    fn identity_stage() {
        let c = LeadLagCascade::new(vec![0.7, 0.7]).unwrap();
        for w in [0.0, 0.1, 3.0, 100.0] {
            let e = c.eval(w);
            assert_eq!(e.magnitude, 1.0);
            assert_eq!(e.phase_deg, 0.0);
        }
    }

    #[test]
    fn negative_numerator_constant() {
        let c = LeadLagCascade::new(vec![-1.0, 1.0]).unwrap();
        let e = c.eval(1.0);
        assert!((e.phase_deg + 90.0).abs() < 1e-12);
        assert!((e.magnitude - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invariants_enforced() {
        assert!(LeadLagCascade::new(vec![1.0]).is_err());
        assert!(LeadLagCascade::new(vec![1.0, 0.0]).is_err());
        assert!(LeadLagCascade::new(vec![1.0, -0.2]).is_err());
        assert!(LeadLagCascade::new(vec![-1.0, 0.2, 3.0, 0.5]).is_ok());
    }

    #[test]
    fn tf_matches_direct_evaluation() {
        let c = LeadLagCascade::new(vec![18.26, 0.23, -2.79, 0.67, 0.07, 30.0]).unwrap();
        let tf = c.tf();
        for w in [0.05, 0.6, 4.4, 50.0] {
            let z = tf.eval(w).unwrap();
            let e = c.eval(w);
            assert!((z.norm() - e.magnitude).abs() < 1e-9 * e.magnitude);
            assert!(wrap_deg(z.arg().to_degrees() - e.phase_deg).abs() < 1e-9);
        }
        for p in tf.poles().unwrap() {
            assert!(p.re < 0.0);
        }
    }

    proptest! {
        #[test]
        fn stagewise_phase_wraps_once(
            stages in prop::collection::vec((-30.0f64..30.0, 0.01f64..30.0), 1..5),
            w in 0.01f64..200.0,
        ) {
            let t: Vec<f64> = stages.iter().flat_map(|&(a, b)| [a, b]).collect();
            let c = LeadLagCascade::new(t).unwrap();
            let sum: f64 = stages
                .iter()
                .map(|&(a, b)| (w * a).atan().to_degrees() - (w * b).atan().to_degrees())
                .sum();
            prop_assert!(wrap_deg(c.eval(w).phase_deg - wrap_deg(sum)).abs() < 1e-9);
            let z = c.tf().eval(w).unwrap();
            prop_assert!(wrap_deg(z.arg().to_degrees() - c.eval(w).phase_deg).abs() < 1e-6);
        }
    }
}
