use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::RationalTF;

/// Series high-pass / low-pass filter `s/(s + 1/T_h) * 1/(s T_l + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPass {
    pub t_h: f64,
    pub t_l: f64,
}

impl Default for BandPass {
    fn default() -> Self {
        Self { t_h: 2.0, t_l: 0.05 }
    }
}

impl BandPass {
    pub fn new(t_h: f64, t_l: f64) -> Result<Self> {
        let bp = Self { t_h, t_l };
        bp.validate()?;
        Ok(bp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_h > 0.0 && self.t_l > 0.0 && self.t_h > self.t_l)
            || !self.t_h.is_finite()
            || !self.t_l.is_finite()
        {
            return Err(Error::InvariantViolation(format!(
                "band-pass needs T_h > T_l > 0, got T_h = {}, T_l = {}",
                self.t_h, self.t_l
            )));
        }
        Ok(())
    }

    pub fn tf(&self) -> Result<RationalTF> {
        self.validate()?;
        let high = RationalTF::new(&[1.0, 0.0], &[1.0, 1.0 / self.t_h])?;
        let low = RationalTF::new(&[1.0], &[self.t_l, 1.0])?;
        Ok(high.series(&low))
    }
}

pub fn bandpass_tf(bp: &BandPass) -> Result<RationalTF> {
    bp.tf()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::hz_to_rad;

    #[test]
    fn magnitude_at_band_edge() {
        let b = BandPass::new(2.0, 0.05).unwrap().tf().unwrap();
        // Direct complex arithmetic: jw/(jw + 0.5) * 1/(0.05 jw + 1)
        let w = hz_to_rad(0.1);
        let direct = num_complex::Complex64::new(0.0, w)
            / num_complex::Complex64::new(0.5, w)
            / num_complex::Complex64::new(1.0, 0.05 * w);
        let got = b.eval(w).unwrap();
        assert!((got - direct).norm() < 1e-14);
        assert!((got.norm() - 0.782).abs() < 5e-4);
    }

    #[test]
    fn rolls_off_both_ends() {
        let b = BandPass::default().tf().unwrap();
        assert_eq!(b.eval(0.0).unwrap().norm(), 0.0);
        assert!(b.eval(1e6).unwrap().norm() < 1e-4);
    }

    #[test]
    fn rejects_empty_passband() {
        assert!(BandPass::new(0.05, 2.0).is_err());
        assert!(BandPass::new(-1.0, 0.05).is_err());
    }
}
