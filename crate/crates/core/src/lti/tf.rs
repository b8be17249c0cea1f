use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly;
use super::response::ComplexGainPhase;
use super::roots;
use crate::error::{Error, Result};

/// Relative threshold below which `|den(jw)|` counts as a pole on the axis.
pub const AXIS_POLE_TOL: f64 = 1e-12;

/// Real-coefficient rational transfer function in `s`, coefficients in
/// descending powers. The denominator is kept monic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTf")]
pub struct RationalTF {
    num: Vec<f64>,
    den: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTf {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl TryFrom<RawTf> for RationalTF {
    type Error = Error;

    fn try_from(raw: RawTf) -> Result<Self> {
        RationalTF::new(&raw.num, &raw.den)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interconnection {
    Series,
    Parallel,
    Feedback,
}

impl RationalTF {
    pub fn new(num: &[f64], den: &[f64]) -> Result<Self> {
        if den.is_empty() {
            return Err(Error::EmptyDenominator);
        }
        if num.iter().chain(den).any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoefficient);
        }
        let lead = den[0];
        if lead == 0.0 {
            return Err(Error::ZeroLeadingCoefficient);
        }
        let num = if num.is_empty() {
            vec![0.0]
        } else {
            poly::trim(num)
        };
        Ok(Self {
            num: poly::scale(&num, 1.0 / lead),
            den: poly::scale(den, 1.0 / lead),
        })
    }

    pub fn gain(k: f64) -> Self {
        Self {
            num: vec![k],
            den: vec![1.0],
        }
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn num_degree(&self) -> usize {
        poly::degree(&self.num)
    }

    pub fn den_degree(&self) -> usize {
        poly::degree(&self.den)
    }

    pub fn is_proper(&self) -> bool {
        self.is_zero() || self.num_degree() <= self.den_degree()
    }

    pub fn is_zero(&self) -> bool {
        poly::is_zero(&self.num)
    }

    /// Evaluates at an arbitrary complex point, without the axis-pole check.
    pub fn eval_s(&self, s: Complex64) -> Complex64 {
        poly::eval(&self.num, s) / poly::eval(&self.den, s)
    }

    /// Frequency response value `num(jw) / den(jw)`.
    pub fn eval(&self, omega: f64) -> Result<Complex64> {
        if !omega.is_finite() || omega < 0.0 {
            return Err(Error::InvariantViolation(format!(
                "frequency must be finite and non-negative, got {omega}"
            )));
        }
        let s = Complex64::new(0.0, omega);
        let d = poly::eval(&self.den, s);
        let scale = self.den.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if d.norm() < AXIS_POLE_TOL * scale {
            return Err(Error::PoleOnImaginaryAxis { omega });
        }
        Ok(poly::eval(&self.num, s) / d)
    }

    pub fn gain_phase(&self, omega: f64) -> Result<ComplexGainPhase> {
        self.eval(omega).map(ComplexGainPhase::from)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            num: poly::scale(&self.num, k),
            den: self.den.clone(),
        }
    }

    pub fn series(&self, other: &Self) -> Self {
        Self {
            num: poly::mul(&self.num, &other.num),
            den: poly::mul(&self.den, &other.den),
        }
    }

    pub fn parallel(&self, other: &Self) -> Self {
        let num = poly::add(
            &poly::mul(&self.num, &other.den),
            &poly::mul(&other.num, &self.den),
        );
        Self {
            num: poly::trim(&num),
            den: poly::mul(&self.den, &other.den),
        }
    }

    /// `self / (1 - sign * self * other)`.
    pub fn feedback(&self, other: &Self, sign: f64) -> Result<Self> {
        let num = poly::mul(&self.num, &other.den);
        let den = poly::add(
            &poly::mul(&self.den, &other.den),
            &poly::scale(&poly::mul(&self.num, &other.num), -sign),
        );
        if poly::is_zero(&den) {
            return Err(Error::DegenerateLoop);
        }
        Self::new(&num, &poly::trim(&den))
    }

    pub fn connect(kind: Interconnection, a: &Self, b: &Self, feedback_sign: f64) -> Result<Self> {
        match kind {
            Interconnection::Series => Ok(a.series(b)),
            Interconnection::Parallel => Ok(a.parallel(b)),
            Interconnection::Feedback => a.feedback(b, feedback_sign),
        }
    }

    /// Roots of the denominator, sorted by real part descending.
    pub fn poles(&self) -> Result<Vec<Complex64>> {
        if self.den_degree() == 0 {
            return Err(Error::InvariantViolation(
                "pole computation needs a denominator of degree >= 1".into(),
            ));
        }
        roots::roots(&self.den)
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        if self.is_zero() || self.num_degree() == 0 {
            return Ok(Vec::new());
        }
        roots::roots(&self.num)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn construction_normalizes() {
        let tf = RationalTF::new(&[2.0], &[2.0, 2.0]).unwrap();
        assert_eq!(tf.num(), &[1.0]);
        assert_eq!(tf.den(), &[1.0, 1.0]);
        assert_eq!(tf, RationalTF::new(&[1.0], &[1.0, 1.0]).unwrap());
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            RationalTF::new(&[1.0, 0.0], &[]),
            Err(Error::EmptyDenominator)
        ));
        assert!(matches!(
            RationalTF::new(&[1.0], &[0.0, 1.0]),
            Err(Error::ZeroLeadingCoefficient)
        ));
        assert!(matches!(
            RationalTF::new(&[f64::NAN], &[1.0]),
            Err(Error::NonFiniteCoefficient)
        ));
    }

    #[test]
    fn evaluation() {
        let tf = RationalTF::new(&[1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(tf.eval(0.0).unwrap(), Complex64::new(1.0, 0.0));
        let gp = tf.gain_phase(1.0).unwrap();
        assert!(close(gp.magnitude, 0.70711, 1e-5));
        assert!(close(gp.phase_deg, -45.0, 1e-9));
        let tf2 = RationalTF::new(&[1.0, 2.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!(close(tf2.eval(0.0).unwrap().re, 1.0, 1e-15));
    }

    #[test]
    fn axis_pole_detected() {
        let osc = RationalTF::new(&[1.0], &[1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(osc.eval(1.0), Err(Error::PoleOnImaginaryAxis { .. })));
        let integ = RationalTF::new(&[1.0], &[1.0, 0.0]).unwrap();
        assert!(integ.eval(0.0).is_err());
    }

    #[test]
    fn interconnections() {
        let a = RationalTF::new(&[1.0], &[1.0, 1.0]).unwrap();
        let b = RationalTF::new(&[1.0], &[1.0, 2.0]).unwrap();
        let s = a.series(&b);
        assert_eq!(s.num(), &[1.0]);
        assert_eq!(s.den(), &[1.0, 3.0, 2.0]);

        let fb = a.feedback(&RationalTF::gain(0.0), -1.0).unwrap();
        assert_eq!(fb, a);

        let p = a.parallel(&a);
        for k in 0..10 {
            let w = 0.1 + k as f64 * 0.7;
            let lhs = p.eval(w).unwrap();
            let rhs = a.eval(w).unwrap() * 2.0;
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn degenerate_feedback() {
        let one = RationalTF::gain(1.0);
        assert!(matches!(one.feedback(&one, 1.0), Err(Error::DegenerateLoop)));
    }

    #[test]
    fn deserialize_validates() {
        let ok: RationalTF = serde_json::from_str(r#"{"num":[2],"den":[2,2]}"#).unwrap();
        assert_eq!(ok.den(), &[1.0, 1.0]);
        assert!(serde_json::from_str::<RationalTF>(r#"{"num":[1],"den":[]}"#).is_err());
    }
}
