//! Fixed-step RK4 simulation of single-input single-output realizations.

use std::f64::consts::PI;

use super::tf::RationalTF;
use crate::error::{Error, Result};

/// Controllable canonical realization of a proper transfer function.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    n: usize,
    /// Row-major n x n.
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: f64,
}

impl StateSpace {
    pub fn from_tf(tf: &RationalTF) -> Result<Self> {
        if !tf.is_proper() {
            return Err(Error::ImproperSystem {
                num: tf.num_degree(),
                den: tf.den_degree(),
            });
        }
        let den = tf.den();
        let n = den.len() - 1;
        let mut num = vec![0.0; n + 1];
        if !tf.is_zero() {
            let off = n + 1 - tf.num().len();
            num[off..].copy_from_slice(tf.num());
        }
        let d = num[0];
        let mut a = vec![0.0; n * n];
        for j in 0..n {
            a[j] = -den[j + 1];
        }
        for i in 1..n {
            a[i * n + i - 1] = 1.0;
        }
        let mut b = vec![0.0; n];
        if n > 0 {
            b[0] = 1.0;
        }
        let c = (0..n).map(|i| num[i + 1] - d * den[i + 1]).collect();
        Ok(Self { n, a, b, c, d })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// `dx = A x + B u`
    pub fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.a[i * n..(i + 1) * n];
            dx[i] = row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + self.b[i] * u;
        }
    }

    pub fn output(&self, x: &[f64], u: f64) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum::<f64>() + self.d * u
    }
}

/// One classical RK4 step for `dx = f(t, x)`.
pub fn rk4_step<F>(x: &mut [f64], t: f64, dt: f64, mut f: F)
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = x.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f(t, x, &mut k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k1[i];
    }
    f(t + 0.5 * dt, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k2[i];
    }
    f(t + 0.5 * dt, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = x[i] + dt * k3[i];
    }
    f(t + dt, &tmp, &mut k4);
    for i in 0..n {
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Largest admissible step: `1 / (20 f_max)` over pole and zero natural
/// frequencies. Infinite for static gains.
pub fn max_step(tf: &RationalTF) -> Result<f64> {
    let mut w_max = 0.0_f64;
    if tf.den_degree() > 0 {
        for p in tf.poles()? {
            w_max = w_max.max(p.norm());
        }
    }
    for z in tf.zeros()? {
        w_max = w_max.max(z.norm());
    }
    if w_max == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(1.0 / (20.0 * w_max / (2.0 * PI)))
    }
}

/// Simulates `tf` from rest on uniformly sampled `input`. The input is
/// linearly interpolated between samples; an optional saturator clips each
/// sample before integration.
pub fn ss_simulate(
    tf: &RationalTF,
    input: &[f64],
    dt: f64,
    saturator: Option<(f64, f64)>,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvariantViolation(format!("step must be positive, got {dt}")));
    }
    let ss = StateSpace::from_tf(tf)?;
    let limit = max_step(tf)?;
    if dt > limit * (1.0 + 1e-9) {
        return Err(Error::StepTooLarge { dt, max: limit });
    }
    let u: Vec<f64> = match saturator {
        Some((lo, hi)) => input.iter().map(|&v| v.clamp(lo, hi)).collect(),
        None => input.to_vec(),
    };
    let mut x = vec![0.0; ss.order()];
    let mut out = Vec::with_capacity(u.len());
    for k in 0..u.len() {
        out.push(ss.output(&x, u[k]));
        if k + 1 == u.len() {
            break;
        }
        let (u0, u1) = (u[k], u[k + 1]);
        let t0 = k as f64 * dt;
        rk4_step(&mut x, t0, dt, |t, x, dx| {
            let frac = ((t - t0) / dt).clamp(0.0, 1.0);
            ss.derivative(x, u0 + (u1 - u0) * frac, dx);
        });
    }
    Ok(out)
}
