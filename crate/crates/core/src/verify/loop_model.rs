//! State-space realization of the damping loop: one shared plant realization
//! driven by both power channels, plus one realization per active controller.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::PODControllerDesign;
use crate::error::{Error, Result};
use crate::lti::{poly, roots, RationalTF, StateSpace};
use crate::scenario::{Channel, NetworkScenario};

/// Relative tolerance for treating the two plant denominators as one.
const SHARED_DEN_TOL: f64 = 1e-12;
/// Largest simulation step (s).
pub const MAX_DT: f64 = 0.01;

struct Controller {
    channel: Channel,
    ss: StateSpace,
    limit: f64,
}

pub(crate) struct LoopModel {
    n: usize,
    /// Observer-form plant: row-major `A`, output is the first state.
    a: Vec<f64>,
    b: [Vec<f64>; 2],
    d: [f64; 2],
    ctrl: Vec<Controller>,
}

fn idx(c: Channel) -> usize {
    match c {
        Channel::P => 0,
        Channel::Q => 1,
    }
}

/// Common denominator and numerators over it for the two plant channels.
pub(crate) fn common_plant(scn: &NetworkScenario) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (p, q) = (&scn.plant_p, &scn.plant_q);
    let scale = p.den().iter().chain(q.den()).fold(0.0_f64, |m, c| m.max(c.abs()));
    let shared = p.den().len() == q.den().len()
        && p.den().iter().zip(q.den()).all(|(a, b)| (a - b).abs() <= SHARED_DEN_TOL * scale);
    if shared {
        (p.den().to_vec(), p.num().to_vec(), q.num().to_vec())
    } else {
        (
            poly::mul(p.den(), q.den()),
            poly::mul(p.num(), q.den()),
            poly::mul(q.num(), p.den()),
        )
    }
}

/// `K * C * B` for one channel; strictly proper because `B` is.
pub(crate) fn controller_tf(design: &PODControllerDesign, channel: Channel) -> Result<RationalTF> {
    let (k, c) = match channel {
        Channel::P => (design.k_p, &design.cascade_p),
        Channel::Q => (design.k_q, &design.cascade_q),
    };
    Ok(c.tf().series(&design.bandpass.tf()?).scaled(k))
}

impl LoopModel {
    pub fn new(scn: &NetworkScenario, design: &PODControllerDesign) -> Result<Self> {
        design.validate()?;
        scn.validate()?;
        let (den, np, nq) = common_plant(scn);
        let n = den.len() - 1;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n] = -den[i + 1];
            if i + 1 < n {
                a[i * n + i + 1] = 1.0;
            }
        }
        let split = |num: &[f64]| -> (f64, Vec<f64>) {
            let mut padded = vec![0.0; n + 1];
            padded[n + 1 - num.len()..].copy_from_slice(num);
            let d = padded[0];
            (d, (0..n).map(|i| padded[i + 1] - d * den[i + 1]).collect())
        };
        let (dp, bp) = split(&np);
        let (dq, bq) = split(&nq);
        let mut ctrl = Vec::new();
        for channel in Channel::BOTH {
            let (k, limit) = match channel {
                Channel::P => (design.k_p, design.p_limit),
                Channel::Q => (design.k_q, design.q_limit),
            };
            // A zero-gain channel is not part of the loop at all.
            if k == 0.0 {
                continue;
            }
            let ss = StateSpace::from_tf(&controller_tf(design, channel)?)?;
            debug_assert_eq!(ss.d(), 0.0);
            ctrl.push(Controller { channel, ss, limit });
        }
        Ok(Self {
            n,
            a,
            b: [bp, bq],
            d: [dp, dq],
            ctrl,
        })
    }

    pub fn order(&self) -> usize {
        self.n + self.ctrl.iter().map(|c| c.ss.order()).sum::<usize>()
    }

    /// Controller outputs `(p_d, q_d)` at state `x`.
    fn injections(&self, x: &[f64], saturate: bool) -> [f64; 2] {
        let mut u = [0.0; 2];
        let mut off = self.n;
        for c in &self.ctrl {
            let m = c.ss.order();
            let mut v = -c.ss.output(&x[off..off + m], 0.0);
            if saturate {
                v = v.clamp(-c.limit, c.limit);
            }
            u[idx(c.channel)] = v;
            off += m;
        }
        u
    }

    /// Frequency deviation and injections at state `x` with disturbance `w`
    /// entering alongside the active-power injection.
    pub fn outputs(&self, x: &[f64], w: f64, saturate: bool) -> (f64, [f64; 2]) {
        let u = self.injections(x, saturate);
        let d_omega = x.first().copied().unwrap_or(0.0) + self.d[0] * (u[0] + w) + self.d[1] * u[1];
        (d_omega, u)
    }

    pub fn derivative(&self, x: &[f64], w: f64, saturate: bool, dx: &mut [f64]) {
        let n = self.n;
        let (d_omega, u) = self.outputs(x, w, saturate);
        let up = u[0] + w;
        for i in 0..n {
            let row = &self.a[i * n..(i + 1) * n];
            dx[i] = row.iter().zip(&x[..n]).map(|(a, v)| a * v).sum::<f64>()
                + self.b[0][i] * up
                + self.b[1][i] * u[1];
        }
        let mut off = n;
        for c in &self.ctrl {
            let m = c.ss.order();
            c.ss.derivative(&x[off..off + m], d_omega, &mut dx[off..off + m]);
            off += m;
        }
    }

    /// Closed-loop state matrix of the unsaturated loop.
    pub fn state_matrix(&self) -> DMatrix<f64> {
        let n = self.order();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.derivative(&e, 0.0, false, &mut col);
            for i in 0..n {
                m[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        m
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        if self.order() == 0 {
            return Ok(Vec::new());
        }
        roots::eigenvalues(self.state_matrix())
    }

    /// Step bound from the fastest closed-loop and open-loop eigenvalue.
    pub fn max_step(&self) -> Result<f64> {
        let mut w_max = self.poles()?.iter().map(|p| p.norm()).fold(0.0, f64::max);
        if self.n > 0 {
            let a = DMatrix::from_row_slice(self.n, self.n, &self.a);
            w_max = roots::eigenvalues(a)?.iter().map(|p| p.norm()).fold(w_max, f64::max);
        }
        for c in &self.ctrl {
            let m = c.ss.order();
            let a = DMatrix::from_fn(m, m, |i, j| c.ss.a(i, j));
            w_max = roots::eigenvalues(a)?.iter().map(|p| p.norm()).fold(w_max, f64::max);
        }
        if !w_max.is_finite() {
            return Err(Error::NonFiniteCoefficient);
        }
        Ok(if w_max == 0.0 {
            MAX_DT
        } else {
            (1.0 / (20.0 * w_max / std::f64::consts::TAU)).min(MAX_DT)
        })
    }
}
