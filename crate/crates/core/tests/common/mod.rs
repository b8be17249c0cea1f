#![allow(dead_code)]

use podtune_core::lti::{hz_to_rad, poly, RationalTF};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Monic polynomial with `degree` random roots in the open left half-plane,
/// complex ones in conjugate pairs.
pub fn stable_poly(rng: &mut ChaCha8Rng, degree: usize) -> Vec<f64> {
    let mut p = vec![1.0];
    let mut left = degree;
    while left > 0 {
        if left >= 2 && rng.gen_bool(0.5) {
            let re = -rng.gen_range(0.05..2.0);
            let im = rng.gen_range(0.1..10.0);
            p = poly::mul(&p, &[1.0, -2.0 * re, re * re + im * im]);
            left -= 2;
        } else {
            p = poly::mul(&p, &[1.0, rng.gen_range(0.05..5.0)]);
            left -= 1;
        }
    }
    p
}

/// Random proper, stable, minimum-phase transfer function of degree 1..=max.
pub fn stable_tf(rng: &mut ChaCha8Rng, max_degree: usize) -> RationalTF {
    let n = rng.gen_range(1..=max_degree);
    let den = stable_poly(rng, n);
    let m = rng.gen_range(0..=n);
    let k = rng.gen_range(0.2..5.0);
    let num: Vec<f64> = stable_poly(rng, m).iter().map(|c| c * k).collect();
    RationalTF::new(&num, &den).unwrap()
}

/// A sum of unit-peak resonators `2 zeta wn s / (s^2 + 2 zeta wn s + wn^2)`.
pub struct PeakFixture {
    pub tf: RationalTF,
    pub f_hz: Vec<f64>,
    pub zeta: Vec<f64>,
}

/// Half-bandwidth of each mode is kept below a quarter of the gap to its
/// nearest neighbour, so every lobe stands out as its own maximum.
pub const RESOLVE_FRACTION: f64 = 0.25;

pub fn peak_fixture(rng: &mut ChaCha8Rng, k: usize) -> PeakFixture {
    let f_hz = loop {
        let mut f: Vec<f64> = (0..k).map(|_| rng.gen_range(0.15..1.85)).collect();
        f.sort_by(f64::total_cmp);
        if f.windows(2).all(|w| w[1] - w[0] >= 0.05) {
            break f;
        }
    };
    let zeta: Vec<f64> = (0..k)
        .map(|i| {
            let gap = [i.checked_sub(1).map(|j| f_hz[i] - f_hz[j]), f_hz.get(i + 1).map(|g| g - f_hz[i])]
                .into_iter()
                .flatten()
                .fold(f64::INFINITY, f64::min);
            let cap = (RESOLVE_FRACTION * gap / f_hz[i]).min(0.1);
            rng.gen_range(0.1 * cap..=cap)
        })
        .collect();
    let mut tf: Option<RationalTF> = None;
    for (f, z) in f_hz.iter().zip(&zeta) {
        let wn = hz_to_rad(*f);
        let term = RationalTF::new(&[2.0 * z * wn, 0.0], &[1.0, 2.0 * z * wn, wn * wn]).unwrap();
        tf = Some(match tf {
            None => term,
            Some(t) => t.parallel(&term),
        });
    }
    PeakFixture {
        tf: tf.unwrap(),
        f_hz,
        zeta,
    }
}

/// Dense-grid argmax of `|tf|` in each mode's lobe, the lobe spanning the
/// midpoints to the neighbouring modes (rad/s).
pub fn lobe_argmax(fx: &PeakFixture) -> Vec<f64> {
    let k = fx.f_hz.len();
    (0..k)
        .map(|i| {
            let lo = if i == 0 { 0.5 * fx.f_hz[0] } else { 0.5 * (fx.f_hz[i - 1] + fx.f_hz[i]) };
            let hi = if i + 1 == k { 1.5 * fx.f_hz[i] } else { 0.5 * (fx.f_hz[i] + fx.f_hz[i + 1]) };
            let n = 20_000;
            (0..=n)
                .map(|j| hz_to_rad(lo + (hi - lo) * j as f64 / n as f64))
                .map(|w| (w, fx.tf.eval(w).unwrap().norm()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0
        })
        .collect()
}
