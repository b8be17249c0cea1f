//! Real polynomials stored as coefficient slices in descending powers.

use num_complex::Complex64;

pub fn eval(p: &[f64], s: Complex64) -> Complex64 {
    p.iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

pub fn eval_real(p: &[f64], x: f64) -> f64 {
    p.iter().fold(0.0, |acc, &c| acc * x + c)
}

pub fn degree(p: &[f64]) -> usize {
    p.len().saturating_sub(1)
}

/// Drops leading zeros, keeping at least one coefficient.
pub fn trim(p: &[f64]) -> Vec<f64> {
    let first = p.iter().position(|&c| c != 0.0);
    match first {
        Some(i) => p[i..].to_vec(),
        None => vec![0.0],
    }
}

pub fn is_zero(p: &[f64]) -> bool {
    p.iter().all(|&c| c == 0.0)
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![0.0];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (k, &x) in a.iter().rev().enumerate() {
        out[n - 1 - k] += x;
    }
    for (k, &x) in b.iter().rev().enumerate() {
        out[n - 1 - k] += x;
    }
    out
}

pub fn scale(a: &[f64], k: f64) -> Vec<f64> {
    a.iter().map(|&c| c * k).collect()
}

pub fn derivative(p: &[f64]) -> Vec<f64> {
    let n = degree(p);
    if n == 0 {
        return vec![0.0];
    }
    p[..n]
        .iter()
        .enumerate()
        .map(|(i, &c)| c * (n - i) as f64)
        .collect()
}

/// Monic polynomial with the given roots (complex roots must come in conjugate pairs).
pub fn from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut acc = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
        for (i, &c) in acc.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        acc = next;
    }
    acc.iter().map(|c| c.re).collect()
}

/// |p(jw)|^2 as a real polynomial in w (descending).
pub fn magnitude_squared_on_axis(p: &[f64]) -> Vec<f64> {
    let n = degree(p);
    let mut re = vec![0.0; n + 1];
    let mut im = vec![0.0; n + 1];
    for (i, &c) in p.iter().enumerate() {
        let k = n - i;
        // (j)^k cycles 1, j, -1, -j
        match k % 4 {
            0 => re[i] = c,
            1 => im[i] = c,
            2 => re[i] = -c,
            _ => im[i] = -c,
        }
    }
    add(&mul(&re, &re), &mul(&im, &im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_sum() {
        assert_eq!(mul(&[1.0, 1.0], &[1.0, 2.0]), vec![1.0, 3.0, 2.0]);
        assert_eq!(add(&[1.0, 0.0, 0.0], &[2.0, 3.0]), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn roots_round_trip() {
        let p = from_roots(&[Complex64::new(-1.0, 0.0), Complex64::new(-2.0, 0.0)]);
        assert_eq!(p, vec![1.0, 3.0, 2.0]);
    }

    #[test]
    fn axis_magnitude_matches_eval() {
        let p = [2.0, -1.0, 3.0, 0.5];
        let m2 = magnitude_squared_on_axis(&p);
        for w in [0.0, 0.3, 1.7, 4.0] {
            let direct = eval(&p, Complex64::new(0.0, w)).norm_sqr();
            assert!((eval_real(&m2, w) - direct).abs() < 1e-10 * direct.max(1.0));
        }
    }
}
