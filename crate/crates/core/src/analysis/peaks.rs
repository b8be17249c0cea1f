//! Resonance peak detection on sampled frequency responses.

use crate::error::{Error, Result};
use crate::lti::{hz_to_rad, poly, FrequencyResponse, RationalTF};

/// Minimum sampling density accepted by [`detect_peaks`].
pub const MIN_POINTS_PER_DECADE: f64 = 200.0;
/// Golden-section stopping width in rad/s.
pub const GOLDEN_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions {
    pub band_hz: (f64, f64),
    pub prominence_db: f64,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self {
            band_hz: (0.1, 2.0),
            prominence_db: 3.0,
        }
    }
}

/// Local maxima of `|fr|` inside `band_hz` whose topographic prominence (dB)
/// reaches `prominence_db`. When `source` is given each maximum is refined on
/// the continuous response. Returns rad/s, ascending.
pub fn detect_peaks(
    fr: &FrequencyResponse,
    band_hz: (f64, f64),
    prominence_db: f64,
    source: Option<&RationalTF>,
) -> Result<Vec<f64>> {
    let w = fr.omega();
    let (lo, hi) = (hz_to_rad(band_hz.0), hz_to_rad(band_hz.1));
    let required = MIN_POINTS_PER_DECADE;
    if w.len() < 3 || w[0] > lo || w[w.len() - 1] < hi {
        return Err(Error::GridTooCoarse {
            per_decade: 0.0,
            required,
        });
    }
    let per_decade = (w.len() - 1) as f64 / (w[w.len() - 1] / w[0]).log10();
    if per_decade + 1e-9 < required {
        return Err(Error::GridTooCoarse {
            per_decade,
            required,
        });
    }

    let db: Vec<f64> = fr
        .value()
        .iter()
        .map(|z| 20.0 * z.norm().max(1e-300).log10())
        .collect();
    let candidates = local_maxima(&db);
    let refiner = source.map(PeakRefiner::new);
    let mut peaks = Vec::new();
    for i in candidates {
        if w[i] < lo || w[i] > hi {
            continue;
        }
        if prominence(&db, i) < prominence_db {
            continue;
        }
        let wp = match &refiner {
            Some(r) => r.refine(w[i - 1], w[i + 1]),
            None => w[i],
        };
        peaks.push(wp);
    }
    if peaks.is_empty() {
        return Err(Error::NoPeaksFound);
    }
    peaks.sort_by(f64::total_cmp);
    peaks.dedup_by(|a, b| (*a - *b).abs() <= GOLDEN_TOL);
    Ok(peaks)
}

/// Interior indices that rise from the left and do not fall to the right
/// (plateaus report their left edge once).
pub(crate) fn local_maxima(y: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = y.len();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] {
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Height of `y[i]` above the higher of its two bases, where each base is the
/// lowest sample between `i` and the nearest strictly higher sample (or the
/// edge) on that side.
pub(crate) fn prominence(y: &[f64], i: usize) -> f64 {
    let peak = y[i];
    let mut left_min = peak;
    for k in (0..i).rev() {
        if y[k] > peak {
            break;
        }
        left_min = left_min.min(y[k]);
    }
    let mut right_min = peak;
    for &v in &y[i + 1..] {
        if v > peak {
            break;
        }
        right_min = right_min.min(v);
    }
    peak - left_min.max(right_min)
}

/// Locates magnitude maxima of a transfer function on the imaginary axis.
pub struct PeakRefiner<'a> {
    tf: &'a RationalTF,
    dnum: Vec<f64>,
    dden: Vec<f64>,
}

impl<'a> PeakRefiner<'a> {
    pub fn new(tf: &'a RationalTF) -> Self {
        Self {
            tf,
            dnum: poly::derivative(tf.num()),
            dden: poly::derivative(tf.den()),
        }
    }

    /// d|G(jw)|^2/dw up to a positive factor: Re(j (N'D - ND') conj(ND)).
    /// Evaluated from the factors directly; expanding |N|^2 and |D|^2 into
    /// polynomials in w loses several digits to cancellation.
    fn slope(&self, w: f64) -> f64 {
        let s = num_complex::Complex64::new(0.0, w);
        let n = poly::eval(self.tf.num(), s);
        let d = poly::eval(self.tf.den(), s);
        let x = poly::eval(&self.dnum, s) * d - n * poly::eval(&self.dden, s);
        (num_complex::Complex64::i() * x * (n * d).conj()).re
    }

    fn mag(&self, w: f64) -> f64 {
        self.tf.eval_s(num_complex::Complex64::new(0.0, w)).norm()
    }

    /// Golden-section maximization on `[a, b]` to [`GOLDEN_TOL`], then an
    /// exact stationary point of `|tf|` when one is bracketed nearby.
    pub fn refine(&self, a: f64, b: f64) -> f64 {
        let x = self.golden(a, b);
        let lo = (x - 2.0 * GOLDEN_TOL).max(a);
        let hi = (x + 2.0 * GOLDEN_TOL).min(b);
        self.stationary_max(lo, hi).unwrap_or(x)
    }

    fn golden(&self, mut a: f64, mut b: f64) -> f64 {
        let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (self.mag(c), self.mag(d));
        while (b - a).abs() > GOLDEN_TOL {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = self.mag(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = self.mag(d);
            }
        }
        0.5 * (a + b)
    }

    /// Bisection on the magnitude slope for a `+ -> -` sign change in `[lo, hi]`.
    pub fn stationary_max(&self, mut lo: f64, mut hi: f64) -> Option<f64> {
        let g = |w: f64| self.slope(w);
        let (glo, ghi) = (g(lo), g(hi));
        if !(glo > 0.0 && ghi < 0.0) {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Nearest magnitude maximum to `center` inside `[lo, hi]`, found by
    /// scanning the slope sign on `samples` points.
    pub fn nearest_max(&self, center: f64, lo: f64, hi: f64, samples: usize) -> Option<f64> {
        let step = (hi - lo) / samples as f64;
        let mut best: Option<f64> = None;
        let mut prev_w = lo;
        let mut prev_g = self.slope(lo);
        for k in 1..=samples {
            let w = lo + step * k as f64;
            let gk = self.slope(w);
            if prev_g > 0.0 && gk <= 0.0 {
                if let Some(root) = self.stationary_max(prev_w, w).or(Some(w)) {
                    if best.map_or(true, |b| (root - center).abs() < (b - center).abs()) {
                        best = Some(root);
                    }
                }
            }
            prev_w = w;
            prev_g = gk;
        }
        best
    }
}
