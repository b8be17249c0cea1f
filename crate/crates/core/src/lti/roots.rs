//! Polynomial roots as eigenvalues of the balanced companion matrix.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use super::poly;
use crate::error::{Error, Result};

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;

/// All roots of `p` (descending coefficients), multiplicity preserved,
/// sorted by real part descending then imaginary part descending.
pub fn roots(p: &[f64]) -> Result<Vec<Complex64>> {
    let p = poly::trim(p);
    if poly::is_zero(&p) {
        return Err(Error::InvariantViolation("roots of the zero polynomial".into()));
    }
    // Exact zeros at the origin are peeled off before the eigen-solve.
    let trailing = p.iter().rev().take_while(|&&c| c == 0.0).count();
    let core = &p[..p.len() - trailing];
    let mut out = vec![Complex64::new(0.0, 0.0); trailing];
    if core.len() > 1 {
        out.extend(companion_roots(core)?);
    }
    out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(out)
}

fn companion_roots(p: &[f64]) -> Result<Vec<Complex64>> {
    let n = p.len() - 1;
    let lead = p[0];
    if n == 1 {
        return Ok(vec![Complex64::new(-p[1] / lead, 0.0)]);
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -p[j + 1] / lead;
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    let eig = raw_eigenvalues(m)?;
    let dp = poly::derivative(p);
    let mut out: Vec<Complex64> = eig.iter().map(|z| polish(p, &dp, *z)).collect();
    // Restore exact conjugate symmetry lost to independent polishing.
    for z in out.iter_mut() {
        if z.im.abs() <= 1e-14 * z.norm().max(1.0) {
            z.im = 0.0;
        }
    }
    Ok(out)
}

fn raw_eigenvalues(mut m: DMatrix<f64>) -> Result<Vec<Complex64>> {
    balance(&mut m);
    let schur = Schur::try_new(m, SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::NumericalFailure("eigen-solve did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Eigenvalues of a square real matrix, sorted like [`roots`].
pub fn eigenvalues(m: DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvariantViolation("eigenvalues of a non-square matrix".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteCoefficient);
    }
    let mut out = raw_eigenvalues(m)?;
    for z in out.iter_mut() {
        if z.im.abs() <= 1e-14 * z.norm().max(1.0) {
            z.im = 0.0;
        }
    }
    out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(out)
}

fn polish(p: &[f64], dp: &[f64], z0: Complex64) -> Complex64 {
    let mut z = z0;
    let mut r = poly::eval(p, z).norm();
    for _ in 0..4 {
        let d = poly::eval(dp, z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - poly::eval(p, z) / d;
        let rc = poly::eval(p, cand).norm();
        if rc.is_finite() && rc < r {
            z = cand;
            r = rc;
        } else {
            break;
        }
    }
    z
}

/// Parlett-Reinsch diagonal similarity scaling (radix 2).
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2.0_f64;
    let sqrdx = radix * radix;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] *= g;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}
