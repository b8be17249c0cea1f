//! Derivative-free local search strategies, selectable by name.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    pub max_iterations: usize,
    /// Converged when the objective spread across the working set drops below this.
    pub f_tol: f64,
    /// Converged when the working step size drops below this.
    pub x_tol: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            max_iterations: 4000,
            f_tol: 1e-12,
            x_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub trait LocalSearch: Send + Sync {
    fn name(&self) -> &'static str;

    /// Minimizes `f` from `x0` with initial per-coordinate step `step`.
    /// `f` may return `+inf` to reject a point.
    fn minimize(
        &self,
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
        x0: &[f64],
        step: &[f64],
        settings: &SearchSettings,
    ) -> SearchOutcome;
}

/// Nelder-Mead with dimension-adaptive coefficients and simplex restarts on
/// convergence, which helps on the kinked wrapped-phase objective.
pub struct NelderMead;

/// Coordinate pattern search with step halving.
pub struct Compass;

pub const DEFAULT_SEARCH: &str = "nelder-mead";

pub struct SearchRegistry {
    entries: Vec<Box<dyn LocalSearch>>,
}

impl Default for SearchRegistry {
    fn default() -> Self {
        let mut r = Self { entries: Vec::new() };
        r.register(Box::new(NelderMead));
        r.register(Box::new(Compass));
        r
    }
}

impl SearchRegistry {
    /// Adds a strategy, replacing any existing one with the same name.
    pub fn register(&mut self, s: Box<dyn LocalSearch>) {
        self.entries.retain(|e| e.name() != s.name());
        self.entries.push(s);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn LocalSearch> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "local search",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }
}

impl LocalSearch for NelderMead {
    fn name(&self) -> &'static str {
        "nelder-mead"
    }

    fn minimize(
        &self,
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
        x0: &[f64],
        step: &[f64],
        settings: &SearchSettings,
    ) -> SearchOutcome {
        let n = x0.len();
        let nf = n as f64;
        let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
        let mut best_x = x0.to_vec();
        let mut best_f = f(x0);
        let mut iterations = 0;
        let mut converged = false;
        let mut scale = 1.0;

        // Each pass restarts the simplex around the incumbent; stop when a
        // restart yields no improvement.
        for _pass in 0..4 {
            let mut simplex: Vec<Vec<f64>> = vec![best_x.clone()];
            for i in 0..n {
                let mut v = best_x.clone();
                v[i] += step[i] * scale;
                simplex.push(v);
            }
            let mut fv: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
            let start_f = best_f;
            let mut pass_converged = false;

            while iterations < settings.max_iterations {
                iterations += 1;
                let mut order: Vec<usize> = (0..=n).collect();
                order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
                simplex = order.iter().map(|&i| simplex[i].clone()).collect();
                fv = order.iter().map(|&i| fv[i]).collect();

                let spread_f = fv[n] - fv[0];
                let spread_x = simplex[1..]
                    .iter()
                    .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
                    .fold(0.0, f64::max);
                if (spread_f.is_finite() && spread_f <= settings.f_tol) || spread_x <= settings.x_tol {
                    pass_converged = true;
                    break;
                }

                let centroid: Vec<f64> = (0..n)
                    .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / nf)
                    .collect();
                let along = |t: f64| -> Vec<f64> {
                    centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect()
                };

                let xr = along(alpha);
                let fr = f(&xr);
                if fr < fv[0] {
                    let xe = along(alpha * beta);
                    let fe = f(&xe);
                    if fe < fr {
                        simplex[n] = xe;
                        fv[n] = fe;
                    } else {
                        simplex[n] = xr;
                        fv[n] = fr;
                    }
                    continue;
                }
                if fr < fv[n - 1] {
                    simplex[n] = xr;
                    fv[n] = fr;
                    continue;
                }
                let (xc, fc) = if fr < fv[n] {
                    let xc = along(alpha * gamma);
                    let fc = f(&xc);
                    (xc, fc)
                } else {
                    let xc = along(-gamma);
                    let fc = f(&xc);
                    (xc, fc)
                };
                if fc < fv[n].min(fr) {
                    simplex[n] = xc;
                    fv[n] = fc;
                    continue;
                }
                for i in 1..=n {
                    let shrunk: Vec<f64> = simplex[0]
                        .iter()
                        .zip(&simplex[i])
                        .map(|(b, v)| b + delta * (v - b))
                        .collect();
                    fv[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
            }

            let (bi, bf) = fv
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, v)| (i, *v))
                .expect("simplex is nonempty");
            if bf < best_f {
                best_f = bf;
                best_x = simplex[bi].clone();
            }
            converged = pass_converged;
            if !pass_converged || iterations >= settings.max_iterations {
                break;
            }
            if !(best_f < start_f) {
                break;
            }
            scale *= 0.5;
        }

        SearchOutcome {
            x: best_x,
            f: best_f,
            iterations,
            converged,
        }
    }
}

impl LocalSearch for Compass {
    fn name(&self) -> &'static str {
        "compass"
    }

    fn minimize(
        &self,
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
        x0: &[f64],
        step: &[f64],
        settings: &SearchSettings,
    ) -> SearchOutcome {
        let mut x = x0.to_vec();
        let mut fx = f(&x);
        let mut h = step.to_vec();
        let mut iterations = 0;
        let mut converged = false;
        while iterations < settings.max_iterations {
            iterations += 1;
            if h.iter().all(|&v| v.abs() <= settings.x_tol) {
                converged = true;
                break;
            }
            let mut improved = false;
            for i in 0..x.len() {
                for dir in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[i] += dir * h[i];
                    let fy = f(&y);
                    if fy < fx {
                        x = y;
                        fx = fy;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                h.iter_mut().for_each(|v| *v *= 0.5);
            }
        }
        SearchOutcome {
            x,
            f: fx,
            iterations,
            converged,
        }
    }
}
