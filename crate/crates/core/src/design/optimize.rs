//! Multi-start constrained compensator fitting and the order sweep.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cascade::{LeadLagCascade, T_MAX, T_MIN};
use super::objective::{default_out_band_grid, evaluate, out_band_grid, DesignReport, IN_BAND_HZ};
use super::search::{SearchRegistry, SearchSettings, DEFAULT_SEARCH};
use crate::analysis::ModalPoint;
use crate::error::{Error, Result};
use crate::lti::{hz_to_rad, rad_to_hz, wrap_deg};

/// Weight on the out-of-band gain excess.
const PENALTY: f64 = 1e9;
/// The penalty switches on slightly before the unit-gain boundary so that
/// search optima land on the feasible side.
const PENALTY_MARGIN: f64 = 1e-9;
/// Numerator constants are searched as `SINH_SCALE * sinh(z)`: linear near
/// zero, logarithmic for larger magnitudes.
const SINH_SCALE: f64 = 0.01;
/// Target points closer than this (Hz) share a seeding cluster.
const SEED_CLUSTER_HZ: f64 = 0.15;
/// Largest phase a single seeded lead or lag stage is asked to provide.
const SEED_STAGE_MAX_DEG: f64 = 75.0;
/// Weight on relative cost overrun in the in-band gain stage.
const GAIN_STAGE_PENALTY: f64 = 1e3;
/// Number of top candidates refined by the in-band gain stage.
const GAIN_STAGE_STARTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignOptions {
    /// Number of time constants (twice the number of stages).
    pub order_c: usize,
    pub exponent_m: u32,
    /// Oscillation band (Hz); the grid below must stay outside it.
    pub band_hz: (f64, f64),
    /// Out-of-band frequencies (rad/s) where `|C| <= 1` is enforced.
    pub out_band_grid: Vec<f64>,
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Local searches stop once the fit improves by less than this (degrees).
    pub phase_tolerance: f64,
    /// Local search strategy name, see [`SearchRegistry`].
    pub search: String,
    /// Relative cost slack traded for in-band compensator magnitude; 0
    /// returns the lowest-cost candidate.
    pub gain_slack: f64,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            order_c: 6,
            exponent_m: 3,
            band_hz: IN_BAND_HZ,
            out_band_grid: default_out_band_grid(),
            restarts: 24,
            seed: 0,
            max_iterations: 6000,
            phase_tolerance: 1e-4,
            search: DEFAULT_SEARCH.to_string(),
            gain_slack: 0.15,
        }
    }
}

impl DesignOptions {
    /// Moves the band and rebuilds the out-of-band grid around it.
    pub fn with_band(mut self, band_hz: (f64, f64)) -> Self {
        self.band_hz = band_hz;
        self.out_band_grid = out_band_grid(band_hz);
        self
    }

    pub fn with_stages(mut self, stages: usize) -> Self {
        self.order_c = 2 * stages;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvariantViolation(msg));
        if self.order_c < 2 || self.order_c % 2 != 0 {
            return bad(format!("order_c must be even and >= 2, got {}", self.order_c));
        }
        if self.exponent_m < 1 {
            return bad("exponent_m must be >= 1".into());
        }
        if self.restarts < 1 || self.max_iterations < 1 {
            return bad("restarts and max_iterations must be positive".into());
        }
        if !(self.gain_slack >= 0.0) {
            return bad("gain_slack must be non-negative".into());
        }
        if !(self.phase_tolerance > 0.0) {
            return bad("phase_tolerance must be positive".into());
        }
        if self.out_band_grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if !(self.band_hz.0 > 0.0 && self.band_hz.1 > self.band_hz.0) {
            return bad(format!("invalid band {:?} Hz", self.band_hz));
        }
        let (lo, hi) = (hz_to_rad(self.band_hz.0), hz_to_rad(self.band_hz.1));
        let tol = 1e-9;
        if let Some(w) = self
            .out_band_grid
            .iter()
            .find(|&&w| !(w > 0.0) || (w > lo * (1.0 + tol) && w < hi * (1.0 - tol)))
        {
            return bad(format!("out-of-band grid point {} Hz lies inside the band", rad_to_hz(*w)));
        }
        Ok(())
    }
}

fn z_bounds(stages: usize) -> (Vec<f64>, Vec<f64>) {
    let odd = (T_MAX / SINH_SCALE).asinh();
    let lo = (0..stages).flat_map(|_| [-odd, T_MIN.ln()]).collect();
    let hi = (0..stages).flat_map(|_| [odd, T_MAX.ln()]).collect();
    (lo, hi)
}

fn to_t(z: &[f64]) -> Vec<f64> {
    z.chunks(2)
        .flat_map(|p| [SINH_SCALE * p[0].sinh(), p[1].exp()])
        .collect()
}

fn to_z(t: &[f64]) -> Vec<f64> {
    t.chunks(2)
        .flat_map(|p| {
            let odd = p[0].clamp(-T_MAX, T_MAX);
            let even = p[1].clamp(T_MIN, T_MAX);
            [(odd / SINH_SCALE).asinh(), even.ln()]
        })
        .collect()
}

struct Problem<'a> {
    points: &'a [ModalPoint],
    grid: &'a [f64],
    m: i32,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Problem<'_> {
    fn objective(&self, z: &[f64]) -> f64 {
        if z.iter().zip(self.lo.iter().zip(&self.hi)).any(|(v, (l, h))| !(*v >= *l && *v <= *h)) {
            return f64::INFINITY;
        }
        let x = LeadLagCascade::from_raw(to_t(z));
        let fit: f64 = self
            .points
            .iter()
            .map(|p| wrap_deg(x.phase_unwrapped(p.omega_o) - p.target_phase).abs().powi(self.m))
            .sum();
        let gain = self.grid.iter().map(|&w| x.magnitude(w)).fold(f64::NEG_INFINITY, f64::max);
        fit + PENALTY * (gain - 1.0 + PENALTY_MARGIN).max(0.0)
    }
}

/// Target points grouped by frequency: (center rad/s, mean target deg).
fn target_clusters(points: &[ModalPoint]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<&ModalPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.omega_o.total_cmp(&b.omega_o));
    let mut groups: Vec<Vec<&ModalPoint>> = Vec::new();
    for p in sorted {
        match groups.last_mut() {
            Some(g) if rad_to_hz(p.omega_o - g[g.len() - 1].omega_o) <= SEED_CLUSTER_HZ => g.push(p),
            _ => groups.push(vec![p]),
        }
    }
    groups
        .iter()
        .map(|g| {
            let n = g.len() as f64;
            let center = g.iter().map(|p| p.omega_o).sum::<f64>() / n;
            let (s, c) = g.iter().fold((0.0, 0.0), |(s, c), p| {
                let r = p.target_phase.to_radians();
                (s + r.sin(), c + r.cos())
            });
            (center, s.atan2(c).to_degrees())
        })
        .collect()
}

/// One lead (phase > 0) or lag stage centered at `w` providing `phase` degrees.
fn lead_lag_stage(w: f64, phase: f64) -> [f64; 2] {
    let s = phase.abs().min(SEED_STAGE_MAX_DEG).to_radians().sin();
    let a = ((1.0 + s) / (1.0 - s)).sqrt();
    if phase >= 0.0 {
        [a / w, 1.0 / (a * w)]
    } else {
        [1.0 / (a * w), a / w]
    }
}

/// All-pass stage `(1 - sT)/(1 + sT)` with phase `phase` (in (-180, 0)) at `w`.
fn all_pass_stage(w: f64, phase: f64) -> [f64; 2] {
    let t = (-phase / 2.0).to_radians().tan() / w;
    [-t, t]
}

fn structured_seeds(points: &[ModalPoint], stages: usize) -> Vec<Vec<f64>> {
    let clusters = target_clusters(points);
    let centre = |k: usize| clusters[k % clusters.len()];
    let lead_lag: Vec<f64> = (0..stages)
        .flat_map(|k| {
            let (w, phase) = centre(k);
            lead_lag_stage(w, phase / stages as f64)
        })
        .collect();
    let all_pass: Vec<f64> = (0..stages)
        .flat_map(|k| {
            let (w, phase) = centre(k);
            // Positive targets are reached going the long way round.
            let lag = if phase > 0.0 { phase - 360.0 } else { phase };
            let per_stage = (lag / stages as f64).clamp(-170.0, -1.0);
            all_pass_stage(w, per_stage)
        })
        .collect();
    vec![lead_lag, all_pass, vec![1.0; 2 * stages]]
}

fn random_seed(rng: &mut ChaCha8Rng, stages: usize) -> Vec<f64> {
    let (lo, hi) = (T_MIN.ln(), T_MAX.ln());
    (0..stages)
        .flat_map(|_| {
            let odd = rng.gen_range(lo..hi).exp() * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let even = rng.gen_range(lo..hi).exp();
            [odd, even]
        })
        .collect()
}

#[derive(Clone)]
struct Candidate {
    cascade: LeadLagCascade,
    report: DesignReport,
}

impl Candidate {
    fn feasible(&self) -> bool {
        self.report.max_out_band_gain <= 1.0
    }
}

fn rank(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    a.report
        .cost_value
        .total_cmp(&b.report.cost_value)
        .then(a.report.max_out_band_gain.total_cmp(&b.report.max_out_band_gain))
        .then(a.cascade.log_spread().total_cmp(&b.cascade.log_spread()))
}

pub fn optimize_compensator(points: &[ModalPoint], opts: &DesignOptions) -> Result<(LeadLagCascade, DesignReport)> {
    optimize_seeded(points, opts, &[])
}

/// As [`optimize_compensator`], with caller-supplied starting cascades tried
/// before the generated ones. Seeds of the wrong order are ignored.
pub fn optimize_seeded(
    points: &[ModalPoint],
    opts: &DesignOptions,
    seeds: &[LeadLagCascade],
) -> Result<(LeadLagCascade, DesignReport)> {
    if points.is_empty() {
        return Err(Error::EmptyDesignSet);
    }
    opts.validate()?;
    let registry = SearchRegistry::default();
    let search = registry.get(&opts.search)?;
    let stages = opts.order_c / 2;
    let (lo, hi) = z_bounds(stages);
    let problem = Problem {
        points,
        grid: &opts.out_band_grid,
        m: opts.exponent_m as i32,
        lo,
        hi,
    };
    let settings = SearchSettings {
        max_iterations: opts.max_iterations,
        f_tol: opts.phase_tolerance.powi(opts.exponent_m as i32),
        x_tol: 1e-9,
    };

    let mut starts: Vec<Vec<f64>> = seeds
        .iter()
        .filter(|s| s.stages() == stages)
        .map(|s| s.time_constants().to_vec())
        .collect();
    starts.extend(structured_seeds(points, stages));
    let n_starts = opts.restarts.max(starts.len());

    let objective = |z: &[f64]| problem.objective(z);
    let candidates: Vec<Option<Candidate>> = (0..n_starts)
        .into_par_iter()
        .map(|r| {
            let t0 = match starts.get(r) {
                Some(s) => s.clone(),
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                    rng.set_stream(r as u64);
                    random_seed(&mut rng, stages)
                }
            };
            let z0 = to_z(&t0);
            let out = search.minimize(&objective, &z0, &vec![0.5; z0.len()], &settings);
            let found = LeadLagCascade::from_raw(to_t(&out.x));
            let start = LeadLagCascade::from_raw(to_t(&z0));
            // The unsearched start competes too, so a feasible seed is never
            // lost to a search that drifted across the gain boundary.
            let mut best: Option<Candidate> = None;
            for cascade in [found, start] {
                let mut report = evaluate(&cascade, points, opts.exponent_m, &opts.out_band_grid)?;
                report.iterations = out.iterations;
                report.converged = out.converged;
                let c = Candidate { cascade, report };
                if c.feasible() && best.as_ref().map_or(true, |b| rank(&c, b).is_lt()) {
                    best = Some(c);
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut feasible: Vec<Candidate> = candidates.into_iter().flatten().collect();
    if feasible.is_empty() {
        return Err(Error::NoFeasiblePoint);
    }
    feasible.sort_by(rank);
    if opts.gain_slack > 0.0 {
        return favor_in_band_gain(&problem, feasible, opts, search, &settings);
    }
    let best = feasible.swap_remove(0);
    Ok((best.cascade, best.report))
}

/// Least compensator magnitude over the design frequencies.
fn in_band_gain(x: &LeadLagCascade, points: &[ModalPoint]) -> f64 {
    points.iter().map(|p| x.magnitude(p.omega_o)).fold(f64::INFINITY, f64::min)
}

/// The phase cost is nearly flat across many cascades whose in-band
/// magnitude differs by orders of magnitude. Starting from the best
/// candidates, maximize the least in-band magnitude while keeping the cost
/// within `gain_slack` of the best found and the out-of-band limit intact.
fn favor_in_band_gain(
    problem: &Problem<'_>,
    ranked: Vec<Candidate>,
    opts: &DesignOptions,
    search: &dyn super::search::LocalSearch,
    settings: &SearchSettings,
) -> Result<(LeadLagCascade, DesignReport)> {
    let best_cost = ranked[0].report.cost_value;
    let budget = best_cost * (1.0 + opts.gain_slack) + opts.phase_tolerance.powi(problem.m) * problem.points.len() as f64;
    let secondary = |z: &[f64]| -> f64 {
        let penalized = problem.objective(z);
        if !penalized.is_finite() {
            return f64::INFINITY;
        }
        let x = LeadLagCascade::from_raw(to_t(z));
        let fit: f64 = problem
            .points
            .iter()
            .map(|p| wrap_deg(x.phase_unwrapped(p.omega_o) - p.target_phase).abs().powi(problem.m))
            .sum();
        // Whatever the primary objective adds beyond the fit is the gain penalty.
        let gain_penalty = penalized - fit;
        -in_band_gain(&x, problem.points) + GAIN_STAGE_PENALTY * ((fit - budget).max(0.0) / budget.max(1e-300)) + gain_penalty
    };
    let starts: Vec<&Candidate> = ranked.iter().filter(|c| c.report.cost_value <= budget).take(GAIN_STAGE_STARTS).collect();
    let refined: Vec<Candidate> = starts
        .par_iter()
        .map(|c| {
            let z0 = to_z(c.cascade.time_constants());
            let out = search.minimize(&secondary, &z0, &vec![0.25; z0.len()], settings);
            let mut pool = vec![(*c).clone()];
            let cascade = LeadLagCascade::from_raw(to_t(&out.x));
            let mut report = evaluate(&cascade, problem.points, opts.exponent_m, &opts.out_band_grid)?;
            report.iterations = c.report.iterations + out.iterations;
            report.converged = c.report.converged && out.converged;
            pool.push(Candidate { cascade, report });
            Ok(pool)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .filter(|c| c.feasible() && c.report.cost_value <= budget)
        .collect();
    let choice = refined
        .into_iter()
        .max_by(|a, b| {
            in_band_gain(&a.cascade, problem.points)
                .total_cmp(&in_band_gain(&b.cascade, problem.points))
                .then(rank(b, a))
        })
        .expect("the best candidate is within its own budget");
    Ok((choice.cascade, choice.report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSweepRow {
    /// Number of lead-lag stages.
    pub order: usize,
    pub mean_error: f64,
    pub max_error: f64,
    pub cost_value: f64,
    pub cascade: Option<LeadLagCascade>,
    pub failed: Option<String>,
}

/// Fits cascades with each stage count in `orders` (ascending). Each order
/// is warm-started from the previous order's result with an identity stage
/// appended, so the achieved cost never increases with order.
pub fn order_sweep(points: &[ModalPoint], orders: &[usize], opts: &DesignOptions) -> Result<Vec<OrderSweepRow>> {
    if orders.is_empty() {
        return Err(Error::InvariantViolation("order sweep needs at least one order".into()));
    }
    let mut orders = orders.to_vec();
    orders.sort_unstable();
    orders.dedup();
    let mut rows = Vec::with_capacity(orders.len());
    let mut previous: Option<LeadLagCascade> = None;
    for order in orders {
        if order == 0 {
            rows.push(OrderSweepRow {
                order,
                mean_error: f64::NAN,
                max_error: f64::NAN,
                cost_value: f64::NAN,
                cascade: None,
                failed: Some("order must be at least 1".into()),
            });
            continue;
        }
        // The sweep reports the attainable fit, so no cost is traded for gain.
        let row_opts = DesignOptions { gain_slack: 0.0, ..opts.clone() }.with_stages(order);
        let seeds: Vec<LeadLagCascade> = previous
            .iter()
            .map(|p| {
                let mut t = p.time_constants().to_vec();
                while t.len() < 2 * order {
                    t.extend([1.0, 1.0]);
                }
                LeadLagCascade::from_raw(t)
            })
            .collect();
        match optimize_seeded(points, &row_opts, &seeds) {
            Ok((cascade, report)) => {
                rows.push(OrderSweepRow {
                    order,
                    mean_error: report.mean_error,
                    max_error: report.max_error,
                    cost_value: report.cost_value,
                    cascade: Some(cascade.clone()),
                    failed: None,
                });
                previous = Some(cascade);
            }
            Err(e) => rows.push(OrderSweepRow {
                order,
                mean_error: f64::NAN,
                max_error: f64::NAN,
                cost_value: f64::NAN,
                cascade: None,
                failed: Some(e.to_string()),
            }),
        }
    }
    Ok(rows)
}
