//! Removal of configurations that do not belong to the design family.

use super::design_set::{DesignSet, ModalPoint, STABILITY_TOL};
use crate::error::{Error, Result};
use crate::lti::rad_to_hz;

/// Decides which included scenarios of a design set to drop, with reasons.
pub trait ExclusionPolicy: Send + Sync {
    fn name(&self) -> &'static str;
    fn select(&self, ds: &DesignSet) -> Vec<(i64, String)>;
}

/// Drops unstable plants and scenarios whose peaks sit far from the
/// family's frequency clusters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterMedian {
    /// Single-linkage merge distance (Hz).
    pub merge_hz: f64,
    /// Maximum relative deviation from the cluster median.
    pub max_deviation: f64,
    /// Fraction of included scenarios a cluster needs to count as a
    /// reference cluster.
    pub min_support: f64,
}

impl Default for ClusterMedian {
    fn default() -> Self {
        Self {
            merge_hz: 0.15,
            max_deviation: 0.25,
            min_support: 0.5,
        }
    }
}

/// Drops only unstable plants.
#[derive(Debug, Clone, Copy, Default)]
pub struct StabilityOnly;

/// Keeps everything.
#[derive(Debug, Clone, Copy, Default)]
pub struct KeepAll;

pub const DEFAULT_POLICY: &str = "cluster-median";

pub struct PolicyRegistry {
    entries: Vec<Box<dyn ExclusionPolicy>>,
}

impl Default for PolicyRegistry {
    fn default() -> Self {
        let mut r = Self { entries: Vec::new() };
        r.register(Box::new(ClusterMedian::default()));
        r.register(Box::new(StabilityOnly));
        r.register(Box::new(KeepAll));
        r
    }
}

impl PolicyRegistry {
    pub fn register(&mut self, p: Box<dyn ExclusionPolicy>) {
        self.entries.retain(|e| e.name() != p.name());
        self.entries.push(p);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn ExclusionPolicy> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "exclusion policy",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }
}

pub fn exclude(ds: &DesignSet, policy: &dyn ExclusionPolicy) -> Result<DesignSet> {
    if ds.scenario_count == 0 {
        return Err(Error::AllScenariosExcluded);
    }
    ds.without(&policy.select(ds))
}

fn unstable(ds: &DesignSet) -> Vec<(i64, String)> {
    ds.scenarios
        .iter()
        .filter(|s| s.excluded.is_none() && s.max_pole_re > STABILITY_TOL)
        .map(|s| (s.id, "unstable plant".to_string()))
        .collect()
}

impl ExclusionPolicy for StabilityOnly {
    fn name(&self) -> &'static str {
        "stability-only"
    }

    fn select(&self, ds: &DesignSet) -> Vec<(i64, String)> {
        unstable(ds)
    }
}

impl ExclusionPolicy for KeepAll {
    fn name(&self) -> &'static str {
        "none"
    }

    fn select(&self, _ds: &DesignSet) -> Vec<(i64, String)> {
        Vec::new()
    }
}

/// Median of a nonempty slice.
fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub median_hz: f64,
    pub lo_hz: f64,
    pub hi_hz: f64,
    /// Distinct scenarios with a point in the cluster.
    pub support: usize,
}

impl ClusterMedian {
    /// Single-linkage clusters of the point frequencies.
    pub fn clusters(&self, points: &[ModalPoint]) -> Vec<Cluster> {
        let mut pts: Vec<(f64, i64)> = points.iter().map(|p| (p.f_hz(), p.scenario_id)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut groups: Vec<Vec<(f64, i64)>> = Vec::new();
        for p in pts {
            match groups.last_mut() {
                Some(g) if p.0 - g[g.len() - 1].0 <= self.merge_hz => g.push(p),
                _ => groups.push(vec![p]),
            }
        }
        groups
            .into_iter()
            .map(|g| {
                let mut ids: Vec<i64> = g.iter().map(|p| p.1).collect();
                ids.sort_unstable();
                ids.dedup();
                let mut f: Vec<f64> = g.iter().map(|p| p.0).collect();
                Cluster {
                    median_hz: median(&mut f),
                    lo_hz: f[0],
                    hi_hz: f[f.len() - 1],
                    support: ids.len(),
                }
            })
            .collect()
    }

    fn outliers(&self, points: &[ModalPoint], included: usize) -> Vec<(i64, String)> {
        let clusters = self.clusters(points);
        let needed = (self.min_support * included as f64).ceil() as usize;
        let mut refs: Vec<&Cluster> = clusters.iter().filter(|c| c.support >= needed.max(1)).collect();
        if refs.is_empty() {
            refs = clusters.iter().collect();
        }
        let mut out = Vec::new();
        for p in points {
            let f = p.f_hz();
            let own = clusters.iter().find(|c| f >= c.lo_hz && f <= c.hi_hz);
            let reference = match own {
                Some(c) if refs.iter().any(|r| std::ptr::eq(*r, c)) => c,
                _ => refs
                    .iter()
                    .min_by(|a, b| (a.median_hz - f).abs().total_cmp(&(b.median_hz - f).abs()))
                    .expect("at least one reference cluster"),
            };
            let dev = (f - reference.median_hz).abs() / reference.median_hz;
            if dev > self.max_deviation {
                out.push((
                    p.scenario_id,
                    format!(
                        "channel {} peak at {:.3} Hz deviates {:.0}% from cluster median {:.3} Hz",
                        p.channel,
                        rad_to_hz(p.omega_o),
                        100.0 * dev,
                        reference.median_hz
                    ),
                ));
            }
        }
        out
    }
}

impl ExclusionPolicy for ClusterMedian {
    fn name(&self) -> &'static str {
        "cluster-median"
    }

    fn select(&self, ds: &DesignSet) -> Vec<(i64, String)> {
        let mut out = unstable(ds);
        let included = ds.scenario_count;
        for points in [&ds.points_p, &ds.points_q] {
            for (id, reason) in self.outliers(points, included) {
                if !out.iter().any(|(i, _)| *i == id) {
                    out.push((id, reason));
                }
            }
        }
        out
    }
}
