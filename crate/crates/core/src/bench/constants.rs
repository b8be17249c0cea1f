//! Reference benchmark constants.
//!
//! These are fixture choices that reproduce a three-cluster modal geometry
//! (inter-area modes between 0.5 and 1 Hz, plant phases near 90 degrees,
//! roughly 0.1 Hz of frequency spread across network configurations). They
//! are not measurements of any particular power system.

pub const N_CONFIGS: usize = 20;
pub const SEED: u64 = 42;

pub const FREQ_HZ: [f64; 3] = [0.55, 0.70, 0.95];
pub const ZETA: [f64; 3] = [0.015, 0.02, 0.03];
pub const PHASE_P_DEG: [f64; 3] = [80.0, 95.0, 100.0];
pub const PHASE_Q_DEG: [f64; 3] = [70.0, 90.0, 110.0];
pub const PEAK_GAIN: [f64; 3] = [1.0, 0.8, 0.6];

/// Uniform half-range of per-configuration frequency perturbation (Hz).
pub const FREQ_JITTER_HZ: f64 = 0.05;
/// Uniform half-range of per-configuration phase perturbation (degrees).
pub const PHASE_JITTER_DEG: f64 = 20.0;
