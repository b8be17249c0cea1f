//! Controller structure and compensator fitting.

pub mod bandpass;
pub mod cascade;
pub mod objective;
pub mod optimize;
pub mod search;

pub use bandpass::{bandpass_tf, BandPass};
pub use cascade::{cascade_eval, LeadLagCascade};
pub use objective::{constraint_violation, cost, default_out_band_grid, design_error, evaluate, out_band_grid, DesignReport, PointError};
pub use optimize::{optimize_compensator, optimize_seeded, order_sweep, DesignOptions, OrderSweepRow};
pub use search::{LocalSearch, SearchRegistry};
