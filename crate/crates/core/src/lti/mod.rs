//! Transfer-function algebra, frequency response, pole computation and
//! time-domain simulation.

pub mod poly;
pub mod response;
pub mod roots;
pub mod sim;
pub mod tf;

pub use response::{hz_to_rad, log_grid, log_grid_per_decade, rad_to_hz, wrap_deg, ComplexGainPhase, FrequencyResponse};
pub use sim::{max_step, rk4_step, ss_simulate, StateSpace};
pub use tf::{Interconnection, RationalTF};
