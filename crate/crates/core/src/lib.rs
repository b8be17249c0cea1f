pub mod analysis;
pub mod bench;
pub mod design;
pub mod error;
pub mod lti;
pub mod pipeline;
pub mod scenario;
pub mod verify;

pub use error::{Error, Result};
