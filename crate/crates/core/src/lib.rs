pub mod conversion;
pub mod error;
pub mod field_algebra;
pub mod kr_forms;
pub mod linalg;
pub mod nilpotency;
pub mod planner;
pub mod scalar;
pub mod sim;
pub mod trailer;

pub use error::{Error, Result};
