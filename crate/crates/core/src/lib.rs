pub mod ambient;
pub mod catalog;
pub mod chart;
pub mod check;
pub mod cli;
pub mod eigenframe;
pub mod error;
pub mod immersion;
pub mod jets;
pub mod linalg;
pub mod parallel;
pub mod profile;
pub mod surface2d;

pub use error::{GeomError, Result};
