//! Exact cutting-and-stacking engine for rank-one transformations and an
//! explicit orbit equivalence with an odometer built from their towers.

pub mod classes;
pub mod engine;
pub mod error;
pub mod io;
pub mod mag;
pub mod params;
pub mod phi;
pub mod rational;
pub mod stats;
pub mod towers;
pub mod verify;

pub use error::{Error, Result};
