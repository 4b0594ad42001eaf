//! Simulation and analysis toolkit for light–atom swap squeezing in a two-cell
//! spin-oscillator setup.

pub mod error;
pub mod gaussian;
pub mod homodyne;
pub mod interaction;
pub mod modes;
pub mod scenario;

pub use error::{Error, Result};
