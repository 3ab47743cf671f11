//! Stabilizing solutions of continuous-time algebraic Riccati equations
//! through Riesz spectral projectors, an emulated block-encoding pipeline
//! for the same solution, and RPA correlation-energy readout.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod blockenc;
pub mod care;
pub mod contour;
pub mod error;
pub mod gen;
pub mod linalg;
pub mod mrpa;
pub mod trace_est;

pub use error::{Error, ErrorClass, Result};
