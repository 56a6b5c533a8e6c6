//! Resource comparison between mixed qudit-boson analog simulation and qubit-only
//! Trotter simulation of vibronic dynamics.

pub mod comparison;
pub mod dilation;
pub mod dynamics;
pub mod encoding;
pub mod error;
pub mod model;
pub mod ode;
pub mod pipeline;
pub mod quantum;
pub mod sweep;
pub mod trotter;

pub use error::{Error, Result};

/// Version tag recorded with every cached record and artifact.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), "-", env!("CARGO_PKG_VERSION"));
