//! Quantum trajectories of systems driven by streams of entangled bath qubits.

pub mod avgdyn;
pub mod bathkit;
pub mod densecore;
pub mod error;
pub mod krausforge;
pub mod quantmetrics;
pub mod scenario;
pub mod states;
pub mod superop;
pub mod trajsim;

pub use error::{Error, Result};
