//! Semiclassical ray dynamics for oceanic Rossby and Poincare waves.

pub mod classify;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod modes;
pub mod numeric;
pub mod ode;
pub mod profiles;
pub mod reduced;
pub mod spectral;
pub mod transport;
pub mod trapping;

pub use dynamics::{PhasePoint, Trajectory};
pub use error::{Error, Result};
pub use profiles::{CoriolisProfile, Profiles, ZonalProfile};
