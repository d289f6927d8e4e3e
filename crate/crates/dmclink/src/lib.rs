//! Deterministic simulator and analysis toolkit for diffusion-based
//! molecular communication links.
//!
//! The crate models a noiseless free-diffusion channel in closed form and
//! builds on it:
//!
//! - [`channel`]: impulse response, peak time/concentration, superposition.
//! - [`dp`]: BCSK modem with transmit-side peak precompensation and a
//!   threshold sample-based detector.
//! - [`omdm`]: dual-species orthogonal multiplexing and network planning
//!   arithmetic over the hexose isomer alphabet.
//! - [`multihop`]: end-to-end throughput scaling and equal-peak molecule
//!   budget laws for relayed routes.
//! - [`simkit`]: seeded, reproducible end-to-end experiments and sweeps.
//!
//! All physical quantities are CGS: cm, s, molecules, molecules/cm^3.

pub mod bits;
pub mod channel;
pub mod dp;
pub mod error;
pub mod multihop;
pub mod omdm;
pub mod simkit;

pub use bits::BitStream;
pub use error::{Error, Result};
