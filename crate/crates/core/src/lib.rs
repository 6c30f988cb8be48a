//! Kraus-channel simulation of open qubit dynamics.
//!
//! The crate is organized bottom-up:
//!
//! - [`statealg`]: dense complex matrices, density matrices, partial trace and transpose.
//! - [`channels`]: amplitude damping, dephasing and the three flip channels as Kraus
//!   sets, their unitary dilations and the Sagnac-interferometer realization.
//! - [`measures`]: concurrences, negativity, predictability, visibility, the witness
//!   family and closed-form reference curves.
//! - [`monitor`]: filtering of the environment and no-jump conditional evolution.
//! - [`tomo`]: Poissonian photon-count simulation and maximum-likelihood tomography.
//! - [`sweep`]: configuration-driven parameter sweeps, CSV output and the invariant
//!   self-check used by the command-line tool.

pub mod channels;
pub mod error;
pub mod measures;
pub mod monitor;
pub mod random;
pub mod statealg;
pub mod sweep;
pub mod tomo;

pub use channels::{ChannelKind, KrausChannel, SagnacSettings, TimeModel};
pub use error::{Error, Result};
pub use statealg::{ComplexMatrix, DensityMatrix, PureStateVector, C64};
