//! Simulation of matter-wave interferometer arrays under stochastic
//! acceleration noise.
//!
//! A single cat-state interferometer loses its fringes once shot-to-shot
//! displacement noise exceeds the fringe spacing. Combining the positions
//! measured by several devices into binomially weighted difference variables
//! removes every multipole of the noise field below a chosen order, and the
//! fringe pattern reappears in the distribution of that variable.
//!
//! Modules:
//! - [`wavepacket`]: closed-form single-device densities.
//! - [`noisefield`]: stochastic fields, displacement functionals, point-mass scenarios.
//! - [`array`]: difference variables and the order recursion of fringe patterns.
//! - [`montecarlo`]: shot-by-shot reconstruction and fringe fitting.
//! - [`oracle`]: split-step Schrödinger evolution and Magnus quantities.
//! - [`entangle`]: dephasing and recovery of arm entanglement.
//! - [`cli`]: configuration files and run artifacts for the `mwarray` binary.

pub mod array;
pub mod cli;
pub mod density;
pub mod entangle;
pub mod error;
pub mod montecarlo;
pub mod noisefield;
pub mod numeric;
pub mod oracle;
pub mod rng;
pub mod wavepacket;

pub use error::{Error, ErrorKind, Result};
