//! Squeezed-light ponderomotive entanglement in a three-mode optomechanical
//! cavity: linearized Langevin dynamics in the sideband-frequency domain,
//! Gaussian entanglement and non-Gaussianity metrics, and parameter sweeps.
//!
//! Covariances use `X = (a + a†)/√2`, so the vacuum is `I/2`.

pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod gaussianity;
pub mod params;
pub mod sweeps;

pub use dynamics::{CouplingMatrix, CovMatrix, NoiseMode, NoiseSpectrum};
pub use error::{Error, Result};
pub use params::{load_config, PhysicalConfig};
pub use sweeps::{Engine, MetricGrid, MetricRecord, SweepAxis, ENGINE_VERSION};
