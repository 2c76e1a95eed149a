//! Linearized cavity dynamics: drift matrix, input noise, output covariance.

pub mod coupling;
pub mod covariance;
pub mod noise;

pub use coupling::{build_coupling_matrix, response_matrix, CouplingMatrix, ResponseMatrix};
pub use covariance::{
    apply_loss, beamsplitter_matrix, beamsplitter_mix, decompose_noise_contributions, intracavity_covariance,
    output_covariance, Convention, CovMatrix, VACUUM_VARIANCE,
};
pub use noise::{
    input_noise_parts, input_noise_spectrum, paper_literal_block, sideband_squeeze_matrix, NoiseMode, NoiseParts,
    NoiseSpectrum, SqueezeMatrix,
};
