//! Peak lists, unit-binned spectra, MSP libraries and cosine scoring.

mod msp;
mod spectrum;

pub use msp::{parse_msp, write_msp, MspError};
pub use spectrum::{
    bin_spectrum, bin_spectrum_with, cosine_distance, cosine_similarity, normalize, NormMode, Peak, PeakList, Spectrum,
    SpectrumError, BASEPEAK_HEIGHT, M_MAX,
};
